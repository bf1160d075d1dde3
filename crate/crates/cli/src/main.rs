//! `homodesc` — exact checks for dg-categories, A∞-structures, homotopy
//! limits of Čech systems, and classical descent, driven by JSON documents.
//!
//! Exit codes: 0 all checks passed, 1 a check failed, 2 usage error,
//! 3 I/O or document error.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use homodesc_core::ainfty::{
    bar_construct, check_ainfty, check_ainfty_coalgebra, check_comodule, check_homotopy_counital,
    cobar_construct,
};
use homodesc_core::cosimplicial::{cech_system, validate_cosimplicial, FiniteCover, GroupoidData};
use homodesc_core::descent::{
    descend_module, descent_to_comodule, iso_iff_unit, validate_descent, DescentDatum,
};
use homodesc_core::dgcat::{module_category, validate_dg_category};
use homodesc_core::error::CoreError;
use homodesc_core::gen::{random_holim_morphism, random_holim_object};
use homodesc_core::graded::GradedMap;
use homodesc_core::holim::{
    groupoid_coalgebra, holim_compose, holim_differential, structure_object, to_ainfty_comodule,
    validate_holim_object, EqualizerModel, HolimMorphism, HolimObject,
};
use homodesc_core::io::{Document, HolimObjectSpec, Report};
use homodesc_core::linalg::SparseVec;
use homodesc_core::scalar::{Field, Scalar};
use homodesc_core::selftest::selftest;
use homodesc_core::simplexfun::{
    afun_compose, afun_differential, increasing_sequences, simplex_category, tautological_object,
    validate_afun_object, AfunMorphism, SimplexCategory,
};

#[derive(Parser)]
#[command(name = "homodesc", version, about = "Exact homotopy-descent calculator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Print only the JSON report on stdout.
    #[arg(long, global = true, conflicts_with = "human")]
    json: bool,
    /// Print only the human-readable summary on stdout.
    #[arg(long, global = true)]
    human: bool,
}

#[derive(Args)]
struct InputArg {
    /// Path of the JSON document.
    #[arg(long)]
    input: String,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a named section of a document.
    Check {
        #[command(subcommand)]
        what: CheckTarget,
    },
    /// Build bar constructions of the document's A∞-algebras.
    Bar {
        #[command(flatten)]
        input: InputArg,
        /// Maximal word length.
        #[arg(long, default_value_t = 4)]
        length: usize,
    },
    /// Build cobar constructions of the document's coalgebras.
    Cobar {
        #[command(flatten)]
        input: InputArg,
        /// Maximal word length.
        #[arg(long, default_value_t = 3)]
        length: usize,
    },
    /// Build and validate the dg-envelope of the simplex category k[n].
    SimplexCat {
        /// The simplex dimension n.
        #[arg(long, default_value_t = 2)]
        levels: usize,
        /// Also print the hom dimensions.
        #[arg(long)]
        emit: bool,
    },
    /// Functor categories AFun(k[n], B): validation and calculus checks.
    Afun {
        #[command(subcommand)]
        what: AfunAction,
    },
    /// Build the Čech cosimplicial system of a cover.
    Cech {
        /// Path of a JSON document with covers/systems.
        #[arg(long)]
        input: Option<String>,
        /// Number of points (with --cover).
        #[arg(long)]
        points: Option<usize>,
        /// Opens as 1-based point lists, e.g. "1,2;2,3" (with --points).
        #[arg(long)]
        cover: Option<String>,
        /// Truncation level.
        #[arg(long, default_value_t = 2)]
        levels: usize,
        /// Also print the level dimensions.
        #[arg(long)]
        emit: bool,
    },
    /// Homotopy-limit towers of the document's systems.
    Holim {
        #[command(subcommand)]
        what: HolimAction,
    },
    /// Classical descent data of the document's systems.
    Descent {
        #[command(subcommand)]
        what: DescentAction,
    },
    /// Run the deterministic seeded battery.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        iters: usize,
    },
}

#[derive(Subcommand)]
enum CheckTarget {
    /// d² = 0 and degree homogeneity of every complex.
    Complex {
        #[command(flatten)]
        input: InputArg,
    },
    /// Associativity, unitality, Leibniz on the module category of each algebra.
    Dgcat {
        #[command(flatten)]
        input: InputArg,
    },
    /// Stasheff relations of every A∞-algebra.
    Ainfty {
        #[command(flatten)]
        input: InputArg,
        /// Check relations up to this arity (default: complete).
        #[arg(long)]
        max_arity: Option<usize>,
    },
    /// Co-Stasheff relations of every coalgebra.
    Coalgebra {
        #[command(flatten)]
        input: InputArg,
        #[arg(long)]
        max_arity: Option<usize>,
    },
    /// Comodule relations of every comodule.
    Comodule {
        #[command(flatten)]
        input: InputArg,
        #[arg(long)]
        max_arity: Option<usize>,
    },
}

#[derive(Subcommand)]
enum AfunAction {
    /// The tautological object of k[n] satisfies the functor equations.
    Validate {
        #[arg(long, default_value_t = 2)]
        levels: usize,
    },
    /// Associativity of the composition on seeded morphism triples.
    Compose {
        #[arg(long, default_value_t = 2)]
        levels: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        iters: usize,
    },
    /// d² = 0 and the Leibniz rule on seeded morphisms.
    Diff {
        #[arg(long, default_value_t = 2)]
        levels: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        iters: usize,
    },
}

#[derive(Subcommand)]
enum HolimAction {
    /// The tower equations of every declared object.
    Validate {
        #[command(flatten)]
        input: InputArg,
    },
    /// Associativity and unitality of composition on seeded morphisms.
    Compose {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        iters: usize,
    },
    /// d² = 0 and the Leibniz rule on seeded morphisms.
    Diff {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        iters: usize,
    },
    /// Translate every object to an A∞-comodule and check it.
    ToComodule {
        #[command(flatten)]
        input: InputArg,
        /// Check comodule relations up to this arity.
        #[arg(long, default_value_t = 4)]
        max_arity: usize,
    },
    /// Compare the tower calculus against the functor-category model.
    Crosscheck {
        #[command(flatten)]
        input: InputArg,
        /// Model vertex count (n of the simplex).
        #[arg(long, default_value_t = 2)]
        levels: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum DescentAction {
    /// Cocycle and unit conditions of the structure datum of each system.
    Check {
        #[command(flatten)]
        input: InputArg,
    },
    /// Translate each structure datum to a strict comodule and validate it.
    ToComodule {
        #[command(flatten)]
        input: InputArg,
    },
    /// Descend each structure datum to the base and certify the round trip.
    Descend {
        #[command(flatten)]
        input: InputArg,
    },
    /// Invertibility of θ agrees with the unit condition.
    IsoUnit {
        #[command(flatten)]
        input: InputArg,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version on stdout with success; usage errors
            // go to stderr with exit code 2.
            return match e.print() {
                Ok(()) if e.exit_code() == 0 => ExitCode::SUCCESS,
                _ => ExitCode::from(2),
            };
        }
    };
    let (json_only, human_only) = (cli.json, cli.human);
    match run(cli.command) {
        Ok(report) => {
            if human_only {
                print!("{}", report.to_human());
            } else {
                print!("{}", report.to_json());
                if !json_only {
                    eprint!("{}", report.to_human());
                }
            }
            if report.ok() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

fn load(path: &str) -> Result<Document, CoreError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CoreError::Document(format!("cannot read {path}: {e}")))?;
    Document::load(&text)
}

fn run(cmd: Command) -> Result<Report, CoreError> {
    match cmd {
        Command::Check { what } => check(what),
        Command::Bar { input, length } => bar(&load(&input.input)?, length),
        Command::Cobar { input, length } => cobar(&load(&input.input)?, length),
        Command::SimplexCat { levels, emit } => simplex_cat(levels, emit),
        Command::Afun { what } => afun(what),
        Command::Cech { input, points, cover, levels, emit } => cech(input, points, cover, levels, emit),
        Command::Holim { what } => holim(what),
        Command::Descent { what } => descent(what),
        Command::Selftest { seed, iters } => selftest(seed, iters),
    }
}

fn check(what: CheckTarget) -> Result<Report, CoreError> {
    let mut report = Report::new();
    match what {
        CheckTarget::Complex { input } => {
            let doc = load(&input.input)?;
            for (name, c) in &doc.complexes {
                let ok = c.check_d_squared().is_ok();
                report.push(format!("complex {name}: d² = 0"), ok, format!("dim {}", c.space.dim()));
            }
        }
        CheckTarget::Dgcat { input } => {
            let doc = load(&input.input)?;
            for (name, a) in &doc.algebras {
                let free = homodesc_core::algebra::DgModule::new(
                    a.clone(),
                    a.complex.clone(),
                    a.mul.clone(),
                )?;
                let cat = module_category(format!("mod-{name}"), vec![free])?;
                let ok = validate_dg_category(&cat.cat).is_ok();
                report.push(format!("dgcat mod-{name}"), ok, format!("dim {}", a.space().dim()));
            }
        }
        CheckTarget::Ainfty { input, max_arity } => {
            let doc = load(&input.input)?;
            for (name, alg) in &doc.ainfty {
                let max_m = max_arity.unwrap_or(2 * alg.max_arity() - 1);
                let rep = check_ainfty(alg, max_m);
                report.push(
                    format!("ainfty {name}: relations up to m = {max_m}"),
                    rep.ok(),
                    witness_failing(&rep.failing),
                );
            }
        }
        CheckTarget::Coalgebra { input, max_arity } => {
            let doc = load(&input.input)?;
            for (name, spec) in &doc.coalgebras {
                let top = spec.ops.keys().max().copied().unwrap_or(1);
                let max_m = max_arity.unwrap_or(2 * top - 1).max(1);
                let coalg = spec.build(max_m)?;
                let rep = check_ainfty_coalgebra(&coalg, max_m)?;
                report.push(
                    format!("coalgebra {name}: relations up to m = {max_m}"),
                    rep.ok(),
                    witness_failing(&rep.failing),
                );
            }
        }
        CheckTarget::Comodule { input, max_arity } => {
            let doc = load(&input.input)?;
            for (name, spec) in &doc.comodules {
                let coalg = doc
                    .coalgebras
                    .get(&spec.coalgebra)
                    .ok_or_else(|| CoreError::Document(format!("unknown coalgebra {}", spec.coalgebra)))?;
                let top = spec.ops.keys().max().copied().unwrap_or(1);
                let max_m = max_arity.unwrap_or(2 * top - 1).max(1);
                let comod = spec.build(coalg, max_m)?;
                let rep = check_comodule(&comod, max_m)?;
                report.push(
                    format!("comodule {name}: relations up to m = {max_m}"),
                    rep.ok(),
                    witness_failing(&rep.failing),
                );
            }
        }
    }
    Ok(report)
}

fn witness_failing(failing: &[usize]) -> String {
    if failing.is_empty() {
        String::new()
    } else {
        format!("failing relations: {failing:?}")
    }
}

fn bar(doc: &Document, length: usize) -> Result<Report, CoreError> {
    let mut report = Report::new();
    for (name, alg) in &doc.ainfty {
        let b = bar_construct(alg, length)?;
        let ok = b.complex.d.compose(&b.complex.d).is_zero();
        report.push(
            format!("bar({name}), words up to {length}: d² = 0"),
            ok,
            format!("dim {}", b.complex.space.dim()),
        );
    }
    Ok(report)
}

fn cobar(doc: &Document, length: usize) -> Result<Report, CoreError> {
    let mut report = Report::new();
    for (name, spec) in &doc.coalgebras {
        let coalg = spec.build(length)?;
        let b = cobar_construct(&coalg, length)?;
        let ok = b.complex.d.compose(&b.complex.d).is_zero();
        report.push(
            format!("cobar({name}), words up to {length}: d² = 0"),
            ok,
            format!("dim {}", b.complex.space.dim()),
        );
    }
    Ok(report)
}

fn simplex_cat(levels: usize, emit: bool) -> Result<Report, CoreError> {
    let mut report = Report::new();
    let sx = simplex_category(levels, Field::Rationals, (-2, 2))?;
    report.push(
        format!("k[{levels}] is a dg-category"),
        validate_dg_category(&sx.cat).is_ok(),
        format!("{} objects", sx.cat.objects.len()),
    );
    if emit {
        for x in 0..=levels {
            for y in 0..=levels {
                report.push(
                    format!("hom({x},{y}) dimension"),
                    true,
                    format!("{}", sx.cat.hom(x, y).space.dim()),
                );
            }
        }
    }
    Ok(report)
}

/// A seeded morphism of A∞-functors with components drawn from the hom bases.
fn random_afun_morphism(
    sx: &SimplexCategory,
    f: &homodesc_core::simplexfun::AfunObject,
    g: &homodesc_core::simplexfun::AfunObject,
    degree: i64,
    rng: &mut ChaCha8Rng,
) -> AfunMorphism {
    let mut comps = BTreeMap::new();
    for seq in increasing_sequences(sx.n, 1) {
        let k = seq.len() as i64 - 1;
        let (x, y) = (f.objects[seq[0]], g.objects[*seq.last().unwrap()]);
        let hom = &sx.cat.hom(x, y).space;
        let mut v = SparseVec::new();
        for i in 0..hom.dim() {
            if hom.degrees[i] == degree - k {
                let c: i64 = rng.gen_range(-2..=2);
                if c != 0 {
                    v.add(i, sx.cat.field.from_i64(c));
                }
            }
        }
        if !v.is_zero() {
            comps.insert(seq, v);
        }
    }
    AfunMorphism { degree, comps }
}

fn afun_eq(n: usize, a: &AfunMorphism, b: &AfunMorphism) -> bool {
    increasing_sequences(n, 1).into_iter().all(|seq| a.comp(&seq) == b.comp(&seq))
}

fn afun(what: AfunAction) -> Result<Report, CoreError> {
    let mut report = Report::new();
    match what {
        AfunAction::Validate { levels } => {
            let sx = simplex_category(levels, Field::Rationals, (-2, 2))?;
            let taut = tautological_object(&sx)?;
            let bad = validate_afun_object(&sx.cat, &taut, false)?;
            report.push(
                format!("tautological object of k[{levels}]"),
                bad.is_empty(),
                bad.join("; "),
            );
        }
        AfunAction::Compose { levels, seed, iters } => {
            let sx = simplex_category(levels, Field::Rationals, (-2, 2))?;
            let t = tautological_object(&sx)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut ok = 0usize;
            for _ in 0..iters {
                let a = random_afun_morphism(&sx, &t, &t, rng.gen_range(-1..=1), &mut rng);
                let b = random_afun_morphism(&sx, &t, &t, rng.gen_range(-1..=1), &mut rng);
                let c = random_afun_morphism(&sx, &t, &t, rng.gen_range(-1..=1), &mut rng);
                let lhs = afun_compose(&sx.cat, &t, &t, &t, &c, &afun_compose(&sx.cat, &t, &t, &t, &b, &a));
                let rhs = afun_compose(&sx.cat, &t, &t, &t, &afun_compose(&sx.cat, &t, &t, &t, &c, &b), &a);
                if afun_eq(levels, &lhs, &rhs) {
                    ok += 1;
                }
            }
            report.seed = Some(seed);
            report.push("afun composition is associative", ok == iters, format!("{ok}/{iters}"));
        }
        AfunAction::Diff { levels, seed, iters } => {
            let sx = simplex_category(levels, Field::Rationals, (-2, 2))?;
            let t = tautological_object(&sx)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (mut flat, mut leibniz) = (0usize, 0usize);
            for _ in 0..iters {
                let a = random_afun_morphism(&sx, &t, &t, rng.gen_range(-1..=1), &mut rng);
                let b = random_afun_morphism(&sx, &t, &t, rng.gen_range(-1..=1), &mut rng);
                let dda = afun_differential(&sx.cat, &t, &t, &afun_differential(&sx.cat, &t, &t, &a));
                if dda.is_zero() {
                    flat += 1;
                }
                let lhs = afun_differential(&sx.cat, &t, &t, &afun_compose(&sx.cat, &t, &t, &t, &b, &a));
                let mut rhs = afun_compose(&sx.cat, &t, &t, &t, &afun_differential(&sx.cat, &t, &t, &b), &a);
                let db_a = afun_compose(&sx.cat, &t, &t, &t, &b, &afun_differential(&sx.cat, &t, &t, &a));
                let sgn = Scalar::sign_pow(sx.cat.field, b.degree);
                for (seq, v) in db_a.comps {
                    let w = v.scale(&sgn);
                    let mut cur = rhs.comps.remove(&seq).unwrap_or_default();
                    cur.axpy(&sx.cat.field.one(), &w);
                    rhs.comps.insert(seq, cur);
                }
                if afun_eq(levels, &lhs, &rhs) {
                    leibniz += 1;
                }
            }
            report.seed = Some(seed);
            report.push("afun differential squares to zero", flat == iters, format!("{flat}/{iters}"));
            report.push("afun differential Leibniz rule", leibniz == iters, format!("{leibniz}/{iters}"));
        }
    }
    Ok(report)
}

fn cech(
    input: Option<String>,
    points: Option<usize>,
    cover: Option<String>,
    levels: usize,
    emit: bool,
) -> Result<Report, CoreError> {
    let mut report = Report::new();
    report.truncation = Some(levels);
    let mut systems: Vec<(String, homodesc_core::cosimplicial::CosimplicialSystem)> = Vec::new();
    if let Some(path) = input {
        let doc = load(&path)?;
        for (name, spec) in &doc.systems {
            systems.push((name.clone(), spec.system()?));
        }
    }
    if let (Some(n), Some(spec)) = (points, cover) {
        let mut opens = Vec::new();
        for part in spec.split(';') {
            let mut open = Vec::new();
            for p in part.split(',') {
                let p: usize = p
                    .trim()
                    .parse()
                    .map_err(|_| CoreError::Document(format!("bad point {p:?} in --cover")))?;
                if p == 0 || p > n {
                    return Err(CoreError::Document(format!("point {p} outside 1..={n}")));
                }
                open.push(p - 1);
            }
            opens.push(open);
        }
        let cover = FiniteCover::new(n, opens)?;
        systems.push(("cover".into(), cech_system(&cover, Field::Rationals, levels, None)?));
    }
    if systems.is_empty() {
        return Err(CoreError::Document("cech needs --input or --points with --cover".into()));
    }
    for (name, sys) in &systems {
        let bad = validate_cosimplicial(sys);
        report.push(format!("system {name}: cosimplicial identities"), bad.is_empty(), bad.join("; "));
        if emit {
            let dims: Vec<String> =
                (0..=sys.truncation).map(|i| sys.level(i).space().dim().to_string()).collect();
            report.push(format!("system {name}: level dimensions"), true, dims.join("/"));
        }
    }
    Ok(report)
}

/// Builds every declared holim object of a document, grouped by system.
fn doc_objects(
    doc: &Document,
) -> Result<BTreeMap<String, (Arc<GroupoidData>, BTreeMap<String, Arc<HolimObject>>)>, CoreError> {
    let mut out = BTreeMap::new();
    for (name, spec) in &doc.holim_objects {
        let sysname = spec.system().to_string();
        if !out.contains_key(&sysname) {
            let sys = doc
                .systems
                .get(&sysname)
                .ok_or_else(|| CoreError::Document(format!("unknown system {sysname:?}")))?;
            let gd = sys.groupoid(sys.truncation.max(2))?;
            out.insert(sysname.clone(), (gd, BTreeMap::new()));
        }
        let (gd, objs) = out.get_mut(&sysname).unwrap();
        let obj = match spec {
            HolimObjectSpec::Structure { .. } => structure_object(gd)?,
            HolimObjectSpec::Random { seed, .. } => random_holim_object(gd, *seed)?,
        };
        objs.insert(name.clone(), obj);
    }
    Ok(out)
}

fn holim_eq(alpha: &HolimMorphism, beta: &HolimMorphism, trunc: usize) -> bool {
    (0..=trunc).all(|n| alpha.comp(n).equals(&beta.comp(n)))
}

fn holim(what: HolimAction) -> Result<Report, CoreError> {
    let mut report = Report::new();
    match what {
        HolimAction::Validate { input } => {
            let doc = load(&input.input)?;
            for (sysname, (_, objs)) in doc_objects(&doc)? {
                for (name, obj) in objs {
                    let bad = validate_holim_object(&obj, obj.truncation())?;
                    report.push(
                        format!("object {name} over {sysname}: tower equations"),
                        bad.is_empty(),
                        bad.join("; "),
                    );
                }
            }
        }
        HolimAction::Compose { input, seed, iters } => {
            let doc = load(&input.input)?;
            report.seed = Some(seed);
            for (sysname, (_, objs)) in doc_objects(&doc)? {
                let objs: Vec<_> = objs.into_values().collect();
                let trunc = objs[0].truncation();
                let mut assoc = 0usize;
                let mut unital = 0usize;
                for i in 0..iters as u64 {
                    let pick = |k: u64| objs[(seed.wrapping_add(k) % objs.len() as u64) as usize].clone();
                    let (x, y, z, w) = (pick(i), pick(i + 1), pick(i + 2), pick(i + 3));
                    let a = random_holim_morphism(&x, &y, 0, seed.wrapping_add(5 * i))?;
                    let b = random_holim_morphism(&y, &z, 1, seed.wrapping_add(5 * i + 1))?;
                    let c = random_holim_morphism(&z, &w, -1, seed.wrapping_add(5 * i + 2))?;
                    let lhs = holim_compose(&c, &holim_compose(&b, &a)?)?;
                    let rhs = holim_compose(&holim_compose(&c, &b)?, &a)?;
                    if holim_eq(&lhs, &rhs, trunc) {
                        assoc += 1;
                    }
                    let idy = HolimMorphism::identity(&y);
                    let idx = HolimMorphism::identity(&x);
                    if holim_eq(&holim_compose(&idy, &a)?, &a, trunc)
                        && holim_eq(&holim_compose(&a, &idx)?, &a, trunc)
                    {
                        unital += 1;
                    }
                }
                report.push(
                    format!("system {sysname}: composition associative"),
                    assoc == iters,
                    format!("{assoc}/{iters}"),
                );
                report.push(
                    format!("system {sysname}: composition unital"),
                    unital == iters,
                    format!("{unital}/{iters}"),
                );
            }
        }
        HolimAction::Diff { input, seed, iters } => {
            let doc = load(&input.input)?;
            report.seed = Some(seed);
            for (sysname, (_, objs)) in doc_objects(&doc)? {
                let objs: Vec<_> = objs.into_values().collect();
                let trunc = objs[0].truncation();
                let (mut flat, mut leibniz) = (0usize, 0usize);
                for i in 0..iters as u64 {
                    let pick = |k: u64| objs[(seed.wrapping_add(k) % objs.len() as u64) as usize].clone();
                    let (x, y, z) = (pick(i), pick(i + 1), pick(i + 2));
                    let a = random_holim_morphism(&x, &y, 0, seed.wrapping_add(7 * i))?;
                    let b = random_holim_morphism(&y, &z, 1, seed.wrapping_add(7 * i + 1))?;
                    if holim_differential(&holim_differential(&a)?)?
                        .comps
                        .values()
                        .all(|m| m.is_zero())
                    {
                        flat += 1;
                    }
                    let lhs = holim_differential(&holim_compose(&b, &a)?)?;
                    let db_a = holim_compose(&b, &holim_differential(&a)?)?;
                    let mut rhs = holim_compose(&holim_differential(&b)?, &a)?;
                    let sgn = Scalar::sign_pow(x.module.space().field, b.degree);
                    let mut all = true;
                    for n in 0..=trunc {
                        let sum = rhs
                            .comps
                            .entry(n)
                            .or_insert_with(|| {
                                GradedMap::zero(
                                    x.max_string(n).space().clone(),
                                    z.min_string(n).space().clone(),
                                    a.degree + b.degree + 1 - n as i64,
                                )
                            })
                            .add(&db_a.comp(n).scale(&sgn));
                        all &= sum.equals(&lhs.comp(n));
                    }
                    if all {
                        leibniz += 1;
                    }
                }
                report.push(
                    format!("system {sysname}: d² = 0"),
                    flat == iters,
                    format!("{flat}/{iters}"),
                );
                report.push(
                    format!("system {sysname}: Leibniz rule"),
                    leibniz == iters,
                    format!("{leibniz}/{iters}"),
                );
            }
        }
        HolimAction::ToComodule { input, max_arity } => {
            let doc = load(&input.input)?;
            for (sysname, (gd, objs)) in doc_objects(&doc)? {
                let coalg = groupoid_coalgebra(&gd, max_arity.max(2))?;
                for (name, obj) in objs {
                    let comod = to_ainfty_comodule(&obj, &coalg, max_arity.max(2))?;
                    let rep = check_comodule(&comod, max_arity)?;
                    report.push(
                        format!("object {name} over {sysname}: comodule relations"),
                        rep.ok(),
                        witness_failing(&rep.failing),
                    );
                    let h = check_homotopy_counital(&comod)?;
                    report.push(
                        format!("object {name} over {sysname}: homotopy counit"),
                        h.is_some(),
                        if h.is_some() { "witness found" } else { "no witness" },
                    );
                }
            }
        }
        HolimAction::Crosscheck { input, levels, seed } => {
            let doc = load(&input.input)?;
            report.seed = Some(seed);
            for (sysname, (_, objs)) in doc_objects(&doc)? {
                let objs: Vec<_> = objs.into_values().collect();
                let trunc = objs[0].truncation();
                let n = levels.min(trunc);
                let pair = [objs[0].clone(), objs[objs.len() - 1].clone()];
                let model = EqualizerModel::new(&pair, n)?;
                let mut objs_ok = true;
                for f in &model.afuns {
                    objs_ok &= validate_afun_object(&model.mcat.cat, f, n > 0)?.is_empty();
                }
                report.push(
                    format!("system {sysname}: towers embed as functor objects (n = {n})"),
                    objs_ok,
                    format!("{} objects", pair.len()),
                );
                let a = random_holim_morphism(&pair[0], &pair[1], 0, seed)?;
                let am = model.morphism(&a, 0, 1)?;
                let da = model.morphism(&holim_differential(&a)?, 0, 1)?;
                let dam = afun_differential(&model.mcat.cat, &model.afuns[0], &model.afuns[1], &am);
                report.push(
                    format!("system {sysname}: differential agrees with the model"),
                    afun_eq(n, &da, &dam),
                    String::new(),
                );
            }
        }
    }
    Ok(report)
}

/// The canonical strict datum of a system: the structure tower's gluing map.
fn structure_datum(gd: &Arc<GroupoidData>) -> Result<DescentDatum, CoreError> {
    let obj = structure_object(gd)?;
    DescentDatum::new(gd.clone(), obj.module.clone(), obj.theta(1))
}

fn descent(what: DescentAction) -> Result<Report, CoreError> {
    let mut report = Report::new();
    match what {
        DescentAction::Check { input } => {
            let doc = load(&input.input)?;
            for (name, spec) in &doc.systems {
                let d = structure_datum(&spec.groupoid(2)?)?;
                let bad = validate_descent(&d)?;
                report.push(
                    format!("system {name}: structure datum"),
                    bad.is_empty(),
                    bad.join("; "),
                );
            }
        }
        DescentAction::IsoUnit { input } => {
            let doc = load(&input.input)?;
            for (name, spec) in &doc.systems {
                let d = structure_datum(&spec.groupoid(2)?)?;
                let (is_iso, is_unital) = iso_iff_unit(&d)?;
                report.push(
                    format!("system {name}: invertibility ⇔ unit"),
                    is_iso == is_unital,
                    format!("iso {is_iso}, unital {is_unital}"),
                );
            }
        }
        DescentAction::ToComodule { input } => {
            let doc = load(&input.input)?;
            for (name, spec) in &doc.systems {
                let d = structure_datum(&spec.groupoid(2)?)?;
                let c = descent_to_comodule(&d)?;
                let bad = c.validate()?;
                report.push(
                    format!("system {name}: strict comodule"),
                    bad.is_empty(),
                    bad.join("; "),
                );
            }
        }
        DescentAction::Descend { input } => {
            let doc = load(&input.input)?;
            for (name, spec) in &doc.systems {
                let gd = spec.groupoid(2)?;
                let d = structure_datum(&gd)?;
                let c = descent_to_comodule(&d)?;
                let (desc, ev) = descend_module(&c)?;
                let ok = ev.inverse().is_ok();
                report.push(
                    format!("system {name}: descends with invertible evaluation"),
                    ok,
                    format!("descended dim {}", desc.space().dim()),
                );
            }
        }
    }
    Ok(report)
}
