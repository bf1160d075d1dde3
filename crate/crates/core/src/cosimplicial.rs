//! Cosimplicial systems of commutative dg-algebras: ordinal maps, Čech
//! systems of finite covers, balanced tensor-power level algebras, coface
//! and codegeneracy algebra maps, and the coface calculus on module
//! strings (extension of scalars with explicit natural isomorphisms).

use std::sync::Arc;

use crate::algebra::{
    extend_scalars, AlgebraMap, BalancedChain, Bimodule, DgAlgebra, DgModule,
};
use crate::complex::Complex;
use crate::error::CoreError;
use crate::graded::{block_tensor_map, koszul_permutation, tensor_map, Block, GradedMap, GradedSpace};
use crate::linalg::SparseVec;
use crate::scalar::{Field, Scalar};

/// A monotone map `[m] -> [n]` between finite ordinals `{0, …, m}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrdinalMap {
    pub source: usize,
    pub target: usize,
    pub values: Vec<usize>,
}

impl OrdinalMap {
    pub fn new(source: usize, target: usize, values: Vec<usize>) -> Result<OrdinalMap, CoreError> {
        if values.len() != source + 1 {
            return Err(CoreError::shape("ordinal map: wrong number of values"));
        }
        for w in values.windows(2) {
            if w[0] > w[1] {
                return Err(CoreError::shape("ordinal map: not monotone"));
            }
        }
        if values.iter().any(|&v| v > target) {
            return Err(CoreError::shape("ordinal map: value outside target"));
        }
        Ok(OrdinalMap { source, target, values })
    }

    pub fn identity(n: usize) -> OrdinalMap {
        OrdinalMap { source: n, target: n, values: (0..=n).collect() }
    }

    /// The elementary coface `δ^i : [n-1] -> [n]` (skips `i`).
    pub fn coface(n: usize, i: usize) -> OrdinalMap {
        assert!(n >= 1 && i <= n);
        let values = (0..n).map(|v| if v < i { v } else { v + 1 }).collect();
        OrdinalMap { source: n - 1, target: n, values }
    }

    /// The elementary codegeneracy `σ^j : [n+1] -> [n]` (repeats `j`).
    pub fn codegeneracy(n: usize, j: usize) -> OrdinalMap {
        assert!(j <= n);
        let values = (0..=(n + 1)).map(|v| if v <= j { v } else { v - 1 }).collect();
        OrdinalMap { source: n + 1, target: n, values }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &OrdinalMap) -> Result<OrdinalMap, CoreError> {
        if other.target != self.source {
            return Err(CoreError::shape("ordinal maps not composable"));
        }
        let values = other.values.iter().map(|&v| self.values[v]).collect();
        OrdinalMap::new(other.source, self.target, values)
    }

    pub fn is_injective(&self) -> bool {
        self.values.windows(2).all(|w| w[0] < w[1])
    }

    /// Writes an injective monotone map as a composition of elementary
    /// cofaces: if the missing values are `d_1 < … < d_r` then
    /// `f = δ^{d_r} ∘ … ∘ δ^{d_1}` (returned innermost first, with the
    /// ordinal each coface maps *into*).
    pub fn coface_factorization(&self) -> Result<Vec<(usize, usize)>, CoreError> {
        if !self.is_injective() {
            return Err(CoreError::shape("coface factorization needs an injective map"));
        }
        let image: Vec<usize> = self.values.clone();
        let missing: Vec<usize> = (0..=self.target).filter(|v| !image.contains(v)).collect();
        let mut out = Vec::new();
        let mut level = self.source;
        for &d in &missing {
            level += 1;
            out.push((level, d));
        }
        Ok(out)
    }
}

/// A finite cover of the point set `{0, …, points-1}` by opens.
#[derive(Debug, Clone)]
pub struct FiniteCover {
    pub points: usize,
    pub opens: Vec<Vec<usize>>,
}

impl FiniteCover {
    pub fn new(points: usize, opens: Vec<Vec<usize>>) -> Result<FiniteCover, CoreError> {
        if opens.is_empty() {
            return Err(CoreError::validation("empty cover"));
        }
        let mut covered = vec![false; points];
        for u in &opens {
            for &p in u {
                if p >= points {
                    return Err(CoreError::validation("open contains a point outside the set"));
                }
                covered[p] = true;
            }
        }
        if covered.iter().any(|c| !c) {
            return Err(CoreError::validation("opens do not cover the point set"));
        }
        Ok(FiniteCover { points, opens })
    }
}

/// A truncated cosimplicial system of commutative dg-algebras whose level
/// `n` is the balanced tensor power `A^{⊗_B (n+1)}` of a `B`-algebra `A`.
#[derive(Debug, Clone)]
pub struct CosimplicialSystem {
    pub base: Arc<DgAlgebra>,
    pub a_alg: Arc<DgAlgebra>,
    pub a_over_b: Bimodule,
    pub truncation: usize,
    pub levels: Vec<Arc<DgAlgebra>>,
    /// `chains[n]` presents level `n` as a quotient of `A^{⊗(n+1)}`.
    pub chains: Vec<BalancedChain>,
    /// `cofaces[n-1][i] : level n-1 -> level n`, `0 <= i <= n`.
    cofaces: Vec<Vec<AlgebraMap>>,
    /// `codegens[n][j] : level n+1 -> level n`, `0 <= j <= n`.
    codegens: Vec<Vec<AlgebraMap>>,
}

impl CosimplicialSystem {
    pub fn coface(&self, n: usize, i: usize) -> &AlgebraMap {
        &self.cofaces[n - 1][i]
    }

    pub fn codegen(&self, n: usize, j: usize) -> &AlgebraMap {
        &self.codegens[n][j]
    }

    pub fn level(&self, n: usize) -> &Arc<DgAlgebra> {
        &self.levels[n]
    }
}

/// Inserts the (degree-0) unit at slot `i` of a flat tensor power.
fn insert_unit_flat(
    src: &Arc<GradedSpace>,
    dst: &Arc<GradedSpace>,
    unit: &SparseVec,
    i: usize,
) -> GradedMap {
    let n = src.factors.as_ref().expect("insert_unit_flat: src not a tensor").len();
    let mut out = GradedMap::zero(src.clone(), dst.clone(), 0);
    for j in 0..src.dim() {
        let parts = src.split_index(j);
        for (u, c) in unit.iter() {
            let mut dp = Vec::with_capacity(n + 1);
            dp.extend_from_slice(&parts[..i]);
            dp.push(u);
            dp.extend_from_slice(&parts[i..]);
            out.cols[j].add(dst.fuse_index(&dp), c.clone());
        }
    }
    out
}

/// The flat tensor of unit vectors `1 ⊗ … ⊗ 1` in `A^{⊗n}`.
fn flat_unit(space: &Arc<GradedSpace>, unit: &SparseVec, n: usize) -> SparseVec {
    let mut v = SparseVec::new();
    let mut stack: Vec<(Vec<usize>, Scalar)> = vec![(Vec::new(), space.field.one())];
    for _ in 0..n {
        let mut next = Vec::new();
        for (parts, c) in &stack {
            for (u, cu) in unit.iter() {
                let mut p = parts.clone();
                p.push(u);
                next.push((p, c.clone() * cu.clone()));
            }
        }
        stack = next;
    }
    let _ = space;
    for (parts, c) in stack {
        v.add(space.fuse_index(&parts), c);
    }
    v
}

/// Equips a balanced power `A^{⊗_B n}` with its factor-wise algebra
/// structure.
fn balanced_power_algebra(
    name: &str,
    chain: &BalancedChain,
    a: &Arc<DgAlgebra>,
) -> Result<Arc<DgAlgebra>, CoreError> {
    let n = chain.factors.len();
    let aspace = a.space().clone();
    let space = chain.space.clone();
    let sq = GradedSpace::tensor(format!("{name}⊗{name}"), vec![space.clone(), space.clone()]);
    let gran2 = GradedSpace::tensor(format!("{name}:flat²"), vec![aspace.clone(); 2 * n]);
    // space ⊗ space -> flat ⊗ flat
    let amb2 = GradedSpace::tensor("amb²", vec![chain.ambient.clone(), chain.ambient.clone()]);
    let lift = tensor_map(&[&chain.sect, &chain.sect], &sq, &amb2).retarget(sq.clone(), gran2.clone(), 0);
    // interleave (x_1…x_n, y_1…y_n) -> (x_1 y_1 … x_n y_n)
    let mut perm = vec![0usize; 2 * n];
    for k in 0..n {
        perm[k] = 2 * k;
        perm[n + k] = 2 * k + 1;
    }
    let shuffled = koszul_permutation(&gran2, &gran2, &perm);
    // multiply each adjacent pair
    let blocks: Vec<Block> = (0..n)
        .map(|_| Block { map: &a.mul, src_arity: 2, dst_arity: 1 })
        .collect();
    let mul_flat = block_tensor_map(&blocks, &gran2, &chain.ambient);
    let mul = chain
        .proj
        .compose(&mul_flat.compose(&shuffled).compose(&lift).retarget(
            sq,
            chain.ambient.clone(),
            0,
        ));
    let unit = chain.proj.apply(&flat_unit(&chain.ambient, &a.unit, n));
    let complex = Complex::new(space, chain.d.clone())?;
    DgAlgebra::new(name, complex, mul, unit, a.commutative)
}

/// Builds the truncated cosimplicial system with levels `A^{⊗_B (n+1)}`,
/// cofaces given by unit insertion, and codegeneracies by multiplication
/// of adjacent slots.
pub fn tensor_power_system(
    name: &str,
    base: Arc<DgAlgebra>,
    a_alg: Arc<DgAlgebra>,
    a_over_b: Bimodule,
    truncation: usize,
) -> Result<CosimplicialSystem, CoreError> {
    let mut chains = Vec::with_capacity(truncation + 1);
    let mut levels = Vec::with_capacity(truncation + 1);
    for n in 0..=truncation {
        let chain = BalancedChain::new(
            format!("{name}^{n}"),
            vec![a_over_b.clone(); n + 1],
        )?;
        let level = balanced_power_algebra(&format!("{name}^{n}"), &chain, &a_alg)?;
        chains.push(chain);
        levels.push(level);
    }
    let mut cofaces = Vec::new();
    for n in 1..=truncation {
        let mut row = Vec::new();
        for i in 0..=n {
            let flat = insert_unit_flat(&chains[n - 1].ambient, &chains[n].ambient, &a_alg.unit, i);
            let map = chains[n]
                .proj
                .compose(&flat)
                .compose(&chains[n - 1].sect)
                .retarget(levels[n - 1].space().clone(), levels[n].space().clone(), 0);
            row.push(AlgebraMap::new(levels[n - 1].clone(), levels[n].clone(), map)?);
        }
        cofaces.push(row);
    }
    let mut codegens = Vec::new();
    for n in 0..truncation {
        let mut row = Vec::new();
        let id_a = GradedMap::identity(a_alg.space().clone());
        for j in 0..=n {
            let mut blocks: Vec<Block> = Vec::new();
            for _ in 0..j {
                blocks.push(Block::id(&id_a));
            }
            blocks.push(Block { map: &a_alg.mul, src_arity: 2, dst_arity: 1 });
            for _ in (j + 1)..=n {
                blocks.push(Block::id(&id_a));
            }
            let flat = block_tensor_map(&blocks, &chains[n + 1].ambient, &chains[n].ambient);
            let map = chains[n]
                .proj
                .compose(&flat)
                .compose(&chains[n + 1].sect)
                .retarget(levels[n + 1].space().clone(), levels[n].space().clone(), 0);
            row.push(AlgebraMap::new(levels[n + 1].clone(), levels[n].clone(), map)?);
        }
        codegens.push(row);
    }
    Ok(CosimplicialSystem {
        base,
        a_alg,
        a_over_b,
        truncation,
        levels,
        chains,
        cofaces,
        codegens,
    })
}

/// Exhaustively checks the cosimplicial identities and re-validates every
/// structural map; returns human-readable violations (empty = valid).
pub fn validate_cosimplicial(sys: &CosimplicialSystem) -> Vec<String> {
    let mut bad = Vec::new();
    let nmax = sys.truncation;
    for n in 1..=nmax {
        for i in 0..=n {
            if let Err(e) = sys.coface(n, i).validate() {
                bad.push(format!("δ^{i} into level {n} is not a dg-algebra map: {e}"));
            }
        }
    }
    for n in 0..nmax {
        for j in 0..=n {
            if let Err(e) = sys.codegen(n, j).validate() {
                bad.push(format!("σ^{j} onto level {n} is not a dg-algebra map: {e}"));
            }
        }
    }
    // δ^j δ^i = δ^i δ^{j-1} for i < j, composite level n-2 -> n
    for n in 2..=nmax {
        for j in 1..=n {
            for i in 0..j {
                let lhs = sys.coface(n, j).map.compose(&sys.coface(n - 1, i).map);
                let rhs = sys.coface(n, i).map.compose(&sys.coface(n - 1, j - 1).map);
                if !lhs.equals(&rhs) {
                    bad.push(format!("δ^{j}δ^{i} ≠ δ^{i}δ^{} into level {n}", j - 1));
                }
            }
        }
    }
    // σ^j σ^i = σ^i σ^{j+1} for i <= j, composite level n+2 -> n
    for n in 0..nmax.saturating_sub(1) {
        for j in 0..=n {
            for i in 0..=j {
                let lhs = sys.codegen(n, j).map.compose(&sys.codegen(n + 1, i).map);
                let rhs = sys.codegen(n, i).map.compose(&sys.codegen(n + 1, j + 1).map);
                if !lhs.equals(&rhs) {
                    bad.push(format!("σ^{j}σ^{i} ≠ σ^{i}σ^{} onto level {n}", j + 1));
                }
            }
        }
    }
    // mixed identities, composite level n -> n+1 -> n or n -> n-1 -> n
    for n in 0..nmax {
        for j in 0..=n {
            for i in 0..=(n + 1) {
                let comp = sys.codegen(n, j).map.compose(&sys.coface(n + 1, i).map);
                if i < j {
                    // = δ^i σ^{j-1}   (level n -> n-1 -> n), needs n >= 1
                    let rhs = sys.coface(n, i).map.compose(&sys.codegen(n - 1, j - 1).map);
                    if !comp.equals(&rhs) {
                        bad.push(format!("σ^{j}δ^{i} ≠ δ^{i}σ^{} at level {n}", j - 1));
                    }
                } else if i == j || i == j + 1 {
                    let id = GradedMap::identity(sys.levels[n].space().clone());
                    if !comp.equals(&id) {
                        bad.push(format!("σ^{j}δ^{i} ≠ id at level {n}"));
                    }
                } else {
                    // = δ^{i-1} σ^j   (level n -> n-1 -> n), needs n >= 1
                    let rhs = sys.coface(n, i - 1).map.compose(&sys.codegen(n - 1, j).map);
                    if !comp.equals(&rhs) {
                        bad.push(format!("σ^{j}δ^{i} ≠ δ^{}σ^{j} at level {n}", i - 1));
                    }
                }
            }
        }
    }
    bad
}

/// The algebra of functions on a finite set (idempotent basis, degree 0).
pub fn diagonal_algebra(
    name: &str,
    field: Field,
    labels: &[String],
) -> Result<Arc<DgAlgebra>, CoreError> {
    let space = GradedSpace::new(
        name,
        field,
        labels.iter().map(|l| (l.clone(), 0i64)).collect::<Vec<_>>(),
        (0, 0),
    )?;
    let sq = GradedSpace::tensor(format!("{name}²"), vec![space.clone(), space.clone()]);
    let mut mul = GradedMap::zero(sq, space.clone(), 0);
    let mut unit = SparseVec::new();
    for i in 0..space.dim() {
        let pair = mul.src.fuse_index(&[i, i]);
        mul.add_entry(i, pair, field.one())?;
        unit.add(i, field.one());
    }
    let complex = Complex::with_zero_d(space);
    DgAlgebra::new(name, complex, mul, unit, true)
}

/// The tensor product of two dg-algebras with the Koszul multiplication.
pub fn tensor_algebra(x: &Arc<DgAlgebra>, y: &Arc<DgAlgebra>) -> Result<Arc<DgAlgebra>, CoreError> {
    let name = format!("{}⊗{}", x.name, y.name);
    let xs = x.space().clone();
    let ys = y.space().clone();
    let space = GradedSpace::tensor(name.clone(), vec![xs.clone(), ys.clone()]);
    let sq = GradedSpace::tensor(format!("{name}²"), vec![space.clone(), space.clone()]);
    let gran = GradedSpace::tensor("gran", vec![xs.clone(), ys.clone(), xs.clone(), ys.clone()]);
    let shuffled = GradedSpace::tensor("shuf", vec![xs.clone(), xs.clone(), ys.clone(), ys.clone()]);
    let perm = koszul_permutation(&gran, &shuffled, &[0, 2, 1, 3]);
    let blocks = [
        Block { map: &x.mul, src_arity: 2, dst_arity: 1 },
        Block { map: &y.mul, src_arity: 2, dst_arity: 1 },
    ];
    let mul2 = block_tensor_map(&blocks, &shuffled, &space);
    let mul = mul2.compose(&perm).retarget(sq, space.clone(), 0);
    let mut unit = SparseVec::new();
    for (i, ci) in x.unit.iter() {
        for (j, cj) in y.unit.iter() {
            unit.add(space.fuse_index(&[i, j]), ci.clone() * cj.clone());
        }
    }
    let dx = &x.complex.d;
    let dy = &y.complex.d;
    let idx = GradedMap::identity(xs);
    let idy = GradedMap::identity(ys);
    let d = tensor_map(&[dx, &idy], &space, &space).add(&tensor_map(&[&idx, dy], &space, &space));
    let complex = Complex::new(space, d)?;
    DgAlgebra::new(name, complex, mul, unit, x.commutative && y.commutative)
}

/// The Čech cosimplicial system of a finite cover: `B` = functions on the
/// point set, `A` = functions on the disjoint union of the opens, level
/// `n` = `A^{⊗_B (n+1)}` (functions on the (n+1)-fold fibre product).
/// An optional coefficient algebra is tensored onto both `A` and `B`.
pub fn cech_system(
    cover: &FiniteCover,
    field: Field,
    truncation: usize,
    coefficients: Option<&Arc<DgAlgebra>>,
) -> Result<CosimplicialSystem, CoreError> {
    let point_labels: Vec<String> = (0..cover.points).map(|p| format!("e{p}")).collect();
    let mut open_labels = Vec::new();
    for (i, u) in cover.opens.iter().enumerate() {
        for &p in u {
            open_labels.push(format!("e{i}|{p}"));
        }
    }
    let b0 = diagonal_algebra("B", field, &point_labels)?;
    let a0 = diagonal_algebra("A", field, &open_labels)?;
    // φ : B -> A, e_p -> Σ_{i : p ∈ U_i} e_{i|p}
    let mut phi0 = GradedMap::zero(b0.space().clone(), a0.space().clone(), 0);
    {
        let mut pos = 0usize;
        for u in cover.opens.iter() {
            for &p in u {
                phi0.add_entry(pos, p, field.one())?;
                pos += 1;
            }
        }
    }
    let (b, a, phi) = match coefficients {
        None => (b0, a0, phi0),
        Some(r) => {
            let br = tensor_algebra(&b0, r)?;
            let ar = tensor_algebra(&a0, r)?;
            let id_r = GradedMap::identity(r.space().clone());
            let phir = tensor_map(&[&phi0, &id_r], br.space(), ar.space());
            (br, ar, phir)
        }
    };
    let phi = AlgebraMap::new(b.clone(), a.clone(), phi)?;
    let a_over_b = bimodule_via_map(&phi)?;
    tensor_power_system("Č", b, a, a_over_b, truncation)
}

/// An algebra `A'` viewed as a bimodule over `A` through an algebra map.
pub fn bimodule_via_map(phi: &AlgebraMap) -> Result<Bimodule, CoreError> {
    let a = &phi.src;
    let ap = &phi.dst;
    let id_ap = GradedMap::identity(ap.space().clone());
    let am = GradedSpace::tensor(
        format!("{}⊗{}", a.name, ap.name),
        vec![a.space().clone(), ap.space().clone()],
    );
    let ma = GradedSpace::tensor(
        format!("{}⊗{}", ap.name, a.name),
        vec![ap.space().clone(), a.space().clone()],
    );
    let lact = ap.mul.compose(&tensor_map(&[&phi.map, &id_ap], &am, &ap.square));
    let ract = ap.mul.compose(&tensor_map(&[&id_ap, &phi.map], &ma, &ap.square));
    let bm = Bimodule {
        left: Some(a.clone()),
        right: Some(a.clone()),
        complex: ap.complex.clone(),
        lact: Some(lact),
        ract: Some(ract),
    };
    bm.validate()?;
    Ok(bm)
}

/// The affine groupoid model extracted from a cosimplicial system:
/// `A` = level 0, `C` = level 1 as an `A`-bimodule with the two unit
/// insertions as structure maps, the comultiplication
/// `Δ : C -> C ⊗_A C`, and the counit `ε = σ⁰ : C -> A`.
#[derive(Debug, Clone)]
pub struct GroupoidData {
    pub sys: CosimplicialSystem,
    pub a: Arc<DgAlgebra>,
    pub c_alg: Arc<DgAlgebra>,
    /// `C` as an `A`-bimodule (left action through `δ¹ : a ↦ a⊗1`,
    /// right action through `δ⁰ : a ↦ 1⊗a`).
    pub c: Bimodule,
    /// `C ⊗_A C` and higher powers: `cpows[t-1] = C^{⊗_A t}`.
    pub cpows: Vec<BalancedChain>,
    /// `Δ : C -> C ⊗_A C` (degree 0), landing in `cpows[1].space`.
    pub delta: GradedMap,
    /// `Δ` followed by the section into the flat `C ⊗ C`.
    pub delta_flat: GradedMap,
    /// `ε : C -> A` (degree 0).
    pub eps: GradedMap,
}

impl GroupoidData {
    pub fn from_system(sys: CosimplicialSystem, max_cpow: usize) -> Result<GroupoidData, CoreError> {
        if sys.truncation < 2 {
            return Err(CoreError::shape("groupoid data needs truncation >= 2"));
        }
        let a = sys.levels[0].clone();
        let c_alg = sys.levels[1].clone();
        let cspace = c_alg.space().clone();
        let d1 = &sys.coface(1, 1).map; // a ↦ a ⊗ 1
        let d0 = &sys.coface(1, 0).map; // a ↦ 1 ⊗ a
        let id_c = GradedMap::identity(cspace.clone());
        let ac = GradedSpace::tensor("A⊗C", vec![a.space().clone(), cspace.clone()]);
        let ca = GradedSpace::tensor("C⊗A", vec![cspace.clone(), a.space().clone()]);
        let lact = c_alg.mul.compose(&tensor_map(&[d1, &id_c], &ac, &c_alg.square));
        let ract = c_alg.mul.compose(&tensor_map(&[&id_c, d0], &ca, &c_alg.square));
        let c = Bimodule {
            left: Some(a.clone()),
            right: Some(a.clone()),
            complex: c_alg.complex.clone(),
            lact: Some(lact),
            ract: Some(ract),
        };
        c.validate()?;
        let mut cpows = Vec::new();
        for t in 1..=max_cpow.max(2) {
            cpows.push(BalancedChain::new(format!("C^⊗{t}"), vec![c.clone(); t])?);
        }
        let mut gd = GroupoidData {
            sys,
            a,
            c_alg,
            c,
            cpows,
            delta: GradedMap::zero(cspace.clone(), cspace.clone(), 0), // placeholder
            delta_flat: GradedMap::zero(cspace.clone(), cspace.clone(), 0), // placeholder
            eps: GradedMap::zero(cspace, GradedSpace::from_degrees("·", Field::Rationals, &[0]), 0), // placeholder
        };
        // verify the power presentations against the level algebras
        for t in 1..=gd.cpows.len().min(gd.sys.truncation) {
            let (to_pow, from_pow) = gd.pow_iso(t)?;
            let round1 = to_pow.compose(&from_pow);
            let round2 = from_pow.compose(&to_pow);
            if !round1.equals(&GradedMap::identity(round1.src.clone()))
                || !round2.equals(&GradedMap::identity(round2.src.clone()))
            {
                return Err(CoreError::validation(format!(
                    "C^⊗{t} does not match level {t} of the system"
                )));
            }
        }
        let (_, from_pow2) = gd.pow_iso(2)?;
        gd.delta = from_pow2.compose(&gd.sys.coface(2, 1).map);
        gd.delta_flat = gd.cpows[1].sect.compose(&gd.delta);
        gd.eps = gd.sys.codegen(0, 0).map.clone();
        Ok(gd)
    }

    pub fn cpow(&self, t: usize) -> &BalancedChain {
        &self.cpows[t - 1]
    }

    /// The pair of mutually inverse maps between `C^{⊗_A t}` and level `t`
    /// of the system (`a_0 ⊗ … ⊗ a_t ↔` junction presentation).
    pub fn pow_iso(&self, t: usize) -> Result<(GradedMap, GradedMap), CoreError> {
        let chain = self.cpow(t);
        let level = &self.sys.chains[t];
        let aspace = self.sys.a_alg.space().clone();
        let cgran = GradedSpace::tensor("C-flat", vec![aspace.clone(); 2 * t]);
        // to level: expand each C to A⊗A, multiply the t-1 junctions
        let sect1 = &self.sys.chains[1].sect;
        let expand_blocks: Vec<Block> =
            (0..t).map(|_| Block { map: sect1, src_arity: 1, dst_arity: 2 }).collect();
        let expand = block_tensor_map(&expand_blocks, &chain.ambient, &cgran);
        let id_a = GradedMap::identity(aspace.clone());
        let mut blocks: Vec<Block> = vec![Block::id(&id_a)];
        for _ in 0..(t - 1) {
            blocks.push(Block { map: &self.sys.a_alg.mul, src_arity: 2, dst_arity: 1 });
        }
        blocks.push(Block::id(&id_a));
        let merge = block_tensor_map(&blocks, &cgran, &level.ambient);
        let to_level = level.proj.compose(&merge).compose(&expand).compose(&chain.sect);
        // from level: duplicate interior slots with units, contract pairs
        let mut widen = GradedMap::identity(level.ambient.clone());
        let mut cur = level.ambient.clone();
        for k in 0..(t - 1) {
            let next = GradedSpace::tensor("widen", vec![aspace.clone(); t + 2 + k]);
            let step = insert_unit_flat(&cur, &next, &self.sys.a_alg.unit, 2 * k + 1);
            widen = step.compose(&widen);
            cur = next;
        }
        let proj1 = &self.sys.chains[1].proj;
        let contract_blocks: Vec<Block> =
            (0..t).map(|_| Block { map: proj1, src_arity: 2, dst_arity: 1 }).collect();
        let contract = block_tensor_map(&contract_blocks, &cur, &chain.ambient);
        let from_level = chain
            .proj
            .compose(&contract)
            .compose(&widen.retarget(level.ambient.clone(), cur, 0))
            .compose(&level.sect);
        Ok((
            to_level.retarget(chain.space.clone(), level.space.clone(), 0),
            from_level.retarget(level.space.clone(), chain.space.clone(), 0),
        ))
    }
}

/// A string `F_0 ⊗_A … ⊗_A F_r` of bimodules over `A`, where `edges[t]`
/// marks the two-legged factors (copies of `C`); the string is a module
/// over the level algebra indexed by its legs.
#[derive(Debug, Clone)]
pub struct ModString {
    pub factors: Vec<Bimodule>,
    pub edges: Vec<bool>,
    pub chain: BalancedChain,
    /// For each leg index: (factor, uses-right-action).
    pub assign: Vec<(usize, bool)>,
}

impl ModString {
    pub fn new(
        name: impl Into<String>,
        factors: Vec<Bimodule>,
        edges: Vec<bool>,
    ) -> Result<ModString, CoreError> {
        assert_eq!(factors.len(), edges.len());
        let chain = BalancedChain::new(name, factors.clone())?;
        let mut assign = vec![(0usize, false)];
        if edges[0] {
            assign.push((0, true));
        }
        for (t, &e) in edges.iter().enumerate().skip(1) {
            if e {
                assign.push((t, true));
            }
        }
        Ok(ModString { factors, edges, chain, assign })
    }

    /// The cosimplicial level this string lives over (`#legs - 1`).
    pub fn level(&self) -> usize {
        self.assign.len() - 1
    }

    pub fn space(&self) -> &Arc<GradedSpace> {
        &self.chain.space
    }
}

/// The action of the level algebra on a module string: the `k`-th tensor
/// copy of `A` acts through the factor owning the `k`-th leg.
pub fn level_action(sys: &CosimplicialSystem, string: &ModString) -> Result<GradedMap, CoreError> {
    let n = string.level();
    if n > sys.truncation {
        return Err(CoreError::shape("string level exceeds the system truncation"));
    }
    let lvl = &sys.chains[n];
    let field = string.chain.space.field;
    let src = GradedSpace::tensor(
        format!("{}⊗{}", sys.levels[n].name, string.chain.space.name),
        vec![sys.levels[n].space().clone(), string.chain.space.clone()],
    );
    let amb = &string.chain.ambient;
    let fdims: Vec<&Arc<GradedSpace>> = string.factors.iter().map(|f| f.space()).collect();
    let mut out = GradedMap::zero(src.clone(), string.chain.space.clone(), 0);
    for wi in 0..lvl.space.dim() {
        let wlift = lvl.sect.apply(&SparseVec::unit(wi, field.one()));
        for xi in 0..string.chain.space.dim() {
            let xlift = string.chain.sect.apply(&SparseVec::unit(xi, field.one()));
            let mut acc = SparseVec::new();
            for (wflat, wc) in wlift.iter() {
                let aparts = lvl.ambient.split_index(wflat);
                for (xflat, xc) in xlift.iter() {
                    let mut terms: Vec<(Scalar, Vec<usize>)> =
                        vec![(wc.clone() * xc.clone(), amb.split_index(xflat))];
                    // apply the rightmost A-copy first
                    for k in (0..=n).rev() {
                        let (t, right) = string.assign[k];
                        let a_idx = aparts[k];
                        let a_deg = sys.a_alg.space().degrees[a_idx];
                        let mut next: Vec<(Scalar, Vec<usize>)> = Vec::new();
                        for (c, parts) in &terms {
                            let mut passed = 0i64;
                            for (s, fsp) in fdims.iter().enumerate().take(t) {
                                passed += fsp.degrees[parts[s]];
                            }
                            if right {
                                passed += fdims[t].degrees[parts[t]];
                            }
                            let sign = Scalar::sign_pow(field, a_deg * passed);
                            let action = if right {
                                string.factors[t].ract.as_ref().unwrap()
                            } else {
                                string.factors[t].lact.as_ref().unwrap()
                            };
                            let pair = if right {
                                action.src.fuse_index(&[parts[t], a_idx])
                            } else {
                                action.src.fuse_index(&[a_idx, parts[t]])
                            };
                            let img = action.apply(&SparseVec::unit(pair, field.one()));
                            for (nt, cc) in img.iter() {
                                let mut p = parts.clone();
                                p[t] = nt;
                                next.push((c.clone() * sign.clone() * cc.clone(), p));
                            }
                        }
                        terms = next;
                    }
                    for (c, parts) in terms {
                        acc.add(amb.fuse_index(&parts), c);
                    }
                }
            }
            let q = string.chain.proj.apply(&acc);
            for (r, c) in q.iter() {
                out.add_entry(r, src.fuse_index(&[wi, xi]), c.clone())?;
            }
        }
    }
    Ok(out)
}

/// Inserts `Δ` at leg gap `j` (between legs `j-1` and `j`, interior):
/// returns the widened string and the insertion map.
pub fn delta_insert(
    gd: &GroupoidData,
    string: &ModString,
    j: usize,
) -> Result<(ModString, GradedMap), CoreError> {
    let n = string.level();
    if j == 0 || j > n {
        return Err(CoreError::shape("delta insertion needs an interior leg gap"));
    }
    let (t, right) = string.assign[j];
    if !right || !string.edges[t] {
        return Err(CoreError::shape("leg gap is not spanned by an edge factor"));
    }
    let mut factors = string.factors.clone();
    let mut edges = string.edges.clone();
    factors.splice(t..=t, [gd.c.clone(), gd.c.clone()]);
    edges.splice(t..=t, [true, true]);
    let wide = ModString::new(format!("{}+Δ{j}", string.chain.space.name), factors, edges)?;
    let ids: Vec<GradedMap> = string
        .factors
        .iter()
        .map(|f| GradedMap::identity(f.space().clone()))
        .collect();
    let mut blocks: Vec<Block> = Vec::new();
    for (s, idm) in ids.iter().enumerate() {
        if s == t {
            blocks.push(Block { map: &gd.delta_flat, src_arity: 1, dst_arity: 2 });
        } else {
            blocks.push(Block::id(idm));
        }
    }
    let flat = block_tensor_map(&blocks, &string.chain.ambient, &wide.chain.ambient);
    let ins = wide.chain.proj.compose(&flat).compose(&string.chain.sect);
    Ok((wide, ins))
}

/// The extension of scalars of a module over level `n-1` along `δ^i`,
/// returned together with its presentation.
pub fn coface_extend(
    sys: &CosimplicialSystem,
    n: usize,
    i: usize,
    m: &DgModule,
) -> Result<(DgModule, BalancedChain), CoreError> {
    if n == 0 || n > sys.truncation || i > n {
        return Err(CoreError::shape("coface index out of range"));
    }
    extend_scalars(sys.coface(n, i), m)
}

/// Transports a map of level-`n` module strings along the interior coface
/// `δ^j` (1 ≤ j ≤ n): computes the honest extension of scalars of both
/// sides, identifies them with the Δ-widened strings through the explicit
/// natural isomorphism `w ⊗ x ↦ w · ins(x)`, and conjugates. Returns the
/// widened strings and the transported map.
pub fn coface_of_map(
    sys: &CosimplicialSystem,
    gd: &GroupoidData,
    xs: &ModString,
    ys: &ModString,
    theta: &GradedMap,
    j: usize,
) -> Result<(ModString, ModString, GradedMap), CoreError> {
    let n = xs.level();
    if ys.level() != n {
        return Err(CoreError::shape("string levels differ"));
    }
    if n + 1 > sys.truncation {
        return Err(CoreError::shape("coface target level exceeds truncation"));
    }
    let (xs2, ins_x) = delta_insert(gd, xs, j)?;
    let (ys2, ins_y) = delta_insert(gd, ys, j)?;
    let phi = sys.coface(n + 1, j);
    let eta = |s: &ModString, s2: &ModString, ins: &GradedMap| -> Result<(BalancedChain, GradedMap), CoreError> {
        let act = level_action(sys, s)?;
        let module = DgModule::new(
            sys.levels[n].clone(),
            Complex::new(s.chain.space.clone(), s.chain.d.clone())?,
            act,
        )?;
        let (_, ext_chain) = extend_scalars(phi, &module)?;
        let act2 = level_action(sys, s2)?;
        let id_lvl = GradedMap::identity(sys.levels[n + 1].space().clone());
        let widen = tensor_map(&[&id_lvl, ins], &ext_chain.ambient, &act2.src);
        let iso = act2.compose(&widen).compose(&ext_chain.sect);
        if iso.src.dim() != iso.dst.dim() {
            return Err(CoreError::validation("coface extension has unexpected dimension"));
        }
        Ok((ext_chain, iso))
    };
    let (ext_x, eta_x) = eta(xs, &xs2, &ins_x)?;
    let (ext_y, eta_y) = eta(ys, &ys2, &ins_y)?;
    let id_lvl = GradedMap::identity(sys.levels[n + 1].space().clone());
    let flat = tensor_map(&[&id_lvl, theta], &ext_x.ambient, &ext_y.ambient);
    let theta_ext = ext_y.proj.compose(&flat).compose(&ext_x.sect);
    let result = eta_y.compose(&theta_ext).compose(&eta_x.inverse()?);
    // defining property of the transport
    debug_assert!(result.compose(&ins_x).equals(&ins_y.compose(theta)));
    Ok((xs2, ys2, result))
}

/// `θ ⊗ id_{C^{⊗j}}` on widened strings (appends `j` edge factors).
pub fn extend_right(
    gd: &GroupoidData,
    xs: &ModString,
    ys: &ModString,
    theta: &GradedMap,
    j: usize,
) -> Result<(ModString, ModString, GradedMap), CoreError> {
    if j == 0 {
        return Ok((xs.clone(), ys.clone(), theta.clone()));
    }
    let widen = |s: &ModString| -> Result<ModString, CoreError> {
        let mut factors = s.factors.clone();
        let mut edges = s.edges.clone();
        factors.extend(vec![gd.c.clone(); j]);
        edges.extend(vec![true; j]);
        ModString::new(format!("{}⊗C^{j}", s.chain.space.name), factors, edges)
    };
    let xsw = widen(xs)?;
    let ysw = widen(ys)?;
    let lift = ys.chain.sect.compose(theta).compose(&xs.chain.proj);
    let id_cj = GradedMap::identity(GradedSpace::tensor(
        "C-right",
        vec![gd.c.space().clone(); j],
    ));
    let blocks = [
        Block { map: &lift, src_arity: xs.factors.len(), dst_arity: ys.factors.len() },
        Block { map: &id_cj, src_arity: j, dst_arity: j },
    ];
    let flat = block_tensor_map(&blocks, &xsw.chain.ambient, &ysw.chain.ambient);
    let map = ysw.chain.proj.compose(&flat).compose(&xsw.chain.sect);
    Ok((xsw, ysw, map))
}

/// `id_{C^{⊗j}} ⊗ θ` on widened strings (prepends `j` edge factors; the
/// Koszul sign of `θ` passing the prepended legs is automatic).
pub fn extend_left(
    gd: &GroupoidData,
    xs: &ModString,
    ys: &ModString,
    theta: &GradedMap,
    j: usize,
) -> Result<(ModString, ModString, GradedMap), CoreError> {
    if j == 0 {
        return Ok((xs.clone(), ys.clone(), theta.clone()));
    }
    let widen = |s: &ModString| -> Result<ModString, CoreError> {
        let mut factors = vec![gd.c.clone(); j];
        let mut edges = vec![true; j];
        factors.extend(s.factors.iter().cloned());
        edges.extend(s.edges.iter().cloned());
        ModString::new(format!("C^{j}⊗{}", s.chain.space.name), factors, edges)
    };
    let xsw = widen(xs)?;
    let ysw = widen(ys)?;
    let lift = ys.chain.sect.compose(theta).compose(&xs.chain.proj);
    let id_cj = GradedMap::identity(GradedSpace::tensor(
        "C-left",
        vec![gd.c.space().clone(); j],
    ));
    let blocks = [
        Block { map: &id_cj, src_arity: j, dst_arity: j },
        Block { map: &lift, src_arity: xs.factors.len(), dst_arity: ys.factors.len() },
    ];
    let flat = block_tensor_map(&blocks, &xsw.chain.ambient, &ysw.chain.ambient);
    let map = ysw.chain.proj.compose(&flat).compose(&xsw.chain.sect);
    Ok((xsw, ysw, map))
}

/// Pastes a level-`i` descent-style map `θ : M ⊗ C^{⊗i} -> C^{⊗i} ⊗ N`
/// with a level-`j` map `η : N ⊗ C^{⊗j} -> C^{⊗j} ⊗ P` to a level-`i+j`
/// map `M ⊗ C^{⊗(i+j)} -> C^{⊗(i+j)} ⊗ P`, as
/// `(id_{C^{⊗i}} ⊗ η) ∘ (θ ⊗ id_{C^{⊗j}})`.
#[allow(clippy::too_many_arguments)]
pub fn paste_compose(
    gd: &GroupoidData,
    m_src: &ModString,
    n_mid_right: &ModString,
    n_mid_left: &ModString,
    p_dst: &ModString,
    theta: &GradedMap,
    eta: &GradedMap,
    i: usize,
    j: usize,
) -> Result<(ModString, ModString, GradedMap), CoreError> {
    let (xsw, ysw, th_ext) = extend_right(gd, m_src, n_mid_left, theta, j)?;
    let (ysw2, psw, eta_ext) = extend_left(gd, n_mid_right, p_dst, eta, i)?;
    if !ysw.chain.space.same_shape(&ysw2.chain.space) {
        return Err(CoreError::shape("paste_compose: middle strings do not match"));
    }
    let eta_ext = eta_ext.retarget(ysw.chain.space.clone(), psw.chain.space.clone(), eta.degree);
    Ok((xsw, psw, eta_ext.compose(&th_ext)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::dual_numbers;

    fn field() -> Field {
        Field::Rationals
    }

    fn standard_cover() -> FiniteCover {
        FiniteCover::new(3, vec![vec![0, 1], vec![1, 2]]).unwrap()
    }

    #[test]
    fn ordinal_maps_compose_and_factor() {
        let f = OrdinalMap::new(1, 3, vec![1, 3]).unwrap();
        let fac = f.coface_factorization().unwrap();
        let mut g = OrdinalMap::identity(1);
        for (level, d) in &fac {
            g = OrdinalMap::coface(*level, *d).compose(&g).unwrap();
        }
        assert_eq!(g, f);
        assert!(OrdinalMap::new(1, 3, vec![3, 1]).is_err());
    }

    #[test]
    fn cech_dimensions_match_intersection_counts() {
        let sys = cech_system(&standard_cover(), field(), 2, None).unwrap();
        // Σ |U_{i0} ∩ … ∩ U_{in}| over all (n+1)-tuples
        let dims: Vec<usize> = sys.levels.iter().map(|l| l.space().dim()).collect();
        assert_eq!(dims, vec![4, 6, 10]);
        assert!(validate_cosimplicial(&sys).is_empty());
    }

    #[test]
    fn single_open_cover_is_constant() {
        let cover = FiniteCover::new(2, vec![vec![0, 1]]).unwrap();
        let sys = cech_system(&cover, field(), 2, None).unwrap();
        for l in &sys.levels {
            assert_eq!(l.space().dim(), 2);
        }
        for n in 1..=2 {
            for i in 0..=n {
                let m = &sys.coface(n, i).map;
                assert!(m.equals(&GradedMap::identity(m.src.clone()).retarget(
                    m.src.clone(),
                    m.dst.clone(),
                    0
                )));
            }
        }
        assert!(validate_cosimplicial(&sys).is_empty());
    }

    #[test]
    fn coefficient_algebra_doubles_dimensions() {
        let r = dual_numbers(field());
        let sys = cech_system(&standard_cover(), field(), 2, Some(&r)).unwrap();
        let dims: Vec<usize> = sys.levels.iter().map(|l| l.space().dim()).collect();
        assert_eq!(dims, vec![8, 12, 20]);
        assert!(validate_cosimplicial(&sys).is_empty());
    }

    #[test]
    fn swapped_cofaces_are_reported() {
        let mut sys = cech_system(&standard_cover(), field(), 2, None).unwrap();
        sys.cofaces[0].swap(0, 1);
        assert!(!validate_cosimplicial(&sys).is_empty());
    }

    #[test]
    fn groupoid_data_and_skyscraper_extension() {
        let sys = cech_system(&standard_cover(), field(), 3, None).unwrap();
        let gd = GroupoidData::from_system(sys, 3).unwrap();
        assert_eq!(gd.c.space().dim(), 6);
        // skyscraper at point 1 (the overlap): functions on {(i,1)}
        let a = &gd.a;
        let sky_space = GradedSpace::new("sky", field(), vec![("s0".into(), 0), ("s1".into(), 0)], (0, 0)).unwrap();
        let src = GradedSpace::tensor("A⊗sky", vec![a.space().clone(), sky_space.clone()]);
        let mut act = GradedMap::zero(src, sky_space.clone(), 0);
        // A basis order: e0|0, e0|1, e1|1, e1|2; opens containing point 1: 0 and 1
        for (s, ai) in [(0usize, 1usize), (1usize, 2usize)] {
            act.add_entry(s, act.src.fuse_index(&[ai, s]), field().one()).unwrap();
        }
        let sky = DgModule::new(a.clone(), Complex::with_zero_d(sky_space), act).unwrap();
        let (ext, _) = coface_extend(&gd.sys, 1, 0, &sky).unwrap();
        assert_eq!(ext.space().dim(), 4);
        // free rank-1 module extends to the full level algebra
        let free = DgModule::new(a.clone(), a.complex.clone(), a.mul.clone()).unwrap();
        let (extf, _) = coface_extend(&gd.sys, 1, 0, &free).unwrap();
        assert_eq!(extf.space().dim(), gd.sys.levels[1].space().dim());
    }

    /// The canonical level-`n` map `A ⊗ C^{⊗n} -> C^{⊗n} ⊗ A` moving the
    /// trivial module across, used as a structured test instance.
    fn canonical_theta(gd: &GroupoidData, n: usize) -> (ModString, ModString, GradedMap) {
        let a_bim = gd.a.as_bimodule();
        let mut xf = vec![a_bim.clone()];
        xf.extend(vec![gd.c.clone(); n]);
        let mut xe = vec![false];
        xe.extend(vec![true; n]);
        let xs = ModString::new("A⊗C^n", xf, xe).unwrap();
        let mut yf = vec![gd.c.clone(); n];
        yf.push(a_bim);
        let mut ye = vec![true; n];
        ye.push(false);
        let ys = ModString::new("C^n⊗A", yf, ye).unwrap();
        let cpow = gd.cpow(n);
        // X -> C^{⊗n}: absorb A into the leftmost leg
        let left_act = cpow.left_action().unwrap();
        let id_a = GradedMap::identity(gd.a.space().clone());
        let lift = tensor_map(
            &[&id_a, &cpow.proj],
            &GradedSpace::tensor("A⊗flat", vec![gd.a.space().clone(), cpow.ambient.clone()]),
            &left_act.src,
        )
        .retarget(xs.chain.ambient.clone(), left_act.src.clone(), 0);
        let from_x = left_act.compose(&lift).compose(&xs.chain.sect);
        // C^{⊗n} -> Y: append the unit of A
        let to_y = {
            let mut m = GradedMap::zero(cpow.space.clone(), ys.chain.space.clone(), 0);
            for q in 0..cpow.space.dim() {
                let flat = cpow.sect.apply(&SparseVec::unit(q, field().one()));
                let mut widened = SparseVec::new();
                for (idx, c) in flat.iter() {
                    let mut parts = cpow.ambient.split_index(idx);
                    for (u, cu) in gd.a.unit.iter() {
                        parts.push(u);
                        widened.add(ys.chain.ambient.fuse_index(&parts), c.clone() * cu.clone());
                        parts.pop();
                    }
                }
                let img = ys.chain.proj.apply(&widened);
                for (r, c) in img.iter() {
                    m.add_entry(r, q, c.clone()).unwrap();
                }
            }
            m
        };
        (xs, ys, to_y.compose(&from_x))
    }

    #[test]
    fn coface_transport_matches_canonical_maps() {
        let sys = cech_system(&standard_cover(), field(), 3, None).unwrap();
        let gd = GroupoidData::from_system(sys, 3).unwrap();
        let (xs, ys, theta) = canonical_theta(&gd, 2);
        let (_, _, transported) = coface_of_map(&gd.sys, &gd, &xs, &ys, &theta, 1).unwrap();
        let (_, _, expected) = {
            let (x3, y3, t3) = canonical_theta(&gd, 3);
            (x3, y3, t3)
        };
        assert!(transported.equals(&expected.retarget(
            transported.src.clone(),
            transported.dst.clone(),
            0
        )));
    }

    #[test]
    fn paste_compose_is_associative_on_canonical_maps() {
        let sys = cech_system(&standard_cover(), field(), 3, None).unwrap();
        let gd = GroupoidData::from_system(sys, 3).unwrap();
        let (x1, y1, t1) = canonical_theta(&gd, 1);
        // paste two level-1 canonical maps: should equal the level-2 one
        let (_, _, pasted) =
            paste_compose(&gd, &x1, &x1, &y1, &y1, &t1, &t1, 1, 1).unwrap();
        let (_, _, t2) = canonical_theta(&gd, 2);
        assert!(pasted.equals(&t2.retarget(pasted.src.clone(), pasted.dst.clone(), 0)));
        // associativity: (t1 ⋆ t1) ⋆ t1 = t1 ⋆ (t1 ⋆ t1) at level 3
        let (x2, y2, _) = canonical_theta(&gd, 2);
        let (_, _, left) =
            paste_compose(&gd, &x2, &x1, &y2, &y1, &pasted, &t1, 2, 1).unwrap();
        let (_, _, right) =
            paste_compose(&gd, &x1, &x2, &y1, &y2, &t1, &pasted, 1, 2).unwrap();
        assert!(left.equals(&right.retarget(left.src.clone(), left.dst.clone(), 0)));
    }
}
