//! A seeded, deterministic self-test battery exercising every layer of the
//! engine: sign conventions, A∞-structures and the bar construction,
//! functor categories over the simplex category, homotopy-limit towers,
//! and classical descent. The report is a pure function of `(seed, iters)`.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ainfty::{bar_construct, check_ainfty};
use crate::complex::{shift_conjugate_down, shift_conjugate_up, ShiftWitness};
use crate::cosimplicial::{cech_system, FiniteCover, GroupoidData};
use crate::descent::{descent_to_comodule, enumerate_cocycle_data, diagonal_module, iso_iff_unit};
use crate::dgcat::validate_dg_category;
use crate::error::CoreError;
use crate::gen::{corrupt_ainfty, random_ainfty, random_holim_morphism, random_holim_object};
use crate::graded::{power_shift, tensor_map, GradedMap, GradedSpace};
use crate::holim::{holim_compose, holim_differential, structure_object, validate_holim_object};
use crate::io::Report;
use crate::scalar::{Field, Scalar};
use crate::simplexfun::{simplex_category, tautological_object, validate_afun_object};

fn random_map(
    src: &Arc<GradedSpace>,
    dst: &Arc<GradedSpace>,
    degree: i64,
    rng: &mut ChaCha8Rng,
) -> GradedMap {
    let field = src.field;
    let mut m = GradedMap::zero(src.clone(), dst.clone(), degree);
    for q in 0..src.dim() {
        for r in 0..dst.dim() {
            if dst.degrees[r] == src.degrees[q] + degree {
                let c = rng.gen_range(-2..=2);
                if c != 0 {
                    m.add_entry(r, q, field.from_i64(c)).unwrap();
                }
            }
        }
    }
    m
}

fn sign_core(report: &mut Report, seed: u64) {
    let field = Field::Rationals;
    let sp = GradedSpace::from_degrees("w", field, &[-1, 0, 2]);
    let mut all = true;
    for n in 1..=6usize {
        let t = GradedSpace::tensor(format!("w^{n}"), vec![sp.clone(); n]);
        let tsh = GradedSpace::tensor(format!("w[1]^{n}"), vec![sp.shifted(1); n]);
        let s_n = power_shift(&t, &tsh, true);
        let omega_n = power_shift(&tsh, &t, false);
        let round = omega_n.compose(&s_n);
        let sign = Scalar::sign_pow(field, (n * (n - 1) / 2) as i64);
        let expect = GradedMap::identity(t.clone()).scale(&sign);
        all &= round.equals(&expect);
    }
    report.push("sign: power shift round trip", all, "n <= 6");

    let witness_ok = ShiftWitness::new(&sp).verify().is_ok();
    report.push("sign: suspension witness inverts", witness_ok, "");

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5157);
    let mut conj = true;
    for n in 1..=3usize {
        let t = GradedSpace::tensor(format!("w^{n}"), vec![sp.clone(); n]);
        let tsh = GradedSpace::tensor(format!("w[1]^{n}"), vec![sp.shifted(1); n]);
        let round_sign = Scalar::sign_pow(field, (n * (n - 1) / 2) as i64);

        // operations: conjugate up, then invert by hand
        let f = random_map(&t, &sp, 2 - n as i64, &mut rng);
        let l = f.degree + n as i64 - 1; // sign exponent used by the conjugation
        let up = shift_conjugate_up(&f, &tsh, n);
        let s_n = power_shift(&t, &tsh, true);
        let wit = ShiftWitness::new(&sp);
        let back = wit
            .omega
            .compose(&up)
            .compose(&s_n)
            .scale(&Scalar::sign_pow(field, l));
        conj &= back.equals(&f.scale(&round_sign));

        // co-operations: conjugate down, then invert by hand
        let g = random_map(&sp, &t, 2 - n as i64, &mut rng);
        let spd = sp.shifted(-1);
        let td = GradedSpace::tensor(format!("w[-1]^{n}"), vec![spd.clone(); n]);
        let down = shift_conjugate_down(&g, &spd, &td, n);
        let s2 = power_shift(&td, &t, true);
        let mut omega1 = GradedMap::zero(sp.clone(), spd.clone(), 1);
        for i in 0..sp.dim() {
            omega1.add_entry(i, i, field.one()).unwrap();
        }
        let gback = s2
            .compose(&down)
            .compose(&omega1)
            .scale(&Scalar::sign_pow(field, l));
        conj &= gback.equals(&g.scale(&round_sign));
    }
    report.push("sign: shift conjugation round trip", conj, "n <= 3");

    // (f₂⊗g₂)∘(f₁⊗g₁) = (-1)^{|g₂||f₁|} (f₂∘f₁)⊗(g₂∘g₁)
    let mut law = true;
    for _ in 0..10 {
        let (df1, dg1, df2, dg2) =
            (rng.gen_range(-1..=1), rng.gen_range(-1..=1), rng.gen_range(-1..=1), rng.gen_range(-1..=1));
        let f1 = random_map(&sp, &sp, df1, &mut rng);
        let g1 = random_map(&sp, &sp, dg1, &mut rng);
        let f2 = random_map(&sp, &sp, df2, &mut rng);
        let g2 = random_map(&sp, &sp, dg2, &mut rng);
        let t = GradedSpace::tensor("w⊗w", vec![sp.clone(), sp.clone()]);
        let lhs = tensor_map(&[&f2, &g2], &t, &t).compose(&tensor_map(&[&f1, &g1], &t, &t));
        let sign = Scalar::sign_pow(field, dg2 * df1);
        let rhs = tensor_map(&[&f2.compose(&f1), &g2.compose(&g1)], &t, &t).scale(&sign);
        law &= lhs.equals(&rhs);
    }
    report.push("sign: tensor composition law", law, "10 quadruples");
}

fn ainfty_battery(report: &mut Report, seed: u64, iters: usize) {
    let field = Field::Rationals;
    let mut valid = 0usize;
    let mut flat = 0usize;
    let mut corrupted = 0usize;
    let mut localized = 0usize;
    for i in 0..iters as u64 {
        let alg = random_ainfty(field, seed.wrapping_add(i));
        if check_ainfty(&alg, 2 * alg.max_arity() - 1).ok() {
            valid += 1;
        }
        if let Ok(bar) = bar_construct(&alg, 3) {
            if bar.complex.d.compose(&bar.complex.d).is_zero() {
                flat += 1;
            }
        }
        if let Ok((bad, k)) = corrupt_ainfty(&alg, seed.wrapping_add(i) ^ 0xc0de) {
            corrupted += 1;
            let rep = check_ainfty(&bad, 2 * bad.max_arity() - 1);
            if rep.failing.first().is_some_and(|&m| m >= k && m <= 2 * k - 1) {
                localized += 1;
            }
        }
    }
    report.push(
        "ainfty: generated structures satisfy the relations",
        valid == iters,
        format!("{valid}/{iters}"),
    );
    report.push(
        "ainfty: bar differential squares to zero",
        flat == iters,
        format!("{flat}/{iters}"),
    );
    report.push(
        "ainfty: corruptions detected and localized",
        corrupted > 0 && localized == corrupted,
        format!("{localized}/{corrupted} localized"),
    );
}

fn simplex_battery(report: &mut Report) -> Result<(), CoreError> {
    let mut ok = true;
    let mut taut = true;
    for n in 1..=2usize {
        let sx = simplex_category(n, Field::Rationals, (-2, 2))?;
        ok &= validate_dg_category(&sx.cat).is_ok();
        let obj = tautological_object(&sx)?;
        taut &= validate_afun_object(&sx.cat, &obj, false).map(|v| v.is_empty()).unwrap_or(false);
    }
    report.push("simplex: Δ-categories are dg-categories", ok, "n <= 2");
    report.push("simplex: tautological objects validate", taut, "n <= 2");
    Ok(())
}

fn holim_battery(report: &mut Report, seed: u64, iters: usize) -> Result<(), CoreError> {
    let cover = FiniteCover::new(2, vec![vec![0], vec![1]])?;
    let sys = cech_system(&cover, Field::Rationals, 2, None)?;
    let gd = Arc::new(GroupoidData::from_system(sys, 2)?);

    let strict = structure_object(&gd)?;
    let x = random_holim_object(&gd, seed)?;
    let y = random_holim_object(&gd, seed ^ 0xbeef)?;
    let objects_ok = validate_holim_object(&strict, 2)?.is_empty()
        && validate_holim_object(&x, 2)?.is_empty()
        && validate_holim_object(&y, 2)?.is_empty();
    report.push("holim: towers satisfy the structure equations", objects_ok, "3 objects");

    let n_pairs = iters.min(8);
    let mut leibniz = true;
    for i in 0..n_pairs as u64 {
        let a = random_holim_morphism(&strict, &x, 0, seed.wrapping_add(3 * i))?;
        let b = random_holim_morphism(&x, &y, 1, seed.wrapping_add(3 * i + 1))?;
        let lhs = holim_differential(&holim_compose(&b, &a)?)?;
        let mut rhs = holim_compose(&holim_differential(&b)?, &a)?;
        let db_a = holim_compose(&b, &holim_differential(&a)?)?;
        let sign = Scalar::sign_pow(Field::Rationals, b.degree);
        for n in 0..=2usize {
            let c = rhs.comps.entry(n).or_insert_with(|| {
                GradedMap::zero(
                    strict.max_string(n).space().clone(),
                    y.min_string(n).space().clone(),
                    b.degree + a.degree + 1 - n as i64,
                )
            });
            *c = c.add(&db_a.comp(n).scale(&sign));
            leibniz &= c.equals(&lhs.comp(n));
        }
    }
    report.push(
        "holim: differential satisfies the Leibniz rule",
        leibniz,
        format!("{n_pairs} seeded pairs"),
    );
    Ok(())
}

fn descent_battery(report: &mut Report) -> Result<(), CoreError> {
    let cover = FiniteCover::new(2, vec![vec![0, 1], vec![1]])?;
    let sys = cech_system(&cover, Field::Prime(2), 2, None)?;
    let gd = Arc::new(GroupoidData::from_system(sys, 3)?);
    let module = diagonal_module(&gd, &[0], "pt")?;
    let data = enumerate_cocycle_data(&gd, &module)?;
    let mut agreements = 0usize;
    let mut unital = 0usize;
    let mut comodules_ok = true;
    for d in &data {
        let (is_iso, is_unital) = iso_iff_unit(d)?;
        if is_iso == is_unital {
            agreements += 1;
        }
        if is_unital {
            unital += 1;
            comodules_ok &= descent_to_comodule(d)?.validate()?.is_empty();
        }
    }
    report.push(
        "descent: invertibility agrees with the unit condition",
        agreements == data.len() && unital > 0,
        format!("{} cocycle data, {unital} unital", data.len()),
    );
    report.push("descent: unital data give strict comodules", comodules_ok, "");
    Ok(())
}

/// Runs the whole battery. The report is a deterministic function of the
/// arguments; `iters` scales the seeded portions.
pub fn selftest(seed: u64, iters: usize) -> Result<Report, CoreError> {
    let iters = iters.max(1);
    let mut report = Report::new();
    report.seed = Some(seed);
    report.truncation = Some(2);
    sign_core(&mut report, seed);
    ainfty_battery(&mut report, seed, iters);
    simplex_battery(&mut report)?;
    holim_battery(&mut report, seed, iters)?;
    descent_battery(&mut report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selftest_passes_and_is_deterministic() {
        let a = selftest(7, 10).unwrap();
        assert!(a.ok(), "{}", a.to_human());
        let b = selftest(7, 10).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let c = selftest(8, 10).unwrap();
        assert!(c.ok(), "{}", c.to_human());
    }
}

