//! Seeded pseudo-random generators for validation batteries.
//!
//! All generators are deterministic functions of a `u64` seed (via
//! `ChaCha8Rng`), so every randomized battery is reproducible byte for byte.
//!
//! A∞-algebras are generated by conjugating small structured models (truncated
//! polynomial algebras, an exterior line, a two-term complex, and an instance
//! with a non-trivial `m_3`) by random degree-0 automorphisms; the conjugate
//! `m'_n = φ^{-1} ∘ m_n ∘ φ^{⊗n}` satisfies the relations exactly, so the
//! generator produces certified-valid structures without re-deriving them.
//! `corrupt_ainfty` then perturbs a single operation and guarantees that the
//! defect is observable and localized to the perturbed arity.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ainfty::{check_ainfty, AInftyAlgebra};
use crate::algebra::module_hom_complex;
use crate::cosimplicial::{GroupoidData, ModString};
use crate::descent::string_module;
use crate::error::CoreError;
use crate::graded::{tensor_map, GradedMap, GradedSpace};
use crate::holim::{gauge_transform, structure_object, HolimMorphism, HolimObject};
use crate::linalg::SparseVec;
use crate::scalar::Field;

/// The truncated polynomial algebra `k[x]/(x^r)` with `|x| = 0`, as a strict
/// A∞-algebra (only `m_2`).
fn truncated_polynomial(field: Field, r: usize) -> AInftyAlgebra {
    let sp = GradedSpace::from_degrees(format!("k[x]/x^{r}"), field, &vec![0; r]);
    let src = GradedSpace::tensor(format!("{}⊗2", sp.name), vec![sp.clone(); 2]);
    let mut m2 = GradedMap::zero(src.clone(), sp.clone(), 0);
    for i in 0..r {
        for j in 0..r {
            if i + j < r {
                m2.add_entry(i + j, src.fuse_index(&[i, j]), field.one()).unwrap();
            }
        }
    }
    AInftyAlgebra::new(sp, BTreeMap::from([(2, m2)])).unwrap()
}

/// The exterior line `k[y]/(y^2)` with `|y| = 1`, as a strict A∞-algebra.
fn exterior_point(field: Field) -> AInftyAlgebra {
    let sp = GradedSpace::from_degrees("Λ[y]", field, &[0, 1]);
    let src = GradedSpace::tensor("Λ[y]⊗2", vec![sp.clone(); 2]);
    let mut m2 = GradedMap::zero(src.clone(), sp.clone(), 0);
    m2.add_entry(0, src.fuse_index(&[0, 0]), field.one()).unwrap();
    m2.add_entry(1, src.fuse_index(&[0, 1]), field.one()).unwrap();
    m2.add_entry(1, src.fuse_index(&[1, 0]), field.one()).unwrap();
    AInftyAlgebra::new(sp, BTreeMap::from([(2, m2)])).unwrap()
}

/// A two-term complex `u -> v` with only `m_1`.
fn two_term_complex(field: Field) -> AInftyAlgebra {
    let sp = GradedSpace::from_degrees("two-term", field, &[0, 1]);
    let mut m1 = GradedMap::zero(sp.clone(), sp.clone(), 1);
    m1.add_entry(1, 0, field.one()).unwrap();
    AInftyAlgebra::new(sp, BTreeMap::from([(1, m1)])).unwrap()
}

/// An A∞-algebra whose lowest non-vanishing operation is a ternary one:
/// generators `x, y, z` in degree 1 and `w` in degree 2, with
/// `m_3(x ⊗ y ⊗ z) = w` and all other operations zero. The degree window
/// makes every composite of `m_3` with itself vanish, so the relations hold.
fn ternary_instance(field: Field) -> AInftyAlgebra {
    let sp = GradedSpace::from_degrees("ternary", field, &[1, 1, 1, 2]);
    let src = GradedSpace::tensor("ternary⊗3", vec![sp.clone(); 3]);
    let mut m3 = GradedMap::zero(src.clone(), sp.clone(), -1);
    m3.add_entry(3, src.fuse_index(&[0, 1, 2]), field.one()).unwrap();
    AInftyAlgebra::new(sp, BTreeMap::from([(3, m3)])).unwrap()
}

/// A random invertible degree-0 endomorphism, built as a product of
/// transvections between basis vectors of equal degree (so it is unit
/// triangular up to permutation, hence invertible over any field).
fn random_automorphism(sp: &Arc<GradedSpace>, rng: &mut ChaCha8Rng) -> GradedMap {
    let field = sp.field;
    let dim = sp.dim();
    let mut cols: Vec<SparseVec> = (0..dim).map(|q| SparseVec::unit(q, field.one())).collect();
    for _ in 0..(3 * dim) {
        let i = rng.gen_range(0..dim);
        let j = rng.gen_range(0..dim);
        if i == j || sp.degrees[i] != sp.degrees[j] {
            continue;
        }
        let c = field.from_i64(rng.gen_range(-2..=2));
        if c.is_zero() {
            continue;
        }
        // left-multiply by I + c·E_{j,i}: row_j += c·row_i in every column
        for col in cols.iter_mut() {
            if let Some(ci) = col.get(i).cloned() {
                col.add(j, c.clone() * ci);
            }
        }
    }
    let mut phi = GradedMap::zero(sp.clone(), sp.clone(), 0);
    for (q, col) in cols.iter().enumerate() {
        for (r, c) in col.iter() {
            phi.add_entry(r, q, c.clone()).unwrap();
        }
    }
    phi
}

/// Conjugate every operation by a degree-0 automorphism:
/// `m'_n = φ^{-1} ∘ m_n ∘ φ^{⊗n}`. This preserves the relations on the nose.
fn conjugate(alg: &AInftyAlgebra, phi: &GradedMap) -> AInftyAlgebra {
    let sp = alg.space.clone();
    let phi_inv = phi.inverse().expect("conjugating automorphism must be invertible");
    let mut ops = BTreeMap::new();
    for (&n, m) in &alg.ops {
        let conj = if n == 1 {
            let m1 = m.retarget(sp.clone(), sp.clone(), m.degree);
            phi_inv.compose(&m1).compose(phi)
        } else {
            let t = GradedSpace::tensor(format!("{}⊗{n}", sp.name), vec![sp.clone(); n]);
            let phin = tensor_map(&vec![phi; n].iter().map(|p| *p).collect::<Vec<_>>(), &t, &t);
            let mn = m.retarget(t.clone(), sp.clone(), m.degree);
            phi_inv.compose(&mn).compose(&phin)
        };
        if !conj.is_zero() {
            ops.insert(n, conj);
        }
    }
    AInftyAlgebra::new(sp, ops).unwrap()
}

/// A seeded valid A∞-algebra: one of the structured models above, conjugated
/// by a random degree-0 automorphism. Dimension ≤ 4, arities ≤ 3, all basis
/// degrees within `[-3, 3]`.
pub fn random_ainfty(field: Field, seed: u64) -> AInftyAlgebra {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = match rng.gen_range(0..5) {
        0 => truncated_polynomial(field, 2),
        1 => truncated_polynomial(field, rng.gen_range(3..=4)),
        2 => exterior_point(field),
        3 => two_term_complex(field),
        _ => ternary_instance(field),
    };
    let phi = random_automorphism(&base.space, &mut rng);
    conjugate(&base, &phi)
}

/// Perturb a single operation of a valid A∞-algebra so that the relations
/// fail. Returns the corrupted structure together with the perturbed arity
/// `k`; the report of `check_ainfty` on the result is guaranteed to have its
/// smallest failing relation in `[k, 2k - 1]`, which localizes the defect.
///
/// Some degree windows are rigid: every perturbation of the allowed shape
/// still satisfies the relations (for instance when all operation outputs
/// land in degrees on which every operation vanishes). For such inputs this
/// returns an error instead of searching forever.
pub fn corrupt_ainfty(alg: &AInftyAlgebra, seed: u64) -> Result<(AInftyAlgebra, usize), CoreError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sp = alg.space.clone();
    let field = sp.field;
    for _ in 0..400 {
        let k = rng.gen_range(1..=alg.max_arity().max(2));
        let deg = 2 - k as i64;
        let t = if k == 1 {
            sp.clone()
        } else {
            GradedSpace::tensor(format!("{}⊗{k}", sp.name), vec![sp.clone(); k])
        };
        let slots: Vec<(usize, usize)> = (0..sp.dim())
            .flat_map(|r| (0..t.dim()).map(move |q| (r, q)))
            .filter(|&(r, q)| sp.degrees[r] == t.degrees[q] + deg)
            .collect();
        if slots.is_empty() {
            continue;
        }
        let (r, q) = slots[rng.gen_range(0..slots.len())];
        let mut bump = GradedMap::zero(t.clone(), sp.clone(), deg);
        bump.add_entry(r, q, field.from_i64(rng.gen_range(1..=2))).unwrap();
        let mut ops = alg.ops.clone();
        let mk = match ops.remove(&k) {
            Some(m) => m.retarget(t.clone(), sp.clone(), deg).add(&bump),
            None => bump,
        };
        if mk.is_zero() {
            continue;
        }
        ops.insert(k, mk);
        let cand = match AInftyAlgebra::new(sp.clone(), ops) {
            Ok(a) => a,
            Err(_) => continue,
        };
        let report = check_ainfty(&cand, 2 * cand.max_arity() - 1);
        if let Some(&m) = report.failing.first() {
            if m >= k && m <= 2 * k - 1 {
                return Ok((cand, k));
            }
        }
    }
    Err(CoreError::shape(
        "no localized corruption exists in this degree window",
    ))
}

/// A random level-linear component `x -> y` of the given degree, sampled from
/// a basis of the hom complex of the underlying string modules.
pub fn random_string_map(
    gd: &GroupoidData,
    xs: &ModString,
    ys: &ModString,
    degree: i64,
    rng: &mut ChaCha8Rng,
) -> Result<GradedMap, CoreError> {
    let field = xs.space().field;
    let hom = module_hom_complex(&string_module(gd, xs)?, &string_module(gd, ys)?)?;
    let mut v = SparseVec::new();
    for (i, &dg) in hom.complex.space.degrees.iter().enumerate() {
        if dg == degree {
            let c = rng.gen_range(-2..=2);
            if c != 0 {
                v.add(i, field.from_i64(c));
            }
        }
    }
    hom.to_map(&v, degree)
}

/// A seeded valid homotopy-limit object: the structure object gauged by a
/// random level-linear homotopy `u` with `u_0 = id`. Gauge transforms preserve
/// the tower equations, so the result is certified valid and typically has a
/// non-trivial higher component.
pub fn random_holim_object(
    gd: &Arc<GroupoidData>,
    seed: u64,
) -> Result<Arc<HolimObject>, CoreError> {
    let obj = structure_object(gd)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = BTreeMap::from([(0, HolimMorphism::identity(&obj).comp(0))]);
    let u1 = random_string_map(gd, obj.max_string(1), obj.min_string(1), -1, &mut rng)?;
    if !u1.is_zero() {
        u.insert(1, u1);
    }
    gauge_transform(&obj, &u)
}

/// A seeded morphism of homotopy-limit objects with level-linear components
/// of every arity up to the truncation.
pub fn random_holim_morphism(
    src: &Arc<HolimObject>,
    dst: &Arc<HolimObject>,
    degree: i64,
    seed: u64,
) -> Result<HolimMorphism, CoreError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gd = src.gd.as_ref();
    let mut comps = BTreeMap::new();
    for n in 0..=src.truncation() {
        let m = random_string_map(
            gd,
            src.max_string(n),
            dst.min_string(n),
            degree - n as i64,
            &mut rng,
        )?;
        if !m.is_zero() {
            comps.insert(n, m);
        }
    }
    HolimMorphism::new(src.clone(), dst.clone(), degree, comps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ainfty::bar_construct;
    use crate::cosimplicial::{cech_system, FiniteCover};
    use crate::holim::validate_holim_object;

    fn small_gd(trunc: usize) -> Arc<GroupoidData> {
        let cover = FiniteCover::new(2, vec![vec![0], vec![1]]).unwrap();
        let sys = cech_system(&cover, Field::Rationals, trunc, None).unwrap();
        Arc::new(GroupoidData::from_system(sys, trunc).unwrap())
    }

    #[test]
    fn generated_algebras_are_valid_and_deterministic() {
        for seed in 0..20 {
            let alg = random_ainfty(Field::Rationals, seed);
            assert!(alg.space.dim() <= 4);
            assert!(alg.max_arity() <= 3);
            assert!(alg.space.degrees.iter().all(|&d| (-3..=3).contains(&d)));
            let report = check_ainfty(&alg, 2 * alg.max_arity() - 1);
            assert!(report.ok(), "seed {seed}: {:?}", report.failing);
            let again = random_ainfty(Field::Rationals, seed);
            assert_eq!(alg.ops.len(), again.ops.len());
            for (n, m) in &alg.ops {
                assert!(m.equals(&again.ops[n]));
            }
        }
    }

    #[test]
    fn generated_algebras_have_flat_bar_differential() {
        for seed in [1, 4, 9, 11] {
            let alg = random_ainfty(Field::Prime(5), seed);
            let bar = bar_construct(&alg, 4).unwrap();
            assert!(bar.complex.d.compose(&bar.complex.d).is_zero(), "seed {seed}");
        }
    }

    #[test]
    fn corruption_is_detected_and_localized() {
        let mut corrupted = 0;
        for seed in 0..20 {
            let alg = random_ainfty(Field::Rationals, seed);
            let Ok((bad, k)) = corrupt_ainfty(&alg, seed + 100) else {
                continue; // rigid degree window
            };
            let report = check_ainfty(&bad, 2 * bad.max_arity() - 1);
            let first = *report.failing.first().expect("corruption must be detected");
            assert!(first >= k && first <= 2 * k - 1, "seed {seed}: k={k}, first={first}");
            corrupted += 1;
        }
        assert!(corrupted >= 10, "only {corrupted} corruptible instances");
    }

    #[test]
    fn generated_holim_objects_and_morphisms_are_valid() {
        let gd = small_gd(2);
        let x = random_holim_object(&gd, 7).unwrap();
        let y = random_holim_object(&gd, 8).unwrap();
        assert_eq!(validate_holim_object(&x, 2).unwrap(), Vec::<String>::new());
        assert_eq!(validate_holim_object(&y, 2).unwrap(), Vec::<String>::new());
        let f = random_holim_morphism(&x, &y, 0, 3).unwrap();
        let g = random_holim_morphism(&x, &y, 0, 3).unwrap();
        for n in 0..=2 {
            assert!(f.comp(n).equals(&g.comp(n)));
        }
    }
}
