//! The simplex dg-category on `n+1` objects (freely generated by the
//! morphisms `f_{i_0 … i_k}` of degree `1 - k` for strictly increasing
//! index sequences) and the dg-category of A∞-functors from it into a
//! dg-category `B`: objects, morphisms, composition, and differential.

use std::collections::BTreeMap;

use crate::dgcat::{free_dg_category, DgCategory, QuiverGen};
use crate::error::CoreError;
use crate::linalg::SparseVec;
use crate::scalar::{Field, Scalar};

/// All strictly increasing sequences in `0..=n` with at least `min_len`
/// entries, in length-then-lexicographic order.
pub fn increasing_sequences(n: usize, min_len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 1u32..(1u32 << (n + 1)) {
        let seq: Vec<usize> = (0..=n).filter(|i| mask & (1 << i) != 0).collect();
        if seq.len() >= min_len {
            out.push(seq);
        }
    }
    out.sort_by(|a, b| (a.len(), a.as_slice()).cmp(&(b.len(), b.as_slice())));
    out
}

fn seq_name(seq: &[usize]) -> String {
    let digits: String = seq.iter().map(|i| i.to_string()).collect();
    format!("f{digits}")
}

/// The simplex dg-category: free on `f_{i_0…i_k} : i_0 -> i_k` of degree
/// `1 - k` with
/// `d f_{i_0…i_k} = Σ_{j=1}^{k-1} (-1)^{k-j} (f_{i_0…î_j…i_k}
///                    - f_{i_j…i_k} ∘ f_{i_0…i_j})`.
#[derive(Debug)]
pub struct SimplexCategory {
    pub n: usize,
    pub cat: DgCategory,
    /// Generator index sequences, in generator order.
    pub sequences: Vec<Vec<usize>>,
    gen_of: BTreeMap<Vec<usize>, usize>,
}

impl SimplexCategory {
    /// The hom-basis vector of the generator `f_I` (its source and target
    /// objects are `I[0]` and `I[last]`).
    pub fn generator(&self, seq: &[usize]) -> Result<SparseVec, CoreError> {
        let (x, y) = (seq[0], *seq.last().unwrap());
        let name = seq_name(seq);
        let basis = &self.cat.hom(x, y).space.basis;
        let idx = basis
            .iter()
            .position(|b| *b == name)
            .ok_or_else(|| CoreError::shape(format!("{name} not in the hom basis")))?;
        Ok(SparseVec::unit(idx, self.cat.field.one()))
    }

    pub fn generator_id(&self, seq: &[usize]) -> Option<usize> {
        self.gen_of.get(seq).copied()
    }
}

pub fn simplex_category(
    n: usize,
    field: Field,
    window: (i64, i64),
) -> Result<SimplexCategory, CoreError> {
    let sequences = increasing_sequences(n, 2);
    let mut gen_of = BTreeMap::new();
    let mut gens = Vec::new();
    for (gi, seq) in sequences.iter().enumerate() {
        gen_of.insert(seq.clone(), gi);
        gens.push(QuiverGen {
            name: seq_name(seq),
            src: seq[0],
            tgt: *seq.last().unwrap(),
            degree: 1 - (seq.len() as i64 - 1),
        });
    }
    let mut d_gens: BTreeMap<usize, Vec<(Scalar, Vec<usize>)>> = BTreeMap::new();
    for (gi, seq) in sequences.iter().enumerate() {
        let k = seq.len() - 1;
        if k < 2 {
            continue;
        }
        let mut terms = Vec::new();
        for j in 1..k {
            let sign = Scalar::sign_pow(field, (k - j) as i64);
            let mut omit = seq.clone();
            omit.remove(j);
            terms.push((sign.clone(), vec![gen_of[&omit]]));
            // f_{i_j…i_k} ∘ f_{i_0…i_j}: first applied, first in the path
            let first = seq[..=j].to_vec();
            let second = seq[j..].to_vec();
            terms.push((-sign, vec![gen_of[&first], gen_of[&second]]));
        }
        d_gens.insert(gi, terms);
    }
    let objects = (0..=n).map(|i| i.to_string()).collect();
    let cat = free_dg_category(
        format!("Simplex({n})"),
        field,
        objects,
        &gens,
        &d_gens,
        window,
        n.max(1),
    )?;
    Ok(SimplexCategory { n, cat, sequences, gen_of })
}

/// An A∞-functor from the simplex category into a dg-category `B`:
/// objects `b_0, …, b_n` and components `f_I ∈ B(b_{i_0}, b_{i_k})` of
/// degree `1 - k` over strictly increasing sequences of length ≥ 2.
#[derive(Debug, Clone)]
pub struct AfunObject {
    pub objects: Vec<usize>,
    pub comps: BTreeMap<Vec<usize>, SparseVec>,
}

impl AfunObject {
    pub fn comp(&self, seq: &[usize]) -> SparseVec {
        self.comps.get(seq).cloned().unwrap_or_default()
    }

    fn n(&self) -> usize {
        self.objects.len() - 1
    }
}

/// A degree-`|α|` morphism of A∞-functors `F -> G`: components
/// `α_I ∈ B(F(i_0), G(i_k))` of degree `|α| - k`, over strictly
/// increasing sequences of length ≥ 1.
#[derive(Debug, Clone)]
pub struct AfunMorphism {
    pub degree: i64,
    pub comps: BTreeMap<Vec<usize>, SparseVec>,
}

impl AfunMorphism {
    pub fn zero(degree: i64) -> AfunMorphism {
        AfunMorphism { degree, comps: BTreeMap::new() }
    }

    pub fn comp(&self, seq: &[usize]) -> SparseVec {
        self.comps.get(seq).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.comps.values().all(|v| v.is_zero())
    }

    /// The identity transformation of an object (`α_i = id`, rest zero).
    pub fn identity(cat: &DgCategory, f: &AfunObject) -> AfunMorphism {
        let mut comps = BTreeMap::new();
        for (i, &b) in f.objects.iter().enumerate() {
            comps.insert(vec![i], cat.ids[b].clone());
        }
        AfunMorphism { degree: 0, comps }
    }

    pub fn add(&self, other: &AfunMorphism) -> AfunMorphism {
        assert_eq!(self.degree, other.degree);
        let mut comps = self.comps.clone();
        for (k, v) in &other.comps {
            let e = comps.entry(k.clone()).or_default();
            for (i, c) in v.iter() {
                e.add(i, c.clone());
            }
        }
        comps.retain(|_, v| !v.is_zero());
        AfunMorphism { degree: self.degree, comps }
    }

    pub fn scale(&self, c: &Scalar) -> AfunMorphism {
        let comps = self.comps.iter().map(|(k, v)| (k.clone(), v.scale(c))).collect();
        AfunMorphism { degree: self.degree, comps }
    }

    pub fn equals(&self, other: &AfunMorphism) -> bool {
        self.degree == other.degree && self.sub(other).is_zero()
    }

    pub fn sub(&self, other: &AfunMorphism) -> AfunMorphism {
        let field = Field::Rationals; // sign unused; reuse add with -1
        let _ = field;
        let mut neg = other.clone();
        for v in neg.comps.values_mut() {
            *v = v.scale(&scalar_neg_one(v));
        }
        self.add(&neg)
    }
}

fn scalar_neg_one(v: &SparseVec) -> Scalar {
    let (_, c) = v.iter().next().expect("sign of an empty vector");
    let field = c.field();
    -field.one()
}

/// Checks the defining equations of an A∞-functor object; with `circle`,
/// additionally demands that every `f_{ij}` is invertible in `H⁰`.
pub fn validate_afun_object(
    cat: &DgCategory,
    f: &AfunObject,
    circle: bool,
) -> Result<Vec<String>, CoreError> {
    let mut bad = Vec::new();
    let n = f.n();
    for (seq, v) in &f.comps {
        let k = seq.len() as i64 - 1;
        let (x, y) = (f.objects[seq[0]], f.objects[*seq.last().unwrap()]);
        if let Some(d) = cat.degree_of(x, y, v) {
            if d != 1 - k {
                bad.push(format!("component {} has degree {d}, expected {}", seq_name(seq), 1 - k));
            }
        } else if !v.is_zero() {
            bad.push(format!("component {} is not homogeneous", seq_name(seq)));
        }
    }
    for seq in increasing_sequences(n, 2) {
        let k = seq.len() - 1;
        let (x, y) = (f.objects[seq[0]], f.objects[*seq.last().unwrap()]);
        let mut defect = cat.hom(x, y).d.apply(&f.comp(&seq));
        let field = cat.field;
        for j in 1..k {
            let sign = Scalar::sign_pow(field, (k - j) as i64);
            let mut omit = seq.clone();
            omit.remove(j);
            defect.axpy(&-sign.clone(), &f.comp(&omit));
            let left = f.comp(&seq[..=j].to_vec());
            let right = f.comp(&seq[j..].to_vec());
            let mid = f.objects[seq[j]];
            defect.axpy(&sign, &cat.compose_elems(x, mid, y, &right, &left));
        }
        if !defect.is_zero() {
            bad.push(format!("object equation fails at {}", seq_name(&seq)));
        }
    }
    if circle {
        for i in 0..n {
            for j in (i + 1)..=n {
                let phi = f.comp(&[i, j]);
                let w = crate::dgcat::h0_invertible(cat, f.objects[i], f.objects[j], &phi)?;
                if w.is_none() {
                    bad.push(format!("f{i}{j} is not invertible in H⁰"));
                }
            }
        }
    }
    Ok(bad)
}

/// The composition of A∞-functor morphisms `β : G -> H`, `α : F -> G`:
/// `(β ∘ α)_{i_0…i_k} = Σ_{j=0}^{k} (-1)^{(k-j)|α|} β_{i_j…i_k} ∘ α_{i_0…i_j}`.
pub fn afun_compose(
    cat: &DgCategory,
    f: &AfunObject,
    g: &AfunObject,
    h: &AfunObject,
    beta: &AfunMorphism,
    alpha: &AfunMorphism,
) -> AfunMorphism {
    let field = cat.field;
    let n = f.n();
    let mut comps = BTreeMap::new();
    for seq in increasing_sequences(n, 1) {
        let k = seq.len() - 1;
        let (x, z) = (f.objects[seq[0]], h.objects[*seq.last().unwrap()]);
        let mut acc = SparseVec::new();
        for j in 0..=k {
            let a = alpha.comp(&seq[..=j].to_vec());
            let b = beta.comp(&seq[j..].to_vec());
            if a.is_zero() || b.is_zero() {
                continue;
            }
            let mid = g.objects[seq[j]];
            let sign = Scalar::sign_pow(field, (k - j) as i64 * alpha.degree);
            acc.axpy(&sign, &cat.compose_elems(x, mid, z, &b, &a));
        }
        if !acc.is_zero() {
            comps.insert(seq, acc);
        }
    }
    AfunMorphism { degree: alpha.degree + beta.degree, comps }
}

/// The differential of an A∞-functor morphism `α : F -> G`:
/// `d(α) = d_B ∘ α - (-1)^{|α|} α ∘ d + g ∘ α - (-1)^{|α|} α ∘ f`,
/// where the objects act as degree-1 self-transformations whose
/// single-index components vanish, and the inner differential takes
/// `I ↦ Σ_{j=1}^{k-1} (-1)^{k-j+1} I∖i_j`.
pub fn afun_differential(
    cat: &DgCategory,
    f: &AfunObject,
    g: &AfunObject,
    alpha: &AfunMorphism,
) -> AfunMorphism {
    let field = cat.field;
    let n = f.n();
    let a_sign = Scalar::sign_pow(field, alpha.degree);
    let mut comps = BTreeMap::new();
    for seq in increasing_sequences(n, 1) {
        let k = seq.len() - 1;
        let (x, y) = (f.objects[seq[0]], g.objects[*seq.last().unwrap()]);
        let mut acc = cat.hom(x, y).d.apply(&alpha.comp(&seq));
        // - (-1)^{|α|} α ∘ d on index words
        for j in 1..k {
            let sign = Scalar::sign_pow(field, (k - j + 1) as i64);
            let mut omit = seq.clone();
            omit.remove(j);
            acc.axpy(&(-(a_sign.clone() * sign)), &alpha.comp(&omit));
        }
        // + g ∘ α (single-index g components are zero: j < k)
        for j in 0..k {
            let a = alpha.comp(&seq[..=j].to_vec());
            let b = g.comp(&seq[j..].to_vec());
            if a.is_zero() || b.is_zero() {
                continue;
            }
            let mid = g.objects[seq[j]];
            let sign = Scalar::sign_pow(field, (k - j) as i64 * alpha.degree);
            acc.axpy(&sign, &cat.compose_elems(x, mid, y, &b, &a));
        }
        // - (-1)^{|α|} α ∘ f (single-index f components are zero: j > 0)
        for j in 1..=k {
            let a = f.comp(&seq[..=j].to_vec());
            let b = alpha.comp(&seq[j..].to_vec());
            if a.is_zero() || b.is_zero() {
                continue;
            }
            let mid = f.objects[seq[j]];
            let sign = Scalar::sign_pow(field, (k - j) as i64);
            acc.axpy(&(-(a_sign.clone() * sign)), &cat.compose_elems(x, mid, y, &b, &a));
        }
        if !acc.is_zero() {
            comps.insert(seq, acc);
        }
    }
    AfunMorphism { degree: alpha.degree + 1, comps }
}

/// The tautological A∞-functor of the simplex category into itself
/// (`b_i = i`, `f_I` the generators); valid by construction of the
/// differential.
pub fn tautological_object(sx: &SimplexCategory) -> Result<AfunObject, CoreError> {
    let mut comps = BTreeMap::new();
    for seq in increasing_sequences(sx.n, 2) {
        comps.insert(seq.clone(), sx.generator(&seq)?);
    }
    Ok(AfunObject { objects: (0..=sx.n).collect(), comps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn field() -> Field {
        Field::Rationals
    }

    fn by_name(cat: &DgCategory, x: usize, y: usize, name: &str) -> SparseVec {
        let idx = cat.hom(x, y).space.basis.iter().position(|b| b == name).unwrap();
        SparseVec::unit(idx, field().one())
    }

    #[test]
    fn simplex_two_differential() {
        let sx = simplex_category(2, field(), (-4, 2)).unwrap();
        let f012 = sx.generator(&[0, 1, 2]).unwrap();
        let d = sx.cat.hom(0, 2).d.apply(&f012);
        let mut expected = by_name(&sx.cat, 0, 2, "f12∘f01");
        expected.axpy(&-field().one(), &by_name(&sx.cat, 0, 2, "f02"));
        let mut diff = d;
        diff.axpy(&-field().one(), &expected);
        assert!(diff.is_zero());
    }

    #[test]
    fn simplex_three_differential_and_d_squared() {
        let sx = simplex_category(3, field(), (-6, 2)).unwrap();
        let f = sx.generator(&[0, 1, 2, 3]).unwrap();
        let d = sx.cat.hom(0, 3).d.apply(&f);
        let mut expected = by_name(&sx.cat, 0, 3, "f023");
        expected.axpy(&-field().one(), &by_name(&sx.cat, 0, 3, "f123∘f01"));
        expected.axpy(&-field().one(), &by_name(&sx.cat, 0, 3, "f013"));
        expected.axpy(&field().one(), &by_name(&sx.cat, 0, 3, "f23∘f012"));
        let mut diff = d.clone();
        diff.axpy(&-field().one(), &expected);
        assert!(diff.is_zero());
        assert!(sx.cat.hom(0, 3).d.apply(&d).is_zero());
    }

    #[test]
    fn tautological_object_is_valid() {
        for n in 1..=3 {
            let sx = simplex_category(n, field(), (-6, 2)).unwrap();
            let taut = tautological_object(&sx).unwrap();
            let report = validate_afun_object(&sx.cat, &taut, false).unwrap();
            assert!(report.is_empty(), "n={n}: {report:?}");
        }
    }

    #[test]
    fn strict_and_homotopy_triangles() {
        // B = Simplex(2) itself; a strict triangle with all generators
        // replaced by f02 := f12∘f01 and the homotopy component zero.
        let sx = simplex_category(2, field(), (-4, 2)).unwrap();
        let cat = &sx.cat;
        let f01 = sx.generator(&[0, 1]).unwrap();
        let f12 = sx.generator(&[1, 2]).unwrap();
        let composite = cat.compose_elems(0, 1, 2, &f12, &f01);
        let mut comps = BTreeMap::new();
        comps.insert(vec![0, 1], f01.clone());
        comps.insert(vec![1, 2], f12.clone());
        comps.insert(vec![0, 2], composite);
        let strict = AfunObject { objects: vec![0, 1, 2], comps: comps.clone() };
        assert!(validate_afun_object(cat, &strict, false).unwrap().is_empty());
        // the homotopy-commuting variant: f02 the generator, homotopy f012
        let taut = tautological_object(&sx).unwrap();
        assert!(validate_afun_object(cat, &taut, false).unwrap().is_empty());
        // breaking the homotopy breaks the equation
        let mut broken = taut.clone();
        broken.comps.remove(&vec![0, 1, 2]);
        assert!(!validate_afun_object(cat, &broken, false).unwrap().is_empty());
    }

    fn random_morphism(
        cat: &DgCategory,
        f: &AfunObject,
        g: &AfunObject,
        degree: i64,
        rng: &mut ChaCha8Rng,
    ) -> AfunMorphism {
        let n = f.objects.len() - 1;
        let mut comps = BTreeMap::new();
        for seq in increasing_sequences(n, 1) {
            let k = seq.len() as i64 - 1;
            let (x, y) = (f.objects[seq[0]], g.objects[*seq.last().unwrap()]);
            let space = &cat.hom(x, y).space;
            let mut v = SparseVec::new();
            for i in 0..space.dim() {
                if space.degrees[i] == degree - k {
                    let c: i64 = rng.gen_range(-2..=2);
                    v.add(i, field().from_i64(c));
                }
            }
            if !v.is_zero() {
                comps.insert(seq, v);
            }
        }
        AfunMorphism { degree, comps }
    }

    #[test]
    fn afun_is_a_dg_category() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in 1..=2 {
            let sx = simplex_category(n, field(), (-6, 2)).unwrap();
            let cat = &sx.cat;
            let taut = tautological_object(&sx).unwrap();
            for (da, db, dg) in [(0i64, 0i64, 1i64), (1, -1, 0), (-1, 1, 2)] {
                let alpha = random_morphism(cat, &taut, &taut, da, &mut rng);
                let beta = random_morphism(cat, &taut, &taut, db, &mut rng);
                let gamma = random_morphism(cat, &taut, &taut, dg, &mut rng);
                // identity laws
                let u = AfunMorphism::identity(cat, &taut);
                assert!(afun_compose(cat, &taut, &taut, &taut, &alpha, &u).equals(&alpha));
                assert!(afun_compose(cat, &taut, &taut, &taut, &u, &alpha).equals(&alpha));
                // associativity
                let ba = afun_compose(cat, &taut, &taut, &taut, &beta, &alpha);
                let cb = afun_compose(cat, &taut, &taut, &taut, &gamma, &beta);
                let l = afun_compose(cat, &taut, &taut, &taut, &gamma, &ba);
                let r = afun_compose(cat, &taut, &taut, &taut, &cb, &alpha);
                assert!(l.equals(&r), "associativity fails at n={n}");
                // d² = 0
                let d1 = afun_differential(cat, &taut, &taut, &alpha);
                let d2 = afun_differential(cat, &taut, &taut, &d1);
                assert!(d2.is_zero(), "d² ≠ 0 at n={n}");
                // Leibniz
                let dba = afun_differential(cat, &taut, &taut, &ba);
                let mut rhs = afun_compose(
                    cat,
                    &taut,
                    &taut,
                    &taut,
                    &afun_differential(cat, &taut, &taut, &beta),
                    &alpha,
                );
                rhs = rhs.add(
                    &afun_compose(cat, &taut, &taut, &taut, &beta, &d1)
                        .scale(&Scalar::sign_pow(field(), beta.degree)),
                );
                assert!(dba.equals(&rhs), "Leibniz fails at n={n}");
                // identity transformation is closed
                assert!(afun_differential(cat, &taut, &taut, &u).is_zero());
            }
        }
    }
}
