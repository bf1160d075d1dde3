//! Cochain complexes, hom complexes, and suspension conjugation.

use std::sync::Arc;

use crate::error::CoreError;
use crate::graded::{power_shift, suspension, GradedMap, GradedSpace};
use crate::linalg::{self, SparseVec};
use crate::scalar::Scalar;

/// A finite-dimensional cochain complex: `d` has degree `+1` and `d² = 0`.
#[derive(Debug, Clone)]
pub struct Complex {
    pub space: Arc<GradedSpace>,
    pub d: GradedMap,
}

impl Complex {
    pub fn new(space: Arc<GradedSpace>, d: GradedMap) -> Result<Complex, CoreError> {
        if d.degree != 1 {
            return Err(CoreError::shape(format!(
                "complex {}: differential has degree {}, expected 1",
                space.name, d.degree
            )));
        }
        if !d.src.same_shape(&space) || !d.dst.same_shape(&space) {
            return Err(CoreError::shape(format!(
                "complex {}: differential endpoints do not match the space",
                space.name
            )));
        }
        let c = Complex { space, d };
        c.check_d_squared()?;
        Ok(c)
    }

    /// A complex with zero differential.
    pub fn with_zero_d(space: Arc<GradedSpace>) -> Complex {
        let d = GradedMap::zero(space.clone(), space.clone(), 1);
        Complex { space, d }
    }

    pub fn check_d_squared(&self) -> Result<(), CoreError> {
        let dd = self.d.compose(&self.d);
        if dd.is_zero() {
            Ok(())
        } else {
            Err(CoreError::validation(format!("complex {}: d² ≠ 0", self.space.name)))
        }
    }

    /// The shifted complex `M[k]` with differential `(-1)^k d`.
    pub fn shifted(&self, k: i64) -> Complex {
        let space = self.space.shifted(k);
        let d = self
            .d
            .retarget(space.clone(), space.clone(), 1)
            .scale(&Scalar::sign_pow(self.space.field, k));
        Complex { space, d }
    }

    /// Dimension of degree-`n` cohomology, by exact rank computation.
    pub fn cohomology_dim(&self, n: i64) -> usize {
        let in_deg = |d: i64| -> Vec<usize> {
            (0..self.space.dim()).filter(|&i| self.space.degrees[i] == d).collect()
        };
        let dom = in_deg(n);
        let rank_from = |cols: &[usize]| {
            let m = linalg::ColMatrix {
                field: self.space.field,
                nrows: self.space.dim(),
                cols: cols.iter().map(|&j| self.d.cols[j].clone()).collect(),
            };
            linalg::rank(&m)
        };
        let rank_out = rank_from(&dom);
        let rank_in = rank_from(&in_deg(n - 1));
        dom.len() - rank_out - rank_in
    }
}

/// Witness data for the suspension: the maps `s : M -> M[1]` and
/// `ω : M[1] -> M` with `ω ∘ s = id` and `s ∘ ω = id`.
#[derive(Debug, Clone)]
pub struct ShiftWitness {
    pub original: Arc<GradedSpace>,
    pub shifted: Arc<GradedSpace>,
    pub s: GradedMap,
    pub omega: GradedMap,
}

impl ShiftWitness {
    pub fn new(space: &Arc<GradedSpace>) -> ShiftWitness {
        let (shifted, s) = suspension(space);
        let field = space.field;
        let cols = (0..space.dim()).map(|i| SparseVec::unit(i, field.one())).collect();
        let omega = GradedMap { src: shifted.clone(), dst: space.clone(), degree: 1, cols };
        ShiftWitness { original: space.clone(), shifted, s, omega }
    }

    pub fn verify(&self) -> Result<(), CoreError> {
        let ws = self.omega.compose(&self.s);
        let sw = self.s.compose(&self.omega);
        if ws.equals(&GradedMap::identity(self.original.clone()))
            && sw.equals(&GradedMap::identity(self.shifted.clone()))
        {
            Ok(())
        } else {
            Err(CoreError::validation("suspension witness does not invert"))
        }
    }
}

/// Conjugates a multilinear operation by suspensions:
/// `f : M^{⊗n} -> N` of degree `l + 1 - n` becomes
/// `f' = (-1)^l s_N ∘ f ∘ ω^{⊗n} : (M[1])^{⊗n} -> N[1]` of degree `l`.
///
/// `src_shifted` must be the tensor power of `M[1]` matching `f`'s source.
pub fn shift_conjugate_up(
    f: &GradedMap,
    src_shifted: &Arc<GradedSpace>,
    n: usize,
) -> GradedMap {
    let src = f.src.clone();
    assert_eq!(src.factors.as_ref().map(|v| v.len()), Some(n), "source arity mismatch");
    let omega_n = power_shift(src_shifted, &src, false);
    let (_n_shift, s_n) = suspension(&f.dst);
    let l = f.degree + n as i64 - 1;
    s_n.compose(f).compose(&omega_n).scale(&Scalar::sign_pow(f.src.field, l))
}

/// The inverse direction for co-operations:
/// `f : M -> N^{⊗n}` of degree `l + 1 - n` becomes
/// `f' = (-1)^l ω^{⊗n} ∘ f ∘ s : M[-1] -> (N[-1])^{⊗n}` of degree `l`,
/// where here `s : M[-1] -> M` and `ω : N -> N[-1]` are the desuspension
/// witnesses.
pub fn shift_conjugate_down(
    f: &GradedMap,
    src_desh: &Arc<GradedSpace>,
    dst_desh: &Arc<GradedSpace>,
    n: usize,
) -> GradedMap {
    let field = f.src.field;
    // s : M[-1] -> M, identity entries, degree -1.
    let cols = (0..f.src.dim()).map(|i| SparseVec::unit(i, field.one())).collect();
    let s = GradedMap { src: src_desh.clone(), dst: f.src.clone(), degree: -1, cols };
    let omega_n = power_shift(&f.dst, dst_desh, false);
    let l = f.degree + n as i64 - 1;
    omega_n.compose(f).compose(&s).scale(&Scalar::sign_pow(field, l))
}

/// The hom complex `Hom(M, N)` of two complexes, together with the
/// dictionary between its basis and actual linear maps.
#[derive(Debug, Clone)]
pub struct HomComplex {
    pub source: Complex,
    pub target: Complex,
    pub complex: Complex,
}

impl HomComplex {
    /// Basis index of the elementary map `src j -> dst i`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.target.space.dim() + i
    }

    pub fn split(&self, k: usize) -> (usize, usize) {
        let dt = self.target.space.dim();
        (k % dt, k / dt)
    }

    /// Encodes a graded map as a vector in the hom space.
    pub fn to_vector(&self, f: &GradedMap) -> SparseVec {
        let mut v = SparseVec::new();
        for (j, col) in f.cols.iter().enumerate() {
            for (i, c) in col.iter() {
                v.add(self.index(i, j), c.clone());
            }
        }
        v
    }

    /// Decodes a homogeneous hom-space vector of the given degree.
    pub fn to_map(&self, v: &SparseVec, degree: i64) -> Result<GradedMap, CoreError> {
        let mut f = GradedMap::zero(
            self.source.space.clone(),
            self.target.space.clone(),
            degree,
        );
        for (k, c) in v.iter() {
            let (i, j) = self.split(k);
            f.add_entry(i, j, c.clone())?;
        }
        Ok(f)
    }
}

/// Builds the hom complex with differential
/// `D(f) = d_N ∘ f - (-1)^{|f|} f ∘ d_M`.
pub fn hom_complex(source: &Complex, target: &Complex) -> HomComplex {
    let field = source.space.field;
    let dm = source.space.dim();
    let dn = target.space.dim();
    let mut basis = Vec::with_capacity(dm * dn);
    let mut degrees = Vec::with_capacity(dm * dn);
    for j in 0..dm {
        for i in 0..dn {
            basis.push(format!("[{}←{}]", target.space.basis[i], source.space.basis[j]));
            degrees.push(target.space.degrees[i] - source.space.degrees[j]);
        }
    }
    let window = (
        target.space.window.0 - source.space.window.1,
        target.space.window.1 - source.space.window.0,
    );
    let space = Arc::new(GradedSpace {
        name: format!("Hom({},{})", source.space.name, target.space.name),
        field,
        basis,
        degrees: degrees.clone(),
        window,
        factors: None,
    });
    let mut d = GradedMap::zero(space.clone(), space.clone(), 1);
    let idx = |i: usize, j: usize| j * dn + i;
    for j in 0..dm {
        for i in 0..dn {
            let col = idx(i, j);
            let fdeg = degrees[col];
            // d_N ∘ e_{ij}: post-compose with the target differential.
            for (i2, c) in target.d.cols[i].iter() {
                d.cols[col].add(idx(i2, j), c.clone());
            }
            // -(-1)^{|f|} e_{ij} ∘ d_M: for every source column j2 with
            // d_M(e_{j2}) containing e_j.
            let sgn = -Scalar::sign_pow(field, fdeg);
            for j2 in 0..dm {
                if let Some(c) = source.d.cols[j2].get(j) {
                    d.cols[col].add(idx(i, j2), c.clone() * sgn.clone());
                }
            }
        }
    }
    let complex = Complex { space, d };
    debug_assert!(complex.check_d_squared().is_ok());
    HomComplex { source: source.clone(), target: target.clone(), complex }
}

/// Solves `lhs(x) = rhs` where `lhs` is a graded map and `rhs` a vector in
/// its target; returns one solution.
pub fn solve_linear(lhs: &GradedMap, rhs: &SparseVec) -> Result<SparseVec, CoreError> {
    linalg::solve(&lhs.matrix(), rhs).ok_or_else(|| {
        CoreError::NoSolution(format!("{} -> {}", lhs.src.name, lhs.dst.name))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Field;

    fn two_term() -> Complex {
        // k in degree 0 -> k in degree 1, d = id component.
        let space = GradedSpace::from_degrees("M", Field::Rationals, &[0, 1]);
        let mut d = GradedMap::zero(space.clone(), space.clone(), 1);
        d.add_entry(1, 0, Field::Rationals.one()).unwrap();
        Complex::new(space, d).unwrap()
    }

    #[test]
    fn d_squared_rejected() {
        let space = GradedSpace::from_degrees("V", Field::Rationals, &[0, 1, 2]);
        let mut d = GradedMap::zero(space.clone(), space.clone(), 1);
        d.add_entry(1, 0, Field::Rationals.one()).unwrap();
        d.add_entry(2, 1, Field::Rationals.one()).unwrap();
        assert!(Complex::new(space, d).is_err());
    }

    #[test]
    fn cohomology_of_acyclic_and_shift() {
        let c = two_term();
        assert_eq!(c.cohomology_dim(0), 0);
        assert_eq!(c.cohomology_dim(1), 0);
        let shifted = c.shifted(1);
        shifted.check_d_squared().unwrap();
        // shift flips the sign of the differential
        assert_eq!(
            shifted.d.cols[0].get(1).unwrap().render(),
            "-1"
        );
    }

    #[test]
    fn hom_complex_differential_formula() {
        let c = two_term();
        let h = hom_complex(&c, &c);
        h.complex.check_d_squared().unwrap();
        // Take f = elementary map of degree -1 (dst 0 <- src 1); then
        // D(f) = d∘f + f∘d has identity components in degrees 0 and 1.
        let f = SparseVec::unit(h.index(0, 1), Field::Rationals.one());
        let df = h.complex.d.apply(&f);
        let expect_a = h.index(1, 1);
        let expect_b = h.index(0, 0);
        assert_eq!(df.get(expect_a).unwrap().render(), "1");
        assert_eq!(df.get(expect_b).unwrap().render(), "1");
        assert_eq!(df.len(), 2);
        // Closedness of the identity: D(id) = 0.
        let idv = h.to_vector(&GradedMap::identity(c.space.clone()));
        assert!(h.complex.d.apply(&idv).is_zero());
    }

    #[test]
    fn shift_conjugation_degree_and_roundtrip() {
        // m2 : M ⊗ M -> M of degree 0 (l = 1) conjugates to degree 1.
        let space = GradedSpace::from_degrees("A", Field::Rationals, &[0, 0, 1]);
        let t = GradedSpace::tensor("A⊗A", vec![space.clone(), space.clone()]);
        let mut m2 = GradedMap::zero(t.clone(), space.clone(), 0);
        m2.add_entry(0, t.fuse_index(&[0, 0]), Field::Rationals.one()).unwrap();
        m2.add_entry(2, t.fuse_index(&[0, 2]), Field::Rationals.one()).unwrap();
        let sa = space.shifted(1);
        let st = GradedSpace::tensor("sA⊗sA", vec![sa.clone(), sa.clone()]);
        let m2p = shift_conjugate_up(&m2, &st, 2);
        assert_eq!(m2p.degree, 1);
        // ShiftWitness sanity.
        ShiftWitness::new(&space).verify().unwrap();
    }

    #[test]
    fn solve_linear_reports_no_solution() {
        let space = GradedSpace::from_degrees("V", Field::Rationals, &[0, 1]);
        let zero = GradedMap::zero(space.clone(), space.clone(), 1);
        let rhs = SparseVec::unit(1, Field::Rationals.one());
        assert!(solve_linear(&zero, &rhs).is_err());
        assert!(solve_linear(&zero, &SparseVec::new()).is_ok());
    }
}
