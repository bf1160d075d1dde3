//! Finite-dimensional graded vector spaces and degree-homogeneous linear
//! maps, with the Koszul sign rule built into every tensor operation.
//!
//! Conventions:
//! * cohomological grading; differentials have degree `+1`;
//! * the shift `M[1]` puts a degree-`d` element of `M` in degree `d - 1`,
//!   and the suspension `s : M -> M[1]` has degree `-1`;
//! * `(f ⊗ g)(x ⊗ y) = (-1)^{|g||x|} f(x) ⊗ g(y)`, extended in the usual
//!   way to longer tensors.

use std::fmt;
use std::sync::Arc;

use crate::error::CoreError;
use crate::linalg::{ColMatrix, SparseVec};
use crate::scalar::{Field, Scalar};

/// A finite-dimensional graded vector space with a named basis and a
/// declared degree window containing all basis degrees.
#[derive(Debug)]
pub struct GradedSpace {
    pub name: String,
    pub field: Field,
    /// Basis names, in order.
    pub basis: Vec<String>,
    /// Degree of each basis vector.
    pub degrees: Vec<i64>,
    /// Inclusive degree window; every basis degree lies inside it.
    pub window: (i64, i64),
    /// For spaces built as tensor products: the factors, so that pure
    /// tensors can be addressed by mixed-radix index arithmetic.
    pub factors: Option<Vec<Arc<GradedSpace>>>,
}

impl GradedSpace {
    pub fn new(
        name: impl Into<String>,
        field: Field,
        basis: Vec<(String, i64)>,
        window: (i64, i64),
    ) -> Result<Arc<GradedSpace>, CoreError> {
        let name = name.into();
        if window.0 > window.1 {
            return Err(CoreError::shape(format!("space {name}: empty degree window")));
        }
        let mut names = Vec::with_capacity(basis.len());
        let mut degrees = Vec::with_capacity(basis.len());
        for (b, d) in basis {
            if d < window.0 || d > window.1 {
                return Err(CoreError::shape(format!(
                    "space {name}: basis vector {b} of degree {d} outside window {window:?}"
                )));
            }
            if names.contains(&b) {
                return Err(CoreError::shape(format!("space {name}: duplicate basis name {b}")));
            }
            names.push(b);
            degrees.push(d);
        }
        Ok(Arc::new(GradedSpace { name, field, basis: names, degrees, window, factors: None }))
    }

    /// A space with auto-named basis (`name0`, `name1`, ...), window tight
    /// around the given degrees.
    pub fn from_degrees(name: impl Into<String>, field: Field, degrees: &[i64]) -> Arc<GradedSpace> {
        let name = name.into();
        let window = (
            degrees.iter().min().copied().unwrap_or(0),
            degrees.iter().max().copied().unwrap_or(0),
        );
        let basis = degrees.iter().enumerate().map(|(i, &d)| (format!("{name}{i}"), d)).collect();
        GradedSpace::new(name, field, basis, window).expect("tight window")
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn degree(&self, i: usize) -> i64 {
        self.degrees[i]
    }

    /// Structural compatibility: same field and the same degree sequence.
    pub fn same_shape(&self, other: &GradedSpace) -> bool {
        self.field == other.field && self.degrees == other.degrees
    }

    /// Tensor product of factors. Pure-tensor index arithmetic: the first
    /// factor is the most significant digit.
    pub fn tensor(name: impl Into<String>, factors: Vec<Arc<GradedSpace>>) -> Arc<GradedSpace> {
        assert!(!factors.is_empty(), "tensor of no factors");
        let field = factors[0].field;
        assert!(factors.iter().all(|f| f.field == field), "mixed fields in tensor");
        let dim: usize = factors.iter().map(|f| f.dim()).product();
        let mut basis = Vec::with_capacity(dim);
        let mut degrees = Vec::with_capacity(dim);
        for flat in 0..dim {
            // mixed-radix digits, last factor fastest
            let mut rem = flat;
            let mut parts = vec![0usize; factors.len()];
            for k in (0..factors.len()).rev() {
                parts[k] = rem % factors[k].dim();
                rem /= factors[k].dim();
            }
            let mut nm = String::new();
            let mut deg = 0;
            for (k, &i) in parts.iter().enumerate() {
                if k > 0 {
                    nm.push('⊗');
                }
                nm.push_str(&factors[k].basis[i]);
                deg += factors[k].degrees[i];
            }
            basis.push(nm);
            degrees.push(deg);
        }
        let window = (
            factors.iter().map(|f| f.window.0).sum(),
            factors.iter().map(|f| f.window.1).sum(),
        );
        Arc::new(GradedSpace {
            name: name.into(),
            field,
            basis,
            degrees,
            window,
            factors: Some(factors),
        })
    }

    /// Decomposes a pure-tensor index into per-factor indices.
    pub fn split_index(&self, mut i: usize) -> Vec<usize> {
        let factors = self.factors.as_ref().expect("not a tensor space");
        let mut out = vec![0usize; factors.len()];
        for k in (0..factors.len()).rev() {
            let d = factors[k].dim();
            out[k] = i % d;
            i /= d;
        }
        out
    }

    /// Inverse of [`split_index`].
    pub fn fuse_index(&self, parts: &[usize]) -> usize {
        let factors = self.factors.as_ref().expect("not a tensor space");
        let mut i = 0usize;
        for (k, &p) in parts.iter().enumerate() {
            i = i * factors[k].dim() + p;
        }
        i
    }

    /// The shifted space `M[k]`: same basis names (tagged), degree `d - k`.
    pub fn shifted(self: &Arc<Self>, k: i64) -> Arc<GradedSpace> {
        Arc::new(GradedSpace {
            name: format!("{}[{}]", self.name, k),
            field: self.field,
            basis: self.basis.clone(),
            degrees: self.degrees.iter().map(|d| d - k).collect(),
            window: (self.window.0 - k, self.window.1 - k),
            factors: None,
        })
    }
}

impl fmt::Display for GradedSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (dim {})", self.name, self.dim())
    }
}

/// A homogeneous linear map of a fixed degree between graded spaces,
/// stored column-major: `cols[j]` is the image of source basis vector `j`.
#[derive(Clone)]
pub struct GradedMap {
    pub src: Arc<GradedSpace>,
    pub dst: Arc<GradedSpace>,
    pub degree: i64,
    pub cols: Vec<SparseVec>,
}

impl fmt::Debug for GradedMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "GradedMap {} -> {} (deg {}, {} entries)",
            self.src.name,
            self.dst.name,
            self.degree,
            self.cols.iter().map(|c| c.len()).sum::<usize>()
        )
    }
}

impl GradedMap {
    pub fn zero(src: Arc<GradedSpace>, dst: Arc<GradedSpace>, degree: i64) -> GradedMap {
        let n = src.dim();
        GradedMap { src, dst, degree, cols: vec![SparseVec::new(); n] }
    }

    pub fn identity(space: Arc<GradedSpace>) -> GradedMap {
        let field = space.field;
        let cols = (0..space.dim()).map(|i| SparseVec::unit(i, field.one())).collect();
        GradedMap { src: space.clone(), dst: space, degree: 0, cols }
    }

    /// Builds a map from explicit entries, checking degree homogeneity.
    pub fn from_entries(
        src: Arc<GradedSpace>,
        dst: Arc<GradedSpace>,
        degree: i64,
        entries: impl IntoIterator<Item = (usize, usize, Scalar)>,
    ) -> Result<GradedMap, CoreError> {
        let mut m = GradedMap::zero(src, dst, degree);
        for (i, j, c) in entries {
            m.add_entry(i, j, c)?;
        }
        Ok(m)
    }

    /// Adds `c` to entry (dst `i`, src `j`), enforcing homogeneity.
    pub fn add_entry(&mut self, i: usize, j: usize, c: Scalar) -> Result<(), CoreError> {
        if c.is_zero() {
            return Ok(());
        }
        if self.dst.degrees[i] != self.src.degrees[j] + self.degree {
            return Err(CoreError::shape(format!(
                "map {} -> {} of degree {}: entry ({i},{j}) violates homogeneity ({} vs {})",
                self.src.name, self.dst.name, self.degree, self.dst.degrees[i], self.src.degrees[j]
            )));
        }
        self.cols[j].add(i, c);
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.cols.iter().all(|c| c.is_zero())
    }

    pub fn apply(&self, v: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (j, c) in v.iter() {
            out.axpy(c, &self.cols[j]);
        }
        out
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &GradedMap) -> GradedMap {
        assert!(
            other.dst.same_shape(&self.src),
            "compose: {} ∘ {}: middle spaces differ ({} vs {})",
            self.src.name,
            other.dst.name,
            self.src.name,
            other.dst.name,
        );
        let cols = other.cols.iter().map(|c| self.apply(c)).collect();
        GradedMap {
            src: other.src.clone(),
            dst: self.dst.clone(),
            degree: self.degree + other.degree,
            cols,
        }
    }

    pub fn add(&self, other: &GradedMap) -> GradedMap {
        assert!(self.src.same_shape(&other.src) && self.dst.same_shape(&other.dst));
        assert_eq!(self.degree, other.degree, "adding maps of different degree");
        let one = self.src.field.one();
        let mut cols = self.cols.clone();
        for (j, col) in other.cols.iter().enumerate() {
            cols[j].axpy(&one, col);
        }
        GradedMap { src: self.src.clone(), dst: self.dst.clone(), degree: self.degree, cols }
    }

    pub fn scale(&self, c: &Scalar) -> GradedMap {
        GradedMap {
            src: self.src.clone(),
            dst: self.dst.clone(),
            degree: self.degree,
            cols: self.cols.iter().map(|col| col.scale(c)).collect(),
        }
    }

    pub fn negate(&self) -> GradedMap {
        self.scale(&(-self.src.field.one()))
    }

    pub fn sub(&self, other: &GradedMap) -> GradedMap {
        self.add(&other.negate())
    }

    pub fn equals(&self, other: &GradedMap) -> bool {
        self.degree == other.degree && self.cols == other.cols
    }

    /// Column-major matrix view for the linear algebra layer.
    pub fn matrix(&self) -> ColMatrix {
        ColMatrix { field: self.src.field, nrows: self.dst.dim(), cols: self.cols.clone() }
    }

    /// The inverse of a bijective map (degree is negated).
    pub fn inverse(&self) -> Result<GradedMap, CoreError> {
        let inv = crate::linalg::invert(&self.matrix())?;
        let mut out = GradedMap::zero(self.dst.clone(), self.src.clone(), -self.degree);
        for (j, col) in inv.cols.iter().enumerate() {
            for (i, c) in col.iter() {
                out.add_entry(i, j, c.clone())?;
            }
        }
        Ok(out)
    }

    /// Reinterprets the map between different (shape-identical) spaces.
    pub fn retarget(&self, src: Arc<GradedSpace>, dst: Arc<GradedSpace>, degree: i64) -> GradedMap {
        assert!(self.src.same_shape(&src) || self.src.dim() == src.dim());
        assert!(self.dst.dim() == dst.dim());
        GradedMap { src, dst, degree, cols: self.cols.clone() }
    }
}

/// The suspension `s : M -> M[1]` (identity matrix, degree `-1`).
pub fn suspension(space: &Arc<GradedSpace>) -> (Arc<GradedSpace>, GradedMap) {
    let shifted = space.shifted(1);
    let field = space.field;
    let cols = (0..space.dim()).map(|i| SparseVec::unit(i, field.one())).collect();
    let s = GradedMap { src: space.clone(), dst: shifted.clone(), degree: -1, cols };
    (shifted, s)
}

/// Tensor product of maps with the Koszul sign:
/// `(f_1 ⊗ … ⊗ f_n)(x_1 ⊗ … ⊗ x_n)
///    = (-1)^{Σ_l |f_l| (|x_1| + … + |x_{l-1}|)} f_1(x_1) ⊗ … ⊗ f_n(x_n)`.
///
/// `src` and `dst` must be tensor spaces whose factors match the maps'
/// sources and targets factor by factor.
pub fn tensor_map(maps: &[&GradedMap], src: &Arc<GradedSpace>, dst: &Arc<GradedSpace>) -> GradedMap {
    let src_factors = src.factors.as_ref().expect("tensor_map: src not a tensor space");
    let dst_factors = dst.factors.as_ref().expect("tensor_map: dst not a tensor space");
    assert_eq!(maps.len(), src_factors.len());
    assert_eq!(maps.len(), dst_factors.len());
    for (k, m) in maps.iter().enumerate() {
        assert!(
            m.src.same_shape(&src_factors[k]),
            "tensor_map: factor {k} source mismatch"
        );
        assert!(
            m.dst.same_shape(&dst_factors[k]),
            "tensor_map: factor {k} target mismatch"
        );
    }
    let field = src.field;
    let total_degree: i64 = maps.iter().map(|m| m.degree).sum();
    let mut out = GradedMap::zero(src.clone(), dst.clone(), total_degree);
    let n = maps.len();
    for j in 0..src.dim() {
        let parts = src.split_index(j);
        // Koszul sign exponent: Σ_l |f_l| · (degree of source factors < l).
        let mut sign_exp = 0i64;
        let mut acc_deg = 0i64;
        for l in 0..n {
            sign_exp += maps[l].degree * acc_deg;
            acc_deg += src_factors[l].degrees[parts[l]];
        }
        let sign = Scalar::sign_pow(field, sign_exp);
        // Expand the product of the factor images.
        let mut terms: Vec<(Vec<usize>, Scalar)> = vec![(Vec::with_capacity(n), sign)];
        for l in 0..n {
            let col = &maps[l].cols[parts[l]];
            if col.is_zero() {
                terms.clear();
                break;
            }
            let mut next = Vec::with_capacity(terms.len() * col.len());
            for (idx, c) in &terms {
                for (i, v) in col.iter() {
                    let mut idx2 = idx.clone();
                    idx2.push(i);
                    next.push((idx2, c.clone() * v.clone()));
                }
            }
            terms = next;
        }
        for (idx, c) in terms {
            let i = dst.fuse_index(&idx);
            out.cols[j].add(i, c);
        }
    }
    out
}

/// One block of a block-wise tensor of maps: `map` consumes `src_arity`
/// consecutive factors of the ambient source tensor space and produces
/// `dst_arity` consecutive factors of the target.
pub struct Block<'a> {
    pub map: &'a GradedMap,
    pub src_arity: usize,
    pub dst_arity: usize,
}

impl<'a> Block<'a> {
    /// A block whose source/target arities are read off the map's own
    /// tensor decompositions (arity 1 for non-tensor spaces).
    pub fn auto(map: &'a GradedMap) -> Block<'a> {
        Block {
            map,
            src_arity: map.src.factors.as_ref().map_or(1, |f| f.len()),
            dst_arity: map.dst.factors.as_ref().map_or(1, |f| f.len()),
        }
    }

    pub fn id(map: &'a GradedMap) -> Block<'a> {
        Block { map, src_arity: 1, dst_arity: 1 }
    }
}

/// Block-wise tensor of maps with the Koszul sign rule; generalizes
/// [`tensor_map`] to blocks that consume/produce several tensor factors,
/// e.g. `id ⊗ μ ⊗ id` with `μ : A ⊗ A -> A`.
pub fn block_tensor_map(
    blocks: &[Block],
    src: &Arc<GradedSpace>,
    dst: &Arc<GradedSpace>,
) -> GradedMap {
    let src_factors = src.factors.as_ref().expect("block_tensor_map: src not a tensor space");
    let dst_factors = dst.factors.as_ref().expect("block_tensor_map: dst not a tensor space");
    let src_total: usize = blocks.iter().map(|b| b.src_arity).sum();
    let dst_total: usize = blocks.iter().map(|b| b.dst_arity).sum();
    assert_eq!(src_total, src_factors.len(), "block src arities do not cover the source");
    assert_eq!(dst_total, dst_factors.len(), "block dst arities do not cover the target");
    // Per-block source/target factor dimension slices.
    let mut src_off = Vec::with_capacity(blocks.len());
    let mut dst_off = Vec::with_capacity(blocks.len());
    {
        let (mut s, mut t) = (0usize, 0usize);
        for b in blocks {
            src_off.push(s);
            dst_off.push(t);
            s += b.src_arity;
            t += b.dst_arity;
            let sdim: usize = src_factors[src_off.last().copied().unwrap()..s]
                .iter()
                .map(|f| f.dim())
                .product();
            let tdim: usize = dst_factors[dst_off.last().copied().unwrap()..t]
                .iter()
                .map(|f| f.dim())
                .product();
            assert_eq!(b.map.src.dim(), sdim, "block source dimension mismatch");
            assert_eq!(b.map.dst.dim(), tdim, "block target dimension mismatch");
        }
    }
    let field = src.field;
    let total_degree: i64 = blocks.iter().map(|b| b.map.degree).sum();
    let mut out = GradedMap::zero(src.clone(), dst.clone(), total_degree);
    for j in 0..src.dim() {
        let parts = src.split_index(j);
        // Per-block local source index and Koszul sign.
        let mut sign_exp = 0i64;
        let mut acc_deg = 0i64;
        let mut local = Vec::with_capacity(blocks.len());
        for (l, b) in blocks.iter().enumerate() {
            sign_exp += b.map.degree * acc_deg;
            let mut loc = 0usize;
            for k in src_off[l]..src_off[l] + b.src_arity {
                loc = loc * src_factors[k].dim() + parts[k];
                acc_deg += src_factors[k].degrees[parts[k]];
            }
            local.push(loc);
        }
        let sign = Scalar::sign_pow(field, sign_exp);
        // Expand the product of block images.
        let mut terms: Vec<(Vec<usize>, Scalar)> = vec![(Vec::with_capacity(dst_total), sign)];
        for (l, b) in blocks.iter().enumerate() {
            let col = &b.map.cols[local[l]];
            if col.is_zero() {
                terms.clear();
                break;
            }
            let mut next = Vec::with_capacity(terms.len() * col.len());
            for (idx, c) in &terms {
                for (i, v) in col.iter() {
                    // split the block-local target index into dst factors
                    let mut digits = vec![0usize; b.dst_arity];
                    let mut rem = i;
                    for (t, k) in (dst_off[l]..dst_off[l] + b.dst_arity).enumerate().rev() {
                        digits[t] = rem % dst_factors[k].dim();
                        rem /= dst_factors[k].dim();
                    }
                    let mut idx2 = idx.clone();
                    idx2.extend_from_slice(&digits);
                    next.push((idx2, c.clone() * v.clone()));
                }
            }
            terms = next;
        }
        for (idx, c) in terms {
            let i = dst.fuse_index(&idx);
            debug_assert_eq!(
                dst.degrees[i],
                src.degrees[j] + total_degree,
                "block_tensor_map produced an inhomogeneous entry"
            );
            out.cols[j].add(i, c);
        }
    }
    out
}

/// `id^{⊗a} ⊗ f ⊗ id^{⊗b}` where the identity factors are read off the
/// tensor decompositions of `src`/`dst`.
pub fn insert_map(
    f: &GradedMap,
    a: usize,
    src: &Arc<GradedSpace>,
    dst: &Arc<GradedSpace>,
) -> GradedMap {
    let sf = src.factors.as_ref().expect("insert_map: src not a tensor space");
    let ids_before: Vec<GradedMap> =
        sf[..a].iter().map(|s| GradedMap::identity(s.clone())).collect();
    let ids_after: Vec<GradedMap> =
        sf[a + 1..].iter().map(|s| GradedMap::identity(s.clone())).collect();
    let mut maps: Vec<&GradedMap> = ids_before.iter().collect();
    maps.push(f);
    maps.extend(ids_after.iter());
    tensor_map(&maps, src, dst)
}

/// The Koszul permutation `x_1 ⊗ … ⊗ x_n -> x_{σ^{-1}(1)} ⊗ …` with sign
/// `(-1)^{Σ |x_i||x_j|}` over pairs that invert order. `perm[k]` is the
/// destination slot of source factor `k`.
pub fn koszul_permutation(
    src: &Arc<GradedSpace>,
    dst: &Arc<GradedSpace>,
    perm: &[usize],
) -> GradedMap {
    let sf = src.factors.as_ref().expect("koszul_permutation: src not a tensor space");
    let n = sf.len();
    assert_eq!(perm.len(), n);
    let field = src.field;
    let mut out = GradedMap::zero(src.clone(), dst.clone(), 0);
    for j in 0..src.dim() {
        let parts = src.split_index(j);
        let mut sign_exp = 0i64;
        for k in 0..n {
            for l in k + 1..n {
                if perm[k] > perm[l] {
                    sign_exp += sf[k].degrees[parts[k]] * sf[l].degrees[parts[l]];
                }
            }
        }
        let mut dst_parts = vec![0usize; n];
        for k in 0..n {
            dst_parts[perm[k]] = parts[k];
        }
        let i = dst.fuse_index(&dst_parts);
        out.cols[j].add(i, Scalar::sign_pow(field, sign_exp));
    }
    out
}

/// `s^{⊗n} : M^{⊗n} -> (M[1])^{⊗n}` (for `up = true`) or
/// `ω^{⊗n} : (M[1])^{⊗n} -> M^{⊗n}` (for `up = false`), with the sign
/// `(-1)^{Σ_j (n-j) d_j}` where `d_j` is the degree of the `j`-th factor in
/// its own space (1-based `j`, left to right). These satisfy
/// `ω^{⊗n} ∘ s^{⊗n} = (-1)^{n(n-1)/2} id`.
pub fn power_shift(src: &Arc<GradedSpace>, dst: &Arc<GradedSpace>, up: bool) -> GradedMap {
    let sf = src.factors.as_ref().expect("power_shift: src not a tensor space");
    let n = sf.len() as i64;
    let field = src.field;
    let degree = if up { -n } else { n };
    let mut out = GradedMap::zero(src.clone(), dst.clone(), degree);
    for j in 0..src.dim() {
        let parts = src.split_index(j);
        let mut sign_exp = 0i64;
        for (k, &p) in parts.iter().enumerate() {
            sign_exp += (n - 1 - k as i64) * sf[k].degrees[p];
        }
        // identity on underlying basis: same mixed-radix index
        let i = dst.fuse_index(&parts);
        out.cols[j].add(i, Scalar::sign_pow(field, sign_exp));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field() -> Field {
        Field::Rationals
    }

    fn sample_space(name: &str, degs: &[i64]) -> Arc<GradedSpace> {
        GradedSpace::from_degrees(name, field(), degs)
    }

    #[test]
    fn space_window_validation() {
        assert!(GradedSpace::new("V", field(), vec![("x".into(), 5)], (0, 2)).is_err());
        assert!(GradedSpace::new(
            "V",
            field(),
            vec![("x".into(), 1), ("x".into(), 1)],
            (0, 2)
        )
        .is_err());
    }

    #[test]
    fn tensor_index_round_trip() {
        let a = sample_space("A", &[0, 1, 2]);
        let b = sample_space("B", &[0, 1]);
        let t = GradedSpace::tensor("A⊗B", vec![a, b]);
        assert_eq!(t.dim(), 6);
        for i in 0..6 {
            assert_eq!(t.fuse_index(&t.split_index(i)), i);
        }
        assert_eq!(t.degrees[t.fuse_index(&[2, 1])], 3);
    }

    #[test]
    fn koszul_sign_in_tensor_map() {
        // f = d of degree 1 on a two-term complex; id ⊗ f picks up (-1)^{|x|}.
        let m = sample_space("M", &[0, 1]);
        let mut f = GradedMap::zero(m.clone(), m.clone(), 1);
        f.add_entry(1, 0, field().one()).unwrap();
        let t = GradedSpace::tensor("M⊗M", vec![m.clone(), m.clone()]);
        let idm = GradedMap::identity(m.clone());
        let id_f = tensor_map(&[&idm, &f], &t, &t);
        // x_1 of degree 1 in the first slot: sign -1.
        let j = t.fuse_index(&[1, 0]);
        let i = t.fuse_index(&[1, 1]);
        assert_eq!(id_f.cols[j].get(i).unwrap().render(), "-1");
        // degree-0 first slot: sign +1.
        let j0 = t.fuse_index(&[0, 0]);
        let i0 = t.fuse_index(&[0, 1]);
        assert_eq!(id_f.cols[j0].get(i0).unwrap().render(), "1");
    }

    #[test]
    fn tensor_map_interchange() {
        // (f ⊗ id)(id ⊗ g) = (-1)^{|f||g|} (id ⊗ g)(f ⊗ id).
        let m = sample_space("M", &[0, 1, 2]);
        let mut f = GradedMap::zero(m.clone(), m.clone(), 1);
        f.add_entry(1, 0, field().one()).unwrap();
        f.add_entry(2, 1, field().from_i64(3)).unwrap();
        let mut g = GradedMap::zero(m.clone(), m.clone(), 1);
        g.add_entry(2, 1, field().from_i64(5)).unwrap();
        g.add_entry(1, 0, field().from_i64(-2)).unwrap();
        let t = GradedSpace::tensor("T", vec![m.clone(), m.clone()]);
        let idm = GradedMap::identity(m.clone());
        let f_id = tensor_map(&[&f, &idm], &t, &t);
        let id_g = tensor_map(&[&idm, &g], &t, &t);
        let lhs = f_id.compose(&id_g);
        let rhs = id_g.compose(&f_id).negate(); // (-1)^{1·1}
        assert!(lhs.equals(&rhs));
    }

    #[test]
    fn power_shift_round_trip_sign() {
        let m = sample_space("M", &[0, 1, 3]);
        for n in 1..=4usize {
            let mn = GradedSpace::tensor("M^n", vec![m.clone(); n]);
            let sm = m.shifted(1);
            let smn = GradedSpace::tensor("M[1]^n", vec![sm.clone(); n]);
            let s = power_shift(&mn, &smn, true);
            let w = power_shift(&smn, &mn, false);
            let comp = w.compose(&s);
            let expect = GradedMap::identity(mn.clone())
                .scale(&Scalar::sign_pow(field(), (n * (n - 1) / 2) as i64));
            assert!(comp.equals(&expect), "n = {n}");
        }
    }

    #[test]
    fn power_shift_matches_iterated_tensor_of_suspensions() {
        let m = sample_space("M", &[0, 1, 2]);
        let (sm, s) = suspension(&m);
        for n in 2..=4usize {
            let mn = GradedSpace::tensor("M^n", vec![m.clone(); n]);
            let smn = GradedSpace::tensor("sM^n", vec![sm.clone(); n]);
            let direct = power_shift(&mn, &smn, true);
            let maps: Vec<&GradedMap> = vec![&s; n];
            let iterated = tensor_map(&maps, &mn, &smn);
            assert!(direct.equals(&iterated), "n = {n}");
        }
    }

    #[test]
    fn koszul_permutation_swap() {
        let m = sample_space("M", &[1]);
        let t = GradedSpace::tensor("T", vec![m.clone(), m.clone()]);
        let swap = koszul_permutation(&t, &t, &[1, 0]);
        // both factors odd: sign -1
        assert_eq!(swap.cols[0].get(0).unwrap().render(), "-1");
        // swap twice = id
        assert!(swap.compose(&swap).equals(&GradedMap::identity(t.clone())));
    }

    #[test]
    fn block_tensor_matches_factorwise() {
        let m = sample_space("M", &[0, 1, 2]);
        let mut f = GradedMap::zero(m.clone(), m.clone(), 1);
        f.add_entry(1, 0, field().one()).unwrap();
        f.add_entry(2, 1, field().from_i64(7)).unwrap();
        let idm = GradedMap::identity(m.clone());
        let t = GradedSpace::tensor("T", vec![m.clone(), m.clone(), m.clone()]);
        let a = tensor_map(&[&idm, &f, &idm], &t, &t);
        let b = block_tensor_map(&[Block::id(&idm), Block::id(&f), Block::id(&idm)], &t, &t);
        assert!(a.equals(&b));
    }

    #[test]
    fn block_tensor_multi_arity() {
        // A fused two-factor block agrees with composing a permutation-free
        // regrouping: (f ⊗ g) as one block vs. two blocks.
        let m = sample_space("M", &[0, 1]);
        let mut f = GradedMap::zero(m.clone(), m.clone(), 1);
        f.add_entry(1, 0, field().one()).unwrap();
        let g = GradedMap::identity(m.clone());
        let pair = GradedSpace::tensor("P", vec![m.clone(), m.clone()]);
        let fg = tensor_map(&[&f, &g], &pair, &pair);
        let t = GradedSpace::tensor("T", vec![m.clone(), m.clone(), m.clone()]);
        let two_blocks =
            block_tensor_map(&[Block::id(&g), Block::auto(&fg)], &t, &t);
        let three = tensor_map(&[&g, &f, &g], &t, &t);
        assert!(two_blocks.equals(&three));
    }

    #[test]
    fn homogeneity_enforced() {
        let m = sample_space("M", &[0, 2]);
        let mut f = GradedMap::zero(m.clone(), m.clone(), 1);
        assert!(f.add_entry(1, 0, field().one()).is_err());
    }
}
