//! Sparse exact linear algebra: row echelon form, solving, kernels, and
//! quotient presentations, over either coefficient field.
//!
//! Everything is deterministic: pivots are chosen by leftmost column, rows
//! are processed in order, so repeated runs produce identical bases.

use std::collections::BTreeMap;

use crate::error::CoreError;
use crate::scalar::{Field, Scalar};

/// A sparse vector: column index -> nonzero scalar.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVec {
    entries: BTreeMap<usize, Scalar>,
}

impl SparseVec {
    pub fn new() -> Self {
        SparseVec { entries: BTreeMap::new() }
    }

    pub fn unit(i: usize, one: Scalar) -> Self {
        let mut v = SparseVec::new();
        v.add(i, one);
        v
    }

    pub fn add(&mut self, i: usize, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.entries.remove(&i) {
            None => {
                self.entries.insert(i, c);
            }
            Some(old) => {
                let s = old + c;
                if !s.is_zero() {
                    self.entries.insert(i, s);
                }
            }
        }
    }

    pub fn get(&self, i: usize) -> Option<&Scalar> {
        self.entries.get(&i)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Scalar)> {
        self.entries.iter().map(|(i, c)| (*i, c))
    }

    pub fn leading(&self) -> Option<(usize, &Scalar)> {
        self.entries.iter().next().map(|(i, c)| (*i, c))
    }

    pub fn scale(&self, c: &Scalar) -> SparseVec {
        if c.is_zero() {
            return SparseVec::new();
        }
        SparseVec {
            entries: self
                .entries
                .iter()
                .map(|(i, v)| (*i, v.clone() * c.clone()))
                .collect(),
        }
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: &Scalar, other: &SparseVec) {
        if c.is_zero() {
            return;
        }
        for (i, v) in other.iter() {
            self.add(i, v.clone() * c.clone());
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Row echelon basis of a subspace, with pivot bookkeeping.
///
/// Rows are reduced (each pivot column is zero in all other rows) and the
/// pivot entry is 1, so membership tests and projections are direct.
#[derive(Debug, Clone)]
pub struct Echelon {
    field: Field,
    ncols: usize,
    /// Rows in increasing pivot order.
    rows: Vec<SparseVec>,
    /// pivot column of `rows[k]`.
    pivots: Vec<usize>,
}

impl Echelon {
    pub fn new(field: Field, ncols: usize) -> Self {
        Echelon { field, ncols, rows: Vec::new(), pivots: Vec::new() }
    }

    pub fn from_rows(field: Field, ncols: usize, rows: impl IntoIterator<Item = SparseVec>) -> Self {
        let mut e = Echelon::new(field, ncols);
        for r in rows {
            e.insert(r);
        }
        e
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn rows(&self) -> &[SparseVec] {
        &self.rows
    }

    /// Reduces `v` against the current rows (returning the residue).
    pub fn reduce(&self, mut v: SparseVec) -> SparseVec {
        // Iterate pivots in increasing order; each elimination can only
        // introduce entries to the right of the pivot.
        for (k, &p) in self.pivots.iter().enumerate() {
            if let Some(c) = v.get(p).cloned() {
                v.axpy(&(-c), &self.rows[k]);
            }
        }
        v
    }

    /// Inserts a row (after reduction); returns true if the rank grew.
    pub fn insert(&mut self, v: SparseVec) -> bool {
        let v = self.reduce(v);
        let Some((p, lead)) = v.leading() else { return false };
        let lead_inv = lead.inverse().expect("nonzero scalar");
        let row = v.scale(&lead_inv);
        // Back-substitute into existing rows so the form stays reduced.
        for k in 0..self.rows.len() {
            if let Some(c) = self.rows[k].get(p).cloned() {
                let mut r = std::mem::take(&mut self.rows[k]);
                r.axpy(&(-c), &row);
                self.rows[k] = r;
            }
        }
        let at = self.pivots.partition_point(|&q| q < p);
        self.pivots.insert(at, p);
        self.rows.insert(at, row);
        true
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        self.reduce(v.clone()).is_zero()
    }

    /// Coordinates of `v` in the row basis, if `v` lies in the span.
    pub fn coordinates(&self, v: &SparseVec) -> Option<Vec<Scalar>> {
        let mut coords = vec![self.field.zero(); self.rows.len()];
        let mut v = v.clone();
        for (k, &p) in self.pivots.iter().enumerate() {
            if let Some(c) = v.get(p).cloned() {
                v.axpy(&(-c.clone()), &self.rows[k]);
                coords[k] = c;
            }
        }
        if v.is_zero() {
            Some(coords)
        } else {
            None
        }
    }
}

/// A sparse matrix stored column-major as the images of basis vectors:
/// `cols[j]` is the image of `e_j`. Matches how graded maps store entries.
#[derive(Debug, Clone)]
pub struct ColMatrix {
    pub field: Field,
    pub nrows: usize,
    pub cols: Vec<SparseVec>,
}

impl ColMatrix {
    pub fn zero(field: Field, nrows: usize, ncols: usize) -> Self {
        ColMatrix { field, nrows, cols: vec![SparseVec::new(); ncols] }
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn apply(&self, v: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (j, c) in v.iter() {
            out.axpy(c, &self.cols[j]);
        }
        out
    }
}

/// Solves `A x = b` for one solution, if any. `A` is column-major.
pub fn solve(a: &ColMatrix, b: &SparseVec) -> Option<SparseVec> {
    // Echelonize the columns augmented with the standard coordinate they
    // came from, tracked in a parallel "history" vector.
    let mut ech = Echelon::new(a.field, a.nrows);
    let mut history: Vec<SparseVec> = Vec::new();
    for (j, col) in a.cols.iter().enumerate() {
        // Reduce col and the history vector in lockstep.
        let mut v = col.clone();
        let mut h = SparseVec::unit(j, a.field.one());
        for (k, &p) in ech.pivots.to_vec().iter().enumerate() {
            if let Some(c) = v.get(p).cloned() {
                v.axpy(&(-c.clone()), &ech.rows[k]);
                h.axpy(&(-c), &history[k]);
            }
        }
        if let Some((p, lead)) = v.leading() {
            let inv = lead.inverse().expect("nonzero scalar");
            let row = v.scale(&inv);
            let hist = h.scale(&inv);
            for k in 0..ech.rows.len() {
                if let Some(c) = ech.rows[k].get(p).cloned() {
                    let mut r = std::mem::take(&mut ech.rows[k]);
                    r.axpy(&(-c.clone()), &row);
                    ech.rows[k] = r;
                    let mut hh = std::mem::take(&mut history[k]);
                    hh.axpy(&(-c), &hist);
                    history[k] = hh;
                }
            }
            let at = ech.pivots.partition_point(|&q| q < p);
            ech.pivots.insert(at, p);
            ech.rows.insert(at, row);
            history.insert(at, hist);
        }
    }
    // Express b in the echelon rows, then pull back through the history.
    let coords = ech.coordinates(b)?;
    let mut x = SparseVec::new();
    for (k, c) in coords.into_iter().enumerate() {
        x.axpy(&c, &history[k]);
    }
    Some(x)
}

/// Basis of the kernel of `A` (column-major), as sparse coordinate vectors.
pub fn kernel(a: &ColMatrix) -> Vec<SparseVec> {
    let mut ech = Echelon::new(a.field, a.nrows);
    let mut history: Vec<SparseVec> = Vec::new();
    let mut out = Vec::new();
    for (j, col) in a.cols.iter().enumerate() {
        let mut v = col.clone();
        let mut h = SparseVec::unit(j, a.field.one());
        for (k, &p) in ech.pivots.to_vec().iter().enumerate() {
            if let Some(c) = v.get(p).cloned() {
                v.axpy(&(-c.clone()), &ech.rows[k]);
                h.axpy(&(-c), &history[k]);
            }
        }
        match v.leading() {
            None => out.push(h),
            Some((p, lead)) => {
                let inv = lead.inverse().expect("nonzero scalar");
                let at = ech.pivots.partition_point(|&q| q < p);
                ech.pivots.insert(at, p);
                ech.rows.insert(at, v.scale(&inv));
                history.insert(at, h.scale(&inv));
            }
        }
    }
    out
}

/// A quotient `V / span(relations)` presented by a chosen basis of standard
/// coordinates, with projection and a splitting section.
#[derive(Debug, Clone)]
pub struct Quotient {
    /// Ambient dimension.
    pub ambient_dim: usize,
    /// Ambient indices chosen as the quotient basis (non-pivot columns).
    pub basis: Vec<usize>,
    /// Projection images: `proj[j]` = class of ambient `e_j` in quotient
    /// coordinates.
    pub proj: Vec<SparseVec>,
}

impl Quotient {
    pub fn new(field: Field, ambient_dim: usize, relations: impl IntoIterator<Item = SparseVec>) -> Self {
        let ech = Echelon::from_rows(field, ambient_dim, relations);
        let mut is_pivot = vec![false; ambient_dim];
        for &p in ech.pivots() {
            is_pivot[p] = true;
        }
        let basis: Vec<usize> = (0..ambient_dim).filter(|&j| !is_pivot[j]).collect();
        let mut qindex = vec![usize::MAX; ambient_dim];
        for (q, &j) in basis.iter().enumerate() {
            qindex[j] = q;
        }
        let mut proj = Vec::with_capacity(ambient_dim);
        for j in 0..ambient_dim {
            if !is_pivot[j] {
                proj.push(SparseVec::unit(qindex[j], field.one()));
            } else {
                // e_j = -(rest of its pivot row) modulo relations.
                let k = ech.pivots().iter().position(|&p| p == j).unwrap();
                let mut v = SparseVec::new();
                for (i, c) in ech.rows()[k].iter() {
                    if i != j {
                        v.add(qindex[i], -c.clone());
                    }
                }
                proj.push(v);
            }
        }
        Quotient { ambient_dim, basis, proj }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Projects an ambient vector to quotient coordinates.
    pub fn project(&self, v: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (j, c) in v.iter() {
            out.axpy(c, &self.proj[j]);
        }
        out
    }

    /// The section: quotient basis vector `q` as an ambient vector.
    pub fn section(&self, q: usize, one: Scalar) -> SparseVec {
        SparseVec::unit(self.basis[q], one)
    }

    /// Lifts a quotient vector along the section.
    pub fn lift(&self, v: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (q, c) in v.iter() {
            out.add(self.basis[q], c.clone());
        }
        out
    }
}

/// Rank of a column-major matrix.
pub fn rank(a: &ColMatrix) -> usize {
    let mut ech = Echelon::new(a.field, a.nrows);
    for col in &a.cols {
        ech.insert(col.clone());
    }
    ech.rank()
}

/// Checks that the columns of `a` form an invertible square matrix and
/// returns the inverse, column-major.
pub fn invert(a: &ColMatrix) -> Result<ColMatrix, CoreError> {
    if a.nrows != a.ncols() {
        return Err(CoreError::shape("invert: matrix is not square"));
    }
    let mut cols = Vec::with_capacity(a.nrows);
    for i in 0..a.nrows {
        let e = SparseVec::unit(i, a.field.one());
        let x = solve(a, &e)
            .ok_or_else(|| CoreError::NoSolution("matrix is not invertible".into()))?;
        cols.push(x);
    }
    Ok(ColMatrix { field: a.field, nrows: a.nrows, cols })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Scalar {
        Field::Rationals.from_i64(n)
    }

    fn vec_of(entries: &[(usize, i64)]) -> SparseVec {
        let mut v = SparseVec::new();
        for &(i, c) in entries {
            v.add(i, q(c));
        }
        v
    }

    #[test]
    fn echelon_rank_and_membership() {
        let rows = vec![vec_of(&[(0, 1), (1, 2)]), vec_of(&[(1, 1), (2, 1)]), vec_of(&[(0, 1), (1, 1), (2, -1)])];
        let ech = Echelon::from_rows(Field::Rationals, 3, rows);
        assert_eq!(ech.rank(), 2);
        assert!(ech.contains(&vec_of(&[(0, 2), (1, 5), (2, 1)])));
        assert!(!ech.contains(&vec_of(&[(0, 1)])));
    }

    #[test]
    fn solve_and_kernel() {
        // A = [[1,2,3],[0,1,1]] column-major.
        let a = ColMatrix {
            field: Field::Rationals,
            nrows: 2,
            cols: vec![vec_of(&[(0, 1)]), vec_of(&[(0, 2), (1, 1)]), vec_of(&[(0, 3), (1, 1)])],
        };
        let b = vec_of(&[(0, 1), (1, 1)]);
        let x = solve(&a, &b).unwrap();
        assert_eq!(a.apply(&x), b);
        let ker = kernel(&a);
        assert_eq!(ker.len(), 1);
        assert!(a.apply(&ker[0]).is_zero());
        assert!(!ker[0].is_zero());
        // Inconsistent system over the zero matrix.
        let z = ColMatrix::zero(Field::Rationals, 2, 3);
        assert!(solve(&z, &b).is_none());
    }

    #[test]
    fn quotient_projection_section() {
        // Quotient of k^3 by span{e0 - e1}.
        let qt = Quotient::new(Field::Rationals, 3, vec![vec_of(&[(0, 1), (1, -1)])]);
        assert_eq!(qt.dim(), 2);
        let p0 = qt.project(&vec_of(&[(0, 1)]));
        let p1 = qt.project(&vec_of(&[(1, 1)]));
        assert_eq!(p0, p1);
        // Projection after section is the identity.
        for i in 0..qt.dim() {
            let lifted = qt.section(i, q(1));
            assert_eq!(qt.project(&lifted), SparseVec::unit(i, q(1)));
        }
    }

    #[test]
    fn inverse_round_trip() {
        let a = ColMatrix {
            field: Field::Prime(5),
            nrows: 2,
            cols: vec![
                {
                    let mut v = SparseVec::new();
                    v.add(0, Field::Prime(5).from_i64(2));
                    v.add(1, Field::Prime(5).from_i64(1));
                    v
                },
                SparseVec::unit(1, Field::Prime(5).from_i64(3)),
            ],
        };
        let inv = invert(&a).unwrap();
        for i in 0..2 {
            let e = SparseVec::unit(i, Field::Prime(5).one());
            assert_eq!(a.apply(&inv.apply(&e)), e);
        }
    }
}
