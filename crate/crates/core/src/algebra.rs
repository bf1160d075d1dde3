//! Dg-algebras, dg-(bi)modules, balanced tensor products over a base
//! algebra, extension of scalars, and module hom complexes.
//!
//! Balanced tensor products are materialized as explicit quotient
//! presentations: an ambient tensor space over the ground field, the
//! balancing relations, a deterministically chosen quotient basis, and the
//! projection/section pair. All higher operations (coface extensions,
//! comultiplication insertions, holim composition) are computed by lifting
//! through the section, working at the ambient level with the Koszul sign
//! machinery, and projecting back.

use std::sync::Arc;

use crate::complex::{hom_complex, Complex, HomComplex};
use crate::error::CoreError;
use crate::graded::{
    block_tensor_map, koszul_permutation, tensor_map, Block, GradedMap, GradedSpace,
};
use crate::linalg::{self, Quotient, SparseVec};

/// A finite-dimensional dg-algebra, unital and associative.
#[derive(Debug, Clone)]
pub struct DgAlgebra {
    pub name: String,
    pub complex: Complex,
    /// The tensor square `A ⊗ A` used as the source of `mul`.
    pub square: Arc<GradedSpace>,
    /// Multiplication `A ⊗ A -> A`, degree 0.
    pub mul: GradedMap,
    /// The unit element.
    pub unit: SparseVec,
    /// Whether the algebra is (graded) commutative; validated if set.
    pub commutative: bool,
}

impl DgAlgebra {
    pub fn space(&self) -> &Arc<GradedSpace> {
        &self.complex.space
    }

    pub fn new(
        name: impl Into<String>,
        complex: Complex,
        mul_entries: GradedMap,
        unit: SparseVec,
        commutative: bool,
    ) -> Result<Arc<DgAlgebra>, CoreError> {
        let name = name.into();
        let space = complex.space.clone();
        let square = GradedSpace::tensor(format!("{name}⊗{name}"), vec![space.clone(), space]);
        if mul_entries.src.dim() != square.dim() || mul_entries.degree != 0 {
            return Err(CoreError::shape(format!("algebra {name}: bad multiplication shape")));
        }
        let mul = mul_entries.retarget(square.clone(), complex.space.clone(), 0);
        let a = Arc::new(DgAlgebra { name, complex, square, mul, unit, commutative });
        validate_dg_algebra(&a)?;
        Ok(a)
    }

    /// Multiplies two elements.
    pub fn multiply(&self, x: &SparseVec, y: &SparseVec) -> SparseVec {
        let mut v = SparseVec::new();
        let dim = self.space().dim();
        for (j1, c1) in x.iter() {
            for (j2, c2) in y.iter() {
                let mut t = SparseVec::unit(j1 * dim + j2, c1.clone() * c2.clone());
                t = std::mem::take(&mut t);
                v.axpy(&self.space().field.one(), &self.mul.apply(&t));
            }
        }
        v
    }

    /// The algebra seen as a bimodule over itself.
    pub fn as_bimodule(self: &Arc<Self>) -> Bimodule {
        Bimodule {
            left: Some(self.clone()),
            right: Some(self.clone()),
            complex: self.complex.clone(),
            lact: Some(self.mul.clone()),
            ract: Some(self.mul.clone()),
        }
    }
}

/// Validates associativity, unit laws, the Leibniz rule, `d² = 0`, and
/// (if declared) graded commutativity.
pub fn validate_dg_algebra(a: &DgAlgebra) -> Result<(), CoreError> {
    a.complex.check_d_squared()?;
    let space = a.complex.space.clone();
    let name = &a.name;
    // Associativity on A ⊗ A ⊗ A.
    let cube = GradedSpace::tensor(
        format!("{name}^3"),
        vec![space.clone(), space.clone(), space.clone()],
    );
    let id = GradedMap::identity(space.clone());
    let mul_id = block_tensor_map(&[Block { map: &a.mul, src_arity: 2, dst_arity: 1 }, Block::id(&id)], &cube, &a.square);
    let id_mul = block_tensor_map(&[Block::id(&id), Block { map: &a.mul, src_arity: 2, dst_arity: 1 }], &cube, &a.square);
    if !a.mul.compose(&mul_id).equals(&a.mul.compose(&id_mul)) {
        return Err(CoreError::validation(format!("algebra {name}: not associative")));
    }
    // Unit laws.
    for i in 0..space.dim() {
        let e = SparseVec::unit(i, space.field.one());
        if a.multiply(&a.unit, &e) != e || a.multiply(&e, &a.unit) != e {
            return Err(CoreError::validation(format!("algebra {name}: unit law fails")));
        }
    }
    if !a.complex.d.apply(&a.unit).is_zero() {
        return Err(CoreError::validation(format!("algebra {name}: unit is not closed")));
    }
    // Leibniz: d ∘ μ = μ ∘ (d ⊗ id + id ⊗ d).
    let d_id = tensor_map(&[&a.complex.d, &id], &a.square, &a.square);
    let id_d = tensor_map(&[&id, &a.complex.d], &a.square, &a.square);
    let lhs = a.complex.d.compose(&a.mul);
    let rhs = a.mul.compose(&d_id.add(&id_d));
    if !lhs.equals(&rhs) {
        return Err(CoreError::validation(format!("algebra {name}: Leibniz rule fails")));
    }
    // Graded commutativity if declared: μ ∘ τ = μ.
    if a.commutative {
        let swap = koszul_permutation(&a.square, &a.square, &[1, 0]);
        if !a.mul.compose(&swap).equals(&a.mul) {
            return Err(CoreError::validation(format!(
                "algebra {name}: declared commutative but is not"
            )));
        }
    }
    Ok(())
}

/// A map of dg-algebras.
#[derive(Debug, Clone)]
pub struct AlgebraMap {
    pub src: Arc<DgAlgebra>,
    pub dst: Arc<DgAlgebra>,
    pub map: GradedMap,
}

impl AlgebraMap {
    pub fn new(src: Arc<DgAlgebra>, dst: Arc<DgAlgebra>, map: GradedMap) -> Result<AlgebraMap, CoreError> {
        let m = AlgebraMap { src, dst, map };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        let f = &self.map;
        if f.degree != 0 {
            return Err(CoreError::shape("algebra map must have degree 0"));
        }
        // unital
        if f.apply(&self.src.unit) != self.dst.unit {
            return Err(CoreError::validation("algebra map does not preserve the unit"));
        }
        // chain map
        if !f.compose(&self.src.complex.d).equals(&self.dst.complex.d.compose(f)) {
            return Err(CoreError::validation("algebra map does not commute with d"));
        }
        // multiplicative: f ∘ μ = μ ∘ (f ⊗ f)
        let ff = tensor_map(&[f, f], &self.src.square, &self.dst.square);
        if !f.compose(&self.src.mul).equals(&self.dst.mul.compose(&ff)) {
            return Err(CoreError::validation("algebra map is not multiplicative"));
        }
        Ok(())
    }
}

/// A dg-bimodule. Either side may be absent (a one-sided module is a
/// bimodule with the other base missing).
#[derive(Debug, Clone)]
pub struct Bimodule {
    pub left: Option<Arc<DgAlgebra>>,
    pub right: Option<Arc<DgAlgebra>>,
    pub complex: Complex,
    /// Left action `A ⊗ M -> M`, degree 0.
    pub lact: Option<GradedMap>,
    /// Right action `M ⊗ B -> M`, degree 0.
    pub ract: Option<GradedMap>,
}

impl Bimodule {
    pub fn space(&self) -> &Arc<GradedSpace> {
        &self.complex.space
    }

    /// A left module over a commutative algebra, with the right action
    /// derived through the Koszul swap `m · a = (-1)^{|a||m|} a · m`.
    pub fn from_left_commutative(
        base: &Arc<DgAlgebra>,
        complex: Complex,
        lact: GradedMap,
    ) -> Result<Bimodule, CoreError> {
        if !base.commutative {
            return Err(CoreError::shape("symmetrized bimodule needs a commutative base"));
        }
        let m = complex.space.clone();
        let ma = GradedSpace::tensor(
            format!("{}⊗{}", m.name, base.name),
            vec![m.clone(), base.space().clone()],
        );
        let am = lact.src.clone();
        let swap = koszul_permutation(&ma, &am, &[1, 0]);
        let ract = lact.compose(&swap);
        let bm = Bimodule {
            left: Some(base.clone()),
            right: Some(base.clone()),
            complex,
            lact: Some(lact),
            ract: Some(ract),
        };
        bm.validate()?;
        Ok(bm)
    }

    /// Validates every structure that is present: unit actions, module
    /// associativity, Leibniz, and (for genuine bimodules) commuting
    /// actions.
    pub fn validate(&self) -> Result<(), CoreError> {
        self.complex.check_d_squared()?;
        let m = self.complex.space.clone();
        let id_m = GradedMap::identity(m.clone());
        if let (Some(a), Some(l)) = (&self.left, &self.lact) {
            let aspace = a.space().clone();
            let id_a = GradedMap::identity(aspace.clone());
            let am = l.src.clone();
            // unit: a ↦ 1 ⊗ m ↦ m
            for i in 0..m.dim() {
                let mut v = SparseVec::new();
                for (j, c) in a.unit.iter() {
                    v.add(j * m.dim() + i, c.clone());
                }
                if l.apply(&v) != SparseVec::unit(i, m.field.one()) {
                    return Err(CoreError::validation(format!(
                        "module {}: left unit action fails",
                        m.name
                    )));
                }
            }
            // associativity: l ∘ (μ ⊗ id) = l ∘ (id ⊗ l) on A ⊗ A ⊗ M
            let aam = GradedSpace::tensor(
                format!("{}⊗{}⊗{}", a.name, a.name, m.name),
                vec![aspace.clone(), aspace.clone(), m.clone()],
            );
            let mu_id = block_tensor_map(&[Block { map: &a.mul, src_arity: 2, dst_arity: 1 }, Block::id(&id_m)], &aam, &am);
            let id_l = block_tensor_map(&[Block::id(&id_a), Block { map: l, src_arity: 2, dst_arity: 1 }], &aam, &am);
            if !l.compose(&mu_id).equals(&l.compose(&id_l)) {
                return Err(CoreError::validation(format!(
                    "module {}: left action not associative",
                    m.name
                )));
            }
            // Leibniz: d ∘ l = l ∘ (d_A ⊗ id + id ⊗ d_M)
            let da_id = tensor_map(&[&a.complex.d, &id_m], &am, &am);
            let id_dm = tensor_map(&[&id_a, &self.complex.d], &am, &am);
            if !self.complex.d.compose(l).equals(&l.compose(&da_id.add(&id_dm))) {
                return Err(CoreError::validation(format!(
                    "module {}: left action violates Leibniz",
                    m.name
                )));
            }
        }
        if let (Some(b), Some(r)) = (&self.right, &self.ract) {
            let bspace = b.space().clone();
            let id_b = GradedMap::identity(bspace.clone());
            let mb = r.src.clone();
            for i in 0..m.dim() {
                let mut v = SparseVec::new();
                for (j, c) in b.unit.iter() {
                    v.add(i * bspace.dim() + j, c.clone());
                }
                if r.apply(&v) != SparseVec::unit(i, m.field.one()) {
                    return Err(CoreError::validation(format!(
                        "module {}: right unit action fails",
                        m.name
                    )));
                }
            }
            let mbb = GradedSpace::tensor(
                format!("{}⊗{}⊗{}", m.name, b.name, b.name),
                vec![m.clone(), bspace.clone(), bspace.clone()],
            );
            let r_id = block_tensor_map(&[Block { map: r, src_arity: 2, dst_arity: 1 }, Block::id(&id_b)], &mbb, &mb);
            let id_mu = block_tensor_map(&[Block::id(&id_m), Block { map: &b.mul, src_arity: 2, dst_arity: 1 }], &mbb, &mb);
            if !r.compose(&r_id).equals(&r.compose(&id_mu)) {
                return Err(CoreError::validation(format!(
                    "module {}: right action not associative",
                    m.name
                )));
            }
            let dm_id = tensor_map(&[&self.complex.d, &id_b], &mb, &mb);
            let id_db = tensor_map(&[&id_m, &b.complex.d], &mb, &mb);
            if !self.complex.d.compose(r).equals(&r.compose(&dm_id.add(&id_db))) {
                return Err(CoreError::validation(format!(
                    "module {}: right action violates Leibniz",
                    m.name
                )));
            }
        }
        if let (Some(a), Some(b), Some(l), Some(r)) = (&self.left, &self.right, &self.lact, &self.ract) {
            // (a·m)·b = a·(m·b) on A ⊗ M ⊗ B
            let amb = GradedSpace::tensor(
                format!("{}⊗{}⊗{}", a.name, m.name, b.name),
                vec![a.space().clone(), m.clone(), b.space().clone()],
            );
            let id_a = GradedMap::identity(a.space().clone());
            let id_b = GradedMap::identity(b.space().clone());
            let l_id = block_tensor_map(&[Block { map: l, src_arity: 2, dst_arity: 1 }, Block::id(&id_b)], &amb, &r.src);
            let id_r = block_tensor_map(&[Block::id(&id_a), Block { map: r, src_arity: 2, dst_arity: 1 }], &amb, &l.src);
            if !r.compose(&l_id).equals(&l.compose(&id_r)) {
                return Err(CoreError::validation(format!(
                    "module {}: left and right actions do not commute",
                    m.name
                )));
            }
        }
        Ok(())
    }
}

/// A left dg-module, the shape most operations consume.
#[derive(Debug, Clone)]
pub struct DgModule {
    pub base: Arc<DgAlgebra>,
    pub complex: Complex,
    /// `A ⊗ M -> M`, degree 0.
    pub act: GradedMap,
}

impl DgModule {
    pub fn new(base: Arc<DgAlgebra>, complex: Complex, act: GradedMap) -> Result<DgModule, CoreError> {
        let m = DgModule { base, complex, act };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        self.as_left_bimodule().validate()
    }

    pub fn space(&self) -> &Arc<GradedSpace> {
        &self.complex.space
    }

    pub fn as_left_bimodule(&self) -> Bimodule {
        Bimodule {
            left: Some(self.base.clone()),
            right: None,
            complex: self.complex.clone(),
            lact: Some(self.act.clone()),
            ract: None,
        }
    }

    /// Symmetrized bimodule over a commutative base.
    pub fn as_symmetric_bimodule(&self) -> Result<Bimodule, CoreError> {
        Bimodule::from_left_commutative(&self.base, self.complex.clone(), self.act.clone())
    }
}

/// A balanced tensor product `X_1 ⊗_{A_1} X_2 ⊗_{A_2} … ⊗ X_n`, presented
/// as a quotient of the ground-field tensor product.
#[derive(Debug, Clone)]
pub struct BalancedChain {
    pub factors: Vec<Bimodule>,
    /// The ambient k-tensor space (factors' underlying spaces in order).
    pub ambient: Arc<GradedSpace>,
    /// The quotient space with its deterministically chosen basis.
    pub space: Arc<GradedSpace>,
    /// Projection `ambient -> space` (degree 0).
    pub proj: GradedMap,
    /// Section `space -> ambient` with `proj ∘ sect = id`.
    pub sect: GradedMap,
    /// The induced differential on the quotient.
    pub d: GradedMap,
}

impl BalancedChain {
    /// Builds the chain, checking that adjacent bases agree. Relations are
    /// accumulated iteratively (pairing one factor at a time) so that each
    /// exact elimination stays small, but the ambient space and the final
    /// projection/section are over the full flat tensor product.
    pub fn new(name: impl Into<String>, factors: Vec<Bimodule>) -> Result<BalancedChain, CoreError> {
        let name = name.into();
        assert!(!factors.is_empty());
        for k in 0..factors.len() - 1 {
            let r = factors[k]
                .right
                .as_ref()
                .ok_or_else(|| CoreError::shape(format!("{name}: factor {k} has no right base")))?;
            let l = factors[k + 1]
                .left
                .as_ref()
                .ok_or_else(|| CoreError::shape(format!("{name}: factor {} has no left base", k + 1)))?;
            if !r.space().same_shape(l.space()) {
                return Err(CoreError::shape(format!("{name}: bases at junction {k} differ")));
            }
        }
        let field = factors[0].space().field;
        let spaces: Vec<Arc<GradedSpace>> = factors.iter().map(|f| f.space().clone()).collect();
        let ambient = GradedSpace::tensor(name.clone(), spaces.clone());

        // Relations in the flat ambient space, one junction at a time:
        // image of  ract_k ⊗ id_rest - id_rest ⊗ lact_{k+1}  on
        // X_1 ⊗ … ⊗ X_k ⊗ A ⊗ X_{k+1} ⊗ … ⊗ X_n.
        let mut relations: Vec<SparseVec> = Vec::new();
        for k in 0..factors.len() - 1 {
            let a = factors[k].right.as_ref().unwrap();
            let mut with_a = spaces.clone();
            with_a.insert(k + 1, a.space().clone());
            let big = GradedSpace::tensor(format!("{name}~rel{k}"), with_a);
            let ids: Vec<GradedMap> =
                spaces.iter().map(|s| GradedMap::identity(s.clone())).collect();
            let ract = factors[k].ract.as_ref().unwrap();
            let lact = factors[k + 1].lact.as_ref().unwrap();
            let mut blocks_r: Vec<Block> = Vec::new();
            let mut blocks_l: Vec<Block> = Vec::new();
            for (i, idm) in ids.iter().enumerate() {
                if i == k {
                    blocks_r.push(Block { map: ract, src_arity: 2, dst_arity: 1 });
                } else {
                    blocks_r.push(Block::id(idm));
                }
                if i == k + 1 {
                    blocks_l.push(Block { map: lact, src_arity: 2, dst_arity: 1 });
                } else {
                    blocks_l.push(Block::id(idm));
                }
            }
            let to_flat_r = block_tensor_map(&blocks_r, &big, &ambient);
            let to_flat_l = block_tensor_map(&blocks_l, &big, &ambient);
            let diff = to_flat_r.sub(&to_flat_l);
            for col in diff.cols {
                if !col.is_zero() {
                    relations.push(col);
                }
            }
        }
        let quot = Quotient::new(field, ambient.dim(), relations);
        let basis: Vec<(String, i64)> = quot
            .basis
            .iter()
            .map(|&j| (ambient.basis[j].clone(), ambient.degrees[j]))
            .collect();
        let space = GradedSpace::new(format!("[{name}]"), field, basis, ambient.window)?;
        let mut proj = GradedMap::zero(ambient.clone(), space.clone(), 0);
        for j in 0..ambient.dim() {
            proj.cols[j] = quot.proj[j].clone();
        }
        let mut sect = GradedMap::zero(space.clone(), ambient.clone(), 0);
        for q in 0..space.dim() {
            sect.cols[q] = SparseVec::unit(quot.basis[q], field.one());
        }
        // Induced differential: project (Σ id ⊗ d_k ⊗ id) through the
        // section; balancedness of the Leibniz terms makes it well defined.
        let mut d_flat = GradedMap::zero(ambient.clone(), ambient.clone(), 1);
        for (k, f) in factors.iter().enumerate() {
            let ids: Vec<GradedMap> =
                spaces.iter().map(|s| GradedMap::identity(s.clone())).collect();
            let maps: Vec<&GradedMap> = (0..factors.len())
                .map(|i| if i == k { &f.complex.d } else { &ids[i] })
                .collect();
            d_flat = d_flat.add(&tensor_map(&maps, &ambient, &ambient));
        }
        let d = proj.compose(&d_flat).compose(&sect);
        let chain = BalancedChain { factors, ambient, space, proj, sect, d };
        debug_assert!(chain.d.compose(&chain.d).is_zero(), "induced differential squares to 0");
        Ok(chain)
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn as_complex(&self) -> Complex {
        Complex { space: self.space.clone(), d: self.d.clone() }
    }

    /// Induces a map between two chains from a flat (ambient-level) map,
    /// asserting in debug builds that it descends to the quotients.
    pub fn induce(&self, other: &BalancedChain, flat: &GradedMap) -> GradedMap {
        let induced = other.proj.compose(flat).compose(&self.sect);
        debug_assert!(
            other
                .proj
                .compose(flat)
                .equals(&induced.compose(&self.proj)),
            "flat map does not descend to the balanced quotient"
        );
        induced
    }

    /// The left action of the first factor's left base on the chain.
    pub fn left_action(&self) -> Result<GradedMap, CoreError> {
        let a = self
            .factors[0]
            .left
            .as_ref()
            .ok_or_else(|| CoreError::shape("chain has no left base"))?;
        let lact = self.factors[0].lact.as_ref().unwrap();
        let src = GradedSpace::tensor(
            format!("{}⊗{}", a.name, self.space.name),
            vec![a.space().clone(), self.space.clone()],
        );
        let mut flat_factors = vec![a.space().clone()];
        flat_factors.extend(self.factors.iter().map(|f| f.space().clone()));
        let flat_src = GradedSpace::tensor(
            format!("{}⊗{}", a.name, self.ambient.name),
            flat_factors,
        );
        let id_a = GradedMap::identity(a.space().clone());
        let lift = block_tensor_map(
            &[Block::id(&id_a), Block { map: &self.sect, src_arity: 1, dst_arity: self.factors.len() }],
            &src,
            &flat_src,
        );
        // act on the first factor
        let ids: Vec<GradedMap> = self
            .factors
            .iter()
            .skip(1)
            .map(|f| GradedMap::identity(f.space().clone()))
            .collect();
        let mut blocks = vec![Block { map: lact, src_arity: 2, dst_arity: 1 }];
        for idm in &ids {
            blocks.push(Block::id(idm));
        }
        let act_flat = block_tensor_map(&blocks, &flat_src, &self.ambient);
        Ok(self.proj.compose(&act_flat).compose(&lift))
    }
}

/// The derived tensor-product-of-modules entry point: `M ⊗_A N` for a
/// right module `M` and left module `N`, returned as a balanced chain.
pub fn tensor_over(m: &Bimodule, n: &Bimodule) -> Result<BalancedChain, CoreError> {
    BalancedChain::new(
        format!("{}⊗_A{}", m.space().name, n.space().name),
        vec![m.clone(), n.clone()],
    )
}

/// Extension of scalars along an algebra map `φ : A -> A'`:
/// `A' ⊗_A M`, returned as a module over `A'` plus its presentation.
pub fn extend_scalars(phi: &AlgebraMap, m: &DgModule) -> Result<(DgModule, BalancedChain), CoreError> {
    if !m.base.space().same_shape(phi.src.space()) {
        return Err(CoreError::shape("extend_scalars: module base does not match the map source"));
    }
    // A' as an (A', A)-bimodule with the right action through φ.
    let aprime = &phi.dst;
    let ma = GradedSpace::tensor(
        format!("{}⊗{}", aprime.name, phi.src.name),
        vec![aprime.space().clone(), phi.src.space().clone()],
    );
    let id_ap = GradedMap::identity(aprime.space().clone());
    let through_phi = tensor_map(&[&id_ap, &phi.map], &ma, &aprime.square);
    let ract = aprime.mul.compose(&through_phi);
    let carrier = Bimodule {
        left: Some(aprime.clone()),
        right: Some(phi.src.clone()),
        complex: aprime.complex.clone(),
        lact: Some(aprime.mul.clone()),
        ract: Some(ract),
    };
    let chain = BalancedChain::new(
        format!("{}⊗_{}{}", aprime.name, phi.src.name, m.space().name),
        vec![carrier, m.as_left_bimodule()],
    )?;
    let act = chain.left_action()?;
    let module = DgModule {
        base: aprime.clone(),
        complex: chain.as_complex(),
        act,
    };
    Ok((module, chain))
}

/// The subcomplex of `Hom_k(M, N)` of `A`-linear maps (in the graded
/// sense `f(a·m) = (-1)^{|a||f|} a·f(m)`), with a dictionary between its
/// basis and honest maps.
#[derive(Debug, Clone)]
pub struct ModuleHomComplex {
    pub hom: HomComplex,
    pub complex: Complex,
    /// Basis of the subspace: homogeneous vectors in the full hom space.
    pub basis_vectors: Vec<SparseVec>,
}

impl ModuleHomComplex {
    /// Decodes a coordinate vector in the sub-basis into a graded map.
    pub fn to_map(&self, coords: &SparseVec, degree: i64) -> Result<GradedMap, CoreError> {
        let mut v = SparseVec::new();
        for (k, c) in coords.iter() {
            v.axpy(c, &self.basis_vectors[k]);
        }
        self.hom.to_map(&v, degree)
    }

    /// Encodes an A-linear graded map in sub-basis coordinates.
    pub fn to_coords(&self, f: &GradedMap) -> Result<SparseVec, CoreError> {
        let v = self.hom.to_vector(f);
        let cols: Vec<SparseVec> = self.basis_vectors.clone();
        let mat = linalg::ColMatrix {
            field: self.hom.source.space.field,
            nrows: self.hom.complex.space.dim(),
            cols,
        };
        linalg::solve(&mat, &v)
            .ok_or_else(|| CoreError::NoSolution("map is not in the A-linear subspace".into()))
    }
}

/// Builds the module hom complex of two left modules over the same base.
pub fn module_hom_complex(m: &DgModule, n: &DgModule) -> Result<ModuleHomComplex, CoreError> {
    if !m.base.space().same_shape(n.base.space()) {
        return Err(CoreError::shape("module_hom_complex: different base algebras"));
    }
    let a = &m.base;
    let hom = hom_complex(&m.complex, &n.complex);
    let hspace = &hom.complex.space;
    let field = hspace.field;
    // Linearity defect L(f) = f ∘ lact_M - lact_N ∘ (id_A ⊗ f), a linear
    // function of f; compute its matrix columnwise on elementary maps.
    let am = m.act.src.clone();
    let an = n.act.src.clone();
    let id_a = GradedMap::identity(a.space().clone());
    let defect = |f: &GradedMap| -> GradedMap {
        let id_f = tensor_map(&[&id_a, f], &am, &an);
        f.compose(&m.act).sub(&n.act.compose(&id_f))
    };
    // Group hom-space basis indices by degree and compute kernels per
    // degree so the resulting basis is homogeneous.
    let mut degrees: Vec<i64> = hspace.degrees.clone();
    degrees.sort_unstable();
    degrees.dedup();
    let mut basis_vectors: Vec<SparseVec> = Vec::new();
    let target_dim = am.dim() * n.space().dim();
    for deg in degrees {
        let idxs: Vec<usize> =
            (0..hspace.dim()).filter(|&k| hspace.degrees[k] == deg).collect();
        let mut cols = Vec::with_capacity(idxs.len());
        for &k in &idxs {
            let f = hom.to_map(&SparseVec::unit(k, field.one()), deg)?;
            let l = defect(&f);
            // vectorize the defect (its own hom-coordinates)
            let mut v = SparseVec::new();
            for (j, col) in l.cols.iter().enumerate() {
                for (i, c) in col.iter() {
                    v.add(j * n.space().dim() + i, c.clone());
                }
            }
            cols.push(v);
        }
        let mat = linalg::ColMatrix { field, nrows: target_dim, cols };
        for kv in linalg::kernel(&mat) {
            // translate kernel coordinates back to hom-space indices
            let mut v = SparseVec::new();
            for (local, c) in kv.iter() {
                v.add(idxs[local], c.clone());
            }
            basis_vectors.push(v);
        }
    }
    // Subcomplex structure: D restricted to the A-linear subspace.
    let sub_basis: Vec<(String, i64)> = basis_vectors
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let deg = hspace.degrees[v.leading().expect("nonzero basis vector").0];
            (format!("h{k}"), deg)
        })
        .collect();
    let space = GradedSpace::new(
        format!("Hom_A({},{})", m.space().name, n.space().name),
        field,
        sub_basis,
        hspace.window,
    )?;
    let mat = linalg::ColMatrix {
        field,
        nrows: hspace.dim(),
        cols: basis_vectors.clone(),
    };
    let mut d = GradedMap::zero(space.clone(), space.clone(), 1);
    for k in 0..space.dim() {
        let img = hom.complex.d.apply(&basis_vectors[k]);
        let coords = linalg::solve(&mat, &img).ok_or_else(|| {
            CoreError::validation("hom differential leaves the A-linear subspace")
        })?;
        d.cols[k] = coords;
    }
    let complex = Complex { space, d };
    complex.check_d_squared()?;
    Ok(ModuleHomComplex { hom, complex, basis_vectors })
}

/// Composes two coordinate-encoded module maps, returning coordinates in
/// the hom complex of the outer pair.
pub fn compose_module_maps(
    gf_hom: &ModuleHomComplex,
    g: (&ModuleHomComplex, &SparseVec, i64),
    f: (&ModuleHomComplex, &SparseVec, i64),
) -> Result<SparseVec, CoreError> {
    let gm = g.0.to_map(g.1, g.2)?;
    let fm = f.0.to_map(f.1, f.2)?;
    gf_hom.to_coords(&gm.compose(&fm))
}

/// The dual numbers `k[x]/(x²)` with `|x| = 0` and zero differential;
/// used as the nilpotent coefficient algebra and in many tests.
pub fn dual_numbers(field: crate::scalar::Field) -> Arc<DgAlgebra> {
    let space = GradedSpace::new(
        "k[x]",
        field,
        vec![("1".into(), 0), ("x".into(), 0)],
        (0, 0),
    )
    .unwrap();
    let complex = Complex::with_zero_d(space.clone());
    let sq = GradedSpace::tensor("k[x]⊗k[x]", vec![space.clone(), space.clone()]);
    let mut mul = GradedMap::zero(sq.clone(), space.clone(), 0);
    // 1·1 = 1, 1·x = x·1 = x, x·x = 0
    mul.add_entry(0, sq.fuse_index(&[0, 0]), field.one()).unwrap();
    mul.add_entry(1, sq.fuse_index(&[0, 1]), field.one()).unwrap();
    mul.add_entry(1, sq.fuse_index(&[1, 0]), field.one()).unwrap();
    let unit = SparseVec::unit(0, field.one());
    DgAlgebra::new("k[x]/(x²)", complex, mul, unit, true).unwrap()
}

/// The exterior algebra `k[x]/(x²)` on a generator of the given degree
/// with zero differential; the graded coefficient algebra that makes
/// maps of nonzero degree possible over otherwise degree-0 models.
pub fn exterior_line(field: crate::scalar::Field, degree: i64) -> Arc<DgAlgebra> {
    let space = GradedSpace::new(
        "Λ[x]",
        field,
        vec![("1".into(), 0), ("x".into(), degree)],
        (degree.min(0), degree.max(0)),
    )
    .unwrap();
    let complex = Complex::with_zero_d(space.clone());
    let sq = GradedSpace::tensor("Λ[x]⊗Λ[x]", vec![space.clone(), space.clone()]);
    let mut mul = GradedMap::zero(sq.clone(), space.clone(), 0);
    // 1·1 = 1, 1·x = x·1 = x, x·x = 0
    mul.add_entry(0, sq.fuse_index(&[0, 0]), field.one()).unwrap();
    mul.add_entry(1, sq.fuse_index(&[0, 1]), field.one()).unwrap();
    mul.add_entry(1, sq.fuse_index(&[1, 0]), field.one()).unwrap();
    let unit = SparseVec::unit(0, field.one());
    DgAlgebra::new("Λ[x]", complex, mul, unit, true).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Field;

    #[test]
    fn exterior_line_validates() {
        exterior_line(Field::Rationals, 1);
        exterior_line(Field::Rationals, -1);
        exterior_line(Field::Prime(3), 1);
    }

    #[test]
    fn dual_numbers_validate() {
        dual_numbers(Field::Rationals);
        dual_numbers(Field::Prime(2));
    }

    #[test]
    fn broken_associativity_rejected() {
        let field = Field::Rationals;
        let space = GradedSpace::new(
            "B",
            field,
            vec![("1".into(), 0), ("x".into(), 0)],
            (0, 0),
        )
        .unwrap();
        let complex = Complex::with_zero_d(space.clone());
        let sq = GradedSpace::tensor("B⊗B", vec![space.clone(), space.clone()]);
        let mut mul = GradedMap::zero(sq.clone(), space.clone(), 0);
        mul.add_entry(0, sq.fuse_index(&[0, 0]), field.one()).unwrap();
        mul.add_entry(1, sq.fuse_index(&[0, 1]), field.one()).unwrap();
        mul.add_entry(1, sq.fuse_index(&[1, 0]), field.one()).unwrap();
        // x·x = 1 makes (x·x)·x = x but unit laws force associativity
        // breakage elsewhere; actually x²=1 is associative (ℤ/2 group
        // algebra), so instead: x·x = x but 1 stays the unit; then
        // (x·x)·x = x·x = x and x·(x·x) = x — still associative. Break it
        // asymmetrically: x·x = 1 only on one side is impossible for a
        // well-defined map, so poison associativity with x·x = 1 + x and
        // check the Leibniz/associativity validator catches the failure
        // (left: (xx)x = x + x² = 1 + 2x; right: x(xx) = x + x² = same…)
        // A genuinely non-associative choice: x·x = 1, 1·x = x, x·1 = 0.
        let mut bad = GradedMap::zero(sq.clone(), space.clone(), 0);
        bad.add_entry(0, sq.fuse_index(&[0, 0]), field.one()).unwrap();
        bad.add_entry(1, sq.fuse_index(&[0, 1]), field.one()).unwrap();
        bad.add_entry(0, sq.fuse_index(&[1, 1]), field.one()).unwrap();
        let unit = SparseVec::unit(0, field.one());
        assert!(DgAlgebra::new("bad", complex, bad, unit, false).is_err());
        let _ = mul;
    }

    #[test]
    fn rank_one_free_module_tensor() {
        // A ⊗_A A ≅ A for the dual numbers.
        let a = dual_numbers(Field::Rationals);
        let bm = a.as_bimodule();
        let chain = tensor_over(&bm, &bm).unwrap();
        assert_eq!(chain.dim(), 2);
        chain.as_complex().check_d_squared().unwrap();
        // projection of 1 ⊗ x equals projection of x ⊗ 1
        let i1 = chain.ambient.fuse_index(&[0, 1]);
        let i2 = chain.ambient.fuse_index(&[1, 0]);
        let one = Field::Rationals.one();
        assert_eq!(
            chain.proj.apply(&SparseVec::unit(i1, one.clone())),
            chain.proj.apply(&SparseVec::unit(i2, one))
        );
    }

    #[test]
    fn module_hom_complex_of_free_module() {
        // Hom_A(A, A) ≅ A for the dual numbers (dimension 2).
        let a = dual_numbers(Field::Rationals);
        let m = DgModule {
            base: a.clone(),
            complex: a.complex.clone(),
            act: a.mul.clone(),
        };
        m.validate().unwrap();
        let h = module_hom_complex(&m, &m).unwrap();
        assert_eq!(h.complex.space.dim(), 2);
        // identity is A-linear; its coordinates round-trip
        let idm = GradedMap::identity(m.space().clone());
        let coords = h.to_coords(&idm).unwrap();
        let back = h.to_map(&coords, 0).unwrap();
        assert!(back.equals(&idm));
    }
}
