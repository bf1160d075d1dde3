//! Strict descent along a finite affine cover: gluing data
//! `θ : M ⊗_A C -> C ⊗_A M` with the cocycle (`δ⁰θ ∘ δ²θ = δ¹θ`) and unit
//! (`σ⁰θ = id`) conditions, the equivalence "invertible ⇔ unital" for
//! cocycle-satisfying data, their identification with strict comodules over
//! the groupoid coalgebra `C = A ⊗_B A`, and module descent by equalizers.
//!
//! Everything here is the strict, degree-0-tower special case of the
//! homotopy-limit category: a descent datum is exactly an object `(M, θ)`
//! with `θ_1 = θ` and no higher components.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::algebra::{extend_scalars, module_hom_complex, AlgebraMap, Bimodule, DgModule};
use crate::complex::Complex;
use crate::cosimplicial::{
    coface_of_map, delta_insert, extend_left, extend_right, level_action, GroupoidData, ModString,
};
use crate::error::CoreError;
use crate::graded::{GradedMap, GradedSpace};
use crate::holim::{adjunction_unit, HolimObject};
use crate::linalg::{self, ColMatrix, SparseVec};
use crate::scalar::Field;

/// A strict gluing datum: a module `M` over the level-0 algebra `A`
/// together with a degree-0 component `θ : M ⊗ C -> C ⊗ M`. Validity
/// (chain map, level-1 linearity, cocycle, unit) is decided by
/// [`validate_descent`], not assumed.
#[derive(Clone)]
pub struct DescentDatum {
    /// The datum as a tower with `θ_1 = θ` and no higher components.
    pub obj: Arc<HolimObject>,
}

impl DescentDatum {
    pub fn new(
        gd: Arc<GroupoidData>,
        module: Bimodule,
        theta: GradedMap,
    ) -> Result<DescentDatum, CoreError> {
        if theta.degree != 0 {
            return Err(CoreError::shape("a descent datum needs a degree-0 gluing map"));
        }
        let obj = HolimObject::new(gd, module, BTreeMap::from([(1, theta)]))?;
        Ok(DescentDatum { obj })
    }

    pub fn gd(&self) -> &Arc<GroupoidData> {
        &self.obj.gd
    }

    pub fn module(&self) -> &Bimodule {
        &self.obj.module
    }

    /// The gluing map `θ : M ⊗ C -> C ⊗ M`.
    pub fn theta(&self) -> GradedMap {
        self.obj.theta(1)
    }
}

pub(crate) fn string_module(gd: &GroupoidData, s: &ModString) -> Result<DgModule, CoreError> {
    DgModule::new(
        gd.sys.levels[s.level()].clone(),
        Complex::new(s.space().clone(), s.chain.d.clone())?,
        level_action(&gd.sys, s)?,
    )
}

/// `δ⁰θ ∘ δ²θ - δ¹θ` as a map `M ⊗ C^{⊗2} -> C^{⊗2} ⊗ M` (zero iff the
/// cocycle condition holds). Requires `θ` to be level-1 linear.
fn cocycle_defect(d: &DescentDatum) -> Result<GradedMap, CoreError> {
    let obj = &d.obj;
    let gd = obj.gd.as_ref();
    let x1 = obj.max_string(1);
    let y1 = obj.min_string(1);
    let x2 = obj.max_string(2);
    let y2 = obj.min_string(2);
    let theta = obj.theta(1);
    // δ²θ : M ⊗ C ⊗ C -> C ⊗ M ⊗ C and δ⁰θ : C ⊗ M ⊗ C -> C ⊗ C ⊗ M
    let (_, _, outer_right) = extend_right(gd, x1, y1, &theta, 1)?;
    let (mid, _, outer_left) = extend_left(gd, x1, y1, &theta, 1)?;
    let outer_right = outer_right.retarget(x2.space().clone(), mid.space().clone(), 0);
    let composite = outer_left
        .retarget(mid.space().clone(), y2.space().clone(), 0)
        .compose(&outer_right);
    let (_, _, interior) = coface_of_map(&gd.sys, gd, x1, y1, &theta, 1)?;
    let interior = interior.retarget(x2.space().clone(), y2.space().clone(), 0);
    Ok(composite.sub(&interior))
}

/// `(ε ⊗ id) : C ⊗ M -> M`, collapsing the edge factor through
/// `ε = σ⁰ : C -> A` and the module action.
fn counit_collapse(
    gd: &GroupoidData,
    module: &Bimodule,
    min1: &ModString,
) -> Result<GradedMap, CoreError> {
    let m = module.space();
    let field = m.field;
    let lact = module
        .lact
        .clone()
        .ok_or_else(|| CoreError::shape("module carries no left action"))?;
    let mut out = GradedMap::zero(min1.space().clone(), m.clone(), 0);
    for u in 0..min1.space().dim() {
        let flat = min1.chain.sect.apply(&SparseVec::unit(u, field.one()));
        let mut acc = SparseVec::new();
        for (fi, c) in flat.iter() {
            let parts = min1.chain.ambient.split_index(fi);
            let eps_c = gd.eps.apply(&SparseVec::unit(parts[0], field.one()));
            for (ai, ca) in eps_c.iter() {
                let e = SparseVec::unit(lact.src.fuse_index(&[ai, parts[1]]), field.one());
                acc.axpy(&(c.clone() * ca.clone()), &lact.apply(&e));
            }
        }
        for (r, c) in acc.iter() {
            out.add_entry(r, u, c.clone())?;
        }
    }
    Ok(out)
}

/// `σ⁰θ - id : M -> M` (zero iff the unit condition holds).
fn unit_defect(d: &DescentDatum) -> Result<GradedMap, CoreError> {
    let obj = &d.obj;
    let collapse = counit_collapse(obj.gd.as_ref(), &obj.module, obj.min_string(1))?;
    let ins = adjunction_unit(obj, 1)?;
    let id = GradedMap::identity(obj.module.space().clone());
    Ok(collapse.compose(&obj.theta(1)).compose(&ins).sub(&id))
}

/// Exact check of the descent axioms; returns one line per violated
/// condition (empty = valid).
pub fn validate_descent(d: &DescentDatum) -> Result<Vec<String>, CoreError> {
    let mut failures = Vec::new();
    let obj = &d.obj;
    let gd = obj.gd.as_ref();
    let theta = obj.theta(1);
    let x1 = obj.max_string(1);
    let y1 = obj.min_string(1);
    if !y1.chain.d.compose(&theta).sub(&theta.compose(&x1.chain.d)).is_zero() {
        failures.push("θ is not a chain map".to_string());
    }
    let hom = module_hom_complex(&string_module(gd, x1)?, &string_module(gd, y1)?)?;
    if hom.to_coords(&theta).is_err() {
        failures.push("θ is not linear over the level-1 algebra".to_string());
        // the coface transports below are only defined for linear maps
        return Ok(failures);
    }
    if !cocycle_defect(d)?.is_zero() {
        failures.push("cocycle condition fails".to_string());
    }
    if !unit_defect(d)?.is_zero() {
        failures.push("unit condition fails".to_string());
    }
    Ok(failures)
}

/// For a datum with verified cocycle: decides independently whether `θ` is
/// invertible and whether the unit condition holds, and asserts that the
/// two predicates agree.
pub fn iso_iff_unit(d: &DescentDatum) -> Result<(bool, bool), CoreError> {
    if !cocycle_defect(d)?.is_zero() {
        return Err(CoreError::validation("iso_iff_unit needs a verified cocycle"));
    }
    let obj = &d.obj;
    let theta = obj.theta(1);
    let chain_map = obj
        .min_string(1)
        .chain
        .d
        .compose(&theta)
        .sub(&theta.compose(&obj.max_string(1).chain.d))
        .is_zero();
    let is_iso = chain_map && theta.inverse().is_ok();
    let unit_holds = unit_defect(d)?.is_zero();
    assert_eq!(
        is_iso, unit_holds,
        "cocycle datum: invertibility must agree with the unit condition"
    );
    Ok((is_iso, unit_holds))
}

/// A strict comodule over the groupoid coalgebra: `ρ : M -> C ⊗_A M`,
/// degree 0, coassociative and counital. Validity is decided by
/// [`StrictComodule::validate`].
#[derive(Clone)]
pub struct StrictComodule {
    /// Shape carrier (module and canonical strings); the tower is empty.
    pub obj: Arc<HolimObject>,
    /// The coaction `ρ : M -> C ⊗ M`.
    pub rho: GradedMap,
}

impl StrictComodule {
    pub fn new(
        gd: Arc<GroupoidData>,
        module: Bimodule,
        rho: GradedMap,
    ) -> Result<StrictComodule, CoreError> {
        let obj = HolimObject::new(gd, module, BTreeMap::new())?;
        if rho.degree != 0
            || !rho.src.same_shape(obj.module.space())
            || !rho.dst.same_shape(obj.min_string(1).space())
        {
            return Err(CoreError::shape("coaction must be a degree-0 map M -> C ⊗ M"));
        }
        let rho = rho.retarget(
            obj.module.space().clone(),
            obj.min_string(1).space().clone(),
            0,
        );
        Ok(StrictComodule { obj, rho })
    }

    pub fn gd(&self) -> &Arc<GroupoidData> {
        &self.obj.gd
    }

    pub fn module(&self) -> &Bimodule {
        &self.obj.module
    }

    /// `M` and `C ⊗ M` as modules over `A` (acting through the leftmost
    /// factor on the string side).
    fn a_modules(&self) -> Result<(DgModule, DgModule), CoreError> {
        let gd = self.obj.gd.as_ref();
        let module = &self.obj.module;
        let y1 = self.obj.min_string(1);
        let m_mod = DgModule::new(
            gd.a.clone(),
            Complex::new(module.space().clone(), module.complex.d.clone())?,
            module
                .lact
                .clone()
                .ok_or_else(|| CoreError::shape("module carries no left action"))?,
        )?;
        let c_lact = gd
            .c
            .lact
            .clone()
            .ok_or_else(|| CoreError::shape("C carries no left action"))?;
        let src = GradedSpace::tensor(
            format!("{}⊗{}", gd.a.name, y1.space().name),
            vec![gd.a.space().clone(), y1.space().clone()],
        );
        let field = module.space().field;
        let amb = &y1.chain.ambient;
        // a · (c ⊗ m) = (a · c) ⊗ m (no Koszul sign: a comes first)
        let mut act = GradedMap::zero(src.clone(), y1.space().clone(), 0);
        for ai in 0..gd.a.space().dim() {
            for u in 0..y1.space().dim() {
                let flat = y1.chain.sect.apply(&SparseVec::unit(u, field.one()));
                let mut acc = SparseVec::new();
                for (fi, c) in flat.iter() {
                    let parts = amb.split_index(fi);
                    let ac = act_on(&c_lact, ai, &SparseVec::unit(parts[0], field.one()));
                    for (ci, cc) in ac.iter() {
                        acc.add(amb.fuse_index(&[ci, parts[1]]), c.clone() * cc.clone());
                    }
                }
                let img = y1.chain.proj.apply(&acc);
                for (r, c) in img.iter() {
                    act.add_entry(r, src.fuse_index(&[ai, u]), c.clone())?;
                }
            }
        }
        let y1_mod = DgModule::new(
            gd.a.clone(),
            Complex::new(y1.space().clone(), y1.chain.d.clone())?,
            act,
        )?;
        Ok((m_mod, y1_mod))
    }

    /// Exact check of the comodule axioms; returns one line per violated
    /// condition (empty = valid).
    pub fn validate(&self) -> Result<Vec<String>, CoreError> {
        let mut failures = Vec::new();
        let obj = &self.obj;
        let gd = obj.gd.as_ref();
        let y1 = obj.min_string(1);
        let y2 = obj.min_string(2);
        if !y1
            .chain
            .d
            .compose(&self.rho)
            .sub(&self.rho.compose(&obj.module.complex.d))
            .is_zero()
        {
            failures.push("ρ is not a chain map".to_string());
        }
        let (m_mod, y1_mod) = self.a_modules()?;
        let hom = module_hom_complex(&m_mod, &y1_mod)?;
        if hom.to_coords(&self.rho).is_err() {
            failures.push("ρ is not linear over the base algebra".to_string());
        }
        // coassociativity: (Δ ⊗ id) ρ = (id ⊗ ρ) ρ
        let (_, delta_ins) = delta_insert(gd, y1, 1)?;
        let lhs = delta_ins
            .retarget(y1.space().clone(), y2.space().clone(), 0)
            .compose(&self.rho);
        let (_, _, id_rho) = extend_left(gd, obj.max_string(0), y1, &self.rho, 1)?;
        let rhs = id_rho
            .retarget(y1.space().clone(), y2.space().clone(), 0)
            .compose(&self.rho);
        if !lhs.equals(&rhs) {
            failures.push("coassociativity fails".to_string());
        }
        // counit: (ε ⊗ id) ρ = id
        let collapse = counit_collapse(gd, &obj.module, y1)?;
        let id = GradedMap::identity(obj.module.space().clone());
        if !collapse.compose(&self.rho).sub(&id).is_zero() {
            failures.push("counit condition fails".to_string());
        }
        Ok(failures)
    }
}

/// `ρ = θ ∘ (m ↦ m ⊗ 1)`: the comodule of a valid descent datum.
pub fn descent_to_comodule(d: &DescentDatum) -> Result<StrictComodule, CoreError> {
    let failures = validate_descent(d)?;
    if !failures.is_empty() {
        return Err(CoreError::validation(format!(
            "invalid descent datum: {}",
            failures.join("; ")
        )));
    }
    let ins = adjunction_unit(&d.obj, 1)?;
    let rho = d.theta().compose(&ins);
    StrictComodule::new(d.gd().clone(), d.module().clone(), rho)
}

fn act_on(act: &GradedMap, ai: usize, v: &SparseVec) -> SparseVec {
    let mut flat = SparseVec::new();
    for (si, c) in v.iter() {
        flat.add(act.src.fuse_index(&[ai, si]), c.clone());
    }
    act.apply(&flat)
}

/// The inverse construction: extends `ρ` to the level-1 linear gluing map
/// with `θ(m ⊗ 1) = ρ(m)`, by solving against the spanning family
/// `a · (m ⊗ 1)` of `M ⊗ C`.
pub fn comodule_to_datum(c: &StrictComodule) -> Result<DescentDatum, CoreError> {
    let obj = &c.obj;
    let gd = obj.gd.as_ref();
    let x1 = obj.max_string(1);
    let y1 = obj.min_string(1);
    let field = obj.module.space().field;
    let act_x = level_action(&gd.sys, x1)?;
    let act_y = level_action(&gd.sys, y1)?;
    let ins = adjunction_unit(obj, 1)?;
    let mut cols = Vec::new();
    let mut images = Vec::new();
    for ai in 0..gd.sys.levels[1].space().dim() {
        for mi in 0..obj.module.space().dim() {
            let m_unit = ins.apply(&SparseVec::unit(mi, field.one()));
            let m_rho = c.rho.apply(&SparseVec::unit(mi, field.one()));
            cols.push(act_on(&act_x, ai, &m_unit));
            images.push(act_on(&act_y, ai, &m_rho));
        }
    }
    let mat = ColMatrix { field, nrows: x1.space().dim(), cols };
    let mut theta = GradedMap::zero(x1.space().clone(), y1.space().clone(), 0);
    for u in 0..x1.space().dim() {
        let coords = linalg::solve(&mat, &SparseVec::unit(u, field.one())).ok_or_else(|| {
            CoreError::NoSolution("the coaction does not extend to a gluing map".into())
        })?;
        let mut img = SparseVec::new();
        for (k, cc) in coords.iter() {
            img.axpy(cc, &images[k]);
        }
        for (r, cc) in img.iter() {
            theta.add_entry(r, u, cc.clone())?;
        }
    }
    DescentDatum::new(obj.gd.clone(), obj.module.clone(), theta)
}

/// The coaction `m ↦ 1 ⊗ m` (valid exactly for modules pulled back from
/// the base, where it is the canonical comodule structure).
pub fn trivial_coaction(
    gd: &Arc<GroupoidData>,
    module: &Bimodule,
) -> Result<StrictComodule, CoreError> {
    let obj = HolimObject::new(gd.clone(), module.clone(), BTreeMap::new())?;
    let m = module.space();
    let y1 = obj.min_string(1);
    let mut rho = GradedMap::zero(m.clone(), y1.space().clone(), 0);
    for q in 0..m.dim() {
        let mut flat = SparseVec::new();
        for (u, cu) in gd.c_alg.unit.iter() {
            flat.add(y1.chain.ambient.fuse_index(&[u, q]), cu.clone());
        }
        let img = y1.chain.proj.apply(&flat);
        for (r, cc) in img.iter() {
            rho.add_entry(r, q, cc.clone())?;
        }
    }
    StrictComodule::new(gd.clone(), module.clone(), rho)
}

/// The descended module: the equalizer `K = ker(ρ - (m ↦ 1 ⊗ m))` with its
/// induced differential and base action, returned together with the
/// evaluation `A ⊗_B K -> M` (an isomorphism exactly when the comodule
/// descends; invert it to certify the round trip).
pub fn descend_module(c: &StrictComodule) -> Result<(DgModule, GradedMap), CoreError> {
    let obj = &c.obj;
    let gd = obj.gd.as_ref();
    let m = obj.module.space();
    let field = m.field;
    let defect = c.rho.sub(&trivial_coaction(&obj.gd, &obj.module)?.rho);
    let lact = obj
        .module
        .lact
        .clone()
        .ok_or_else(|| CoreError::shape("module carries no left action"))?;
    // kernel, degree by degree, as vectors of M
    let mut kernel_basis: Vec<SparseVec> = Vec::new();
    let mut kernel_degs: Vec<i64> = Vec::new();
    let mut degs = m.degrees.clone();
    degs.sort_unstable();
    degs.dedup();
    for deg in degs {
        let idxs: Vec<usize> = (0..m.dim()).filter(|&i| m.degrees[i] == deg).collect();
        let cols: Vec<SparseVec> = idxs
            .iter()
            .map(|&i| defect.apply(&SparseVec::unit(i, field.one())))
            .collect();
        let mat = ColMatrix { field, nrows: obj.min_string(1).space().dim(), cols };
        for kv in linalg::kernel(&mat) {
            let mut v = SparseVec::new();
            for (k, cc) in kv.iter() {
                v.add(idxs[k], cc.clone());
            }
            kernel_basis.push(v);
            kernel_degs.push(deg);
        }
    }
    let kspace = GradedSpace::from_degrees(format!("desc({})", m.name), field, &kernel_degs);
    let kmat = ColMatrix { field, nrows: m.dim(), cols: kernel_basis.clone() };
    let to_k = |v: &SparseVec, what: &str| -> Result<SparseVec, CoreError> {
        linalg::solve(&kmat, v).ok_or_else(|| {
            CoreError::validation(format!("{what} does not preserve the equalizer"))
        })
    };
    let mut dk = GradedMap::zero(kspace.clone(), kspace.clone(), 1);
    for (j, kv) in kernel_basis.iter().enumerate() {
        let coords = to_k(&obj.module.complex.d.apply(kv), "the differential")?;
        for (r, cc) in coords.iter() {
            dk.add_entry(r, j, cc.clone())?;
        }
    }
    // the base action through B -> A
    let b = gd.sys.base.clone();
    let phi = base_to_level0(gd)?;
    let bk = GradedSpace::tensor(
        format!("{}⊗{}", b.name, kspace.name),
        vec![b.space().clone(), kspace.clone()],
    );
    let mut act = GradedMap::zero(bk.clone(), kspace.clone(), 0);
    for bi in 0..b.space().dim() {
        let a_img = phi.apply(&SparseVec::unit(bi, field.one()));
        for (j, kv) in kernel_basis.iter().enumerate() {
            let mut img = SparseVec::new();
            for (ai, ca) in a_img.iter() {
                img.axpy(ca, &act_on(&lact, ai, kv));
            }
            let coords = to_k(&img, "the base action")?;
            for (r, cc) in coords.iter() {
                act.add_entry(r, bk.fuse_index(&[bi, j]), cc.clone())?;
            }
        }
    }
    let kmod = DgModule::new(b.clone(), Complex::new(kspace, dk)?, act)?;
    // evaluation A ⊗_B K -> M on the balanced presentation
    let phi_alg = AlgebraMap::new(b, gd.a.clone(), phi)?;
    let (_, chain) = extend_scalars(&phi_alg, &kmod)?;
    let mut ev_flat = GradedMap::zero(chain.ambient.clone(), m.clone(), 0);
    for fi in 0..chain.ambient.dim() {
        let parts = chain.ambient.split_index(fi);
        let img = act_on(&lact, parts[0], &kernel_basis[parts[1]]);
        for (r, cc) in img.iter() {
            ev_flat.add_entry(r, fi, cc.clone())?;
        }
    }
    let ev = ev_flat.compose(&chain.sect);
    Ok((kmod, ev))
}

/// `B -> A` as a map of graded spaces, `b ↦ b · 1_A`.
fn base_to_level0(gd: &GroupoidData) -> Result<GradedMap, CoreError> {
    let b = &gd.sys.base;
    let a = &gd.a;
    let lact = gd
        .sys
        .a_over_b
        .lact
        .clone()
        .ok_or_else(|| CoreError::shape("the level-0 algebra carries no base action"))?;
    let mut out = GradedMap::zero(b.space().clone(), a.space().clone(), 0);
    for bi in 0..b.space().dim() {
        let img = act_on(&lact, bi, &a.unit);
        for (r, c) in img.iter() {
            out.add_entry(r, bi, c.clone())?;
        }
    }
    Ok(out)
}

/// A degree-0 module over the level-0 algebra with one generator per
/// entry of `supports`, the `j`-th supported on the idempotent basis
/// function `supports[j]` (requires a coefficient-free Čech level 0).
pub fn diagonal_module(
    gd: &Arc<GroupoidData>,
    supports: &[usize],
    name: impl Into<String>,
) -> Result<Bimodule, CoreError> {
    let a = &gd.a;
    let field = a.space().field;
    let space = GradedSpace::from_degrees(name, field, &vec![0; supports.len()]);
    let am = GradedSpace::tensor(
        format!("{}⊗{}", a.name, space.name),
        vec![a.space().clone(), space.clone()],
    );
    let mut lact = GradedMap::zero(am.clone(), space.clone(), 0);
    for (j, &s) in supports.iter().enumerate() {
        if s >= a.space().dim() {
            return Err(CoreError::shape("support index outside the level-0 basis"));
        }
        lact.add_entry(j, am.fuse_index(&[s, j]), field.one())?;
    }
    let d = GradedMap::zero(space.clone(), space.clone(), 1);
    Bimodule::from_left_commutative(a, Complex::new(space, d)?, lact)
}

/// All degree-0, level-1-linear gluing candidates on `module` whose
/// cocycle defect vanishes, by exhausting the coordinates of the module
/// hom complex over a finite prime field.
pub fn enumerate_cocycle_data(
    gd: &Arc<GroupoidData>,
    module: &Bimodule,
) -> Result<Vec<DescentDatum>, CoreError> {
    let field = module.space().field;
    let p = match field {
        Field::Prime(p) => p,
        Field::Rationals => {
            return Err(CoreError::shape("an exhaustive sweep needs a finite field"))
        }
    };
    let obj = HolimObject::new(gd.clone(), module.clone(), BTreeMap::new())?;
    let x1 = obj.max_string(1);
    let y1 = obj.min_string(1);
    let x2 = obj.max_string(2);
    let y2 = obj.min_string(2);
    let hom = module_hom_complex(&string_module(gd, x1)?, &string_module(gd, y1)?)?;
    let idxs: Vec<usize> = (0..hom.complex.space.dim())
        .filter(|&i| hom.complex.space.degrees[i] == 0)
        .collect();
    let h = idxs.len();
    let total = (p as u128).checked_pow(h as u32).unwrap_or(u128::MAX);
    if total > 1 << 20 {
        return Err(CoreError::shape(format!(
            "sweep of size {p}^{h} is too large"
        )));
    }
    let basis: Vec<GradedMap> = idxs
        .iter()
        .map(|&i| {
            hom.to_map(&SparseVec::unit(i, field.one()), 0).map(|f| {
                f.retarget(x1.space().clone(), y1.space().clone(), 0)
            })
        })
        .collect::<Result<_, _>>()?;
    // precompute the three coface transports of each basis map
    let mid = ModString::new(
        format!("C⊗{}⊗C", module.space().name),
        vec![gd.c.clone(), module.clone(), gd.c.clone()],
        vec![true, false, true],
    )?;
    let mut lefts = Vec::with_capacity(h);
    let mut rights = Vec::with_capacity(h);
    let mut interiors = Vec::with_capacity(h);
    for e in &basis {
        let (_, _, r) = extend_right(gd, x1, y1, e, 1)?;
        rights.push(r.retarget(x2.space().clone(), mid.space().clone(), 0));
        let (_, _, l) = extend_left(gd, x1, y1, e, 1)?;
        lefts.push(l.retarget(mid.space().clone(), y2.space().clone(), 0));
        let (_, _, i) = coface_of_map(&gd.sys, gd, x1, y1, e, 1)?;
        interiors.push(i.retarget(x2.space().clone(), y2.space().clone(), 0));
    }
    let compositions: Vec<Vec<GradedMap>> = lefts
        .iter()
        .map(|l| rights.iter().map(|r| l.compose(r)).collect())
        .collect();
    let mut out = Vec::new();
    let mut counter = vec![0u64; h];
    loop {
        let coeffs: Vec<_> = counter.iter().map(|&t| field.from_i64(t as i64)).collect();
        let mut defect = GradedMap::zero(x2.space().clone(), y2.space().clone(), 0);
        for i in 0..h {
            if coeffs[i].is_zero() {
                continue;
            }
            defect = defect.sub(&interiors[i].scale(&coeffs[i]));
            for j in 0..h {
                if coeffs[j].is_zero() {
                    continue;
                }
                defect = defect.add(
                    &compositions[i][j].scale(&(coeffs[i].clone() * coeffs[j].clone())),
                );
            }
        }
        if defect.is_zero() {
            let mut theta = GradedMap::zero(x1.space().clone(), y1.space().clone(), 0);
            for (i, c) in coeffs.iter().enumerate() {
                if !c.is_zero() {
                    theta = theta.add(&basis[i].scale(c));
                }
            }
            out.push(DescentDatum::new(gd.clone(), module.clone(), theta)?);
        }
        // advance the mixed-radix counter
        let mut k = 0;
        while k < h {
            counter[k] += 1;
            if counter[k] < p {
                break;
            }
            counter[k] = 0;
            k += 1;
        }
        if k == h {
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cosimplicial::{cech_system, FiniteCover};
    use crate::holim::{
        groupoid_coalgebra, structure_object, to_ainfty_comodule, validate_holim_object,
    };
    use crate::scalar::Field;

    fn rational_gd() -> Arc<GroupoidData> {
        let cover = FiniteCover::new(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        let sys = cech_system(&cover, Field::Rationals, 2, None).unwrap();
        Arc::new(GroupoidData::from_system(sys, 2).unwrap())
    }

    fn f2_gd() -> Arc<GroupoidData> {
        let cover = FiniteCover::new(2, vec![vec![0, 1], vec![1]]).unwrap();
        let sys = cech_system(&cover, Field::Prime(2), 2, None).unwrap();
        Arc::new(GroupoidData::from_system(sys, 2).unwrap())
    }

    fn structure_datum(gd: &Arc<GroupoidData>) -> DescentDatum {
        let obj = structure_object(gd).unwrap();
        DescentDatum::new(gd.clone(), obj.module.clone(), obj.theta(1)).unwrap()
    }

    #[test]
    fn structure_datum_is_valid_and_descends_to_the_base() {
        let gd = rational_gd();
        let d = structure_datum(&gd);
        assert_eq!(validate_descent(&d).unwrap(), Vec::<String>::new());
        assert_eq!(iso_iff_unit(&d).unwrap(), (true, true));
        let c = descent_to_comodule(&d).unwrap();
        assert_eq!(c.validate().unwrap(), Vec::<String>::new());
        let (kmod, ev) = descend_module(&c).unwrap();
        assert_eq!(kmod.space().dim(), 3);
        assert_eq!(kmod.base.space().dim(), 3);
        assert!(ev.inverse().is_ok());
    }

    #[test]
    fn skyscraper_comodule_descends_to_a_line_and_round_trips() {
        let gd = rational_gd();
        // level-0 basis: e0|0, e0|1, e1|1, e1|2 — the point 2 sits in
        // the second open only
        let sky = diagonal_module(&gd, &[3], "sky").unwrap();
        let c = trivial_coaction(&gd, &sky).unwrap();
        assert_eq!(c.validate().unwrap(), Vec::<String>::new());
        let (kmod, ev) = descend_module(&c).unwrap();
        assert_eq!(kmod.space().dim(), 1);
        assert!(ev.inverse().is_ok());
        // comodule -> datum -> comodule is the identity
        let d = comodule_to_datum(&c).unwrap();
        assert_eq!(validate_descent(&d).unwrap(), Vec::<String>::new());
        let c2 = descent_to_comodule(&d).unwrap();
        assert!(c2.rho.equals(&c.rho));
        // datum -> comodule -> datum is the identity on the structure datum
        let d0 = structure_datum(&gd);
        let back = comodule_to_datum(&descent_to_comodule(&d0).unwrap()).unwrap();
        assert!(back.theta().equals(&d0.theta()));
    }

    #[test]
    fn zero_module_descends_to_zero() {
        let gd = rational_gd();
        let zero = diagonal_module(&gd, &[], "0").unwrap();
        let c = trivial_coaction(&gd, &zero).unwrap();
        assert_eq!(c.validate().unwrap(), Vec::<String>::new());
        let (kmod, _) = descend_module(&c).unwrap();
        assert_eq!(kmod.space().dim(), 0);
    }

    #[test]
    fn broken_data_are_reported() {
        let gd = rational_gd();
        let d0 = structure_datum(&gd);
        // doubling θ breaks the cocycle (quadratic left side) and the unit
        let two = d0.theta().scale(&Field::Rationals.from_i64(2));
        let doubled = DescentDatum::new(gd.clone(), d0.module().clone(), two).unwrap();
        let failures = validate_descent(&doubled).unwrap();
        assert!(failures.iter().any(|l| l.contains("cocycle")));
        assert!(failures.iter().any(|l| l.contains("unit")));
        assert!(iso_iff_unit(&doubled).is_err());
        assert!(descent_to_comodule(&doubled).is_err());
        // θ = 0 satisfies the cocycle but not the unit, and is not invertible
        let zero = GradedMap::zero(d0.theta().src.clone(), d0.theta().dst.clone(), 0);
        let z = DescentDatum::new(gd.clone(), d0.module().clone(), zero).unwrap();
        let failures = validate_descent(&z).unwrap();
        assert!(!failures.iter().any(|l| l.contains("cocycle")));
        assert!(failures.iter().any(|l| l.contains("unit")));
        assert_eq!(iso_iff_unit(&z).unwrap(), (false, false));
    }

    #[test]
    fn f2_sweep_agrees_and_valid_data_give_comodules() {
        let gd = f2_gd();
        // level-0 basis: e0|0, e0|1, e1|1. The first two modules are
        // pulled back from the base (a unital datum exists); the third is
        // a skyscraper on one chart of the twice-covered point, which
        // cannot glue, so every cocycle datum on it fails the unit
        for (supports, descends) in
            [(vec![0], true), (vec![1, 2], true), (vec![1], false)]
        {
            let module = diagonal_module(&gd, &supports, "sweep").unwrap();
            let data = enumerate_cocycle_data(&gd, &module).unwrap();
            assert!(!data.is_empty());
            let mut unital = 0usize;
            for d in &data {
                // iso_iff_unit panics on any disagreement
                let (is_iso, unit_holds) = iso_iff_unit(d).unwrap();
                assert_eq!(is_iso, unit_holds);
                if unit_holds {
                    unital += 1;
                    assert_eq!(validate_descent(d).unwrap(), Vec::<String>::new());
                    let c = descent_to_comodule(d).unwrap();
                    assert_eq!(c.validate().unwrap(), Vec::<String>::new());
                    let back = comodule_to_datum(&c).unwrap();
                    assert!(back.theta().equals(&d.theta()));
                }
            }
            // θ = 0 always satisfies the cocycle and never the unit
            assert_eq!(unital > 0, descends);
            assert!(unital < data.len());
        }
    }

    #[test]
    fn degree_zero_data_embed_into_the_tower_calculus() {
        let gd = rational_gd();
        let d = structure_datum(&gd);
        let obj = &d.obj;
        assert_eq!(validate_holim_object(obj, 2).unwrap(), Vec::<String>::new());
        let coalg = groupoid_coalgebra(&gd, 3).unwrap();
        let comod = to_ainfty_comodule(obj, &coalg, 3).unwrap();
        // strict translation: ν_1 = -d = 0, ν_2 = ρ, nothing higher
        let c = descent_to_comodule(&d).unwrap();
        let nu2 = comod.ops.get(&2).expect("ν_2 present");
        assert!(nu2
            .retarget(c.rho.src.clone(), c.rho.dst.clone(), 0)
            .equals(&c.rho));
        assert!(comod.ops.get(&1).map(|f| f.is_zero()).unwrap_or(true));
        assert!(comod.ops.get(&3).map(|f| f.is_zero()).unwrap_or(true));
    }
}
