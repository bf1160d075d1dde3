//! The homotopy-limit dg-category of a truncated cosimplicial system of
//! algebras: objects `(M, θ)` where `θ_n : M ⊗ C^{⊗n} -> C^{⊗n} ⊗ M` is a
//! degree-`(1-n)` tower satisfying
//!
//! `d(θ_n) = -(θ∘θ)_n + Σ_{i=1}^{n-1} (-1)^{n-i} δ^i(θ_{n-1})`,
//!
//! with `θ_1` invertible up to homotopy; morphisms are component families
//! `α_n : M ⊗ C^{⊗n} -> C^{⊗n} ⊗ N` of degree `|α| - n` with
//!
//! `(β∘α)_n = Σ_{i=0}^n (-1)^{|α|(n-i)} δ^{min,i}(β_{n-i}) ∘ δ^{max,n-i}(α_i)`,
//! `d(α)_n = d(α_n) + (η∘α)_n - (-1)^{|α|}(α∘θ)_n
//!           + (-1)^{|α|} Σ_{j=1}^{n-1} (-1)^{n-j} δ^j(α_{n-1})`,
//!
//! where `(α∘θ)` is evaluated through the composition formula with the
//! convention `|θ| = 1`, `θ_0 = 0`. The tilde rescaling
//! `α̃_n = (-1)^{|α|(n+1)} α_n` turns a tower into the operations
//! `ν_n = θ̃_{n-1} ∘ (adjunction unit)` of a homotopy-counital
//! A∞-comodule over `C`, and component families into comodule maps.
//!
//! The module also realizes the equalizer picture: each level `n` gives a
//! functor category on `k[n]` with values in modules over the level-`n`
//! algebra, and transports of the tower along ordinal maps reproduce the
//! composition and differential above componentwise.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::ainfty::{AInftyCoalgebra, AInftyComodule, ComoduleMap};
use crate::algebra::Bimodule;
use crate::algebra::DgModule;
use crate::complex::Complex;
use crate::cosimplicial::{
    coface_of_map, extend_left, extend_right, level_action, GroupoidData, ModString, OrdinalMap,
};
use crate::dgcat::{h0_invertible, module_category, ModuleCategory};
use crate::error::CoreError;
use crate::graded::GradedMap;
use crate::linalg::SparseVec;
use crate::scalar::Scalar;
use crate::simplexfun::{increasing_sequences, AfunMorphism, AfunObject};

/// An object `(M, θ)` of the homotopy-limit dg-category: a module over
/// the level-0 algebra together with the tower `θ_n`, `n ≥ 1`.
#[derive(Debug)]
pub struct HolimObject {
    pub gd: Arc<GroupoidData>,
    /// `M`, a (bi)module over the level-0 algebra.
    pub module: Bimodule,
    /// `θ_n : max_string(n) -> min_string(n)`, degree `1 - n`.
    pub thetas: BTreeMap<usize, GradedMap>,
    /// `[M, C^{⊗n}]` for `n = 0..=truncation`.
    max_strings: Vec<ModString>,
    /// `[C^{⊗n}, M]` for `n = 0..=truncation`.
    min_strings: Vec<ModString>,
}

impl HolimObject {
    pub fn new(
        gd: Arc<GroupoidData>,
        module: Bimodule,
        thetas: BTreeMap<usize, GradedMap>,
    ) -> Result<Arc<HolimObject>, CoreError> {
        let trunc = gd.sys.truncation;
        let max_strings = side_strings(&gd, &module, trunc, false)?;
        let min_strings = side_strings(&gd, &module, trunc, true)?;
        let mut canon = BTreeMap::new();
        for (&n, th) in &thetas {
            if n == 0 || n > trunc {
                return Err(CoreError::shape(format!(
                    "θ_{n}: level outside the truncated system"
                )));
            }
            if th.degree != 1 - n as i64 {
                return Err(CoreError::shape(format!(
                    "θ_{n} has degree {}, expected {}",
                    th.degree,
                    1 - n as i64
                )));
            }
            if !th.src.same_shape(max_strings[n].space())
                || !th.dst.same_shape(min_strings[n].space())
            {
                return Err(CoreError::shape(format!("θ_{n} has the wrong source or target")));
            }
            canon.insert(
                n,
                th.retarget(
                    max_strings[n].space().clone(),
                    min_strings[n].space().clone(),
                    th.degree,
                ),
            );
        }
        Ok(Arc::new(HolimObject { gd, module, thetas: canon, max_strings, min_strings }))
    }

    pub fn truncation(&self) -> usize {
        self.gd.sys.truncation
    }

    /// The string `M ⊗ C^{⊗n}`.
    pub fn max_string(&self, n: usize) -> &ModString {
        &self.max_strings[n]
    }

    /// The string `C^{⊗n} ⊗ M`.
    pub fn min_string(&self, n: usize) -> &ModString {
        &self.min_strings[n]
    }

    /// `θ_n` (zero when absent), degree `1 - n`.
    pub fn theta(&self, n: usize) -> GradedMap {
        match self.thetas.get(&n) {
            Some(t) => t.clone(),
            None => GradedMap::zero(
                self.max_strings[n].space().clone(),
                self.min_strings[n].space().clone(),
                1 - n as i64,
            ),
        }
    }

    /// The endpoints agree as towers (same system, module shape, and θ).
    pub fn same_object(&self, other: &HolimObject) -> bool {
        self.module.space().same_shape(other.module.space())
            && self.truncation() == other.truncation()
            && (1..=self.truncation()).all(|n| self.theta(n).equals(&other.theta(n)))
    }
}

fn side_strings(
    gd: &GroupoidData,
    module: &Bimodule,
    trunc: usize,
    min_side: bool,
) -> Result<Vec<ModString>, CoreError> {
    let mut out = Vec::with_capacity(trunc + 1);
    let mname = &module.space().name;
    for n in 0..=trunc {
        let mut factors;
        let mut edges;
        let name;
        if min_side {
            factors = vec![gd.c.clone(); n];
            edges = vec![true; n];
            factors.push(module.clone());
            edges.push(false);
            name = format!("C^{n}⊗{mname}");
        } else {
            factors = vec![module.clone()];
            edges = vec![false];
            factors.extend(vec![gd.c.clone(); n]);
            edges.extend(vec![true; n]);
            name = format!("{mname}⊗C^{n}");
        }
        out.push(ModString::new(name, factors, edges)?);
    }
    Ok(out)
}

/// A morphism `α : (M, θ) -> (N, η)` of the homotopy-limit category:
/// components `α_n : M ⊗ C^{⊗n} -> C^{⊗n} ⊗ N` of degree `|α| - n`.
#[derive(Debug, Clone)]
pub struct HolimMorphism {
    pub source: Arc<HolimObject>,
    pub target: Arc<HolimObject>,
    pub degree: i64,
    pub comps: BTreeMap<usize, GradedMap>,
}

impl HolimMorphism {
    pub fn new(
        source: Arc<HolimObject>,
        target: Arc<HolimObject>,
        degree: i64,
        comps: BTreeMap<usize, GradedMap>,
    ) -> Result<HolimMorphism, CoreError> {
        let trunc = source.truncation();
        if target.truncation() != trunc {
            return Err(CoreError::shape("endpoint truncations differ"));
        }
        let mut canon = BTreeMap::new();
        for (&n, a) in &comps {
            if n > trunc {
                return Err(CoreError::shape(format!(
                    "α_{n}: level outside the truncated system"
                )));
            }
            if a.degree != degree - n as i64 {
                return Err(CoreError::shape(format!(
                    "α_{n} has degree {}, expected {}",
                    a.degree,
                    degree - n as i64
                )));
            }
            if !a.src.same_shape(source.max_string(n).space())
                || !a.dst.same_shape(target.min_string(n).space())
            {
                return Err(CoreError::shape(format!("α_{n} has the wrong source or target")));
            }
            canon.insert(
                n,
                a.retarget(
                    source.max_string(n).space().clone(),
                    target.min_string(n).space().clone(),
                    a.degree,
                ),
            );
        }
        Ok(HolimMorphism { source, target, degree, comps: canon })
    }

    /// The identity morphism `(id_M, 0, 0, …)`.
    pub fn identity(obj: &Arc<HolimObject>) -> HolimMorphism {
        let id0 = GradedMap::identity(obj.max_string(0).space().clone()).retarget(
            obj.max_string(0).space().clone(),
            obj.min_string(0).space().clone(),
            0,
        );
        HolimMorphism {
            source: obj.clone(),
            target: obj.clone(),
            degree: 0,
            comps: BTreeMap::from([(0, id0)]),
        }
    }

    /// `α_n` (zero when absent), degree `|α| - n`.
    pub fn comp(&self, n: usize) -> GradedMap {
        match self.comps.get(&n) {
            Some(a) => a.clone(),
            None => GradedMap::zero(
                self.source.max_string(n).space().clone(),
                self.target.min_string(n).space().clone(),
                self.degree - n as i64,
            ),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.comps.values().all(|a| a.is_zero())
    }

    pub fn equals(&self, other: &HolimMorphism) -> bool {
        self.degree == other.degree
            && (0..=self.source.truncation())
                .all(|n| self.comp(n).equals(&other.comp(n)))
    }

    pub fn add(&self, other: &HolimMorphism) -> HolimMorphism {
        assert_eq!(self.degree, other.degree);
        let mut comps = BTreeMap::new();
        for n in 0..=self.source.truncation() {
            let s = self.comp(n).add(&other.comp(n));
            if !s.is_zero() {
                comps.insert(n, s);
            }
        }
        HolimMorphism {
            source: self.source.clone(),
            target: self.target.clone(),
            degree: self.degree,
            comps,
        }
    }

    pub fn sub(&self, other: &HolimMorphism) -> HolimMorphism {
        self.add(&other.scale(&Scalar::sign_pow(self.source.module.space().field, 1)))
    }

    pub fn scale(&self, c: &Scalar) -> HolimMorphism {
        let comps = self.comps.iter().map(|(&n, a)| (n, a.scale(c))).collect();
        HolimMorphism {
            source: self.source.clone(),
            target: self.target.clone(),
            degree: self.degree,
            comps,
        }
    }
}

/// One total-complex composition component:
/// `Σ_{i=0}^n (-1)^{a_deg·(n-i)} δ^{min,i}(b_{n-i}) ∘ δ^{max,n-i}(a_i)`,
/// where `a_i : src.max(i) -> mid.min(i)` and `b_k : mid.max(k) -> mid/dst.min(k)`.
fn tot_compose(
    gd: &GroupoidData,
    src: &HolimObject,
    mid: &HolimObject,
    dst: &HolimObject,
    b: &BTreeMap<usize, GradedMap>,
    b_deg: i64,
    a: &BTreeMap<usize, GradedMap>,
    a_deg: i64,
    n: usize,
) -> Result<GradedMap, CoreError> {
    let field = src.module.space().field;
    let src_space = src.max_string(n).space().clone();
    let dst_space = dst.min_string(n).space().clone();
    let mut acc = GradedMap::zero(src_space.clone(), dst_space.clone(), a_deg + b_deg - n as i64);
    for i in 0..=n {
        let (Some(ai), Some(bk)) = (a.get(&i), b.get(&(n - i))) else { continue };
        if ai.is_zero() || bk.is_zero() {
            continue;
        }
        let (_, ysw, a_ext) = extend_right(gd, src.max_string(i), mid.min_string(i), ai, n - i)?;
        let (xsw2, _, b_ext) =
            extend_left(gd, mid.max_string(n - i), dst.min_string(n - i), bk, i)?;
        if !ysw.space().same_shape(xsw2.space()) {
            return Err(CoreError::shape("composition: extended middle strings differ"));
        }
        let a_ext = a_ext.retarget(src_space.clone(), ysw.space().clone(), ai.degree);
        let b_ext = b_ext.retarget(ysw.space().clone(), dst_space.clone(), bk.degree);
        let sign = Scalar::sign_pow(field, a_deg * (n - i) as i64);
        acc = acc.add(&b_ext.compose(&a_ext).scale(&sign));
    }
    Ok(acc)
}

/// The component-wise hom differential `d∘f - (-1)^{|f|} f∘d` between two
/// module strings.
fn string_hom_d(xs: &ModString, ys: &ModString, f: &GradedMap) -> GradedMap {
    let field = f.src.field;
    let left = ys.chain.d.compose(f);
    let right = f.compose(&xs.chain.d).scale(&Scalar::sign_pow(field, f.degree + 1));
    left.add(&right)
}

/// Transports a level-`(n-1)` component along the interior coface `δ^j`
/// and retargets onto the level-`n` strings of the endpoints.
fn coface_term(
    gd: &GroupoidData,
    src: &HolimObject,
    dst: &HolimObject,
    f: &GradedMap,
    n: usize,
    j: usize,
) -> Result<GradedMap, CoreError> {
    let (_, _, t) = coface_of_map(&gd.sys, gd, src.max_string(n - 1), dst.min_string(n - 1), f, j)?;
    Ok(t.retarget(
        src.max_string(n).space().clone(),
        dst.min_string(n).space().clone(),
        f.degree,
    ))
}

/// Verifies the defining tower equations
/// `d(θ_n) + (θ∘θ)_n - Σ_{i=1}^{n-1} (-1)^{n-i} δ^i(θ_{n-1}) = 0` for
/// `1 ≤ n ≤ n_check` together with homotopy invertibility of `θ_1` in the
/// level-1 module category. Returns the list of violations (empty = valid).
pub fn validate_holim_object(
    obj: &Arc<HolimObject>,
    n_check: usize,
) -> Result<Vec<String>, CoreError> {
    if n_check > obj.truncation() {
        return Err(CoreError::shape("equation level exceeds the system truncation"));
    }
    let gd = &obj.gd;
    let field = obj.module.space().field;
    let mut bad = Vec::new();
    for n in 1..=n_check {
        let theta_n = obj.theta(n);
        let mut lhs = string_hom_d(obj.max_string(n), obj.min_string(n), &theta_n);
        lhs = lhs.add(&tot_compose(gd, obj, obj, obj, &obj.thetas, 1, &obj.thetas, 1, n)?);
        if n >= 2 {
            if let Some(prev) = obj.thetas.get(&(n - 1)) {
                for i in 1..=(n - 1) {
                    let sign = Scalar::sign_pow(field, (n - i) as i64 + 1);
                    lhs = lhs.add(&coface_term(gd, obj, obj, prev, n, i)?.scale(&sign));
                }
            }
        }
        if !lhs.is_zero() {
            bad.push(format!("tower equation fails at level {n}"));
        }
    }
    // θ_1: closed of degree 0 (the n = 1 equation above) and invertible
    // up to homotopy over the level-1 algebra.
    let theta1 = obj.theta(1);
    if theta1.is_zero() {
        bad.push("θ_1 is zero, hence not invertible".into());
    } else {
        let mcat = level_module_category(
            gd,
            1,
            &[obj.max_string(1).clone(), obj.min_string(1).clone()],
        )?;
        let phi = mcat.encode(0, 1, &theta1)?;
        if h0_invertible(&mcat.cat, 0, 1, &phi)?.is_none() {
            bad.push("θ_1 is not invertible up to homotopy".into());
        }
    }
    Ok(bad)
}

/// Wraps module strings over a fixed level as a module dg-category.
fn level_module_category(
    gd: &GroupoidData,
    n: usize,
    strings: &[ModString],
) -> Result<ModuleCategory, CoreError> {
    let mut modules = Vec::with_capacity(strings.len());
    for s in strings {
        let act = level_action(&gd.sys, s)?;
        modules.push(DgModule::new(
            gd.sys.levels[n].clone(),
            Complex::new(s.space().clone(), s.chain.d.clone())?,
            act,
        )?);
    }
    module_category(format!("modules over level {n}"), modules)
}

/// `(β∘α)_n = Σ_{i=0}^n (-1)^{|α|(n-i)} δ^{min,i}(β_{n-i}) ∘ δ^{max,n-i}(α_i)`.
pub fn holim_compose(
    beta: &HolimMorphism,
    alpha: &HolimMorphism,
) -> Result<HolimMorphism, CoreError> {
    if !alpha.target.same_object(&beta.source) {
        return Err(CoreError::shape("composition: endpoints do not match"));
    }
    let gd = &alpha.source.gd;
    let mut comps = BTreeMap::new();
    for n in 0..=alpha.source.truncation() {
        let c = tot_compose(
            gd,
            &alpha.source,
            &alpha.target,
            &beta.target,
            &beta.comps,
            beta.degree,
            &alpha.comps,
            alpha.degree,
            n,
        )?;
        if !c.is_zero() {
            comps.insert(n, c);
        }
    }
    HolimMorphism::new(
        alpha.source.clone(),
        beta.target.clone(),
        alpha.degree + beta.degree,
        comps,
    )
}

/// `d(α)_n = d(α_n) + (η∘α)_n - (-1)^{|α|}(α∘θ)_n
///           + (-1)^{|α|} Σ_{j=1}^{n-1} (-1)^{n-j} δ^j(α_{n-1})`,
/// with `(α∘θ)` evaluated at `|θ| = 1`, `θ_0 = 0`.
pub fn holim_differential(alpha: &HolimMorphism) -> Result<HolimMorphism, CoreError> {
    let src = &alpha.source;
    let dst = &alpha.target;
    let gd = &src.gd;
    let field = src.module.space().field;
    let sign_a = Scalar::sign_pow(field, alpha.degree);
    let mut comps = BTreeMap::new();
    for n in 0..=src.truncation() {
        let mut t = string_hom_d(src.max_string(n), dst.min_string(n), &alpha.comp(n));
        t = t.add(&tot_compose(
            gd, src, dst, dst, &dst.thetas, 1, &alpha.comps, alpha.degree, n,
        )?);
        t = t.add(
            &tot_compose(gd, src, src, dst, &alpha.comps, alpha.degree, &src.thetas, 1, n)?
                .scale(&sign_a)
                .negate(),
        );
        if n >= 1 {
            if let Some(prev) = alpha.comps.get(&(n - 1)) {
                for j in 1..=(n - 1) {
                    let sign =
                        Scalar::sign_pow(field, alpha.degree + (n - j) as i64);
                    t = t.add(&coface_term(gd, src, dst, prev, n, j)?.scale(&sign));
                }
            }
        }
        if !t.is_zero() {
            comps.insert(n, t);
        }
    }
    HolimMorphism::new(src.clone(), dst.clone(), alpha.degree + 1, comps)
}

/// `α̃_n = (-1)^{|α|(n+1)} α_n`; an involution for fixed degree.
pub fn tilde_rescale(alpha: &HolimMorphism) -> HolimMorphism {
    let field = alpha.source.module.space().field;
    let comps = alpha
        .comps
        .iter()
        .map(|(&n, a)| (n, a.scale(&Scalar::sign_pow(field, alpha.degree * (n as i64 + 1)))))
        .collect();
    HolimMorphism {
        source: alpha.source.clone(),
        target: alpha.target.clone(),
        degree: alpha.degree,
        comps,
    }
}

/// The tilde rescaling of the tower itself (`θ̃_n = (-1)^{n+1} θ_n`, the
/// degree-1 convention).
fn theta_tilde(obj: &HolimObject, n: usize) -> GradedMap {
    let field = obj.module.space().field;
    obj.theta(n).scale(&Scalar::sign_pow(field, n as i64 + 1))
}

/// The adjunction unit `M -> M ⊗ C^{⊗t}`, `m ↦ m ⊗ 1 ⊗ … ⊗ 1`.
pub(crate) fn adjunction_unit(obj: &HolimObject, t: usize) -> Result<GradedMap, CoreError> {
    let gd = &obj.gd;
    let m = obj.module.space();
    let string = obj.max_string(t);
    let field = m.field;
    let unit = &gd.c_alg.unit;
    let mut out = GradedMap::zero(m.clone(), string.space().clone(), 0);
    for q in 0..m.dim() {
        let mut stack: Vec<(Vec<usize>, Scalar)> = vec![(vec![q], field.one())];
        for _ in 0..t {
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
        let mut flat = SparseVec::new();
        for (parts, c) in stack {
            flat.add(string.chain.ambient.fuse_index(&parts), c);
        }
        let img = string.chain.proj.apply(&flat);
        for (r, c) in img.iter() {
            out.add_entry(r, q, c.clone())?;
        }
    }
    Ok(out)
}

/// The groupoid coalgebra `C` of the system, with `Δ_1 = -d_C`,
/// `Δ_2 = Δ` and counit `ε`.
pub fn groupoid_coalgebra(
    gd: &GroupoidData,
    max_power: usize,
) -> Result<Arc<AInftyCoalgebra>, CoreError> {
    let mut ops = BTreeMap::new();
    let d1 = gd.c.complex.d.negate();
    if !d1.is_zero() {
        ops.insert(1, d1);
    }
    ops.insert(2, gd.delta.clone());
    Ok(Arc::new(AInftyCoalgebra::new(
        gd.a.clone(),
        gd.c.clone(),
        ops,
        Some(gd.eps.clone()),
        max_power,
    )?))
}

/// Translates an object `(M, θ)` into the A∞-comodule with operations
/// `ν_1 = -d_M` and `ν_n = θ̃_{n-1} ∘ (adjunction unit)` for `n ≥ 2`.
pub fn to_ainfty_comodule(
    obj: &Arc<HolimObject>,
    coalg: &Arc<AInftyCoalgebra>,
    max_power: usize,
) -> Result<AInftyComodule, CoreError> {
    let mut ops = BTreeMap::new();
    let nu1 = obj.module.complex.d.negate();
    if !nu1.is_zero() {
        ops.insert(1, nu1);
    }
    for n in 2..=obj.truncation() + 1 {
        let t = n - 1;
        if obj.thetas.get(&t).is_none() {
            continue;
        }
        let nu = theta_tilde(obj, t).compose(&adjunction_unit(obj, t)?);
        if !nu.is_zero() {
            ops.insert(n, nu);
        }
    }
    let comod = AInftyComodule::new(coalg.clone(), obj.module.clone(), BTreeMap::new(), max_power)?;
    // retarget onto the comodule's own balanced chains
    let mut canon = BTreeMap::new();
    for (n, nu) in ops {
        canon.insert(
            n,
            nu.retarget(obj.module.space().clone(), comod.coext[n - 1].space.clone(), nu.degree),
        );
    }
    AInftyComodule::new(coalg.clone(), obj.module.clone(), canon, max_power)
}

/// Translates a morphism into the comodule map with components
/// `f_n = α̃_{n-1} ∘ (adjunction unit)` of degree `|α| + 1 - n`.
pub fn morphism_to_comodule_map(
    alpha: &HolimMorphism,
    dst_comod: &AInftyComodule,
) -> Result<ComoduleMap, CoreError> {
    let tilde = tilde_rescale(alpha);
    let mut components = BTreeMap::new();
    for n in 1..=alpha.source.truncation() + 1 {
        let t = n - 1;
        if tilde.comps.get(&t).is_none() {
            continue;
        }
        let f = tilde.comp(t).compose(&adjunction_unit(&alpha.source, t)?);
        if !f.is_zero() {
            components.insert(
                n,
                f.retarget(
                    alpha.source.module.space().clone(),
                    dst_comod.coext[n - 1].space.clone(),
                    f.degree,
                ),
            );
        }
    }
    Ok(ComoduleMap { degree: alpha.degree, components })
}

/// Conjugates a tower by an invertible component family `u` (`u_0`
/// invertible, arbitrary higher components): produces the unique tower
/// `θ'` making `u : (M, θ) -> (M, θ')` a closed degree-0 morphism. Used
/// to manufacture valid objects with nontrivial higher components.
pub fn gauge_transform(
    obj: &Arc<HolimObject>,
    u: &BTreeMap<usize, GradedMap>,
) -> Result<Arc<HolimObject>, CoreError> {
    let gd = &obj.gd;
    let field = obj.module.space().field;
    let trunc = obj.truncation();
    let u0 = u.get(&0).ok_or_else(|| CoreError::shape("gauge needs an invertible u_0"))?;
    let mut new_thetas: BTreeMap<usize, GradedMap> = BTreeMap::new();
    for n in 1..=trunc {
        // (u∘θ)_n with |θ| = 1
        let mut rhs = tot_compose(gd, obj, obj, obj, u, 0, &obj.thetas, 1, n)?;
        // - d(u_n)
        rhs = rhs.sub(&string_hom_d(obj.max_string(n), obj.min_string(n), &match u.get(&n) {
            Some(a) => a.clone(),
            None => GradedMap::zero(
                obj.max_string(n).space().clone(),
                obj.min_string(n).space().clone(),
                -(n as i64),
            ),
        }));
        // - Σ_j (-1)^{n-j} δ^j(u_{n-1})
        if n >= 2 {
            if let Some(prev) = u.get(&(n - 1)) {
                for j in 1..=(n - 1) {
                    let sign = Scalar::sign_pow(field, (n - j) as i64 + 1);
                    rhs = rhs.add(&coface_term(gd, obj, obj, prev, n, j)?.scale(&sign));
                }
            }
        }
        // - Σ_{i=1}^{n-1} δ^{min,i}(θ'_{n-i}) ∘ δ^{max,n-i}(u_i)
        for i in 1..=(n - 1) {
            let (Some(ui), Some(tk)) = (u.get(&i), new_thetas.get(&(n - i))) else { continue };
            let (_, ysw, u_ext) =
                extend_right(gd, obj.max_string(i), obj.min_string(i), ui, n - i)?;
            let (_, _, t_ext) =
                extend_left(gd, obj.max_string(n - i), obj.min_string(n - i), tk, i)?;
            let u_ext = u_ext.retarget(
                obj.max_string(n).space().clone(),
                ysw.space().clone(),
                ui.degree,
            );
            let t_ext = t_ext.retarget(
                ysw.space().clone(),
                obj.min_string(n).space().clone(),
                tk.degree,
            );
            rhs = rhs.sub(&t_ext.compose(&u_ext));
        }
        // θ'_n = rhs ∘ (u_0 ⊗ id)^{-1}
        let (_, ysw0, r0) = extend_right(gd, obj.max_string(0), obj.min_string(0), u0, n)?;
        let r0 = r0.retarget(obj.max_string(n).space().clone(), ysw0.space().clone(), 0);
        let r0_inv = r0
            .inverse()?
            .retarget(obj.max_string(n).space().clone(), obj.max_string(n).space().clone(), 0);
        let theta_n = rhs.compose(&r0_inv);
        if !theta_n.is_zero() {
            new_thetas.insert(n, theta_n);
        }
    }
    HolimObject::new(gd.clone(), obj.module.clone(), new_thetas)
}

/// The strict structure tower on `M = A` itself: `θ_1 : A ⊗ C -> C ⊗ A`,
/// `a ⊗ c ↦ (a·c) ⊗ 1`, with `θ_{≥2} = 0`. The canonical descent datum of
/// the structure sheaf.
pub fn structure_object(gd: &Arc<GroupoidData>) -> Result<Arc<HolimObject>, CoreError> {
    let module = gd.a.as_bimodule();
    let obj0 = HolimObject::new(gd.clone(), module.clone(), BTreeMap::new())?;
    let x = obj0.max_string(1);
    let y = obj0.min_string(1);
    let lact = gd
        .c
        .lact
        .clone()
        .ok_or_else(|| CoreError::shape("C carries no left action"))?;
    let act = lact.retarget(x.chain.ambient.clone(), gd.c.space().clone(), 0);
    // C -> C ⊗ A (flat), appending the unit of A
    let mut app = GradedMap::zero(gd.c.space().clone(), y.chain.ambient.clone(), 0);
    for q in 0..gd.c.space().dim() {
        for (uu, cu) in gd.a.unit.iter() {
            app.add_entry(y.chain.ambient.fuse_index(&[q, uu]), q, cu.clone())?;
        }
    }
    let theta1 = y.chain.proj.compose(&app).compose(&act).compose(&x.chain.sect);
    HolimObject::new(gd.clone(), module, BTreeMap::from([(1, theta1)]))
}

/// Transports a component `f : xs -> ys` of level-`k` strings along an
/// injective ordinal map `[k] -> [n]`, coface by coface: outer cofaces
/// extend by `C` on the matching side, interior ones conjugate through
/// the comultiplication splice.
pub fn transport_along(
    gd: &GroupoidData,
    xs: &ModString,
    ys: &ModString,
    f: &GradedMap,
    g: &OrdinalMap,
) -> Result<(ModString, ModString, GradedMap), CoreError> {
    if g.source != xs.level() {
        return Err(CoreError::shape("ordinal map does not start at the string level"));
    }
    let mut cur = (xs.clone(), ys.clone(), f.clone());
    for (level, d) in g.coface_factorization()? {
        cur = if d == 0 {
            extend_left(gd, &cur.0, &cur.1, &cur.2, 1)?
        } else if d == level {
            extend_right(gd, &cur.0, &cur.1, &cur.2, 1)?
        } else {
            coface_of_map(&gd.sys, gd, &cur.0, &cur.1, &cur.2, d)?
        };
    }
    Ok(cur)
}

/// The level-`n` functor-category model of a family of towers: vertex `i`
/// of the simplex carries the mixed string `C^{⊗i} ⊗ M ⊗ C^{⊗(n-i)}`, and
/// transports of the tower components fill in the functor data.
pub struct EqualizerModel {
    pub n: usize,
    pub mcat: ModuleCategory,
    objs: Vec<Arc<HolimObject>>,
    strings: Vec<Vec<ModString>>,
    pub afuns: Vec<AfunObject>,
}

impl EqualizerModel {
    pub fn new(objs: &[Arc<HolimObject>], n: usize) -> Result<EqualizerModel, CoreError> {
        if objs.is_empty() {
            return Err(CoreError::shape("equalizer model needs at least one object"));
        }
        let gd = &objs[0].gd;
        if n > gd.sys.truncation {
            return Err(CoreError::shape("model level exceeds the system truncation"));
        }
        let mut strings: Vec<Vec<ModString>> = Vec::new();
        let mut flat: Vec<ModString> = Vec::new();
        for obj in objs {
            let mut row = Vec::new();
            for i in 0..=n {
                let mut factors = vec![gd.c.clone(); i];
                let mut edges = vec![true; i];
                factors.push(obj.module.clone());
                edges.push(false);
                factors.extend(vec![gd.c.clone(); n - i]);
                edges.extend(vec![true; n - i]);
                row.push(ModString::new(
                    format!("C^{i}⊗{}⊗C^{}", obj.module.space().name, n - i),
                    factors,
                    edges,
                )?);
            }
            flat.extend(row.iter().cloned());
            strings.push(row);
        }
        let mcat = level_module_category(gd, n, &flat)?;
        let mut afuns = Vec::new();
        for (o, obj) in objs.iter().enumerate() {
            let objects: Vec<usize> = (0..=n).map(|i| o * (n + 1) + i).collect();
            let mut comps = BTreeMap::new();
            for seq in increasing_sequences(n, 2) {
                let k = seq.len() - 1;
                let theta = match obj.thetas.get(&k) {
                    Some(t) => t.clone(),
                    None => continue,
                };
                let g = OrdinalMap::new(k, n, seq.clone())?;
                let (tx, ty, t) =
                    transport_along(gd, obj.max_string(k), obj.min_string(k), &theta, &g)?;
                let (mi, mk) = (objects[seq[0]], objects[*seq.last().unwrap()]);
                if !tx.space().same_shape(mcat.modules[mi].space())
                    || !ty.space().same_shape(mcat.modules[mk].space())
                {
                    return Err(CoreError::shape("transported component has the wrong shape"));
                }
                let t = t.retarget(
                    mcat.modules[mi].space().clone(),
                    mcat.modules[mk].space().clone(),
                    t.degree,
                );
                let v = mcat.encode(mi, mk, &t)?;
                if !v.is_zero() {
                    comps.insert(seq, v);
                }
            }
            afuns.push(AfunObject { objects, comps });
        }
        Ok(EqualizerModel { n, mcat, objs: objs.to_vec(), strings, afuns })
    }

    /// Renders a tower morphism as a functor-category morphism between
    /// the `s`-th and `t`-th modelled objects.
    pub fn morphism(
        &self,
        alpha: &HolimMorphism,
        s: usize,
        t: usize,
    ) -> Result<AfunMorphism, CoreError> {
        let gd = &self.objs[s].gd;
        let n = self.n;
        let mut comps = BTreeMap::new();
        for seq in increasing_sequences(n, 1) {
            let k = seq.len() - 1;
            let a = match alpha.comps.get(&k) {
                Some(a) => a.clone(),
                None => continue,
            };
            let g = OrdinalMap::new(k, n, seq.clone())?;
            let (tx, ty, m) = transport_along(
                gd,
                alpha.source.max_string(k),
                alpha.target.min_string(k),
                &a,
                &g,
            )?;
            let (mi, mk) = (
                s * (n + 1) + seq[0],
                t * (n + 1) + *seq.last().unwrap(),
            );
            if !tx.space().same_shape(self.mcat.modules[mi].space())
                || !ty.space().same_shape(self.mcat.modules[mk].space())
            {
                return Err(CoreError::shape("transported component has the wrong shape"));
            }
            let m = m.retarget(
                self.mcat.modules[mi].space().clone(),
                self.mcat.modules[mk].space().clone(),
                m.degree,
            );
            let v = self.mcat.encode(mi, mk, &m)?;
            if !v.is_zero() {
                comps.insert(seq, v);
            }
        }
        Ok(AfunMorphism { degree: alpha.degree, comps })
    }

    pub fn string(&self, obj: usize, vertex: usize) -> &ModString {
        &self.strings[obj][vertex]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ainfty::{
        check_ainfty_coalgebra, check_comodule, check_homotopy_counital, comodule_map_compose,
        comodule_map_d,
    };
    use crate::algebra::exterior_line;
    use crate::cosimplicial::{cech_system, FiniteCover};
    use crate::scalar::Field;
    use crate::simplexfun::{afun_compose, afun_differential, validate_afun_object};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn field() -> Field {
        Field::Rationals
    }

    fn rational_gd(trunc: usize) -> Arc<GroupoidData> {
        let cover = FiniteCover::new(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        let sys = cech_system(&cover, field(), trunc, None).unwrap();
        Arc::new(GroupoidData::from_system(sys, trunc).unwrap())
    }

    fn graded_gd(trunc: usize) -> Arc<GroupoidData> {
        let coeff = exterior_line(field(), -1);
        let cover = FiniteCover::new(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        let sys = cech_system(&cover, field(), trunc, Some(&coeff)).unwrap();
        Arc::new(GroupoidData::from_system(sys, trunc).unwrap())
    }

    /// Two disjoint opens: the smallest cover, used where high balanced
    /// powers are materialized.
    fn small_graded_gd(trunc: usize) -> Arc<GroupoidData> {
        let coeff = exterior_line(field(), -1);
        let cover = FiniteCover::new(2, vec![vec![0], vec![1]]).unwrap();
        let sys = cech_system(&cover, field(), trunc, Some(&coeff)).unwrap();
        Arc::new(GroupoidData::from_system(sys, trunc).unwrap())
    }

    fn string_module(gd: &GroupoidData, n: usize, s: &ModString) -> DgModule {
        DgModule::new(
            gd.sys.levels[n].clone(),
            Complex::new(s.space().clone(), s.chain.d.clone()).unwrap(),
            level_action(&gd.sys, s).unwrap(),
        )
        .unwrap()
    }

    /// A random level-algebra-linear map between two strings of the same
    /// level, sampled from the module hom complex.
    fn random_component(
        gd: &GroupoidData,
        xs: &ModString,
        ys: &ModString,
        degree: i64,
        rng: &mut ChaCha8Rng,
    ) -> GradedMap {
        let n = xs.level();
        let hom = crate::algebra::module_hom_complex(
            &string_module(gd, n, xs),
            &string_module(gd, n, ys),
        )
        .unwrap();
        let mut v = SparseVec::new();
        for (i, &dg) in hom.complex.space.degrees.iter().enumerate() {
            if dg == degree {
                let c: i64 = rng.gen_range(-2..=2);
                if c != 0 {
                    v.add(i, field().from_i64(c));
                }
            }
        }
        hom.to_map(&v, degree).unwrap()
    }

    fn random_morphism(
        src: &Arc<HolimObject>,
        dst: &Arc<HolimObject>,
        degree: i64,
        rng: &mut ChaCha8Rng,
    ) -> HolimMorphism {
        let gd = &src.gd;
        let mut comps = BTreeMap::new();
        for n in 0..=src.truncation() {
            let m = random_component(
                gd,
                src.max_string(n),
                dst.min_string(n),
                degree - n as i64,
                rng,
            );
            if !m.is_zero() {
                comps.insert(n, m);
            }
        }
        HolimMorphism::new(src.clone(), dst.clone(), degree, comps).unwrap()
    }

    /// A gauge-perturbed copy of the structure object, with a verified
    /// nonzero higher tower component.
    fn gauged_pair(gd: &Arc<GroupoidData>, seed: u64) -> (Arc<HolimObject>, Arc<HolimObject>) {
        let obj = structure_object(gd).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let id0 = HolimMorphism::identity(&obj).comp(0);
        let mut u = BTreeMap::from([(0, id0)]);
        let u1 = random_component(gd, obj.max_string(1), obj.min_string(1), -1, &mut rng);
        if !u1.is_zero() {
            u.insert(1, u1);
        }
        let gauged = gauge_transform(&obj, &u).unwrap();
        (obj, gauged)
    }

    #[test]
    fn structure_object_satisfies_tower_equations() {
        let gd = rational_gd(3);
        let obj = structure_object(&gd).unwrap();
        assert!(!obj.theta(1).is_zero());
        assert_eq!(validate_holim_object(&obj, 3).unwrap(), Vec::<String>::new());
    }

    #[test]
    fn gauge_transform_produces_valid_tower_with_higher_component() {
        let gd = graded_gd(2);
        let (_, gauged) = gauged_pair(&gd, 5);
        assert!(!gauged.theta(2).is_zero());
        assert_eq!(validate_holim_object(&gauged, 2).unwrap(), Vec::<String>::new());
        // corrupting θ_1 by a level-linear degree-0 perturbation breaks the level-2 equation
        let xs = gauged.max_string(1);
        let ys = gauged.min_string(1);
        let src = string_module(&gd, 1, &xs);
        let dst = string_module(&gd, 1, &ys);
        let hom = crate::algebra::module_hom_complex(&src, &dst).unwrap();
        let detected = (0..hom.complex.space.dim())
            .filter(|&i| hom.complex.space.degrees[i] == 0)
            .any(|i| {
                let coords = crate::linalg::SparseVec::unit(i, field().one());
                let eps = hom.to_map(&coords, 0).unwrap();
                let mut broken = gauged.thetas.clone();
                broken.insert(1, gauged.theta(1).add(&eps.retarget(xs.space().clone(), ys.space().clone(), 0)));
                let bad = HolimObject::new(gd.clone(), gauged.module.clone(), broken).unwrap();
                validate_holim_object(&bad, 2)
                    .unwrap()
                    .iter()
                    .any(|l| l.contains("level 2"))
            });
        assert!(detected);
    }

    #[test]
    fn zero_theta1_is_rejected() {
        let gd = rational_gd(2);
        let obj =
            HolimObject::new(gd.clone(), gd.a.as_bimodule(), BTreeMap::new()).unwrap();
        assert!(!validate_holim_object(&obj, 2).unwrap().is_empty());
    }

    #[test]
    fn composition_is_unital_and_associative() {
        let gd = graded_gd(2);
        let (o, og) = gauged_pair(&gd, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let alpha = random_morphism(&o, &og, 0, &mut rng);
        let beta = random_morphism(&og, &o, 1, &mut rng);
        let gamma = random_morphism(&o, &og, -1, &mut rng);
        // unit laws
        let ids = HolimMorphism::identity(&o);
        let idt = HolimMorphism::identity(&og);
        assert!(holim_compose(&idt, &alpha).unwrap().equals(&alpha));
        assert!(holim_compose(&alpha, &ids).unwrap().equals(&alpha));
        // associativity
        let left =
            holim_compose(&gamma, &holim_compose(&beta, &alpha).unwrap()).unwrap();
        let right =
            holim_compose(&holim_compose(&gamma, &beta).unwrap(), &alpha).unwrap();
        assert!(left.equals(&right));
    }

    #[test]
    fn differential_squares_to_zero_and_satisfies_leibniz() {
        let gd = graded_gd(2);
        let (o, og) = gauged_pair(&gd, 31);
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for deg in [0i64, 1] {
            let alpha = random_morphism(&o, &og, deg, &mut rng);
            let dd = holim_differential(&holim_differential(&alpha).unwrap()).unwrap();
            assert!(dd.is_zero(), "d² ≠ 0 at degree {deg}");
        }
        // identity morphisms are closed
        assert!(holim_differential(&HolimMorphism::identity(&og)).unwrap().is_zero());
        // Leibniz: d(β∘α) = d(β)∘α + (-1)^{|β|} β∘d(α)
        let alpha = random_morphism(&o, &og, 0, &mut rng);
        let beta = random_morphism(&og, &o, 1, &mut rng);
        let lhs = holim_differential(&holim_compose(&beta, &alpha).unwrap()).unwrap();
        let rhs = holim_compose(&holim_differential(&beta).unwrap(), &alpha)
            .unwrap()
            .add(
                &holim_compose(&beta, &holim_differential(&alpha).unwrap())
                    .unwrap()
                    .scale(&Scalar::sign_pow(field(), beta.degree)),
            );
        assert!(lhs.equals(&rhs));
    }

    #[test]
    fn tilde_rescale_is_an_involution_and_scales_composition() {
        let gd = graded_gd(2);
        let (o, og) = gauged_pair(&gd, 41);
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let alpha = random_morphism(&o, &og, 1, &mut rng);
        let beta = random_morphism(&og, &o, 1, &mut rng);
        assert!(tilde_rescale(&tilde_rescale(&alpha)).equals(&alpha));
        // (β∘α)~_n = Σ_i (-1)^{|β| i} δ^{min,i}(β~_{n-i}) ∘ δ^{max,n-i}(α~_i)
        let lhs = tilde_rescale(&holim_compose(&beta, &alpha).unwrap());
        let at = tilde_rescale(&alpha);
        let bt = tilde_rescale(&beta);
        for n in 0..=o.truncation() {
            let mut acc = GradedMap::zero(
                o.max_string(n).space().clone(),
                o.min_string(n).space().clone(),
                alpha.degree + beta.degree - n as i64,
            );
            for i in 0..=n {
                let (Some(ai), Some(bk)) = (at.comps.get(&i), bt.comps.get(&(n - i))) else {
                    continue;
                };
                let (_, ysw, a_ext) =
                    extend_right(&gd, o.max_string(i), og.min_string(i), ai, n - i).unwrap();
                let (_, _, b_ext) =
                    extend_left(&gd, og.max_string(n - i), o.min_string(n - i), bk, i).unwrap();
                let a_ext = a_ext.retarget(
                    o.max_string(n).space().clone(),
                    ysw.space().clone(),
                    ai.degree,
                );
                let b_ext = b_ext.retarget(
                    ysw.space().clone(),
                    o.min_string(n).space().clone(),
                    bk.degree,
                );
                let sign = Scalar::sign_pow(field(), beta.degree * i as i64);
                acc = acc.add(&b_ext.compose(&a_ext).scale(&sign));
            }
            assert!(lhs.comp(n).equals(&acc), "rescaled composition law fails at {n}");
        }
    }

    #[test]
    fn translation_yields_homotopy_counital_comodule() {
        let gd = small_graded_gd(2);
        let (o, og) = gauged_pair(&gd, 53);
        let coalg = groupoid_coalgebra(&gd, 5).unwrap();
        assert!(check_ainfty_coalgebra(&coalg, 5).unwrap().ok());
        for obj in [&o, &og] {
            let comod = to_ainfty_comodule(obj, &coalg, 5).unwrap();
            assert!(check_comodule(&comod, 5).unwrap().ok());
            assert!(check_homotopy_counital(&comod).unwrap().is_some());
        }
        assert!(!to_ainfty_comodule(&og, &coalg, 5).unwrap().ops.contains_key(&4));
    }

    #[test]
    fn morphism_translation_commutes_with_composition_and_differential() {
        let gd = small_graded_gd(2);
        let (o, og) = gauged_pair(&gd, 61);
        let coalg = groupoid_coalgebra(&gd, 5).unwrap();
        let co = to_ainfty_comodule(&o, &coalg, 5).unwrap();
        let cog = to_ainfty_comodule(&og, &coalg, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        let max_n = o.truncation() + 1;
        for (da, db) in [(0i64, 1i64), (1, 0), (1, 1)] {
            let alpha = random_morphism(&o, &og, da, &mut rng);
            let beta = random_morphism(&og, &o, db, &mut rng);
            let fa = morphism_to_comodule_map(&alpha, &cog).unwrap();
            let fb = morphism_to_comodule_map(&beta, &co).unwrap();
            // composition
            let via_holim = morphism_to_comodule_map(
                &holim_compose(&beta, &alpha).unwrap(),
                &co,
            )
            .unwrap();
            let via_comod =
                comodule_map_compose(&co, &cog, &co, &fb, &fa, max_n).unwrap();
            for n in 1..=max_n {
                assert!(
                    via_holim.component(&co, &co, n).equals(&via_comod.component(&co, &co, n)),
                    "composition translation fails at component {n}"
                );
            }
            // differential
            let via_holim =
                morphism_to_comodule_map(&holim_differential(&alpha).unwrap(), &cog).unwrap();
            let via_comod = comodule_map_d(&co, &cog, &fa, max_n).unwrap();
            for n in 1..=max_n {
                assert!(
                    via_holim.component(&co, &cog, n).equals(&via_comod.component(&co, &cog, n)),
                    "differential translation fails at component {n}"
                );
            }
        }
    }

    #[test]
    fn equalizer_model_validates_and_matches_the_tower_calculus() {
        let gd = small_graded_gd(2);
        let (o, og) = gauged_pair(&gd, 71);
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let alpha = random_morphism(&o, &og, 0, &mut rng);
        let beta = random_morphism(&og, &o, 1, &mut rng);
        for n in 0..=2usize {
            let model = EqualizerModel::new(&[o.clone(), og.clone(), o.clone()], n).unwrap();
            for f in &model.afuns {
                assert_eq!(
                    validate_afun_object(&model.mcat.cat, f, n > 0).unwrap(),
                    Vec::<String>::new()
                );
            }
            let a = model.morphism(&alpha, 0, 1).unwrap();
            let b = model.morphism(&beta, 1, 2).unwrap();
            // differential agreement
            let lhs = model
                .morphism(&holim_differential(&alpha).unwrap(), 0, 1)
                .unwrap();
            let rhs = afun_differential(&model.mcat.cat, &model.afuns[0], &model.afuns[1], &a);
            assert!(lhs.equals(&rhs), "differential mismatch at level {n}");
            // composition agreement
            let lhs = model
                .morphism(&holim_compose(&beta, &alpha).unwrap(), 0, 2)
                .unwrap();
            let rhs = afun_compose(
                &model.mcat.cat,
                &model.afuns[0],
                &model.afuns[1],
                &model.afuns[2],
                &b,
                &a,
            );
            assert!(lhs.equals(&rhs), "composition mismatch at level {n}");
        }
        // the wider three-point system, with interior cofaces that mix
        // overlaps: validation and the differential at the top level
        let gd = graded_gd(2);
        let (o, og) = gauged_pair(&gd, 71);
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let alpha = random_morphism(&o, &og, 1, &mut rng);
        let model = EqualizerModel::new(&[o.clone(), og.clone()], 2).unwrap();
        for f in &model.afuns {
            assert_eq!(
                validate_afun_object(&model.mcat.cat, f, true).unwrap(),
                Vec::<String>::new()
            );
        }
        let a = model.morphism(&alpha, 0, 1).unwrap();
        let lhs = model
            .morphism(&holim_differential(&alpha).unwrap(), 0, 1)
            .unwrap();
        let rhs = afun_differential(&model.mcat.cat, &model.afuns[0], &model.afuns[1], &a);
        assert!(lhs.equals(&rhs), "differential mismatch on the three-point system");
    }
}

