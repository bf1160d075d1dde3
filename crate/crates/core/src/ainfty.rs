//! A∞-algebras over the ground field, A∞-coalgebras and A∞-comodules in
//! bimodules over a commutative base algebra, bar and cobar constructions,
//! and the differential/composition calculus of comodule maps.
//!
//! Sign conventions (cohomological, Koszul rule throughout):
//! * `m_n` has degree `2 - n`; the defect of the structure at arity `m` is
//!   `Σ_{i+j+k=m} (-1)^{ij+k} m_{i+1+k} ∘ (id^i ⊗ m_j ⊗ id^k)`;
//! * `Δ_n` has degree `2 - n`; the coalgebra defect at `m` is
//!   `Σ_{i+j+k=m} (-1)^{i+jk} (id^i ⊗ Δ_j ⊗ id^k) ∘ Δ_{i+1+k}`;
//! * comodule strings put the module on the right: `ν_n : M -> C^{⊗(n-1)} ⊗_A M`,
//!   and in the defect the factor hit at the module slot (`k = 0`) is `ν_j`
//!   instead of `Δ_j`;
//! * for strict dg-structures `ν_1 = -d_M` and `Δ_1 = -d_C`.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::algebra::{BalancedChain, Bimodule, DgAlgebra};
use crate::complex::{hom_complex, shift_conjugate_down, shift_conjugate_up, Complex};
use crate::error::CoreError;
use crate::graded::{block_tensor_map, Block, GradedMap, GradedSpace};
use crate::linalg::{self, SparseVec};
use crate::scalar::{Field, Scalar};

/// An A∞-algebra over the ground field: a graded space with operations
/// `m_n : B^{⊗n} -> B` of degree `2 - n` for the declared arities.
#[derive(Debug, Clone)]
pub struct AInftyAlgebra {
    pub space: Arc<GradedSpace>,
    /// Operations by arity; absent arities are zero.
    pub ops: BTreeMap<usize, GradedMap>,
}

impl AInftyAlgebra {
    pub fn new(space: Arc<GradedSpace>, ops: BTreeMap<usize, GradedMap>) -> Result<AInftyAlgebra, CoreError> {
        for (&n, m) in &ops {
            if n == 0 {
                return Err(CoreError::shape("operations start at arity 1"));
            }
            if m.degree != 2 - n as i64 {
                return Err(CoreError::shape(format!(
                    "m_{n} must have degree {}, found {}",
                    2 - n as i64,
                    m.degree
                )));
            }
            let expect: usize = space.dim().pow(n as u32);
            if m.src.dim() != expect || m.dst.dim() != space.dim() {
                return Err(CoreError::shape(format!("m_{n} has the wrong shape")));
            }
        }
        Ok(AInftyAlgebra { space, ops })
    }

    pub fn max_arity(&self) -> usize {
        self.ops.keys().max().copied().unwrap_or(1)
    }

    fn power(&self, n: usize) -> Arc<GradedSpace> {
        GradedSpace::tensor(
            format!("{}^⊗{}", self.space.name, n),
            vec![self.space.clone(); n],
        )
    }

    /// `m_n` re-sourced on the cached power space (zero if absent).
    fn op(&self, n: usize) -> GradedMap {
        let p = self.power(n);
        match self.ops.get(&n) {
            Some(m) => m.retarget(p, self.space.clone(), 2 - n as i64),
            None => GradedMap::zero(p, self.space.clone(), 2 - n as i64),
        }
    }
}

/// Outcome of an A∞ structure check: the arities whose relation fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationReport {
    pub checked_up_to: usize,
    pub failing: Vec<usize>,
}

impl RelationReport {
    pub fn ok(&self) -> bool {
        self.failing.is_empty()
    }
}

/// Checks the A∞-algebra relations for all arities `m <= max_m`.
/// With operations supported in arities `<= r`, relations at `m > 2r - 1`
/// hold vacuously, so `max_m = 2·max_arity - 1` is a complete check.
pub fn check_ainfty(alg: &AInftyAlgebra, max_m: usize) -> RelationReport {
    let mut failing = Vec::new();
    for m in 1..=max_m {
        let source = alg.power(m);
        let mut defect = GradedMap::zero(source.clone(), alg.space.clone(), 3 - m as i64);
        for j in 1..=m {
            if !alg.ops.contains_key(&j) {
                continue;
            }
            let mj = alg.op(j);
            for i in 0..=(m - j) {
                let k = m - j - i;
                let l = i + 1 + k;
                if !alg.ops.contains_key(&l) {
                    continue;
                }
                let ml = alg.op(l);
                let id = GradedMap::identity(alg.space.clone());
                let mut blocks: Vec<Block> = Vec::new();
                for _ in 0..i {
                    blocks.push(Block::id(&id));
                }
                blocks.push(Block { map: &mj, src_arity: j, dst_arity: 1 });
                for _ in 0..k {
                    blocks.push(Block::id(&id));
                }
                let inner = block_tensor_map(&blocks, &source, &ml.src);
                let sign = Scalar::sign_pow(alg.space.field, (i * j + k) as i64);
                defect = defect.add(&ml.compose(&inner).scale(&sign));
            }
        }
        if !defect.is_zero() {
            failing.push(m);
        }
    }
    RelationReport { checked_up_to: max_m, failing }
}

/// The (truncated) bar construction `T^c(B[1])` up to word length `L`,
/// with the coderivation induced by the suspended operations
/// `m'_n = -s ∘ m_n ∘ ω^{⊗n}`.
#[derive(Debug, Clone)]
pub struct BarComplex {
    pub complex: Complex,
    /// Per word length: global basis offset and the word space
    /// `(B[1])^{⊗n}`.
    pub blocks: Vec<(usize, Arc<GradedSpace>)>,
}

impl BarComplex {
    pub fn word_length_of(&self, global: usize) -> usize {
        for (n, (off, sp)) in self.blocks.iter().enumerate() {
            if global >= *off && global < off + sp.dim() {
                return n + 1;
            }
        }
        unreachable!("index outside bar complex")
    }
}

pub fn bar_construct(alg: &AInftyAlgebra, max_len: usize) -> Result<BarComplex, CoreError> {
    let field = alg.space.field;
    let shifted = alg.space.shifted(1);
    let mut blocks: Vec<(usize, Arc<GradedSpace>)> = Vec::new();
    let mut basis: Vec<(String, i64)> = Vec::new();
    let mut offset = 0usize;
    for n in 1..=max_len {
        let sp = GradedSpace::tensor(format!("(B[1])^⊗{n}"), vec![shifted.clone(); n]);
        for i in 0..sp.dim() {
            basis.push((format!("[{}]", sp.basis[i]), sp.degrees[i]));
        }
        blocks.push((offset, sp.clone()));
        offset += sp.dim();
    }
    let window = (
        blocks.iter().map(|(_, s)| s.window.0).min().unwrap(),
        blocks.iter().map(|(_, s)| s.window.1).max().unwrap(),
    );
    let space = GradedSpace::new("Bar(B)", field, basis, window)?;
    // Suspended operations m'_j : (B[1])^{⊗j} -> B[1] of degree +1.
    let mut primed: BTreeMap<usize, GradedMap> = BTreeMap::new();
    for (&j, _) in &alg.ops {
        let mj = alg.op(j);
        let src_sh = GradedSpace::tensor(format!("(B[1])^⊗{j}"), vec![shifted.clone(); j]);
        primed.insert(j, shift_conjugate_up(&mj, &src_sh, j));
    }
    let mut d = GradedMap::zero(space.clone(), space.clone(), 1);
    let id_sh = GradedMap::identity(shifted.clone());
    for n in 1..=max_len {
        let (src_off, src_sp) = blocks[n - 1].clone();
        for (&j, mpj) in &primed {
            if j > n {
                continue;
            }
            for i in 0..=(n - j) {
                let k = n - j - i;
                let target_len = i + 1 + k;
                let (dst_off, dst_sp) = blocks[target_len - 1].clone();
                let mut bl: Vec<Block> = Vec::new();
                for _ in 0..i {
                    bl.push(Block::id(&id_sh));
                }
                bl.push(Block { map: mpj, src_arity: j, dst_arity: 1 });
                for _ in 0..k {
                    bl.push(Block::id(&id_sh));
                }
                let part = block_tensor_map(&bl, &src_sp, &dst_sp);
                for (col, v) in part.cols.iter().enumerate() {
                    for (row, c) in v.iter() {
                        d.add_entry(dst_off + row, src_off + col, c.clone())?;
                    }
                }
            }
        }
    }
    let complex = Complex { space, d };
    Ok(BarComplex { complex, blocks })
}

/// An A∞-coalgebra in bimodules over a commutative dg-algebra `A` (take
/// `A = k` for plain coalgebras): operations
/// `Δ_n : C -> C^{⊗_A n}` of degree `2 - n` into balanced tensor powers.
#[derive(Debug, Clone)]
pub struct AInftyCoalgebra {
    pub base: Arc<DgAlgebra>,
    pub carrier: Bimodule,
    /// `Δ_n` by arity, landing in `powers[n-1].space`.
    pub ops: BTreeMap<usize, GradedMap>,
    /// Counit `C -> A` (degree 0), when present.
    pub counit: Option<GradedMap>,
    /// `powers[t-1]` is the balanced chain `C^{⊗_A t}`.
    pub powers: Vec<BalancedChain>,
}

impl AInftyCoalgebra {
    /// Builds the coalgebra, materializing `C^{⊗_A t}` for `t <= max_power`.
    pub fn new(
        base: Arc<DgAlgebra>,
        carrier: Bimodule,
        ops: BTreeMap<usize, GradedMap>,
        counit: Option<GradedMap>,
        max_power: usize,
    ) -> Result<AInftyCoalgebra, CoreError> {
        let mut powers = Vec::with_capacity(max_power);
        for t in 1..=max_power {
            powers.push(BalancedChain::new(
                format!("{}^⊗_A{t}", carrier.space().name),
                vec![carrier.clone(); t],
            )?);
        }
        for (&n, op) in &ops {
            if n == 0 || n > max_power {
                return Err(CoreError::shape(format!("Δ_{n}: arity outside materialized powers")));
            }
            if op.degree != 2 - n as i64 || op.dst.dim() != powers[n - 1].dim() {
                return Err(CoreError::shape(format!("Δ_{n} has the wrong shape")));
            }
        }
        Ok(AInftyCoalgebra { base, carrier, ops, counit, powers })
    }

    pub fn space(&self) -> &Arc<GradedSpace> {
        self.carrier.space()
    }

    pub fn power(&self, t: usize) -> &BalancedChain {
        &self.powers[t - 1]
    }

    /// `Δ_n` (zero when absent), lifted to the flat `C^{⊗n}` target:
    /// `sect ∘ Δ_n : C -> C ⊗ … ⊗ C` (ground-field tensor).
    fn op_flat(&self, n: usize) -> GradedMap {
        let chain = self.power(n);
        match self.ops.get(&n) {
            Some(d) => chain.sect.compose(d),
            None => GradedMap::zero(self.space().clone(), chain.ambient.clone(), 2 - n as i64),
        }
    }
}

/// Inserts `Δ_j` at C-slot `i` (0-based) of the balanced power
/// `C^{⊗_A l}`, producing a map to `C^{⊗_A (l+j-1)}`.
pub fn insert_comultiplication(
    coalg: &AInftyCoalgebra,
    l: usize,
    i: usize,
    j: usize,
) -> GradedMap {
    let src_chain = coalg.power(l);
    let dst_chain = coalg.power(l + j - 1);
    let delta_flat = coalg.op_flat(j); // C -> flat C^{⊗j}
    let id = GradedMap::identity(coalg.space().clone());
    let mut blocks: Vec<Block> = Vec::new();
    for _ in 0..i {
        blocks.push(Block::id(&id));
    }
    blocks.push(Block { map: &delta_flat, src_arity: 1, dst_arity: j });
    for _ in 0..(l - 1 - i) {
        blocks.push(Block::id(&id));
    }
    let flat = block_tensor_map(&blocks, &src_chain.ambient, &dst_chain.ambient);
    dst_chain.proj.compose(&flat).compose(&src_chain.sect)
}

/// Checks the A∞-coalgebra relations for `m <= max_m`.
pub fn check_ainfty_coalgebra(coalg: &AInftyCoalgebra, max_m: usize) -> Result<RelationReport, CoreError> {
    let mut failing = Vec::new();
    let field = coalg.space().field;
    for m in 1..=max_m {
        if m > coalg.powers.len() {
            return Err(CoreError::shape(format!(
                "check up to {max_m} needs C^⊗{max_m} materialized"
            )));
        }
        let target = coalg.power(m).space.clone();
        let mut defect = GradedMap::zero(coalg.space().clone(), target, 3 - m as i64);
        for j in 1..=m {
            if !coalg.ops.contains_key(&j) {
                continue;
            }
            for i in 0..=(m - j) {
                let k = m - j - i;
                let l = i + 1 + k;
                if !coalg.ops.contains_key(&l) {
                    continue;
                }
                let dl = &coalg.ops[&l];
                let ins = insert_comultiplication(coalg, l, i, j);
                let sign = Scalar::sign_pow(field, (i + j * k) as i64);
                defect = defect.add(&ins.compose(dl).scale(&sign));
            }
        }
        if !defect.is_zero() {
            failing.push(m);
        }
    }
    Ok(RelationReport { checked_up_to: max_m, failing })
}

/// The (truncated) cobar construction `T(C[-1])`: words of desuspended
/// coalgebra elements up to `max_len`, with the derivation induced by
/// `Δ'_n = (-1)^{…} ω^{⊗n} ∘ Δ_n ∘ s`. Only meaningful over `A = k`
/// (the chain powers are then plain tensor powers).
pub fn cobar_construct(coalg: &AInftyCoalgebra, max_len: usize) -> Result<BarComplex, CoreError> {
    let c = coalg.space().clone();
    let field = c.field;
    let desh = c.shifted(-1);
    let mut blocks: Vec<(usize, Arc<GradedSpace>)> = Vec::new();
    let mut basis: Vec<(String, i64)> = Vec::new();
    let mut offset = 0usize;
    for n in 1..=max_len {
        let sp = GradedSpace::tensor(format!("(C[-1])^⊗{n}"), vec![desh.clone(); n]);
        for i in 0..sp.dim() {
            basis.push((format!("⟨{}⟩", sp.basis[i]), sp.degrees[i]));
        }
        blocks.push((offset, sp.clone()));
        offset += sp.dim();
    }
    let window = (
        blocks.iter().map(|(_, s)| s.window.0).min().unwrap(),
        blocks.iter().map(|(_, s)| s.window.1).max().unwrap(),
    );
    let space = GradedSpace::new("Cobar(C)", field, basis, window)?;
    // Desuspended co-operations Δ'_j : C[-1] -> (C[-1])^{⊗j}, degree +1.
    let mut primed: BTreeMap<usize, GradedMap> = BTreeMap::new();
    for (&j, _) in &coalg.ops {
        if j > max_len {
            continue;
        }
        // flatten Δ_j to the plain tensor power (trivial quotient over k)
        let flat = coalg.op_flat(j);
        let dst_desh = GradedSpace::tensor(format!("(C[-1])^⊗{j}"), vec![desh.clone(); j]);
        primed.insert(j, shift_conjugate_down(&flat, &desh, &dst_desh, j));
    }
    let id_desh = GradedMap::identity(desh.clone());
    let mut d = GradedMap::zero(space.clone(), space.clone(), 1);
    for n in 1..=max_len {
        let (src_off, src_sp) = blocks[n - 1].clone();
        for (&j, dpj) in &primed {
            let target_len = n + j - 1;
            if target_len > max_len {
                continue;
            }
            for i in 0..n {
                let (dst_off, dst_sp) = blocks[target_len - 1].clone();
                let mut bl: Vec<Block> = Vec::new();
                for _ in 0..i {
                    bl.push(Block::id(&id_desh));
                }
                bl.push(Block { map: dpj, src_arity: 1, dst_arity: j });
                for _ in 0..(n - 1 - i) {
                    bl.push(Block::id(&id_desh));
                }
                let part = block_tensor_map(&bl, &src_sp, &dst_sp);
                for (col, v) in part.cols.iter().enumerate() {
                    for (row, cc) in v.iter() {
                        d.add_entry(dst_off + row, src_off + col, cc.clone())?;
                    }
                }
            }
        }
    }
    let complex = Complex { space, d };
    Ok(BarComplex { complex, blocks })
}

/// An A∞-comodule over an A∞-coalgebra: `ν_n : M -> C^{⊗(n-1)} ⊗_A M` of
/// degree `2 - n`, with the module written on the right.
#[derive(Debug, Clone)]
pub struct AInftyComodule {
    pub coalg: Arc<AInftyCoalgebra>,
    pub carrier: Bimodule,
    pub ops: BTreeMap<usize, GradedMap>,
    /// `coext[t]` is the balanced chain `C^{⊗_A t} ⊗_A M` (t = 0 is `[M]`).
    pub coext: Vec<BalancedChain>,
}

impl AInftyComodule {
    pub fn new(
        coalg: Arc<AInftyCoalgebra>,
        carrier: Bimodule,
        ops: BTreeMap<usize, GradedMap>,
        max_power: usize,
    ) -> Result<AInftyComodule, CoreError> {
        let coext = build_coext(&coalg, &carrier, max_power)?;
        for (&n, op) in &ops {
            if n == 0 || n > max_power + 1 {
                return Err(CoreError::shape(format!("ν_{n}: arity outside materialized powers")));
            }
            if op.degree != 2 - n as i64 || op.dst.dim() != coext[n - 1].dim() {
                return Err(CoreError::shape(format!("ν_{n} has the wrong shape")));
            }
        }
        Ok(AInftyComodule { coalg, carrier, ops, coext })
    }

    pub fn space(&self) -> &Arc<GradedSpace> {
        self.carrier.space()
    }

    /// `ν_n` (zero when absent), flat target `C^{⊗(n-1)} ⊗ M`.
    fn op_flat(&self, n: usize) -> GradedMap {
        let chain = &self.coext[n - 1];
        match self.ops.get(&n) {
            Some(v) => chain.sect.compose(v),
            None => GradedMap::zero(self.space().clone(), chain.ambient.clone(), 2 - n as i64),
        }
    }

    fn op(&self, n: usize) -> GradedMap {
        match self.ops.get(&n) {
            Some(v) => v.clone(),
            None => GradedMap::zero(
                self.space().clone(),
                self.coext[n - 1].space.clone(),
                2 - n as i64,
            ),
        }
    }
}

/// Builds the chains `C^{⊗_A t} ⊗_A M` for `t = 0..=max_power`.
pub fn build_coext(
    coalg: &AInftyCoalgebra,
    carrier: &Bimodule,
    max_power: usize,
) -> Result<Vec<BalancedChain>, CoreError> {
    let mut coext = Vec::with_capacity(max_power + 1);
    for t in 0..=max_power {
        let mut factors = vec![coalg.carrier.clone(); t];
        factors.push(carrier.clone());
        coext.push(BalancedChain::new(
            format!("C^{t}⊗{}", carrier.space().name),
            factors,
        )?);
    }
    Ok(coext)
}

/// One term of the comodule defect / map differential: applies `Δ_j` at
/// C-slot `i`, or `ν_j` of the given comodule at the module slot when the
/// slot index points at the module, on the chain `C^{⊗(l-1)} ⊗ M`.
fn insert_into_coext(
    coalg: &AInftyCoalgebra,
    comod: &AInftyComodule,
    l: usize,
    i: usize,
    j: usize,
) -> GradedMap {
    let src_chain = &comod.coext[l - 1];
    let dst_chain = &comod.coext[l + j - 2];
    let id_c = GradedMap::identity(coalg.space().clone());
    let id_m = GradedMap::identity(comod.space().clone());
    let mut blocks: Vec<Block> = Vec::new();
    let module_slot = l - 1;
    let flat;
    for s in 0..i {
        debug_assert!(s < module_slot);
        blocks.push(Block::id(&id_c));
    }
    if i == module_slot {
        // ν_j at the module slot: M -> flat C^{⊗(j-1)} ⊗ M
        flat = comod.op_flat(j);
        blocks.push(Block { map: &flat, src_arity: 1, dst_arity: j });
    } else {
        flat = coalg.op_flat(j);
        blocks.push(Block { map: &flat, src_arity: 1, dst_arity: j });
        for _ in (i + 1)..module_slot {
            blocks.push(Block::id(&id_c));
        }
        blocks.push(Block::id(&id_m));
    }
    let flat_map = block_tensor_map(&blocks, &src_chain.ambient, &dst_chain.ambient);
    dst_chain.proj.compose(&flat_map).compose(&src_chain.sect)
}

/// Checks the A∞-comodule relations for `m <= max_m`.
pub fn check_comodule(comod: &AInftyComodule, max_m: usize) -> Result<RelationReport, CoreError> {
    let coalg = &comod.coalg;
    let field = comod.space().field;
    let mut failing = Vec::new();
    for m in 1..=max_m {
        if m > comod.coext.len() {
            return Err(CoreError::shape(format!(
                "check up to {max_m} needs C^⊗{} ⊗ M materialized",
                max_m - 1
            )));
        }
        let target = comod.coext[m - 1].space.clone();
        let mut defect = GradedMap::zero(comod.space().clone(), target, 3 - m as i64);
        for j in 1..=m {
            for i in 0..=(m - j) {
                let k = m - j - i;
                let l = i + 1 + k;
                if !comod.ops.contains_key(&l) {
                    continue;
                }
                // slot i is the module slot iff k == 0
                let have_inner = if k == 0 {
                    comod.ops.contains_key(&j)
                } else {
                    coalg.ops.contains_key(&j)
                };
                if !have_inner {
                    continue;
                }
                let ins = insert_into_coext(coalg, comod, l, i, j);
                let sign = Scalar::sign_pow(field, (i + j * k) as i64);
                defect = defect.add(&ins.compose(&comod.op(l)).scale(&sign));
            }
        }
        if !defect.is_zero() {
            failing.push(m);
        }
    }
    Ok(RelationReport { checked_up_to: max_m, failing })
}

/// A map of A∞-comodules: components `f_n : M -> C^{⊗(n-1)} ⊗_A N` of
/// degree `|f| + 1 - n`.
#[derive(Debug, Clone)]
pub struct ComoduleMap {
    pub degree: i64,
    /// Components by `n >= 1`; the component `f_n` lands in the target
    /// comodule's `coext[n-1]`.
    pub components: BTreeMap<usize, GradedMap>,
}

impl ComoduleMap {
    pub fn component(
        &self,
        src: &AInftyComodule,
        dst: &AInftyComodule,
        n: usize,
    ) -> GradedMap {
        match self.components.get(&n) {
            Some(f) => f.clone(),
            None => GradedMap::zero(
                src.space().clone(),
                dst.coext[n - 1].space.clone(),
                self.degree + 1 - n as i64,
            ),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.components.values().all(|f| f.is_zero())
    }
}

/// Inserts a comodule-map component (or `Δ_j`) into a coext chain of the
/// target/source pairing; helper for the map differential.
fn insert_map_component(
    coalg: &AInftyCoalgebra,
    src: &AInftyComodule,
    dst: &AInftyComodule,
    f: &ComoduleMap,
    p: usize,
    q: usize,
) -> GradedMap {
    // (id^{⊗(p-1)} ⊗ f_q) on C^{⊗(p-1)} ⊗ M -> C^{⊗(p-1+q-1)} ⊗ N
    let src_chain = &src.coext[p - 1];
    let dst_chain = &dst.coext[p + q - 2];
    let id_c = GradedMap::identity(coalg.space().clone());
    let fq = f.component(src, dst, q);
    let fq_flat = dst.coext[q - 1].sect.compose(&fq);
    let mut blocks: Vec<Block> = Vec::new();
    for _ in 0..(p - 1) {
        blocks.push(Block::id(&id_c));
    }
    blocks.push(Block { map: &fq_flat, src_arity: 1, dst_arity: q });
    let flat_map = block_tensor_map(&blocks, &src_chain.ambient, &dst_chain.ambient);
    dst_chain.proj.compose(&flat_map).compose(&src_chain.sect)
}

/// The differential of a comodule map:
/// `d(f)_n = Σ_{i+j+k=n, m=i+1+k, j,m ≥ 1} (-1)^{i+jk}
///             (id^{⊗i} ⊗ Δ_j ⊗ id^{⊗k}) f_m
///         - Σ_{p+q=n+1} (-1)^{p|f|} (id^{⊗(p-1)} ⊗ f_q) ν^M_p`,
/// where in the first sum the module slot (`k = 0`) takes `ν^N_j`.
pub fn comodule_map_d(
    src: &AInftyComodule,
    dst: &AInftyComodule,
    f: &ComoduleMap,
    max_n: usize,
) -> Result<ComoduleMap, CoreError> {
    let coalg = &src.coalg;
    let field = src.space().field;
    let mut components = BTreeMap::new();
    for n in 1..=max_n {
        let target = dst.coext[n - 1].space.clone();
        let mut out = GradedMap::zero(src.space().clone(), target, f.degree + 2 - n as i64);
        // first sum: structure of the target applied to f's components
        for j in 1..=n {
            for i in 0..=(n - j) {
                let k = n - j - i;
                let m = i + 1 + k;
                let fm = f.component(src, dst, m);
                if fm.is_zero() {
                    continue;
                }
                let ins = insert_into_coext(coalg, dst, m, i, j);
                let sign = Scalar::sign_pow(field, (i + j * k) as i64);
                out = out.add(&ins.compose(&fm).scale(&sign));
            }
        }
        // second sum: f's components applied after the source coaction
        for p in 1..=n {
            let q = n + 1 - p;
            if !src.ops.contains_key(&p) {
                continue;
            }
            let ins = insert_map_component(coalg, src, dst, f, p, q);
            let sign = Scalar::sign_pow(field, p as i64 * f.degree);
            out = out.sub(&ins.compose(&src.op(p)).scale(&sign));
        }
        if !out.is_zero() {
            components.insert(n, out);
        }
    }
    Ok(ComoduleMap { degree: f.degree + 1, components })
}

/// Composition of comodule maps:
/// `(g ∘ f)_n = Σ_{l+k=n+1} (-1)^{|g|(l-1)} (id^{⊗(l-1)} ⊗ g_k) f_l`.
pub fn comodule_map_compose(
    src: &AInftyComodule,
    mid: &AInftyComodule,
    dst: &AInftyComodule,
    g: &ComoduleMap,
    f: &ComoduleMap,
    max_n: usize,
) -> Result<ComoduleMap, CoreError> {
    let coalg = &src.coalg;
    let field = src.space().field;
    let mut components = BTreeMap::new();
    for n in 1..=max_n {
        let target = dst.coext[n - 1].space.clone();
        let mut out =
            GradedMap::zero(src.space().clone(), target, f.degree + g.degree + 1 - n as i64);
        for l in 1..=n {
            let k = n + 1 - l;
            let fl = f.component(src, mid, l);
            if fl.is_zero() {
                continue;
            }
            let ins = insert_map_component(coalg, mid, dst, g, l, k);
            let sign = Scalar::sign_pow(field, g.degree * (l as i64 - 1));
            out = out.add(&ins.compose(&fl).scale(&sign));
        }
        if !out.is_zero() {
            components.insert(n, out);
        }
    }
    Ok(ComoduleMap { degree: f.degree + g.degree, components })
}

/// Decides homotopy counitality: finds `h : M -> M` of degree `-1` with
/// `ν_1 h + h ν_1 = (ε ⊗ id) ν_2 - id`, exactly.
pub fn check_homotopy_counital(comod: &AInftyComodule) -> Result<Option<GradedMap>, CoreError> {
    let coalg = &comod.coalg;
    let eps = coalg
        .counit
        .as_ref()
        .ok_or_else(|| CoreError::shape("coalgebra has no counit"))?;
    let m = comod.space().clone();
    let field = m.field;
    // (ε ⊗ id) ν_2 : lift to flat C ⊗ M, apply ε into A, act on M.
    let chain = &comod.coext[1];
    let lact = comod
        .carrier
        .lact
        .as_ref()
        .ok_or_else(|| CoreError::shape("comodule carrier has no left action"))?;
    let am = lact.src.clone();
    let id_m = GradedMap::identity(m.clone());
    let eps_id = block_tensor_map(
        &[Block::id(eps), Block::id(&id_m)],
        &chain.ambient,
        &am,
    );
    let counit_action = lact.compose(&eps_id).compose(&chain.sect).compose(&comod.op(2));
    let rhs_map = counit_action.sub(&GradedMap::identity(m.clone()));
    // Solve ν_1 h + h ν_1 = rhs in the hom complex of (M, ν_1).
    let nu1 = comod.op(1);
    let mc = Complex { space: m.clone(), d: nu1 };
    mc.check_d_squared()?;
    let hom = hom_complex(&mc, &mc);
    let rhs = hom.to_vector(&rhs_map);
    let hspace = &hom.complex.space;
    let unknowns: Vec<usize> =
        (0..hspace.dim()).filter(|&i| hspace.degrees[i] == -1).collect();
    let cols: Vec<SparseVec> = unknowns
        .iter()
        .map(|&i| hom.complex.d.apply(&SparseVec::unit(i, field.one())))
        .collect();
    let mat = linalg::ColMatrix { field, nrows: hspace.dim(), cols };
    match linalg::solve(&mat, &rhs) {
        None => Ok(None),
        Some(sol) => {
            let mut v = SparseVec::new();
            for (k, c) in sol.iter() {
                v.add(unknowns[k], c.clone());
            }
            Ok(Some(hom.to_map(&v, -1)?))
        }
    }
}

/// The ground field as a one-dimensional commutative dg-algebra, the base
/// for plain (co)algebras.
pub fn ground_field_algebra(field: Field) -> Arc<DgAlgebra> {
    let space = GradedSpace::new("k", field, vec![("1".into(), 0)], (0, 0)).unwrap();
    let complex = Complex::with_zero_d(space.clone());
    let sq = GradedSpace::tensor("k⊗k", vec![space.clone(), space.clone()]);
    let mut mul = GradedMap::zero(sq, space.clone(), 0);
    mul.add_entry(0, 0, field.one()).unwrap();
    let unit = SparseVec::unit(0, field.one());
    DgAlgebra::new("k", complex, mul, unit, true).unwrap()
}

/// Wraps a plain graded space as a bimodule over `k`.
pub fn k_bimodule(k: &Arc<DgAlgebra>, complex: Complex) -> Bimodule {
    let m = complex.space.clone();
    let km = GradedSpace::tensor(format!("k⊗{}", m.name), vec![k.space().clone(), m.clone()]);
    let mk = GradedSpace::tensor(format!("{}⊗k", m.name), vec![m.clone(), k.space().clone()]);
    let mut lact = GradedMap::zero(km, m.clone(), 0);
    let mut ract = GradedMap::zero(mk, m.clone(), 0);
    for i in 0..m.dim() {
        lact.add_entry(i, i, m.field.one()).unwrap();
        ract.add_entry(i, i, m.field.one()).unwrap();
    }
    Bimodule {
        left: Some(k.clone()),
        right: Some(k.clone()),
        complex,
        lact: Some(lact),
        ract: Some(ract),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::dual_numbers;

    fn field() -> Field {
        Field::Rationals
    }

    /// The dual numbers as an A∞-algebra with only m_2.
    fn dual_numbers_ainfty() -> AInftyAlgebra {
        let a = dual_numbers(field());
        let mut ops = BTreeMap::new();
        ops.insert(2, a.mul.clone());
        AInftyAlgebra::new(a.space().clone(), ops).unwrap()
    }

    #[test]
    fn associative_algebra_passes() {
        let alg = dual_numbers_ainfty();
        let rep = check_ainfty(&alg, 5);
        assert!(rep.ok(), "failing arities: {:?}", rep.failing);
    }

    #[test]
    fn corrupted_m2_fails_at_arity_three() {
        let a = dual_numbers(field());
        let mut bad = a.mul.clone();
        // make 1·x = x + 1: breaks associativity
        let sq = &a.square;
        bad.add_entry(0, sq.fuse_index(&[0, 1]), field().one()).unwrap();
        let mut ops = BTreeMap::new();
        ops.insert(2, bad);
        let alg = AInftyAlgebra::new(a.space().clone(), ops).unwrap();
        let rep = check_ainfty(&alg, 5);
        assert_eq!(rep.failing, vec![3]);
    }

    #[test]
    fn bar_of_associative_algebra_is_a_complex() {
        let alg = dual_numbers_ainfty();
        let bar = bar_construct(&alg, 5).unwrap();
        bar.complex.check_d_squared().unwrap();
        assert_eq!(bar.complex.space.dim(), 2 + 4 + 8 + 16 + 32);
    }

    #[test]
    fn bar_of_nonassociative_structure_has_d_squared_nonzero() {
        let a = dual_numbers(field());
        let mut bad = a.mul.clone();
        let sq = &a.square;
        bad.add_entry(0, sq.fuse_index(&[0, 1]), field().one()).unwrap();
        let mut ops = BTreeMap::new();
        ops.insert(2, bad);
        let alg = AInftyAlgebra::new(a.space().clone(), ops).unwrap();
        let bar = bar_construct(&alg, 4).unwrap();
        assert!(bar.complex.check_d_squared().is_err());
    }

    /// The diagonal coalgebra on k^2 over the ground field.
    fn diagonal_coalgebra() -> Arc<AInftyCoalgebra> {
        let k = ground_field_algebra(field());
        let cspace = GradedSpace::new(
            "C",
            field(),
            vec![("e0".into(), 0), ("e1".into(), 0)],
            (0, 0),
        )
        .unwrap();
        let carrier = k_bimodule(&k, Complex::with_zero_d(cspace.clone()));
        let powers_probe =
            BalancedChain::new("C⊗C", vec![carrier.clone(), carrier.clone()]).unwrap();
        let mut delta2 = GradedMap::zero(cspace.clone(), powers_probe.space.clone(), 0);
        // Δ(e_i) = e_i ⊗ e_i
        for i in 0..2 {
            let flat = powers_probe.ambient.fuse_index(&[i, i]);
            let img = powers_probe.proj.apply(&SparseVec::unit(flat, field().one()));
            for (r, c) in img.iter() {
                delta2.add_entry(r, i, c.clone()).unwrap();
            }
        }
        let mut eps = GradedMap::zero(cspace.clone(), k.space().clone(), 0);
        eps.add_entry(0, 0, field().one()).unwrap();
        eps.add_entry(0, 1, field().one()).unwrap();
        let mut ops = BTreeMap::new();
        ops.insert(2, delta2);
        Arc::new(AInftyCoalgebra::new(k, carrier, ops, Some(eps), 4).unwrap())
    }

    #[test]
    fn diagonal_coalgebra_is_coassociative() {
        let c = diagonal_coalgebra();
        let rep = check_ainfty_coalgebra(&c, 4).unwrap();
        assert!(rep.ok(), "failing: {:?}", rep.failing);
    }

    #[test]
    fn cobar_of_coassociative_coalgebra() {
        let c = diagonal_coalgebra();
        let cobar = cobar_construct(&c, 4).unwrap();
        cobar.complex.check_d_squared().unwrap();
    }

    #[test]
    fn strict_comodule_over_diagonal_coalgebra() {
        // M = C as a comodule over itself: ν_2 = Δ, ν_1 = 0.
        let c = diagonal_coalgebra();
        let carrier = c.carrier.clone();
        let comod_probe = AInftyComodule::new(c.clone(), carrier.clone(), BTreeMap::new(), 4).unwrap();
        // coext[1] = C ⊗ M; reuse Δ through the chain's projection.
        let chain = &comod_probe.coext[1];
        let mut nu2 = GradedMap::zero(c.space().clone(), chain.space.clone(), 0);
        for i in 0..2 {
            let flat = chain.ambient.fuse_index(&[i, i]);
            let img = chain.proj.apply(&SparseVec::unit(flat, field().one()));
            for (r, cc) in img.iter() {
                nu2.add_entry(r, i, cc.clone()).unwrap();
            }
        }
        let mut ops = BTreeMap::new();
        ops.insert(2, nu2);
        let comod = AInftyComodule::new(c.clone(), carrier, ops, 4).unwrap();
        let rep = check_comodule(&comod, 5).unwrap();
        assert!(rep.ok(), "failing: {:?}", rep.failing);
        // strict counitality: h = 0 works
        let h = check_homotopy_counital(&comod).unwrap();
        assert!(h.is_some());
        assert!(h.unwrap().is_zero());
    }

    #[test]
    fn comodule_map_d_squares_to_zero_and_leibniz_shape() {
        let c = diagonal_coalgebra();
        let carrier = c.carrier.clone();
        let comod_probe =
            AInftyComodule::new(c.clone(), carrier.clone(), BTreeMap::new(), 4).unwrap();
        let chain = &comod_probe.coext[1];
        let mut nu2 = GradedMap::zero(c.space().clone(), chain.space.clone(), 0);
        for i in 0..2 {
            let flat = chain.ambient.fuse_index(&[i, i]);
            let img = chain.proj.apply(&SparseVec::unit(flat, field().one()));
            for (r, cc) in img.iter() {
                nu2.add_entry(r, i, cc.clone()).unwrap();
            }
        }
        let mut ops = BTreeMap::new();
        ops.insert(2, nu2);
        let comod = AInftyComodule::new(c.clone(), carrier, ops, 4).unwrap();
        // f with a single component f_1 = id (degree 0)
        let mut comps = BTreeMap::new();
        comps.insert(1, GradedMap::identity(c.space().clone()).retarget(
            c.space().clone(),
            comod.coext[0].space.clone(),
            0,
        ));
        let f = ComoduleMap { degree: 0, components: comps };
        let df = comodule_map_d(&comod, &comod, &f, 4).unwrap();
        // identity is a comodule map: d(id) = 0
        assert!(df.is_zero(), "d(id) should vanish");
        let ddf = comodule_map_d(&comod, &comod, &df, 4).unwrap();
        assert!(ddf.is_zero());
    }
}
