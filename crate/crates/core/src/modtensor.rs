//! Weighted free modules `ℓ(S, R)`, finitely presented quotients, tensor
//! products and their seminorms, the absorbing map
//! `C_fin(X, M0) ⊗ M1 → C_fin(X, M0 ⊗ M1)`, and base change along quotients.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{Cfin, Coefficients};
use crate::linalg::IntMatrix;
use crate::scalars::{prime_factors, Int, NormValue, RingDescriptor};
use crate::spaces::FiniteSpace;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormMode {
    /// `Σ ‖r_s‖ |s|`.
    Archimedean,
    /// `max ‖r_s‖ |s|`.
    NonArchimedean,
}

/// `ℓ(S, R)`: finitely supported coefficient vectors over a weighted basis.
///
/// Basis elements can be grouped into blocks; the norm is the maximum over
/// blocks of the per-block norm. A single block is the usual `ℓ(S, R)`;
/// one block per quasi-component models `C_fin(X, ℓ(S, R))` with its sup norm.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WeightedFreeModule {
    pub ring: RingDescriptor,
    pub labels: Vec<String>,
    pub weights: Vec<NormValue>,
    pub mode: NormMode,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    blocks: Vec<usize>,
}

impl WeightedFreeModule {
    pub fn new(
        ring: RingDescriptor,
        basis: Vec<(String, NormValue)>,
        mode: NormMode,
    ) -> Result<Self> {
        if let Some((l, _)) = basis.iter().find(|(_, w)| w.is_zero()) {
            return Err(Error::InvalidInput(format!(
                "basis element {l} has zero weight"
            )));
        }
        let mut labels: Vec<&String> = basis.iter().map(|(l, _)| l).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("duplicate basis label".into()));
        }
        let (labels, weights) = basis.into_iter().unzip();
        Ok(WeightedFreeModule {
            ring,
            labels,
            weights,
            mode,
            blocks: Vec::new(),
        })
    }

    /// Unit weights.
    pub fn unit(ring: RingDescriptor, labels: &[&str], mode: NormMode) -> Self {
        let basis = labels
            .iter()
            .map(|l| (l.to_string(), NormValue::one()))
            .collect();
        Self::new(ring, basis, mode).expect("distinct labels")
    }

    /// `C_fin(X, self)` for `X` with the given number of quasi-components:
    /// basis `(c, s)` in row-major order, blocked by component.
    pub fn functions_on(&self, components: usize) -> Self {
        let mut labels = Vec::new();
        let mut weights = Vec::new();
        let mut blocks = Vec::new();
        for c in 0..components {
            for (l, w) in self.labels.iter().zip(&self.weights) {
                labels.push(format!("{c}:{l}"));
                weights.push(w.clone());
                blocks.push(c);
            }
        }
        WeightedFreeModule {
            ring: self.ring,
            labels,
            weights,
            mode: self.mode,
            blocks,
        }
    }

    pub fn rank(&self) -> usize {
        self.labels.len()
    }

    fn block_of(&self, i: usize) -> usize {
        self.blocks.get(i).copied().unwrap_or(0)
    }

    /// Lower bound on the norm of nonzero elements.
    pub fn isolation_gap(&self) -> NormValue {
        let w = self
            .weights
            .iter()
            .min()
            .cloned()
            .unwrap_or_else(NormValue::one);
        self.ring.isolation_gap().mul(&w)
    }

    fn check_vec(&self, v: &[Int]) -> Result<()> {
        if v.len() != self.rank() {
            return Err(Error::SizeMismatch {
                expected: self.rank(),
                got: v.len(),
            });
        }
        v.iter().try_for_each(|a| self.ring.check(*a))
    }

    pub fn norm(&self, v: &[Int]) -> Result<NormValue> {
        self.check_vec(v)?;
        let nblocks = self.blocks.iter().max().map_or(1, |m| m + 1);
        let mut per_block = vec![NormValue::Zero; nblocks];
        for (i, a) in v.iter().enumerate() {
            if *a == 0 {
                continue;
            }
            let term = self.ring.norm(*a)?.mul(&self.weights[i]);
            let b = &mut per_block[self.block_of(i)];
            *b = match self.mode {
                NormMode::Archimedean => b.add(&term)?,
                NormMode::NonArchimedean => b.clone().max(term),
            };
        }
        Ok(per_block.into_iter().max().unwrap_or(NormValue::Zero))
    }

    /// The same basis over another ring.
    pub fn with_ring(&self, ring: RingDescriptor) -> Self {
        WeightedFreeModule {
            ring,
            ..self.clone()
        }
    }

    pub fn same_basis(&self, other: &Self) -> bool {
        self.labels == other.labels && self.weights == other.weights
    }
}

impl Coefficients for WeightedFreeModule {
    type Elem = Vec<Int>;

    fn zero(&self) -> Vec<Int> {
        vec![0; self.rank()]
    }
    fn check(&self, a: &Vec<Int>) -> Result<()> {
        self.check_vec(a)
    }
    fn add(&self, a: &Vec<Int>, b: &Vec<Int>) -> Result<Vec<Int>> {
        a.iter()
            .zip(b)
            .map(|(x, y)| self.ring.add(*x, *y))
            .collect()
    }
    fn neg(&self, a: &Vec<Int>) -> Vec<Int> {
        a.iter().map(|x| self.ring.neg(*x)).collect()
    }
    fn scale(&self, r: Int, a: &Vec<Int>) -> Result<Vec<Int>> {
        a.iter()
            .map(|x| self.ring.mul(self.ring.reduce(r), *x))
            .collect()
    }
    fn norm(&self, a: &Vec<Int>) -> Result<NormValue> {
        WeightedFreeModule::norm(self, a)
    }
    fn base_ring(&self) -> RingDescriptor {
        self.ring
    }
}

/// An element of `M0 ⊗_R M1` for weighted free modules, as its coefficient
/// matrix on the basis pairs. Equal matrices are equal tensors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorElement {
    pub left: WeightedFreeModule,
    pub right: WeightedFreeModule,
    coeffs: Vec<Vec<Int>>,
}

#[derive(Serialize)]
struct TensorJson<'a> {
    ring: RingDescriptor,
    left: &'a [String],
    right: &'a [String],
    matrix: &'a [Vec<Int>],
}

impl Serialize for TensorElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TensorJson {
            ring: self.left.ring,
            left: &self.left.labels,
            right: &self.right.labels,
            matrix: &self.coeffs,
        }
        .serialize(s)
    }
}

impl TensorElement {
    pub fn from_matrix(
        left: WeightedFreeModule,
        right: WeightedFreeModule,
        m: Vec<Vec<Int>>,
    ) -> Result<Self> {
        if left.ring != right.ring {
            return Err(Error::InvalidInput(
                "tensor factors over different rings".into(),
            ));
        }
        if m.len() != left.rank() {
            return Err(Error::SizeMismatch {
                expected: left.rank(),
                got: m.len(),
            });
        }
        for row in &m {
            right.check_vec(row)?;
        }
        Ok(TensorElement {
            left,
            right,
            coeffs: m,
        })
    }

    /// `Σ u_k ⊗ v_k`.
    pub fn from_pairs(
        left: WeightedFreeModule,
        right: WeightedFreeModule,
        pairs: &[(Vec<Int>, Vec<Int>)],
    ) -> Result<Self> {
        let ring = left.ring;
        let mut m = vec![vec![0; right.rank()]; left.rank()];
        for (u, v) in pairs {
            left.check_vec(u)?;
            right.check_vec(v)?;
            for (i, a) in u.iter().enumerate() {
                for (j, b) in v.iter().enumerate() {
                    m[i][j] = ring.add(m[i][j], ring.mul(*a, *b)?)?;
                }
            }
        }
        Self::from_matrix(left, right, m)
    }

    pub fn zero(left: WeightedFreeModule, right: WeightedFreeModule) -> Self {
        let m = vec![vec![0; right.rank()]; left.rank()];
        TensorElement {
            left,
            right,
            coeffs: m,
        }
    }

    pub fn matrix(&self) -> &[Vec<Int>] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().flatten().all(|a| *a == 0)
    }

    fn int_matrix(&self) -> IntMatrix {
        IntMatrix::from_rows(self.right.rank(), &self.coeffs)
    }
}

/// `M0 ⊗ M1` for non-Archimedean weighted free modules: basis pairs with
/// product weights, in row-major order.
pub fn tensor_nonarch(
    m0: &WeightedFreeModule,
    m1: &WeightedFreeModule,
) -> Result<WeightedFreeModule> {
    if m0.mode != NormMode::NonArchimedean || m1.mode != NormMode::NonArchimedean {
        return Err(Error::ModeMismatch);
    }
    tensor_free(m0, m1)
}

fn tensor_free(m0: &WeightedFreeModule, m1: &WeightedFreeModule) -> Result<WeightedFreeModule> {
    if m0.mode != m1.mode {
        return Err(Error::ModeMismatch);
    }
    if m0.ring != m1.ring {
        return Err(Error::InvalidInput(
            "tensor factors over different rings".into(),
        ));
    }
    let mut basis = Vec::new();
    for (a, wa) in m0.labels.iter().zip(&m0.weights) {
        for (b, wb) in m1.labels.iter().zip(&m1.weights) {
            basis.push((format!("({a},{b})"), wa.mul(wb)));
        }
    }
    WeightedFreeModule::new(m0.ring, basis, m0.mode)
}

/// The non-Archimedean tensor seminorm `max ‖r_ij‖ |s_i| |t_j|`.
pub fn tensor_norm_nonarch(t: &TensorElement) -> Result<NormValue> {
    tensor_nonarch(&t.left, &t.right)?.norm(&t.coeffs.concat())
}

#[derive(Clone, Debug, Serialize)]
pub struct ArchUpperBound {
    pub value: NormValue,
    /// A representation achieving `value`.
    pub terms: Vec<(Vec<Int>, Vec<Int>)>,
    pub candidates: usize,
}

/// A representation `Σ u_k ⊗ v_k` as coordinate pairs.
type Terms = Vec<(Vec<Int>, Vec<Int>)>;

/// Largest number of short vectors enumerated per search level.
const MAX_LEVEL_VECTORS: usize = 4096;
/// Largest number of factorizations tried per search level and side.
const MAX_LEVEL_CANDIDATES: usize = 250_000;

fn rational_norm(m: &WeightedFreeModule, v: &[Int]) -> Result<BigRational> {
    m.norm(v)?
        .as_rational()
        .ok_or_else(|| Error::UnsupportedValue(format!("irrational norm in {}", m.ring)))
}

fn cost(
    left: &WeightedFreeModule,
    right: &WeightedFreeModule,
    terms: &[(Vec<Int>, Vec<Int>)],
) -> Result<BigRational> {
    let mut total = BigRational::zero();
    for (u, v) in terms {
        total += rational_norm(left, u)? * rational_norm(right, v)?;
    }
    Ok(total)
}

/// Nonzero vectors in `[-b, b]^m` with first nonzero entry positive, ordered
/// by max-norm and then lexicographically; `None` if there are too many.
fn short_vectors(m: usize, b: i64) -> Option<Vec<Vec<Int>>> {
    let side = (2 * b + 1) as f64;
    if side.powi(m as i32) / 2.0 > MAX_LEVEL_VECTORS as f64 {
        return None;
    }
    let mut out = Vec::new();
    let mut cur = vec![-b as Int; m];
    loop {
        if let Some(first) = cur.iter().find(|x| **x != 0) {
            if *first > 0 {
                out.push(cur.clone());
            }
        }
        let mut i = m;
        loop {
            if i == 0 {
                out.sort_by_key(|v| (v.iter().map(|x| x.abs()).max(), v.clone()));
                return Some(out);
            }
            i -= 1;
            if cur[i] < b as Int {
                cur[i] += 1;
                break;
            }
            cur[i] = -b as Int;
        }
    }
}

/// Rank factorizations `T = U W` with the columns of `U` drawn from
/// `vectors`, exactly solved for integer `W`.
fn search_factorizations(
    t: &IntMatrix,
    rank: usize,
    vectors: &[Vec<Int>],
    left: &WeightedFreeModule,
    right: &WeightedFreeModule,
    transpose: bool,
    best: &mut (BigRational, Terms),
    explored: &mut usize,
) -> Result<()> {
    let n = vectors.len();
    if rank == 0 || rank > n {
        return Ok(());
    }
    // each term costs at least ‖u_k‖ times the gap of the other factor
    let norms: Vec<BigRational> = vectors
        .iter()
        .map(|v| rational_norm(left, v))
        .collect::<Result<_>>()?;
    let gap = right
        .isolation_gap()
        .as_rational()
        .unwrap_or_else(BigRational::zero);
    let mut idx: Vec<usize> = (0..rank).collect();
    let mut tried = 0;
    loop {
        tried += 1;
        *explored += 1;
        let floor: BigRational = idx.iter().map(|&i| &norms[i]).sum::<BigRational>() * &gap;
        if floor >= best.0 {
            if tried >= MAX_LEVEL_CANDIDATES || !next_combination(&mut idx, n) {
                return Ok(());
            }
            continue;
        }
        let cols: Vec<&Vec<Int>> = idx.iter().map(|&i| &vectors[i]).collect();
        let u = IntMatrix::from_fn(t.rows(), rank, |r, k| BigInt::from(cols[k][r]));
        let smith = u.smith();
        if smith.rank == rank {
            let mut w: Vec<Vec<Int>> = vec![Vec::with_capacity(t.cols()); rank];
            let mut ok = true;
            for j in 0..t.cols() {
                match smith.solve(&t.column(j)) {
                    Some(sol) => {
                        for (k, x) in sol.iter().enumerate() {
                            match x.to_i128() {
                                Some(x) => w[k].push(x),
                                None => ok = false,
                            }
                        }
                    }
                    None => ok = false,
                }
                if !ok {
                    break;
                }
            }
            if ok {
                let terms: Vec<(Vec<Int>, Vec<Int>)> = cols
                    .iter()
                    .zip(w)
                    .map(|(u, w)| {
                        if transpose {
                            (w, (*u).clone())
                        } else {
                            ((*u).clone(), w)
                        }
                    })
                    .collect();
                let c = if transpose {
                    cost(right, left, &terms)?
                } else {
                    cost(left, right, &terms)?
                };
                if c < best.0 {
                    *best = (c, terms);
                }
            }
        }
        if tried >= MAX_LEVEL_CANDIDATES || !next_combination(&mut idx, n) {
            return Ok(());
        }
    }
}

/// Advances `idx` to the next `idx.len()`-subset of `0..n` in lexicographic
/// order; false once exhausted.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let rank = idx.len();
    let mut i = rank;
    while i > 0 {
        i -= 1;
        if idx[i] < n - rank + i {
            idx[i] += 1;
            for k in i + 1..rank {
                idx[k] = idx[k - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// An upper bound for the Archimedean tensor seminorm
/// `inf Σ ‖u_k‖ ‖v_k‖`: the best of the elementary, row and column
/// decompositions and of rank factorizations whose short factor has entries
/// in `[-b, b]` for every level `b ≤ budget`. Nonincreasing in `budget`.
pub fn tensor_elem_norm_arch_upper(t: &TensorElement, budget: u32) -> Result<ArchUpperBound> {
    let (left, right) = (&t.left, &t.right);
    if !left.ring.is_integers() {
        return Err(Error::UnsupportedRing(format!(
            "{} (integer coefficients required)",
            left.ring
        )));
    }
    let (m, n) = (left.rank(), right.rank());
    let unit = |k: usize, len: usize| -> Vec<Int> { (0..len).map(|i| Int::from(i == k)).collect() };
    let mut candidates: Vec<Vec<(Vec<Int>, Vec<Int>)>> = Vec::new();
    let mut elementary = Vec::new();
    for i in 0..m {
        for j in 0..n {
            let a = t.coeffs[i][j];
            if a != 0 {
                let mut v = vec![0; n];
                v[j] = a;
                elementary.push((unit(i, m), v));
            }
        }
    }
    candidates.push(elementary);
    candidates.push(
        (0..m)
            .filter(|&i| t.coeffs[i].iter().any(|a| *a != 0))
            .map(|i| (unit(i, m), t.coeffs[i].clone()))
            .collect(),
    );
    candidates.push(
        (0..n)
            .map(|j| {
                (
                    (0..m).map(|i| t.coeffs[i][j]).collect::<Vec<Int>>(),
                    unit(j, n),
                )
            })
            .filter(|(u, _)| u.iter().any(|a| *a != 0))
            .collect(),
    );
    let mut best: Option<(BigRational, Terms)> = None;
    for c in candidates {
        let v = cost(left, right, &c)?;
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, c));
        }
    }
    let mut best = best.expect("at least one candidate");
    let mat = t.int_matrix();
    let rank = mat.rank();
    let transposed = mat.transpose();
    let mut explored = 3;
    for b in 1..=budget as i64 {
        if let Some(vs) = short_vectors(m, b) {
            search_factorizations(
                &mat,
                rank,
                &vs,
                left,
                right,
                false,
                &mut best,
                &mut explored,
            )?;
        }
        if let Some(vs) = short_vectors(n, b) {
            search_factorizations(
                &transposed,
                rank,
                &vs,
                right,
                left,
                true,
                &mut best,
                &mut explored,
            )?;
        }
    }
    Ok(ArchUpperBound {
        value: NormValue::from_rational(best.0),
        terms: best.1,
        candidates: explored,
    })
}

/// Rank of the coefficient matrix over the residue fields relevant to `ring`
/// (Q for Z); a lower bound on the number of terms in any representation.
pub fn coefficient_rank(t: &TensorElement) -> usize {
    let m = t.int_matrix();
    match t.left.ring.modulus() {
        None => m.rank(),
        Some(n) => prime_factors(n)
            .into_iter()
            .map(|p| m.rank_mod_p(p))
            .max()
            .unwrap_or(0),
    }
}

/// `rank × ε0 × ε1`, where `εi` is the isolation gap of the i-th factor: any
/// representation has at least `rank` terms, each of norm at least `ε0 ε1`.
pub fn tensor_rank_lower_bound(t: &TensorElement) -> NormValue {
    let eps = t.left.isolation_gap().mul(&t.right.isolation_gap());
    NormValue::from_int(coefficient_rank(t) as u64).mul(&eps)
}

/// The absorbing map `C_fin(X, M0) ⊗ M1 → C_fin(X, M0 ⊗ M1)` for `X` with a
/// given number of quasi-components.
#[derive(Clone, Debug)]
pub struct AbsorbingMap {
    pub components: usize,
    pub m0: WeightedFreeModule,
    pub m1: WeightedFreeModule,
    /// `C_fin(X, M0)` as a blocked free module.
    pub source: WeightedFreeModule,
    /// `M0 ⊗ M1`.
    pub target: WeightedFreeModule,
}

pub fn absorbing_map(
    x: &FiniteSpace,
    m0: &WeightedFreeModule,
    m1: &WeightedFreeModule,
) -> Result<AbsorbingMap> {
    AbsorbingMap::new(x.component_count(), m0, m1)
}

impl AbsorbingMap {
    pub fn new(
        components: usize,
        m0: &WeightedFreeModule,
        m1: &WeightedFreeModule,
    ) -> Result<Self> {
        let target = tensor_free(m0, m1)?;
        Ok(AbsorbingMap {
            components,
            m0: m0.clone(),
            m1: m1.clone(),
            source: m0.functions_on(components),
            target,
        })
    }

    /// Values per component in `M0 ⊗ M1`: entry `(s, t)` at component `c` is
    /// the coefficient of `(1_c δ_s) ⊗ δ_t`.
    pub fn forward(&self, t: &TensorElement) -> Result<Vec<Vec<Int>>> {
        if t.left != self.source || t.right != self.m1 {
            return Err(Error::SpaceMismatch);
        }
        let r0 = self.m0.rank();
        Ok((0..self.components)
            .map(|c| {
                (0..r0)
                    .flat_map(|s| t.coeffs[c * r0 + s].iter().copied())
                    .collect()
            })
            .collect())
    }

    /// Sup norm of a function given by its component values.
    pub fn sup_norm(&self, values: &[Vec<Int>]) -> Result<NormValue> {
        values
            .iter()
            .try_fold(NormValue::Zero, |acc, v| Ok(acc.max(self.target.norm(v)?)))
    }

    /// As an element of `C_fin(X, M0 ⊗ M1)`.
    pub fn forward_function(
        &self,
        t: &TensorElement,
        x: Arc<FiniteSpace>,
    ) -> Result<Cfin<WeightedFreeModule>> {
        if x.component_count() != self.components {
            return Err(Error::SpaceMismatch);
        }
        Cfin::new(x, self.target.clone(), self.forward(t)?)
    }

    /// Inverse of [`AbsorbingMap::forward`], through the level-set partition:
    /// each block `U` with value `m = Σ m_st δ_s ⊗ δ_t` contributes
    /// `Σ m_st (1_U δ_s) ⊗ δ_t`.
    pub fn backward(&self, values: &[Vec<Int>]) -> Result<TensorElement> {
        if values.len() != self.components {
            return Err(Error::SizeMismatch {
                expected: self.components,
                got: values.len(),
            });
        }
        let (r0, r1) = (self.m0.rank(), self.m1.rank());
        let ring = self.m0.ring;
        let mut parts: Vec<(Vec<usize>, &Vec<Int>)> = Vec::new();
        for (c, v) in values.iter().enumerate() {
            self.target.check_vec(v)?;
            match parts.iter_mut().find(|(_, m)| *m == v) {
                Some((cs, _)) => cs.push(c),
                None => parts.push((vec![c], v)),
            }
        }
        let mut m = vec![vec![0; r1]; self.components * r0];
        for (cs, value) in parts {
            for c in cs {
                for s in 0..r0 {
                    for t in 0..r1 {
                        let row = &mut m[c * r0 + s];
                        row[t] = ring.add(row[t], value[s * r1 + t])?;
                    }
                }
            }
        }
        TensorElement::from_matrix(self.source.clone(), self.m1.clone(), m)
    }

    pub fn backward_function(&self, f: &Cfin<WeightedFreeModule>) -> Result<TensorElement> {
        if *f.coeffs() != self.target {
            return Err(Error::SpaceMismatch);
        }
        self.backward(f.values())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleReport {
    pub n: usize,
    /// `‖forward(f_n)‖`, the sup norm in `C_fin(X, M0 ⊗ M1)`.
    pub forward_norm: NormValue,
    /// Certified lower bound on the tensor seminorm of `f_n`.
    pub tensor_lower_bound: NormValue,
    pub ratio_lower_bound: NormValue,
}

/// `f_n = Σ_{i=0}^{n} 1_{{i}} ⊗ δ_i` in `C_fin({0..n}, R) ⊗ ℓ({0..n}, R)`
/// over `IntInf`. The image has sup norm `‖1‖ = 1` while every representation
/// of `f_n` has at least `n + 1` terms, so the inverse map is unbounded.
pub fn archimedean_counterexample(n: usize) -> Result<CounterexampleReport> {
    let ring = RingDescriptor::IntInf;
    let m0 = WeightedFreeModule::unit(ring, &["1"], NormMode::Archimedean);
    let labels: Vec<String> = (0..=n).map(|i| format!("d{i}")).collect();
    let m1 = WeightedFreeModule::new(
        ring,
        labels.into_iter().map(|l| (l, NormValue::one())).collect(),
        NormMode::Archimedean,
    )?;
    let map = AbsorbingMap::new(n + 1, &m0, &m1)?;
    let m: Vec<Vec<Int>> = (0..=n)
        .map(|i| (0..=n).map(|j| Int::from(i == j)).collect())
        .collect();
    let f = TensorElement::from_matrix(map.source.clone(), m1, m)?;
    let forward_norm = map.sup_norm(&map.forward(&f)?)?;
    let lower = tensor_rank_lower_bound(&f);
    let ratio = match forward_norm.as_rational() {
        Some(r) if r.is_positive() => {
            NormValue::from_rational(lower.as_rational().expect("rational bound") / r)
        }
        _ => return Err(Error::Internal("forward image vanished".into())),
    };
    Ok(CounterexampleReport {
        n,
        forward_norm,
        tensor_lower_bound: lower,
        ratio_lower_bound: ratio,
    })
}

/// A quotient `F / N` of a weighted free module by the span of relation rows,
/// with the quotient seminorm.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FinModule {
    pub ambient: WeightedFreeModule,
    pub relations: Vec<Vec<Int>>,
}

/// Cap on the representatives examined by the generic quotient-norm search.
const MAX_COSET_SEARCH: usize = 2_000_000;

impl FinModule {
    pub fn new(ambient: WeightedFreeModule, relations: Vec<Vec<Int>>) -> Result<Self> {
        for r in &relations {
            ambient.check_vec(r)?;
        }
        Ok(FinModule { ambient, relations })
    }

    pub fn free(ambient: WeightedFreeModule) -> Self {
        FinModule {
            ambient,
            relations: Vec::new(),
        }
    }

    pub fn generators(&self) -> usize {
        self.ambient.rank()
    }

    fn relation_matrix_t(&self) -> IntMatrix {
        // columns are relations
        IntMatrix::from_fn(self.generators(), self.relations.len(), |i, j| {
            BigInt::from(self.relations[j][i])
        })
    }

    /// Whether `v` lies in the relation span.
    pub fn is_zero_class(&self, v: &[Int]) -> Result<bool> {
        self.ambient.check_vec(v)?;
        if self.ambient.ring.modulus().is_some() {
            return Err(Error::UnsupportedRing(
                "class tests need an integer ambient ring".into(),
            ));
        }
        let b: Vec<BigInt> = v.iter().map(|x| BigInt::from(*x)).collect();
        if self.relations.is_empty() {
            return Ok(b.iter().all(Zero::is_zero));
        }
        Ok(self.relation_matrix_t().solve_int(&b).is_some())
    }

    pub fn same_class(&self, v: &[Int], w: &[Int]) -> Result<bool> {
        let d: Vec<Int> = v.iter().zip(w).map(|(a, b)| a - b).collect();
        self.is_zero_class(&d)
    }

    /// Relations of the form `d · e_s`, one per coordinate at most.
    fn diagonal_moduli(&self) -> Option<Vec<Int>> {
        let mut moduli = vec![0; self.generators()];
        for r in &self.relations {
            let nz: Vec<usize> = (0..r.len()).filter(|&i| r[i] != 0).collect();
            match nz[..] {
                [] => {}
                [i] if moduli[i] == 0 => moduli[i] = r[i].abs(),
                _ => return None,
            }
        }
        Some(moduli)
    }

    /// The quotient norm `inf_{n ∈ N} ‖v + n‖`. For coordinatewise relations
    /// the infimum splits over coordinates and is computed exactly; otherwise
    /// relation multiples in `[-radius, radius]` are searched.
    pub fn class_norm(&self, v: &[Int], radius: Int) -> Result<NormValue> {
        self.ambient.check_vec(v)?;
        let ring = self.ambient.ring;
        if let Some(moduli) = self.diagonal_moduli() {
            let reduced: Vec<Int> = v
                .iter()
                .zip(&moduli)
                .map(|(a, d)| {
                    if *d == 0 {
                        *a
                    } else {
                        let r = a.rem_euclid(*d);
                        // the representative of least absolute value
                        if ring == RingDescriptor::IntInf && 2 * r > *d {
                            r - d
                        } else {
                            r
                        }
                    }
                })
                .collect();
            return self.ambient.norm(&reduced);
        }
        if ring.modulus().is_none() && self.is_zero_class(v)? {
            return Ok(NormValue::Zero);
        }
        let k = self.relations.len();
        let side = (2 * radius + 1) as usize;
        if side
            .checked_pow(k as u32)
            .is_none_or(|c| c > MAX_COSET_SEARCH)
        {
            return Err(Error::SizeExceeded("quotient norm search space".into()));
        }
        let mut best = self.ambient.norm(v)?;
        let mut coef = vec![-radius; k];
        loop {
            let mut w = v.to_vec();
            for (c, r) in coef.iter().zip(&self.relations) {
                for (x, y) in w.iter_mut().zip(r) {
                    *x = ring.add(*x, ring.mul(*c, *y)?)?;
                }
            }
            best = best.min(self.ambient.norm(&w)?);
            let mut i = k;
            loop {
                if i == 0 {
                    return Ok(best);
                }
                i -= 1;
                if coef[i] < radius {
                    coef[i] += 1;
                    break;
                }
                coef[i] = -radius;
            }
        }
    }
}

/// `M / nM` together with `ℓ(S, R/n)`, the base change of `M` along `R → R/n`.
#[derive(Clone, Debug, Serialize)]
pub struct QuotientBaseChange {
    pub quotient: FinModule,
    pub free_side: WeightedFreeModule,
}

pub fn quotient_ring(ring: RingDescriptor, n: u64) -> Result<RingDescriptor> {
    match (ring, n) {
        (_, 0) => Err(Error::InvalidInput("modulus must be positive".into())),
        (RingDescriptor::IntInf | RingDescriptor::IntTriv, 1) => Ok(RingDescriptor::ZmodTriv(1)),
        (RingDescriptor::IntInf, n) => RingDescriptor::ZmodQuot(n).validated(),
        (RingDescriptor::IntTriv, n) => RingDescriptor::ZmodTriv(n).validated(),
        (r, _) => Err(Error::UnsupportedRing(format!("{r} is not a Z-variant"))),
    }
}

pub fn base_change_quotient(m: &WeightedFreeModule, n: u64) -> Result<QuotientBaseChange> {
    let target = quotient_ring(m.ring, n)?;
    let rel = (0..m.rank())
        .map(|i| {
            (0..m.rank())
                .map(|j| if i == j { n as Int } else { 0 })
                .collect()
        })
        .collect();
    Ok(QuotientBaseChange {
        quotient: FinModule::new(m.clone(), rel)?,
        free_side: m.with_ring(target),
    })
}

impl QuotientBaseChange {
    /// Compares the quotient norm of every class (residue vectors, capped at
    /// 4096) with the norm in `ℓ(S, R/n)`. Returns the number of classes.
    pub fn check_elementwise(&self) -> Result<usize> {
        let target = self.free_side.ring;
        let n = target.modulus().expect("finite ring") as Int;
        let mut checked = 0;
        for w in residue_vectors(self.free_side.rank(), n, 4096) {
            let lhs = self.quotient.class_norm(&w, 1)?;
            let rhs = self
                .free_side
                .norm(&w.iter().map(|a| target.reduce(*a)).collect::<Vec<_>>())?;
            if lhs != rhs {
                return Err(Error::Internal(format!(
                    "class {w:?}: quotient norm {lhs} vs {rhs}"
                )));
            }
            checked += 1;
        }
        Ok(checked)
    }
}

/// Vectors in `0..n` of length `len` in lexicographic order, at most `cap`.
pub fn residue_vectors(len: usize, n: Int, cap: usize) -> Vec<Vec<Int>> {
    let mut out = Vec::new();
    let mut cur = vec![0; len];
    loop {
        out.push(cur.clone());
        if out.len() >= cap {
            return out;
        }
        let mut i = len;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] + 1 < n {
                cur[i] += 1;
                break;
            }
            cur[i] = 0;
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FreeBaseChange {
    pub source: WeightedFreeModule,
    pub target: WeightedFreeModule,
    /// Basis `s ↦ 1 ⊗ δ_s ↦ δ_s`.
    pub basis_map: Vec<(String, String)>,
    pub isometric: bool,
    pub samples: usize,
}

/// `ℓ(S, R) ⊗ A ≅ ℓ(S, A)` for the supported reductions `R → A`. The
/// tensor-side norm of a residue vector is the infimum over its lifts.
pub fn free_base_change(m: &WeightedFreeModule, target: RingDescriptor) -> Result<FreeBaseChange> {
    let target = target.validated()?;
    let unsupported = || {
        Err(Error::UnsupportedHom {
            from: m.ring.to_string(),
            to: target.to_string(),
        })
    };
    match (m.ring, target) {
        (RingDescriptor::IntInf, RingDescriptor::ZmodQuot(_))
        | (RingDescriptor::IntTriv, RingDescriptor::FpTriv(_))
        | (RingDescriptor::IntTriv, RingDescriptor::ZmodTriv(_)) => {}
        _ => return unsupported(),
    }
    let n = target.modulus().expect("finite target") as Int;
    let rel = (0..m.rank())
        .map(|i| (0..m.rank()).map(|j| if i == j { n } else { 0 }).collect())
        .collect();
    let quotient = FinModule::new(m.clone(), rel)?;
    let free = m.with_ring(target);
    let mut isometric = true;
    let mut samples = 0;
    for w in residue_vectors(m.rank(), n, 4096) {
        samples += 1;
        if quotient.class_norm(&w, 1)? != free.norm(&w)? {
            isometric = false;
            break;
        }
    }
    let basis_map = m.labels.iter().map(|l| (l.clone(), l.clone())).collect();
    Ok(FreeBaseChange {
        source: m.clone(),
        target: free,
        basis_map,
        isometric,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIV: RingDescriptor = RingDescriptor::IntTriv;
    const Z: RingDescriptor = RingDescriptor::IntInf;

    fn nv(s: &str) -> NormValue {
        s.parse().unwrap()
    }

    #[test]
    fn nonarch_tensor_examples() {
        let a = WeightedFreeModule::unit(TRIV, &["a"], NormMode::NonArchimedean);
        let b = WeightedFreeModule::unit(TRIV, &["b"], NormMode::NonArchimedean);
        let ab = tensor_nonarch(&a, &b).unwrap();
        assert_eq!(ab.labels, vec!["(a,b)"]);
        assert_eq!(ab.weights, vec![NormValue::one()]);
        let m = WeightedFreeModule::unit(TRIV, &["a", "b"], NormMode::NonArchimedean);
        let c =
            WeightedFreeModule::new(TRIV, vec![("c".into(), nv("2"))], NormMode::NonArchimedean)
                .unwrap();
        assert_eq!(
            tensor_nonarch(&m, &c).unwrap().weights,
            vec![nv("2"), nv("2")]
        );
        let unit_c = WeightedFreeModule::unit(TRIV, &["c"], NormMode::NonArchimedean);
        let t = TensorElement::from_matrix(m.clone(), unit_c, vec![vec![1], vec![1]]).unwrap();
        assert_eq!(tensor_norm_nonarch(&t).unwrap(), NormValue::one());
        let arch = WeightedFreeModule::unit(Z, &["a"], NormMode::Archimedean);
        assert_eq!(tensor_nonarch(&arch, &a), Err(Error::ModeMismatch));
    }

    #[test]
    fn arch_bounds() {
        let e3 = WeightedFreeModule::unit(Z, &["e0", "e1", "e2"], NormMode::Archimedean);
        let f3 = WeightedFreeModule::unit(Z, &["f0", "f1", "f2"], NormMode::Archimedean);
        let id: Vec<Vec<Int>> = (0..3)
            .map(|i| (0..3).map(|j| Int::from(i == j)).collect())
            .collect();
        let t = TensorElement::from_matrix(e3.clone(), f3.clone(), id).unwrap();
        let ub = tensor_elem_norm_arch_upper(&t, 2).unwrap();
        assert_eq!(ub.value, nv("3"));
        assert_eq!(tensor_rank_lower_bound(&t), nv("3"));
        let z = TensorElement::zero(e3.clone(), f3.clone());
        assert_eq!(
            tensor_elem_norm_arch_upper(&z, 2).unwrap().value,
            NormValue::Zero
        );
        let a = WeightedFreeModule::unit(Z, &["a"], NormMode::Archimedean);
        let bc = WeightedFreeModule::unit(Z, &["b", "c"], NormMode::Archimedean);
        let t = TensorElement::from_pairs(a.clone(), bc.clone(), &[(vec![1], vec![1, 1])]).unwrap();
        assert_eq!(tensor_rank_lower_bound(&t), NormValue::one());
        let single =
            TensorElement::from_pairs(a.clone(), a.clone(), &[(vec![1], vec![1])]).unwrap();
        assert_eq!(
            tensor_elem_norm_arch_upper(&single, 0).unwrap().value,
            NormValue::one()
        );
    }

    #[test]
    fn blocked_search_beats_elementary() {
        // (1_{0} + 1_{1}) ⊗ δ costs 1 in C_fin(X, Z) with its sup norm, while
        // the elementary split costs 2.
        let m0 = WeightedFreeModule::unit(Z, &["1"], NormMode::Archimedean);
        let m1 = WeightedFreeModule::unit(Z, &["d"], NormMode::Archimedean);
        let map = AbsorbingMap::new(2, &m0, &m1).unwrap();
        let t = TensorElement::from_matrix(map.source.clone(), m1.clone(), vec![vec![1], vec![1]])
            .unwrap();
        let ub = tensor_elem_norm_arch_upper(&t, 1).unwrap();
        assert_eq!(ub.value, NormValue::one());
    }

    #[test]
    fn absorbing_roundtrip_and_counterexample() {
        let m0 = WeightedFreeModule::unit(TRIV, &["a", "b"], NormMode::NonArchimedean);
        let m1 = WeightedFreeModule::unit(TRIV, &["c"], NormMode::NonArchimedean);
        let map = AbsorbingMap::new(3, &m0, &m1).unwrap();
        let t = TensorElement::from_matrix(
            map.source.clone(),
            m1.clone(),
            vec![vec![1], vec![0], vec![2], vec![2], vec![0], vec![-1]],
        )
        .unwrap();
        let fw = map.forward(&t).unwrap();
        assert_eq!(fw, vec![vec![1, 0], vec![2, 2], vec![0, -1]]);
        assert_eq!(map.backward(&fw).unwrap(), t);
        assert_eq!(map.sup_norm(&fw).unwrap(), tensor_norm_nonarch(&t).unwrap());
        let r = archimedean_counterexample(5).unwrap();
        assert_eq!(r.forward_norm, NormValue::one());
        assert_eq!(r.tensor_lower_bound, NormValue::from_int(6));
    }

    #[test]
    fn quotients() {
        let a = WeightedFreeModule::unit(Z, &["a"], NormMode::Archimedean);
        let q = base_change_quotient(&a, 2).unwrap();
        assert_eq!(q.free_side.ring, RingDescriptor::ZmodQuot(2));
        let q5 = base_change_quotient(&a, 5).unwrap();
        assert_eq!(
            q5.quotient.class_norm(&[3], 1).unwrap(),
            NormValue::from_int(2)
        );
        assert_eq!(q5.check_elementwise().unwrap(), 5);
        let q1 = base_change_quotient(&a, 1).unwrap();
        assert!(q1.quotient.is_zero_class(&[7]).unwrap());
        assert_eq!(q1.free_side.ring, RingDescriptor::ZmodTriv(1));
        // generic search agrees with the coordinatewise path
        let g = FinModule::new(
            WeightedFreeModule::unit(Z, &["x", "y"], NormMode::Archimedean),
            vec![vec![5, 0], vec![0, 5], vec![5, 5]],
        )
        .unwrap();
        assert_eq!(g.class_norm(&[3, 4], 2).unwrap(), NormValue::from_int(3));
    }

    #[test]
    fn free_base_change_examples() {
        let ab = WeightedFreeModule::unit(TRIV, &["a", "b"], NormMode::NonArchimedean);
        let r = free_base_change(&ab, RingDescriptor::FpTriv(3)).unwrap();
        assert!(r.isometric);
        assert_eq!(r.samples, 9);
        let w =
            WeightedFreeModule::new(TRIV, vec![("a".into(), nv("2"))], NormMode::NonArchimedean)
                .unwrap();
        assert_eq!(
            free_base_change(&w, RingDescriptor::ZmodTriv(4))
                .unwrap()
                .target
                .weights,
            vec![nv("2")]
        );
        let z = WeightedFreeModule::unit(Z, &["a", "b"], NormMode::Archimedean);
        assert!(
            free_base_change(&z, RingDescriptor::ZmodQuot(4))
                .unwrap()
                .isometric
        );
        assert!(matches!(
            free_base_change(&z, TRIV),
            Err(Error::UnsupportedHom { .. })
        ));
        assert!(matches!(
            free_base_change(&ab, Z),
            Err(Error::UnsupportedHom { .. })
        ));
    }
}
