//! Tate–Čech complexes of finite families of closed subsets, their homology,
//! explicit sections certifying strictness, the cover/acyclicity equivalence
//! and gluing of modules along covers.

use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functions::CfinFunction;
use crate::linalg::IntMatrix;
use crate::scalars::{is_prime, Int, NormValue, RingDescriptor};
use crate::spaces::{FiniteSpace, PointSet};

pub const MAX_FAMILY: usize = 6;

/// A finite family of closed subsets of `X`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoverFamily {
    #[serde(skip)]
    pub space: Arc<FiniteSpace>,
    pub sets: Vec<PointSet>,
}

impl CoverFamily {
    pub fn new(space: Arc<FiniteSpace>, sets: Vec<PointSet>) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::InvalidInput("empty family".into()));
        }
        if sets.len() > MAX_FAMILY {
            return Err(Error::SizeExceeded(format!(
                "{} sets, at most {MAX_FAMILY}",
                sets.len()
            )));
        }
        for k in &sets {
            if !k.is_subset(space.full_set()) || !space.is_closed(*k) {
                return Err(Error::InvalidInput(format!("{k} is not a closed subset")));
            }
        }
        Ok(CoverFamily { space, sets })
    }

    pub fn union(&self) -> PointSet {
        self.sets.iter().fold(PointSet::EMPTY, |a, k| a.union(*k))
    }

    /// `K_I = ∩_{i ∈ I} K_i`.
    pub fn intersection(&self, idx: &[usize]) -> PointSet {
        idx.iter()
            .fold(self.space.full_set(), |a, &i| a.intersect(self.sets[i]))
    }
}

pub fn is_cover(x: &FiniteSpace, sets: &[PointSet]) -> bool {
    sets.iter().fold(PointSet::EMPTY, |a, k| a.union(*k)) == x.full_set()
}

/// One summand `C(K_I, R) ⊗ M` of a cochain group.
#[derive(Clone, Debug, Serialize)]
pub struct Block {
    pub indices: Vec<usize>,
    pub set: PointSet,
    /// Quasi-components of `K_I`, as subsets of `X`.
    pub components: Vec<PointSet>,
    pub offset: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainComplex {
    pub ring: RingDescriptor,
    /// Rank of the free coefficient module `M`.
    pub coefficient_rank: usize,
    pub ranks: Vec<usize>,
    pub labels: Vec<Vec<String>>,
    /// `d_k : C^k → C^{k+1}`, a `ranks[k+1] × ranks[k]` matrix.
    pub differentials: Vec<IntMatrix>,
    #[serde(skip)]
    pub blocks: Vec<Vec<Block>>,
}

fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn components_in(x: &FiniteSpace, k: PointSet) -> Result<Vec<PointSet>> {
    let (sub, incl) = x.subspace(k)?;
    Ok(sub
        .quasi_components()
        .iter()
        .map(|c| c.iter().map(|i| incl[i]).collect())
        .collect())
}

/// The Tate–Čech complex `0 → C(X) ⊗ M → ∏_i C(K_i) ⊗ M → ∏_{i<j} C(K_ij) ⊗ M → …`
/// with alternating restriction differentials; `M = R^m`.
pub fn build_tate_cech(
    family: &CoverFamily,
    ring: RingDescriptor,
    m: usize,
) -> Result<ChainComplex> {
    let x = &family.space;
    let n = family.sets.len();
    let mut blocks: Vec<Vec<Block>> = Vec::new();
    for k in 0..=n {
        let mut offset = 0;
        let mut level = Vec::new();
        for idx in subsets_of_size(n, k) {
            let set = family.intersection(&idx);
            let components = components_in(x, set)?;
            let len = components.len();
            level.push(Block {
                indices: idx,
                set,
                components,
                offset,
            });
            offset += len;
        }
        blocks.push(level);
    }
    let ranks: Vec<usize> = blocks
        .iter()
        .map(|l| l.iter().map(|b| b.components.len() * m).sum())
        .collect();
    let labels = blocks
        .iter()
        .map(|l| {
            l.iter()
                .flat_map(|b| {
                    b.components
                        .iter()
                        .flat_map(move |c| (0..m).map(move |s| format!("{:?}{}:{s}", b.indices, c)))
                })
                .collect()
        })
        .collect();
    let mut differentials = Vec::new();
    for k in 0..n {
        let (src, dst) = (&blocks[k], &blocks[k + 1]);
        let src_rank = src.iter().map(|b| b.components.len()).sum();
        let dst_rank = dst.iter().map(|b| b.components.len()).sum();
        let mut d = IntMatrix::zeros(dst_rank, src_rank);
        for target in dst {
            for (pos, _) in target.indices.iter().enumerate() {
                let face: Vec<usize> = target
                    .indices
                    .iter()
                    .enumerate()
                    .filter(|(p, _)| *p != pos)
                    .map(|(_, i)| *i)
                    .collect();
                let source = src
                    .iter()
                    .find(|b| b.indices == face)
                    .expect("faces are present");
                let sign = if pos % 2 == 0 { 1 } else { -1 };
                for (r, comp) in target.components.iter().enumerate() {
                    let c = source
                        .components
                        .iter()
                        .position(|s| comp.is_subset(*s))
                        .ok_or_else(|| Error::Internal("component not nested".into()))?;
                    let (row, col) = (target.offset + r, source.offset + c);
                    let v = d.get(row, col) + BigInt::from(sign);
                    d.set(row, col, v);
                }
            }
        }
        differentials.push(d.kron_identity(m));
    }
    for k in 1..differentials.len() {
        if !differentials[k].mul(&differentials[k - 1]).is_zero() {
            return Err(Error::Internal(format!("d_{k} . d_{} != 0", k - 1)));
        }
    }
    Ok(ChainComplex {
        ring,
        coefficient_rank: m,
        ranks,
        labels,
        differentials,
        blocks,
    })
}

impl ChainComplex {
    pub fn degrees(&self) -> usize {
        self.ranks.len()
    }

    /// `d_k`, or a zero matrix outside the built range.
    pub fn differential(&self, k: isize) -> IntMatrix {
        if k >= 0 && (k as usize) < self.differentials.len() {
            return self.differentials[k as usize].clone();
        }
        let rank = |j: isize| {
            if j >= 0 && (j as usize) < self.ranks.len() {
                self.ranks[j as usize]
            } else {
                0
            }
        };
        IntMatrix::zeros(rank(k + 1), rank(k))
    }

    /// The sup norm of a cochain: the largest coefficient-module norm over
    /// all components of all blocks.
    pub fn norm(&self, degree: usize, v: &[Int]) -> Result<NormValue> {
        let m = self.coefficient_rank.max(1);
        let mut best = NormValue::Zero;
        for chunk in v.chunks(m) {
            let mut s = NormValue::Zero;
            for a in chunk {
                let t = self.ring.norm(self.ring.reduce(*a))?;
                s = if self.ring.is_non_archimedean() {
                    s.max(t)
                } else {
                    s.add(&t)?
                };
            }
            best = best.max(s);
        }
        if v.len() != self.ranks[degree] {
            return Err(Error::SizeMismatch {
                expected: self.ranks[degree],
                got: v.len(),
            });
        }
        Ok(best)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HomologyGroup {
    pub degree: usize,
    /// Copies of `R` itself (for `Z/n`: of `Z/n`; for fields: the dimension).
    pub free_rank: usize,
    /// Orders of the remaining cyclic summands.
    #[serde(serialize_with = "serialize_orders")]
    pub torsion: Vec<BigInt>,
}

fn serialize_orders<S: serde::Serializer>(
    v: &[BigInt],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|d| d.to_string()))
}

impl HomologyGroup {
    pub fn is_zero(&self) -> bool {
        self.free_rank == 0 && self.torsion.is_empty()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HomologyReport {
    pub ring: RingDescriptor,
    pub groups: Vec<HomologyGroup>,
    pub exact: bool,
}

/// Integral cohomology: `(free rank, torsion)` per degree.
fn integral_homology(c: &ChainComplex) -> Vec<(usize, Vec<BigInt>)> {
    let smiths: Vec<_> = c.differentials.iter().map(|d| d.smith()).collect();
    let rank = |k: isize| {
        if k >= 0 && (k as usize) < smiths.len() {
            smiths[k as usize].rank
        } else {
            0
        }
    };
    (0..c.degrees())
        .map(|k| {
            let free = c.ranks[k] - rank(k as isize) - rank(k as isize - 1);
            let torsion = if k >= 1 {
                smiths[k - 1].torsion()
            } else {
                Vec::new()
            };
            (free, torsion)
        })
        .collect()
}

/// Per-degree cohomology of the complex over its ring. Over `Z/n` this uses
/// `H^k(C ⊗ Z/n) ≅ H^k(C) ⊗ Z/n ⊕ Tor(H^{k+1}(C), Z/n)` for the underlying
/// free complex over `Z`.
pub fn exactness(c: &ChainComplex) -> Result<HomologyReport> {
    let groups: Vec<HomologyGroup> = match c.ring.modulus() {
        None => integral_homology(c)
            .into_iter()
            .enumerate()
            .map(|(degree, (free_rank, torsion))| HomologyGroup {
                degree,
                free_rank,
                torsion,
            })
            .collect(),
        Some(p) if is_prime(p) => {
            let ranks: Vec<usize> = c.differentials.iter().map(|d| d.rank_mod_p(p)).collect();
            let rank = |k: isize| {
                if k >= 0 && (k as usize) < ranks.len() {
                    ranks[k as usize]
                } else {
                    0
                }
            };
            (0..c.degrees())
                .map(|k| HomologyGroup {
                    degree: k,
                    free_rank: c.ranks[k] - rank(k as isize) - rank(k as isize - 1),
                    torsion: Vec::new(),
                })
                .collect()
        }
        Some(1) => (0..c.degrees())
            .map(|k| HomologyGroup {
                degree: k,
                free_rank: 0,
                torsion: Vec::new(),
            })
            .collect(),
        Some(n) => {
            let n = BigInt::from(n);
            let hz = integral_homology(c);
            (0..c.degrees())
                .map(|k| {
                    let mut free_rank = hz[k].0;
                    let mut torsion = Vec::new();
                    let tor_next = hz.get(k + 1).map(|h| h.1.clone()).unwrap_or_default();
                    for d in hz[k].1.iter().chain(&tor_next) {
                        let g = d.gcd(&n);
                        if g == n {
                            free_rank += 1;
                        } else if !g.is_one() {
                            torsion.push(g);
                        }
                    }
                    torsion.sort();
                    HomologyGroup {
                        degree: k,
                        free_rank,
                        torsion,
                    }
                })
                .collect()
        }
    };
    let exact = groups.iter().all(HomologyGroup::is_zero);
    Ok(HomologyReport {
        ring: c.ring,
        groups,
        exact,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TateReport {
    pub ring: RingDescriptor,
    pub is_cover: bool,
    pub exact: bool,
    pub zero_ring: bool,
    pub homology: Vec<HomologyGroup>,
    /// On non-covers over a nonzero ring: a nonzero function vanishing on
    /// every member of the family.
    pub witness: Option<CfinFunction>,
}

/// Runs the cover test and the homology computation independently and
/// checks `(cover or R = 0) ⟺ exact`.
pub fn tate_equivalence_report(family: &CoverFamily, ring: RingDescriptor) -> Result<TateReport> {
    let x = &family.space;
    if !x.is_discrete() {
        return Err(Error::NotTotallyDisconnected);
    }
    let cover = is_cover(x, &family.sets);
    let h = exactness(&build_tate_cech(family, ring, 1)?)?;
    let zero_ring = ring.is_zero_ring();
    if (cover || zero_ring) != h.exact {
        return Err(Error::EquivalenceViolation {
            is_cover: cover,
            exact: h.exact,
        });
    }
    let witness = if cover || zero_ring {
        None
    } else {
        Some(descent_faithful_witness(family, ring)?)
    };
    Ok(TateReport {
        ring,
        is_cover: cover,
        exact: h.exact,
        zero_ring,
        homology: h.groups,
        witness,
    })
}

/// The indicator of the first quasi-component missing the union of the
/// family: nonzero, yet restricting to zero on every member.
pub fn descent_faithful_witness(
    family: &CoverFamily,
    ring: RingDescriptor,
) -> Result<CfinFunction> {
    let x = &family.space;
    if is_cover(x, &family.sets) {
        return Err(Error::IsCover);
    }
    if ring.is_zero_ring() {
        return Err(Error::UnsupportedRing(format!("{ring} is the zero ring")));
    }
    let union = family.union();
    let comp = x
        .quasi_components()
        .iter()
        .find(|c| !c.meets(union))
        .ok_or(Error::NotTotallyDisconnected)?;
    CfinFunction::indicator(x.clone(), ring, *comp)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SectionKind {
    /// Zero extension along `C(X) → C(K)`.
    Restriction,
    /// The differential is an identity.
    Identity,
    /// `f = Σ_i 1_{V_i} h_i` over the pieces `V_0 = K_0`, `V_1 = K_1 \ K_0`.
    SumSplit,
    /// `(s f)_I(x) = ± f_{{i(x)} ∪ I}(x)` with `i(x)` the first set containing `x`.
    Contraction,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageSection {
    /// Section of `d_degree : C^degree → ker d_{degree+1}`.
    pub degree: usize,
    pub kind: SectionKind,
    /// `ranks[degree] × ranks[degree+1]`.
    pub matrix: IntMatrix,
    pub constant: NormValue,
    /// Largest observed `‖s v‖ / ‖v‖` over the checked kernel vectors.
    pub observed: NormValue,
}

fn is_identity_matrix(m: &IntMatrix) -> bool {
    m.rows() == m.cols() && m.is_identity()
}

fn contraction(c: &ChainComplex, family: &CoverFamily, k: usize) -> IntMatrix {
    // s_k : C^{k+1} → C^k on a discrete space, one point per component
    let m = c.coefficient_rank;
    let first = |x: usize| family.sets.iter().position(|s| s.contains(x));
    let mut s = IntMatrix::zeros(c.ranks[k] / m.max(1), c.ranks[k + 1] / m.max(1));
    for block in &c.blocks[k] {
        for (r, comp) in block.components.iter().enumerate() {
            let x = comp.min_point().expect("nonempty component");
            let Some(i) = first(x) else { continue };
            if block.indices.contains(&i) {
                continue;
            }
            let mut bigger = block.indices.clone();
            let pos = bigger.partition_point(|&j| j < i);
            bigger.insert(pos, i);
            let target = c.blocks[k + 1]
                .iter()
                .find(|b| b.indices == bigger)
                .expect("all subsets present");
            let col = target
                .components
                .iter()
                .position(|t| t.contains(x))
                .expect("x lies in K_I and K_i");
            let sign = if pos % 2 == 0 { 1 } else { -1 };
            s.set(block.offset + r, target.offset + col, BigInt::from(sign));
        }
    }
    s.kron_identity(m)
}

fn small_vec(v: &[BigInt]) -> Result<Vec<Int>> {
    v.iter()
        .map(|x| x.to_i128().ok_or(Error::Overflow))
        .collect()
}

fn reduce_vec(ring: RingDescriptor, v: &[BigInt]) -> Vec<BigInt> {
    match ring.modulus() {
        None => v.to_vec(),
        Some(n) => v.iter().map(|x| x.mod_floor(&BigInt::from(n))).collect(),
    }
}

/// Explicit sections of every stage `C^k → ker d_{k+1}` with their norm
/// constants, verified on a kernel basis: `d_k s_k = id` on `ker d_{k+1}`,
/// `‖s_k v‖ ≤ C ‖v‖`, and `s_0 d_0 = id` when the family covers `X`.
pub fn strict_sections(c: &ChainComplex, family: &CoverFamily) -> Result<Vec<StageSection>> {
    let x = &family.space;
    if !x.is_discrete() {
        return Err(Error::NotTotallyDisconnected);
    }
    let h = exactness(c)?;
    if let Some(g) = h.groups.iter().skip(1).find(|g| !g.is_zero()) {
        return Err(Error::NoSection(g.degree - 1));
    }
    let n = family.sets.len();
    let mut out = Vec::new();
    for k in 0..c.differentials.len() {
        let d = &c.differentials[k];
        let (kind, matrix, constant) = if is_identity_matrix(d) {
            (SectionKind::Identity, d.clone(), NormValue::one())
        } else if n == 1 {
            (SectionKind::Restriction, d.transpose(), NormValue::one())
        } else if n == 2 && k == 0 {
            let pieces = [family.sets[0], family.sets[1].minus(family.sets[0])];
            let nonempty = pieces.iter().filter(|p| !p.is_empty()).count().max(1);
            (
                SectionKind::SumSplit,
                contraction(c, family, 0),
                NormValue::from_int(nonempty as u64),
            )
        } else {
            (
                SectionKind::Contraction,
                contraction(c, family, k),
                NormValue::one(),
            )
        };
        let next = c.differential(k as isize + 1);
        let mut observed = NormValue::Zero;
        let kernel: Vec<Vec<BigInt>> = if next.rows() == 0 {
            (0..c.ranks[k + 1])
                .map(|i| (0..c.ranks[k + 1]).map(|j| BigInt::from(i == j)).collect())
                .collect()
        } else {
            next.kernel_basis()
        };
        // kernel vectors, their pairwise sums and differences
        let mut samples = kernel.clone();
        for (a, b) in kernel.iter().zip(kernel.iter().skip(1)) {
            samples.push(a.iter().zip(b).map(|(x, y)| x + y).collect());
            samples.push(a.iter().zip(b).map(|(x, y)| x - y).collect());
        }
        for v in &samples {
            let v = reduce_vec(c.ring, v);
            let sv = reduce_vec(c.ring, &matrix.mul_vec(&v));
            if reduce_vec(c.ring, &d.mul_vec(&sv)) != v {
                return Err(Error::ValidationFailure {
                    law: format!("d_{k} s_{k} = id on ker d_{}", k + 1),
                    witness: format!("{v:?}"),
                });
            }
            let nv = c.norm(k + 1, &small_vec(&v)?)?;
            let ns = c.norm(k, &small_vec(&sv)?)?;
            if ns > constant.mul(&nv) {
                return Err(Error::ValidationFailure {
                    law: format!("section bound at degree {k}"),
                    witness: format!("{v:?}"),
                });
            }
            if let (Some(a), Some(b)) = (ns.as_rational(), nv.as_rational()) {
                if !b.is_zero() {
                    observed = observed.max(NormValue::from_rational(a / b));
                }
            }
        }
        out.push(StageSection {
            degree: k,
            kind,
            matrix,
            constant,
            observed,
        });
    }
    if is_cover(x, &family.sets) && !c.ring.is_zero_ring() {
        if let Some(s0) = out.first() {
            let sd = s0.matrix.mul(&c.differentials[0]);
            let ident = IntMatrix::identity(c.ranks[0]);
            if let Some(nm) = c.ring.modulus() {
                let nm = BigInt::from(nm);
                if sd.reduce_mod(&nm) != ident.reduce_mod(&nm) {
                    return Err(Error::ValidationFailure {
                        law: "s_0 d_0 = id".into(),
                        witness: String::new(),
                    });
                }
            } else if sd != ident {
                return Err(Error::ValidationFailure {
                    law: "s_0 d_0 = id".into(),
                    witness: String::new(),
                });
            }
        }
    }
    Ok(out)
}

/// A module over `C_fin(X, R)` on a discrete space, given by free stalks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StalkModule {
    pub set: PointSet,
    /// Stalk rank at each point of `set`, in increasing point order.
    pub ranks: Vec<usize>,
}

impl StalkModule {
    pub fn rank_at(&self, x: usize) -> Option<usize> {
        self.set.iter().position(|y| y == x).map(|i| self.ranks[i])
    }
}

/// `φ_ij(x)`: the identification of piece `j`'s stalk with piece `i`'s at a
/// point of `K_i ∩ K_j`, for `i < j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Transition {
    pub i: usize,
    pub j: usize,
    pub point: usize,
    pub matrix: IntMatrix,
}

#[derive(Clone, Debug, Serialize)]
pub struct GluedModule {
    pub ring: RingDescriptor,
    pub stalk_ranks: Vec<usize>,
    /// The piece each stalk is taken from: the first set containing the point.
    pub source_piece: Vec<usize>,
    /// `ψ_j(x)`: piece `j`'s stalk at `x` to the glued stalk, per piece.
    pub identifications: Vec<Vec<(usize, IntMatrix)>>,
}

impl GluedModule {
    /// The restriction to piece `j`, as stalk ranks.
    pub fn restrict(&self, set: PointSet) -> StalkModule {
        StalkModule {
            set,
            ranks: set.iter().map(|x| self.stalk_ranks[x]).collect(),
        }
    }
}

fn reduce_matrix(ring: RingDescriptor, m: &IntMatrix) -> IntMatrix {
    match ring.modulus() {
        Some(n) => m.reduce_mod(&BigInt::from(n)),
        None => m.clone(),
    }
}

fn is_invertible(ring: RingDescriptor, m: &IntMatrix) -> bool {
    if m.rows() != m.cols() {
        return false;
    }
    let det = m.determinant();
    match ring.modulus() {
        None => det.abs().is_one(),
        Some(n) => det
            .mod_floor(&BigInt::from(n))
            .gcd(&BigInt::from(n))
            .is_one(),
    }
}

/// Glues stalk modules on the members of a cover along the transitions,
/// checking invertibility and the cocycle condition `φ_ij φ_jk = φ_ik`.
pub fn glue_modules(
    family: &CoverFamily,
    ring: RingDescriptor,
    pieces: &[StalkModule],
    transitions: &[Transition],
) -> Result<GluedModule> {
    let x = &family.space;
    if !x.is_discrete() {
        return Err(Error::NotTotallyDisconnected);
    }
    if !is_cover(x, &family.sets) {
        return Err(Error::NotCover);
    }
    if pieces.len() != family.sets.len() {
        return Err(Error::SizeMismatch {
            expected: family.sets.len(),
            got: pieces.len(),
        });
    }
    for (p, k) in pieces.iter().zip(&family.sets) {
        if p.set != *k || p.ranks.len() != k.len() {
            return Err(Error::InvalidInput(format!(
                "piece over {} does not match {k}",
                p.set
            )));
        }
    }
    let n = pieces.len();
    let lookup = |i: usize, j: usize, x: usize| -> Result<IntMatrix> {
        if i == j {
            let r = pieces[i].rank_at(x).expect("point in piece");
            return Ok(IntMatrix::identity(r));
        }
        let (a, b, inv) = if i < j { (i, j, false) } else { (j, i, true) };
        let t = transitions
            .iter()
            .find(|t| t.i == a && t.j == b && t.point == x)
            .ok_or_else(|| Error::InvalidInput(format!("missing transition ({a},{b}) at {x}")))?;
        if !inv {
            return Ok(t.matrix.clone());
        }
        let r = t.matrix.rows();
        // inverse over the ring: adjugate scaled by the inverse determinant
        let inv = match ring.modulus() {
            None => t
                .matrix
                .inverse_int()
                .ok_or_else(|| Error::InvalidInput("transition not invertible".into()))?,
            Some(nm) => {
                let nm = BigInt::from(nm);
                let q = t
                    .matrix
                    .inverse_rational()
                    .ok_or_else(|| Error::InvalidInput("transition not invertible".into()))?;
                let det = t.matrix.determinant();
                let det_inv = det.mod_floor(&nm).extended_gcd(&nm).x;
                IntMatrix::from_fn(r, r, |a, b| {
                    ((&q[a][b] * num_rational::BigRational::from_integer(det.clone())).to_integer()
                        * &det_inv)
                        .mod_floor(&nm)
                })
            }
        };
        Ok(inv)
    };
    for t in transitions {
        let both = family.sets[t.i].intersect(family.sets[t.j]);
        if t.i >= t.j || t.j >= n || !both.contains(t.point) {
            return Err(Error::InvalidInput(format!(
                "transition ({},{}) at {} off the overlap",
                t.i, t.j, t.point
            )));
        }
        let (ri, rj) = (
            pieces[t.i].rank_at(t.point).unwrap(),
            pieces[t.j].rank_at(t.point).unwrap(),
        );
        if t.matrix.rows() != ri || t.matrix.cols() != rj || !is_invertible(ring, &t.matrix) {
            return Err(Error::InvalidInput(format!(
                "transition ({},{}) at {} is not invertible",
                t.i, t.j, t.point
            )));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                for x in family.intersection(&[i, j, k]).iter() {
                    let lhs = reduce_matrix(ring, &lookup(i, j, x)?.mul(&lookup(j, k, x)?));
                    if lhs != reduce_matrix(ring, &lookup(i, k, x)?) {
                        return Err(Error::CocycleViolation { i, j, k, point: x });
                    }
                }
            }
        }
    }
    let points = x.points();
    let source_piece: Vec<usize> = (0..points)
        .map(|x| family.sets.iter().position(|s| s.contains(x)).unwrap())
        .collect();
    let stalk_ranks: Vec<usize> = (0..points)
        .map(|x| pieces[source_piece[x]].rank_at(x).unwrap())
        .collect();
    let mut identifications = Vec::new();
    for (j, k) in family.sets.iter().enumerate() {
        let ids = k
            .iter()
            .map(|x| Ok((x, reduce_matrix(ring, &lookup(source_piece[x], j, x)?))))
            .collect::<Result<Vec<_>>>()?;
        identifications.push(ids);
    }
    let glued = GluedModule {
        ring,
        stalk_ranks,
        source_piece,
        identifications,
    };
    // round trip: restricting recovers each piece, compatibly with φ
    for (j, p) in pieces.iter().enumerate() {
        if glued.restrict(p.set) != *p {
            return Err(Error::Internal(format!("restriction to piece {j} differs")));
        }
        for (x, psi) in &glued.identifications[j] {
            if !is_invertible(ring, psi) {
                return Err(Error::Internal(format!(
                    "identification of piece {j} at {x} not invertible"
                )));
            }
            for (i, _) in family
                .sets
                .iter()
                .enumerate()
                .filter(|(_, s)| s.contains(*x))
            {
                let psi_i = &glued.identifications[i]
                    .iter()
                    .find(|(y, _)| y == x)
                    .unwrap()
                    .1;
                let lhs = reduce_matrix(ring, &psi_i.mul(&lookup(i, j, *x)?));
                if lhs != *psi {
                    return Err(Error::Internal(format!("identifications disagree at {x}")));
                }
            }
        }
    }
    Ok(glued)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(p: &[usize]) -> PointSet {
        p.iter().copied().collect()
    }

    fn fam(n: usize, sets: &[&[usize]]) -> CoverFamily {
        CoverFamily::new(
            Arc::new(FiniteSpace::discrete(n).unwrap()),
            sets.iter().map(|s| set(s)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn ranks_and_homology() {
        let c = build_tate_cech(&fam(3, &[&[0, 1, 2]]), RingDescriptor::IntInf, 1).unwrap();
        assert_eq!(c.ranks, vec![3, 3]);
        assert!(c.differentials[0].is_identity());
        let c = build_tate_cech(&fam(3, &[&[0, 1], &[1, 2]]), RingDescriptor::IntInf, 1).unwrap();
        assert_eq!(c.ranks, vec![3, 4, 1]);
        assert!(exactness(&c).unwrap().exact);
        let c = build_tate_cech(&fam(2, &[&[0]]), RingDescriptor::IntInf, 1).unwrap();
        assert_eq!(c.differentials[0].kernel_basis().len(), 1);
        let h =
            exactness(&build_tate_cech(&fam(3, &[&[0, 1]]), RingDescriptor::IntInf, 1).unwrap())
                .unwrap();
        assert_eq!(h.groups[0].free_rank, 1);
    }

    #[test]
    fn witnesses() {
        let r = tate_equivalence_report(&fam(2, &[&[0]]), RingDescriptor::IntInf).unwrap();
        assert_eq!(r.witness.unwrap().point_values(), vec![0, 1]);
        let w = descent_faithful_witness(&fam(3, &[&[0], &[1]]), RingDescriptor::IntInf).unwrap();
        assert_eq!(w.point_values(), vec![0, 0, 1]);
        assert_eq!(
            descent_faithful_witness(&fam(2, &[&[0, 1]]), RingDescriptor::IntInf),
            Err(Error::IsCover)
        );
        let z = tate_equivalence_report(&fam(2, &[&[0]]), RingDescriptor::ZmodTriv(1)).unwrap();
        assert!(z.exact && z.zero_ring && z.witness.is_none());
        assert!(!is_cover(
            &FiniteSpace::discrete(1).unwrap(),
            &[PointSet::EMPTY]
        ));
    }

    #[test]
    fn sections() {
        let f = fam(3, &[&[0, 1], &[1, 2]]);
        let c = build_tate_cech(&f, RingDescriptor::IntInf, 1).unwrap();
        let s = strict_sections(&c, &f).unwrap();
        assert_eq!(s[0].kind, SectionKind::SumSplit);
        assert_eq!(s[0].constant, NormValue::from_int(2));
        assert!(s.iter().all(|t| t.observed <= t.constant));
        let f = fam(2, &[&[0]]);
        let c = build_tate_cech(&f, RingDescriptor::IntInf, 1).unwrap();
        let s = strict_sections(&c, &f).unwrap();
        assert_eq!(s[0].kind, SectionKind::Restriction);
        let f = fam(2, &[&[0, 1]]);
        let c = build_tate_cech(&f, RingDescriptor::IntTriv, 1).unwrap();
        assert_eq!(
            strict_sections(&c, &f).unwrap()[0].kind,
            SectionKind::Identity
        );
    }

    #[test]
    fn gluing() {
        let ring = RingDescriptor::IntInf;
        let f = fam(3, &[&[0, 1], &[1, 2]]);
        let pieces = [
            StalkModule {
                set: set(&[0, 1]),
                ranks: vec![1, 1],
            },
            StalkModule {
                set: set(&[1, 2]),
                ranks: vec![1, 1],
            },
        ];
        let flip = Transition {
            i: 0,
            j: 1,
            point: 1,
            matrix: IntMatrix::from_rows(1, &[vec![-1]]),
        };
        let g = glue_modules(&f, ring, &pieces, &[flip]).unwrap();
        assert_eq!(g.stalk_ranks, vec![1, 1, 1]);
        assert_eq!(
            g.identifications[1][0].1,
            IntMatrix::from_rows(1, &[vec![-1]])
        );
        let f3 = fam(2, &[&[0, 1], &[0, 1], &[0, 1]]);
        let p = StalkModule {
            set: set(&[0, 1]),
            ranks: vec![1, 1],
        };
        let m = |k: Int| IntMatrix::from_rows(1, &[vec![k]]);
        let ts: Vec<Transition> = [
            (0, 1, 0, -1),
            (1, 2, 0, -1),
            (0, 2, 0, -1),
            (0, 1, 1, 1),
            (1, 2, 1, 1),
            (0, 2, 1, 1),
        ]
        .iter()
        .map(|&(i, j, point, k)| Transition {
            i,
            j,
            point,
            matrix: m(k),
        })
        .collect();
        assert_eq!(
            glue_modules(&f3, ring, &[p.clone(), p.clone(), p], &ts).unwrap_err(),
            Error::CocycleViolation {
                i: 0,
                j: 1,
                k: 2,
                point: 0
            }
        );
    }
}
