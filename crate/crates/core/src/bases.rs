//! Idempotent bases of locally constant functions (partitions, van der Put
//! families, generalised van der Put families on ultrametric spaces), their
//! unimodularity certificates, and the Mahler (binomial) basis on `Z/p^k`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functions::CfinFunction;
use crate::linalg::IntMatrix;
use crate::scalars::{is_prime, Int, NormValue, RingDescriptor};
use crate::spaces::{ball_tree, FiniteSpace, PointSet, UltrametricSpace};

pub const MAX_LEVEL_POINTS: u64 = 4096;
pub const MAX_MAHLER_POINTS: u64 = 1024;
/// Largest basis whose determinant is computed by general elimination.
pub const MAX_DENSE: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BasisKind {
    Partition,
    VanDerPut,
    GeneralisedVdP,
    Mahler,
    Custom,
}

/// A basis of functions on a finite set of ζ-points: indicators of clopen
/// sets, or the binomial functions `x ↦ C(x, n)` for `n < N`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BasisFamily {
    pub kind: BasisKind,
    /// Where the functions live, e.g. `Z/4` or `space(3)`.
    pub domain: String,
    /// Number of ζ-points; basis elements are evaluated at `0..points`.
    pub points: usize,
    /// Clopens as sorted arrays of ζ-points (empty for binomial bases).
    pub sets: Vec<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub binomial_degree: Option<usize>,
}

fn binomial_rows(n: usize) -> Vec<Vec<BigInt>> {
    // rows[x][k] = C(x, k)
    let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for x in 0..n {
        let mut row = vec![BigInt::zero(); n];
        row[0] = BigInt::one();
        for k in 1..=x.min(n - 1) {
            row[k] = &rows[x - 1][k - 1] + &rows[x - 1][k];
        }
        rows.push(row);
    }
    rows
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    (0..k).fold(BigInt::one(), |acc, i| {
        acc * BigInt::from(n - i) / BigInt::from(i + 1)
    })
}

impl BasisFamily {
    pub fn len(&self) -> usize {
        self.binomial_degree.unwrap_or(self.sets.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row `U`, column `x`: the value of the `U`-th basis function at `x`.
    pub fn evaluation_matrix(&self) -> IntMatrix {
        match self.binomial_degree {
            Some(d) => {
                let rows = binomial_rows(self.points.max(d));
                IntMatrix::from_fn(d, self.points, |n, x| rows[x][n].clone())
            }
            None => {
                let mut m = IntMatrix::zeros(self.sets.len(), self.points);
                for (i, s) in self.sets.iter().enumerate() {
                    for &x in s {
                        m.set(i, x, BigInt::one());
                    }
                }
                m
            }
        }
    }

    /// The determinant of the evaluation matrix.
    pub fn determinant(&self) -> Result<BigInt> {
        if self.len() != self.points {
            return Err(Error::SizeMismatch {
                expected: self.points,
                got: self.len(),
            });
        }
        if let Some(d) = self.fast_determinant() {
            return Ok(d);
        }
        if self.points > MAX_DENSE {
            return Err(Error::SizeExceeded(format!(
                "{} points without a triangular certificate",
                self.points
            )));
        }
        Ok(self.evaluation_matrix().determinant())
    }

    /// Triangular certificates: distinct set minima forming a permutation
    /// make the matrix unitriangular after reordering rows; binomial bases are
    /// triangular with unit diagonal.
    fn fast_determinant(&self) -> Option<BigInt> {
        if self.binomial_degree.is_some() {
            return Some(BigInt::one());
        }
        let mins: Vec<usize> = self
            .sets
            .iter()
            .map(|s| s.first().copied())
            .collect::<Option<_>>()?;
        let mut seen = vec![false; self.points];
        for &m in &mins {
            if m >= self.points || seen[m] {
                return None;
            }
            seen[m] = true;
        }
        Some(BigInt::from(permutation_sign(&mins)))
    }

    pub fn certificate(&self) -> Result<UnimodularCertificate> {
        let determinant = self.determinant()?;
        Ok(UnimodularCertificate {
            unimodular: determinant.abs().is_one(),
            determinant,
        })
    }

    /// `e0 e1 ∈ {e0, e1, 0}` for every pair, i.e. members are nested or disjoint.
    pub fn pairwise_products_ok(&self) -> bool {
        let sets: Vec<Vec<usize>> = self.sets.clone();
        sets.iter().enumerate().all(|(i, a)| {
            sets[i + 1..].iter().all(|b| {
                let inter: Vec<usize> = a
                    .iter()
                    .filter(|x| b.binary_search(x).is_ok())
                    .copied()
                    .collect();
                inter.is_empty() || inter == *a || inter == *b
            })
        })
    }
}

fn permutation_sign(perm: &[usize]) -> i32 {
    let mut seen = vec![false; perm.len()];
    let mut sign = 1;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnimodularCertificate {
    #[serde(serialize_with = "crate::bases::serialize_big")]
    pub determinant: BigInt,
    pub unimodular: bool,
}

pub(crate) fn serialize_big<S: serde::Serializer>(
    v: &BigInt,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match v.to_i64() {
        Some(i) => s.serialize_i64(i),
        None => s.serialize_str(&v.to_string()),
    }
}

fn component_sets(x: &FiniteSpace, sets: &[PointSet]) -> Result<Vec<Vec<usize>>> {
    sets.iter()
        .map(|&u| {
            if !x.is_clopen(u) {
                return Err(Error::NotClopen(u.to_string()));
            }
            Ok(x.components_meeting(u).to_vec())
        })
        .collect()
}

/// Indicators of the quasi-components: a permutation matrix.
pub fn partition_basis(x: &FiniteSpace) -> BasisFamily {
    let n = x.component_count();
    BasisFamily {
        kind: BasisKind::Partition,
        domain: format!("space({})", x.points()),
        points: n,
        sets: (0..n).map(|c| vec![c]).collect(),
        binomial_degree: None,
    }
}

/// Singletons of a finite discrete set of `n` points.
pub fn partition_points(n: usize, domain: &str) -> BasisFamily {
    BasisFamily {
        kind: BasisKind::Partition,
        domain: domain.into(),
        points: n,
        sets: (0..n).map(|c| vec![c]).collect(),
        binomial_degree: None,
    }
}

/// Determinant of the evaluation matrix of clopens on the ζ-points of `X`.
pub fn is_unimodular_basis(x: &FiniteSpace, f: &[PointSet]) -> Result<UnimodularCertificate> {
    let n = x.component_count();
    if f.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: f.len(),
        });
    }
    let fam = BasisFamily {
        kind: BasisKind::Custom,
        domain: format!("space({})", x.points()),
        points: n,
        sets: component_sets(x, f)?,
        binomial_degree: None,
    };
    fam.certificate()
}

/// As a basis family on the ζ-points of `X`.
pub fn clopen_family(x: &FiniteSpace, f: &[PointSet], kind: BasisKind) -> Result<BasisFamily> {
    Ok(BasisFamily {
        kind,
        domain: format!("space({})", x.points()),
        points: x.component_count(),
        sets: component_sets(x, f)?,
        binomial_degree: None,
    })
}

fn level_size(p: u64, k: u32, cap: u64) -> Result<u64> {
    if !is_prime(p) {
        return Err(Error::InvalidInput(format!("{p} is not prime")));
    }
    match p.checked_pow(k) {
        Some(n) if n <= cap => Ok(n),
        _ => Err(Error::SizeExceeded(format!("{p}^{k} exceeds {cap}"))),
    }
}

/// `{Z/p^k} ∪ {x ≡ n mod p^j : 1 ≤ n < p^k, p^j the least power above n}`,
/// ordered by `n`; the `n`-th set has minimum `n`.
pub fn vdp_basis_level(p: u64, k: u32) -> Result<BasisFamily> {
    let size = level_size(p, k, MAX_LEVEL_POINTS)?;
    let mut sets = vec![(0..size as usize).collect::<Vec<_>>()];
    for n in 1..size {
        let mut q = p;
        while q <= n {
            q *= p;
        }
        sets.push((n..size).step_by(q as usize).map(|x| x as usize).collect());
    }
    Ok(BasisFamily {
        kind: BasisKind::VanDerPut,
        domain: format!("Z/{size}"),
        points: size as usize,
        sets,
        binomial_degree: None,
    })
}

/// The whole space and every ball of the ball tree that is not the child
/// containing its parent's least point, ordered by least point.
pub fn generalised_vdp(u: &UltrametricSpace) -> BasisFamily {
    let tree = ball_tree(u);
    let mut sets: Vec<PointSet> = vec![tree.root().points];
    for node in &tree.nodes {
        sets.extend(node.children.iter().skip(1).map(|&c| tree.nodes[c].points));
    }
    sets.sort_by_key(|s| s.min_point());
    BasisFamily {
        kind: BasisKind::GeneralisedVdP,
        domain: format!("ultrametric({})", u.points()),
        points: u.points(),
        sets: sets.iter().map(|s| s.to_vec()).collect(),
        binomial_degree: None,
    }
}

/// `x ↦ C(x, n)` for `n < p^k` on `Z/p^k` represented by `0..p^k`.
pub fn mahler_family(p: u64, k: u32) -> Result<BasisFamily> {
    let size = level_size(p, k, MAX_MAHLER_POINTS)? as usize;
    Ok(BasisFamily {
        kind: BasisKind::Mahler,
        domain: format!("Z/{size}"),
        points: size,
        sets: Vec::new(),
        binomial_degree: Some(size),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CoefficientNorm {
    /// The norm of the coefficient ring.
    Ring,
    /// `|a|_p = p^{-v_p(a)}` on integers.
    Padic(u64),
}

#[derive(Clone, Debug, Serialize)]
pub struct Expansion {
    pub coefficients: Vec<Int>,
    pub sup_norm: NormValue,
    pub max_coefficient: NormValue,
    /// `max |a_U| = ‖f‖`, checked when the coefficient norm is
    /// non-Archimedean; `None` otherwise.
    pub orthonormal: Option<bool>,
}

fn padic_norm(p: u64, a: Int) -> NormValue {
    if a == 0 {
        return NormValue::Zero;
    }
    let (mut a, mut v) = (a.unsigned_abs(), 0u32);
    while a % p as u128 == 0 {
        a /= p as u128;
        v += 1;
    }
    NormValue::from_rational(BigRational::new(BigInt::one(), BigInt::from(p).pow(v)))
}

/// The unique `a` with `Σ_U a_U 1_U = f` for values `f` on the ζ-points.
pub fn vdp_expand(
    values: &[Int],
    ring: RingDescriptor,
    family: &BasisFamily,
    norm: CoefficientNorm,
) -> Result<Expansion> {
    if values.len() != family.points || family.len() != family.points {
        return Err(Error::SizeMismatch {
            expected: family.points,
            got: values.len(),
        });
    }
    values.iter().try_for_each(|v| ring.check(*v))?;
    let cert = family.certificate()?;
    if !cert.unimodular {
        return Err(Error::ValidationFailure {
            law: "unimodular basis".into(),
            witness: cert.determinant.to_string(),
        });
    }
    let coefficients = solve_unitriangular(family, values)?;
    let coefficients: Vec<Int> = coefficients.into_iter().map(|a| ring.reduce(a)).collect();
    let nv = |a: Int| -> Result<NormValue> {
        match norm {
            CoefficientNorm::Ring => ring.norm(a),
            CoefficientNorm::Padic(p) => Ok(padic_norm(p, a)),
        }
    };
    let sup_norm = values
        .iter()
        .try_fold(NormValue::Zero, |m, v| Ok::<_, Error>(m.max(nv(*v)?)))?;
    let max_coefficient = coefficients
        .iter()
        .try_fold(NormValue::Zero, |m, v| Ok::<_, Error>(m.max(nv(*v)?)))?;
    let non_arch = match norm {
        CoefficientNorm::Ring => ring.is_non_archimedean(),
        CoefficientNorm::Padic(_) => true,
    };
    let orthonormal = non_arch.then(|| sup_norm == max_coefficient);
    Ok(Expansion {
        coefficients,
        sup_norm,
        max_coefficient,
        orthonormal,
    })
}

/// Expansion of a function on a finite space in a family on its ζ-points.
pub fn vdp_expand_function(f: &CfinFunction, family: &BasisFamily) -> Result<Expansion> {
    if family.points != f.space().component_count() {
        return Err(Error::SizeMismatch {
            expected: f.space().component_count(),
            got: family.points,
        });
    }
    vdp_expand(f.values(), f.ring(), family, CoefficientNorm::Ring)
}

/// Solves `Σ_U a_U e_U(x) = f(x)` over Z.
fn solve_unitriangular(family: &BasisFamily, values: &[Int]) -> Result<Vec<Int>> {
    let n = family.points;
    if family.binomial_degree.is_some() {
        return mahler_coeffs(&values.iter().map(|v| BigInt::from(*v)).collect::<Vec<_>>())
            .iter()
            .map(|a| a.to_i128().ok_or(Error::Overflow))
            .collect();
    }
    if family.fast_determinant().is_some() {
        // row with minimum m is the only one whose set starts at m: solve by
        // increasing minimum, since sets with minimum > x do not contain x
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| family.sets[i][0]);
        let mut a = vec![0 as Int; n];
        let mut partial = vec![0 as Int; n];
        for &i in &order {
            let m = family.sets[i][0];
            let c = values[m].checked_sub(partial[m]).ok_or(Error::Overflow)?;
            a[i] = c;
            for &x in &family.sets[i] {
                partial[x] = partial[x].checked_add(c).ok_or(Error::Overflow)?;
            }
        }
        return Ok(a);
    }
    let mt = family.evaluation_matrix().transpose();
    let sol = mt
        .solve_int(&values.iter().map(|v| BigInt::from(*v)).collect::<Vec<_>>())
        .ok_or_else(|| Error::Internal("unimodular system without integer solution".into()))?;
    sol.iter()
        .map(|a| a.to_i128().ok_or(Error::Overflow))
        .collect()
}

/// Forward differences `a_n = Σ_j (-1)^{n-j} C(n, j) f(j)`.
pub fn mahler_coeffs(values: &[BigInt]) -> Vec<BigInt> {
    let mut row = values.to_vec();
    let mut out = Vec::with_capacity(values.len());
    while !row.is_empty() {
        out.push(row[0].clone());
        row = row.windows(2).map(|w| &w[1] - &w[0]).collect();
    }
    out
}

/// The same, reduced into `0..m`.
pub fn mahler_coeffs_mod(values: &[BigInt], m: &BigInt) -> Vec<BigInt> {
    mahler_coeffs(values)
        .into_iter()
        .map(|a| ((a % m) + m) % m)
        .collect()
}

/// `Σ_n a_n C(x, n)`.
pub fn mahler_eval(coeffs: &[BigInt], x: u64) -> BigInt {
    coeffs
        .iter()
        .enumerate()
        .map(|(n, a)| a * binomial(x, n as u64))
        .sum()
}

/// `Σ_{j=0}^{i} (-1)^{n-j} C(i, j) C(j, n)`, which is `C(i, n) (1 - 1)^{i-n}`.
pub fn mahler_pairing(n: u64, i: u64) -> BigInt {
    (0..=i)
        .map(|j| {
            let t = binomial(i, j) * binomial(j, n);
            if (n + j).is_multiple_of(2) {
                t
            } else {
                -t
            }
        })
        .sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct MahlerCertificate {
    pub p: u64,
    pub k: u32,
    pub size: usize,
    pub lower_unitriangular: bool,
    #[serde(serialize_with = "serialize_big")]
    pub determinant: BigInt,
}

/// `[C(i, n)]_{0 ≤ i, n < p^k}` is lower unitriangular, so its determinant is 1.
pub fn mahler_level_unimodular(p: u64, k: u32) -> Result<MahlerCertificate> {
    let size = level_size(p, k, MAX_MAHLER_POINTS)? as usize;
    let rows = binomial_rows(size);
    let lower_unitriangular =
        (0..size).all(|i| rows[i][i].is_one() && rows[i][i + 1..].iter().all(Zero::is_zero));
    let determinant = if lower_unitriangular {
        (0..size).fold(BigInt::one(), |acc, i| acc * &rows[i][i])
    } else {
        IntMatrix::from_fn(size, size, |i, j| rows[i][j].clone()).determinant()
    };
    Ok(MahlerCertificate {
        p,
        k,
        size,
        lower_unitriangular,
        determinant,
    })
}

/// `T` with `E_F = T E_G`: row `U` of `T` expresses `F`'s `U`-th element in
/// the basis `G`.
pub fn basis_change_matrix(f: &BasisFamily, g: &BasisFamily) -> Result<IntMatrix> {
    if f.points != g.points || f.domain != g.domain {
        return Err(Error::SizeMismatch {
            expected: g.points,
            got: f.points,
        });
    }
    if f.points > MAX_DENSE {
        return Err(Error::SizeExceeded(format!("{} points", f.points)));
    }
    for fam in [f, g] {
        let c = fam.certificate()?;
        if !c.unimodular {
            return Err(Error::ValidationFailure {
                law: "unimodular basis".into(),
                witness: c.determinant.to_string(),
            });
        }
    }
    let eg_inv = g
        .evaluation_matrix()
        .inverse_int()
        .ok_or_else(|| Error::Internal("unimodular without inverse".into()))?;
    Ok(f.evaluation_matrix().mul(&eg_inv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn ps(v: &[usize]) -> PointSet {
        v.iter().copied().collect()
    }

    #[test]
    fn partition_and_custom() {
        let d3 = FiniteSpace::discrete(3).unwrap();
        assert_eq!(partition_basis(&d3).sets, vec![vec![0], vec![1], vec![2]]);
        assert_eq!(
            partition_basis(&FiniteSpace::sierpinski()).sets,
            vec![vec![0]]
        );
        let c = is_unimodular_basis(&d3, &[ps(&[0, 1, 2]), ps(&[1]), ps(&[2])]).unwrap();
        assert!(c.unimodular);
        let c = is_unimodular_basis(&d3, &[ps(&[0, 1, 2]), ps(&[0]), ps(&[0])]).unwrap();
        assert_eq!(c.determinant, BigInt::zero());
        assert!(matches!(
            is_unimodular_basis(&d3, &[ps(&[0])]),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn vdp_levels() {
        assert_eq!(
            vdp_basis_level(2, 1).unwrap().sets,
            vec![vec![0, 1], vec![1]]
        );
        let f = vdp_basis_level(2, 2).unwrap();
        assert_eq!(f.sets, vec![vec![0, 1, 2, 3], vec![1, 3], vec![2], vec![3]]);
        assert!(f.determinant().unwrap().abs().is_one());
        assert_eq!(f.evaluation_matrix().determinant().abs(), BigInt::one());
        assert!(vdp_basis_level(2, 13).is_err());
        assert!(
            vdp_basis_level(2, 12)
                .unwrap()
                .certificate()
                .unwrap()
                .unimodular
        );
    }

    #[test]
    fn generalised() {
        let r = |n: i64| Ratio::from_integer(n);
        let u = UltrametricSpace::new(
            3,
            vec![
                vec![r(0), r(1), r(2)],
                vec![r(1), r(0), r(2)],
                vec![r(2), r(2), r(0)],
            ],
        )
        .unwrap();
        let g = generalised_vdp(&u);
        assert_eq!(g.sets, vec![vec![0, 1, 2], vec![1], vec![2]]);
        assert!(g.pairwise_products_ok());
        assert!(g.certificate().unwrap().unimodular);
        let two = UltrametricSpace::new(2, vec![vec![r(0), r(1)], vec![r(1), r(0)]]).unwrap();
        assert_eq!(generalised_vdp(&two).sets, vec![vec![0, 1], vec![1]]);
    }

    #[test]
    fn mahler() {
        let b = |v: &[i64]| v.iter().map(|x| BigInt::from(*x)).collect::<Vec<_>>();
        assert_eq!(mahler_coeffs(&b(&[0, 1, 2, 3])), b(&[0, 1, 0, 0]));
        assert_eq!(mahler_coeffs(&b(&[0, 1, 4, 9])), b(&[0, 1, 2, 0]));
        assert_eq!(mahler_coeffs(&b(&[0, 0, 1, 3, 6])), b(&[0, 0, 1, 0, 0]));
        assert_eq!(mahler_pairing(2, 2), BigInt::one());
        assert_eq!(mahler_pairing(2, 5), BigInt::zero());
        assert_eq!(mahler_pairing(3, 1), BigInt::zero());
        let c = mahler_level_unimodular(2, 2).unwrap();
        assert!(c.lower_unitriangular && c.determinant.is_one());
        assert!(mahler_level_unimodular(2, 11).is_err());
    }

    #[test]
    fn expansions_and_change_of_basis() {
        let d3 = FiniteSpace::discrete(3).unwrap();
        let p = partition_basis(&d3);
        let e = vdp_expand(
            &[1, 1, 1],
            RingDescriptor::IntTriv,
            &p,
            CoefficientNorm::Ring,
        )
        .unwrap();
        assert_eq!(e.coefficients, vec![1, 1, 1]);
        let v = vdp_basis_level(3, 1).unwrap();
        let e = vdp_expand(
            &[2, 0, 1],
            RingDescriptor::FpTriv(3),
            &v,
            CoefficientNorm::Ring,
        )
        .unwrap();
        assert_eq!(e.orthonormal, Some(true));
        let e = vdp_expand(
            &[0, 1, 1, 1],
            RingDescriptor::IntInf,
            &vdp_basis_level(2, 2).unwrap(),
            CoefficientNorm::Ring,
        )
        .unwrap();
        assert_eq!(e.coefficients, vec![0, 1, 1, 0]);
        let t = basis_change_matrix(&partition_points(2, "Z/2"), &vdp_basis_level(2, 1).unwrap())
            .unwrap();
        assert_eq!(t, IntMatrix::from_rows(2, &[vec![1, -1], vec![0, 1]]));
        let t = basis_change_matrix(
            &vdp_basis_level(2, 2).unwrap(),
            &mahler_family(2, 2).unwrap(),
        )
        .unwrap();
        assert!(t.determinant().abs().is_one());
        let same = vdp_basis_level(2, 2).unwrap();
        assert!(basis_change_matrix(&same, &same).unwrap().is_identity());
    }
}
