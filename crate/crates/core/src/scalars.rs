//! Normed rings isolated at zero and exact norm values.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ring elements. Every supported ring is a quotient of Z, so elements are
/// plain integers; Z/n elements are kept reduced in `0..n`.
pub type Int = i128;

/// A nonnegative real of the form `base^exp` with rational base and exponent,
/// or zero. Values with `exp` in {0, 1} are rational.
#[derive(Clone, Debug)]
pub enum NormValue {
    Zero,
    Pow { base: BigRational, exp: BigRational },
}

fn ratio_pow(r: &BigRational, e: &BigInt) -> BigRational {
    let e = e.to_i32().expect("exponent too large for exact arithmetic");
    r.pow(e)
}

fn exact_root(r: &BigRational, q: &BigInt) -> Option<BigRational> {
    let q = q.to_u32()?;
    let n = r.numer().nth_root(q);
    let d = r.denom().nth_root(q);
    if n.pow(q) == *r.numer() && d.pow(q) == *r.denom() {
        Some(BigRational::new(n, d))
    } else {
        None
    }
}

impl NormValue {
    pub fn zero() -> Self {
        NormValue::Zero
    }

    pub fn one() -> Self {
        NormValue::Pow {
            base: BigRational::one(),
            exp: BigRational::zero(),
        }
    }

    pub fn from_int(v: impl Into<BigInt>) -> Self {
        Self::from_rational(BigRational::from_integer(v.into()).abs())
    }

    /// A nonnegative rational.
    pub fn from_rational(r: BigRational) -> Self {
        assert!(!r.is_negative(), "norm values are nonnegative");
        if r.is_zero() {
            NormValue::Zero
        } else {
            Self::normalize(r, BigRational::one())
        }
    }

    pub fn from_ratio_i64(r: Ratio<i64>) -> Self {
        Self::from_rational(BigRational::new((*r.numer()).into(), (*r.denom()).into()))
    }

    /// `base^exp`; fails unless `base > 0` and `exp >= 0`.
    pub fn pow(base: BigRational, exp: BigRational) -> Result<Self> {
        if !base.is_positive() || exp.is_negative() {
            return Err(Error::UnsupportedValue(format!("{base}^({exp})")));
        }
        Ok(Self::normalize(base, exp))
    }

    fn normalize(base: BigRational, exp: BigRational) -> Self {
        if exp.is_zero() || base.is_one() {
            return Self::one();
        }
        let (mut base, mut exp) = (base, exp);
        if !exp.is_integer() {
            if let Some(root) = exact_root(&base, exp.denom()) {
                base = root;
                exp = BigRational::from_integer(exp.numer().clone());
            }
        }
        if exp.is_integer() {
            base = ratio_pow(&base, exp.numer());
            exp = BigRational::one();
            if base.is_one() {
                return Self::one();
            }
        }
        NormValue::Pow { base, exp }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, NormValue::Zero)
    }

    pub fn is_one(&self) -> bool {
        matches!(self, NormValue::Pow { exp, .. } if exp.is_zero())
    }

    /// The value as a rational, when it is one.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self {
            NormValue::Zero => Some(BigRational::zero()),
            NormValue::Pow { base, exp } if exp.is_zero() => {
                debug_assert!(base.is_one());
                Some(BigRational::one())
            }
            NormValue::Pow { base, exp } if exp.is_one() => Some(base.clone()),
            _ => None,
        }
    }

    /// Raise to a nonnegative rational power.
    pub fn pow_rational(&self, e: &BigRational) -> Result<Self> {
        if e.is_negative() {
            return Err(Error::UnsupportedValue(format!("negative exponent {e}")));
        }
        Ok(match self {
            NormValue::Zero if e.is_zero() => Self::one(),
            NormValue::Zero => NormValue::Zero,
            NormValue::Pow { base, exp } => Self::normalize(base.clone(), exp * e),
        })
    }

    /// Exact product. Distinct exponents are brought to a common root.
    pub fn mul(&self, other: &Self) -> Self {
        match (self, other) {
            (NormValue::Zero, _) | (_, NormValue::Zero) => NormValue::Zero,
            (NormValue::Pow { base: b1, exp: e1 }, NormValue::Pow { base: b2, exp: e2 }) => {
                if e1 == e2 {
                    return Self::normalize(b1 * b2, e1.clone());
                }
                let l = e1.denom().lcm(e2.denom());
                let k1 = e1.numer() * (&l / e1.denom());
                let k2 = e2.numer() * (&l / e2.denom());
                let base = ratio_pow(b1, &k1) * ratio_pow(b2, &k2);
                Self::normalize(base, BigRational::new(BigInt::one(), l))
            }
        }
    }

    /// Sum of two rational values; irrational operands are rejected.
    pub fn add(&self, other: &Self) -> Result<Self> {
        match (self.as_rational(), other.as_rational()) {
            (Some(a), Some(b)) => Ok(Self::from_rational(a + b)),
            _ => Err(Error::UnsupportedValue(format!("sum {self} + {other}"))),
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Floating approximation for human-readable summaries only.
    pub fn to_f64(&self) -> f64 {
        match self {
            NormValue::Zero => 0.0,
            NormValue::Pow { base, exp } => base
                .to_f64()
                .unwrap_or(f64::NAN)
                .powf(exp.to_f64().unwrap_or(f64::NAN)),
        }
    }

    /// Write the value as `p^t` for a given prime `p`, if possible.
    pub fn log_base(&self, p: u64) -> Option<BigRational> {
        let NormValue::Pow { base, exp } = self else {
            return None;
        };
        if exp.is_zero() {
            return Some(BigRational::zero());
        }
        let pb = BigInt::from(p);
        let strip = |x: &BigInt| -> Option<i64> {
            let mut x = x.clone();
            let mut k = 0i64;
            while (&x % &pb).is_zero() {
                x /= &pb;
                k += 1;
            }
            x.is_one().then_some(k)
        };
        let k = strip(base.numer())? - strip(base.denom())?;
        Some(exp * BigRational::from_integer(k.into()))
    }
}

/// Total order of the represented reals.
pub fn nv_compare(u: &NormValue, v: &NormValue) -> Ordering {
    match (u, v) {
        (NormValue::Zero, NormValue::Zero) => Ordering::Equal,
        (NormValue::Zero, _) => Ordering::Less,
        (_, NormValue::Zero) => Ordering::Greater,
        (NormValue::Pow { base: b1, exp: e1 }, NormValue::Pow { base: b2, exp: e2 }) => {
            // b1^(p1/q1) vs b2^(p2/q2): raise both sides to q1*q2 and strip the
            // common factor of the resulting exponents.
            let mut a = e1.numer() * e2.denom();
            let mut c = e2.numer() * e1.denom();
            let g = a.gcd(&c);
            if !g.is_zero() {
                a /= &g;
                c /= &g;
            }
            ratio_pow(b1, &a).cmp(&ratio_pow(b2, &c))
        }
    }
}

impl PartialEq for NormValue {
    fn eq(&self, other: &Self) -> bool {
        nv_compare(self, other) == Ordering::Equal
    }
}
impl Eq for NormValue {}
impl PartialOrd for NormValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for NormValue {
    fn cmp(&self, other: &Self) -> Ordering {
        nv_compare(self, other)
    }
}

fn fmt_ratio(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for NormValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormValue::Zero => write!(f, "0"),
            NormValue::Pow { exp, .. } if exp.is_zero() => write!(f, "1"),
            NormValue::Pow { base, exp } if exp.is_one() => write!(f, "{}", fmt_ratio(base)),
            NormValue::Pow { base, exp } if base.is_integer() => {
                write!(f, "{}^({})", base.numer(), fmt_ratio(exp))
            }
            NormValue::Pow { base, exp } => write!(f, "({})^({})", fmt_ratio(base), fmt_ratio(exp)),
        }
    }
}

fn parse_ratio(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(BigRational::new(n.trim().parse().ok()?, d))
        }
        None => Some(BigRational::from_integer(s.parse().ok()?)),
    }
}

impl FromStr for NormValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("cannot parse norm value {s:?}"));
        let s = s.trim();
        if let Some((b, e)) = s.split_once('^') {
            let b = b.trim().trim_start_matches('(').trim_end_matches(')');
            let e = e.trim().trim_start_matches('(').trim_end_matches(')');
            NormValue::pow(
                parse_ratio(b).ok_or_else(bad)?,
                parse_ratio(e).ok_or_else(bad)?,
            )
        } else {
            let r = parse_ratio(s).ok_or_else(bad)?;
            if r.is_negative() {
                return Err(bad());
            }
            Ok(NormValue::from_rational(r))
        }
    }
}

impl Serialize for NormValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for NormValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Serde helpers for `Ratio<i64>` written as an integer or a `"p/q"` string.
pub mod ratio_serde {
    use num_rational::Ratio;
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(i64),
        Str(String),
    }

    pub fn to_string(r: &Ratio<i64>) -> String {
        if r.is_integer() {
            r.numer().to_string()
        } else {
            format!("{}/{}", r.numer(), r.denom())
        }
    }

    pub fn parse(s: &str) -> Option<Ratio<i64>> {
        let s = s.trim();
        match s.split_once('/') {
            Some((n, d)) => {
                let d: i64 = d.trim().parse().ok()?;
                if d == 0 {
                    return None;
                }
                Some(Ratio::new(n.trim().parse().ok()?, d))
            }
            None => Some(Ratio::from_integer(s.parse().ok()?)),
        }
    }

    pub fn serialize<S: Serializer>(r: &Ratio<i64>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_string(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Ratio<i64>, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Int(v) => Ok(Ratio::from_integer(v)),
            Raw::Str(s) => {
                parse(&s).ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}")))
            }
        }
    }
}

/// The supported normed rings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawRing", into = "RawRing")]
pub enum RingDescriptor {
    /// Z with the Euclidean absolute value.
    IntInf,
    /// Z with the trivial norm.
    IntTriv,
    /// F_p with the trivial norm.
    FpTriv(u64),
    /// Z/n with the trivial norm; n = 1 is the zero ring.
    ZmodTriv(u64),
    /// Z/n with the quotient norm from `IntInf`.
    ZmodQuot(u64),
}

#[derive(Serialize, Deserialize)]
struct RawRing {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<u64>,
}

impl From<RingDescriptor> for RawRing {
    fn from(r: RingDescriptor) -> Self {
        let (kind, p, n) = match r {
            RingDescriptor::IntInf => ("IntInf", None, None),
            RingDescriptor::IntTriv => ("IntTriv", None, None),
            RingDescriptor::FpTriv(p) => ("FpTriv", Some(p), None),
            RingDescriptor::ZmodTriv(n) => ("ZmodTriv", None, Some(n)),
            RingDescriptor::ZmodQuot(n) => ("ZmodQuot", None, Some(n)),
        };
        RawRing {
            kind: kind.into(),
            p,
            n,
        }
    }
}

impl TryFrom<RawRing> for RingDescriptor {
    type Error = Error;

    fn try_from(raw: RawRing) -> Result<Self> {
        let need = |v: Option<u64>, field: &str| {
            v.ok_or_else(|| Error::InvalidInput(format!("{} requires field {field}", raw.kind)))
        };
        let ring = match raw.kind.as_str() {
            "IntInf" => RingDescriptor::IntInf,
            "IntTriv" => RingDescriptor::IntTriv,
            "FpTriv" => RingDescriptor::FpTriv(need(raw.p, "p")?),
            "ZmodTriv" => RingDescriptor::ZmodTriv(need(raw.n, "n")?),
            "ZmodQuot" => RingDescriptor::ZmodQuot(need(raw.n, "n")?),
            other => return Err(Error::UnsupportedRing(other.to_string())),
        };
        ring.validated()
    }
}

impl FromStr for RingDescriptor {
    type Err = Error;

    /// Accepts `IntInf`, `IntTriv`, `FpTriv(3)`, `ZmodTriv(6)`, `ZmodQuot(5)`
    /// (a colon also works as separator, e.g. `ZmodQuot:5`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, arg) = match s.find(['(', ':']) {
            Some(i) => (&s[..i], Some(s[i + 1..].trim_end_matches(')').trim())),
            None => (s, None),
        };
        let arg = match arg {
            Some(a) => Some(
                a.parse::<u64>()
                    .map_err(|_| Error::InvalidInput(format!("bad ring parameter in {s:?}")))?,
            ),
            None => None,
        };
        let is_mod = matches!(kind, "FpTriv");
        RawRing {
            kind: kind.to_string(),
            p: if is_mod { arg } else { None },
            n: if is_mod { None } else { arg },
        }
        .try_into()
    }
}

impl fmt::Display for RingDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RingDescriptor::IntInf => write!(f, "IntInf"),
            RingDescriptor::IntTriv => write!(f, "IntTriv"),
            RingDescriptor::FpTriv(p) => write!(f, "FpTriv({p})"),
            RingDescriptor::ZmodTriv(n) => write!(f, "ZmodTriv({n})"),
            RingDescriptor::ZmodQuot(n) => write!(f, "ZmodQuot({n})"),
        }
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Distinct prime factors in increasing order.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Largest modulus accepted for finite rings; keeps products inside i128.
pub const MAX_MODULUS: u64 = 1 << 40;

impl RingDescriptor {
    /// Checks the parameters: p prime, n >= 2 (n >= 1 for `ZmodTriv`).
    pub fn validated(self) -> Result<Self> {
        let ok = match self {
            RingDescriptor::IntInf | RingDescriptor::IntTriv => true,
            RingDescriptor::FpTriv(p) => is_prime(p) && p <= MAX_MODULUS,
            RingDescriptor::ZmodTriv(n) => (1..=MAX_MODULUS).contains(&n),
            RingDescriptor::ZmodQuot(n) => (2..=MAX_MODULUS).contains(&n),
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::UnsupportedRing(format!("{self}: invalid parameter")))
        }
    }

    /// Modulus of the underlying ring, `None` for Z.
    pub fn modulus(&self) -> Option<u64> {
        match *self {
            RingDescriptor::IntInf | RingDescriptor::IntTriv => None,
            RingDescriptor::FpTriv(n)
            | RingDescriptor::ZmodTriv(n)
            | RingDescriptor::ZmodQuot(n) => Some(n),
        }
    }

    pub fn is_integers(&self) -> bool {
        self.modulus().is_none()
    }

    pub fn is_zero_ring(&self) -> bool {
        self.modulus() == Some(1)
    }

    pub fn is_non_archimedean(&self) -> bool {
        match *self {
            RingDescriptor::IntInf => false,
            RingDescriptor::ZmodQuot(n) => n <= 3,
            _ => true,
        }
    }

    pub fn is_ordered(&self) -> bool {
        matches!(self, RingDescriptor::IntInf | RingDescriptor::IntTriv)
    }

    /// Lower bound for the norm of nonzero elements.
    pub fn isolation_gap(&self) -> NormValue {
        NormValue::one()
    }

    pub fn one_norm(&self) -> NormValue {
        if self.is_zero_ring() {
            NormValue::Zero
        } else {
            NormValue::one()
        }
    }

    /// Declared connectedness of the Berkovich spectrum: Z and local rings Z/p^k.
    pub fn is_spectrum_connected(&self) -> bool {
        match self.modulus() {
            None => true,
            Some(n) => prime_factors(n).len() == 1,
        }
    }

    /// Nontrivial idempotents of the underlying ring.
    pub fn idempotents(&self) -> Vec<Int> {
        match self.modulus() {
            Some(n) if n > 2 && n <= 1 << 20 => {
                let n = n as Int;
                (2..n).filter(|e| (e * e) % n == *e).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Canonical representative of an arbitrary integer.
    pub fn reduce(&self, a: Int) -> Int {
        match self.modulus() {
            None => a,
            Some(n) => a.rem_euclid(n as Int),
        }
    }

    pub fn check(&self, a: Int) -> Result<()> {
        match self.modulus() {
            Some(n) if a < 0 || a >= n as Int => Err(Error::ElementOutOfRange {
                element: a.to_string(),
                ring: self.to_string(),
            }),
            _ => Ok(()),
        }
    }

    pub fn add(&self, a: Int, b: Int) -> Result<Int> {
        Ok(self.reduce(a.checked_add(b).ok_or(Error::Overflow)?))
    }

    pub fn sub(&self, a: Int, b: Int) -> Result<Int> {
        Ok(self.reduce(a.checked_sub(b).ok_or(Error::Overflow)?))
    }

    pub fn mul(&self, a: Int, b: Int) -> Result<Int> {
        Ok(self.reduce(a.checked_mul(b).ok_or(Error::Overflow)?))
    }

    pub fn neg(&self, a: Int) -> Int {
        self.reduce(-a)
    }

    pub fn one(&self) -> Int {
        self.reduce(1)
    }

    pub fn is_unit(&self, a: Int) -> bool {
        match self.modulus() {
            None => a == 1 || a == -1,
            Some(n) => a.gcd(&(n as Int)) == 1,
        }
    }

    /// The norm as an integer; every supported norm is integer valued.
    pub fn norm_int(&self, a: Int) -> Result<Int> {
        self.check(a)?;
        Ok(match *self {
            RingDescriptor::IntInf => a.checked_abs().ok_or(Error::Overflow)?,
            RingDescriptor::ZmodQuot(n) => a.min(n as Int - a),
            _ => Int::from(a != 0),
        })
    }

    pub fn norm(&self, a: Int) -> Result<NormValue> {
        Ok(NormValue::from_int(self.norm_int(a)?))
    }

    /// Sample elements: `0, 1, -1, 2, -2, ..., ±bound` for Z, all residues
    /// (up to 4096 of them) otherwise.
    pub fn sample(&self, bound: Int) -> Vec<Int> {
        match self.modulus() {
            None => std::iter::once(0)
                .chain((1..=bound).flat_map(|a| [a, -a]))
                .collect(),
            Some(n) => (0..(n as Int).min(4096)).collect(),
        }
    }
}

/// Quotient norm on Z/n induced by the Euclidean norm.
pub fn quotient_norm(n: u64, a: Int) -> Result<NormValue> {
    RingDescriptor::ZmodQuot(n).validated()?.norm(a)
}

pub fn norm(r: &RingDescriptor, a: Int) -> Result<NormValue> {
    r.norm(a)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TriangleLaw {
    Strong,
    Ordinary,
}

#[derive(Clone, Debug, Serialize)]
pub struct RingReport {
    pub ring: RingDescriptor,
    pub sample_size: usize,
    pub pairs_checked: usize,
    pub multiplicative: bool,
    pub triangle: TriangleLaw,
    pub isolation_gap: NormValue,
    pub one_norm: NormValue,
}

/// Checks the normed-ring axioms on all pairs from `R.sample(bound)`.
pub fn validate_ring(r: &RingDescriptor, sample_bound: Int) -> Result<RingReport> {
    if sample_bound < 2 {
        return Err(Error::InvalidInput(
            "sample bound must be at least 2".into(),
        ));
    }
    let fail = |law: &str, a: Int, b: Int| {
        Err(Error::ValidationFailure {
            law: law.into(),
            witness: format!("({a}, {b})"),
        })
    };
    let sample = r.sample(sample_bound);
    let gap = r.isolation_gap();
    let non_arch = r.is_non_archimedean();
    let mut multiplicative = true;
    let mut strong_holds = true;
    let mut pairs = 0;
    for &a in &sample {
        let na = r.norm(a)?;
        if na.is_zero() != (a == 0) {
            return fail("definiteness", a, a);
        }
        if a != 0 && na < gap && !r.is_zero_ring() {
            return fail("isolation", a, a);
        }
        for &b in &sample {
            pairs += 1;
            let nb = r.norm(b)?;
            let prod = r.norm(r.mul(a, b)?)?;
            let bound = na.mul(&nb);
            match prod.cmp(&bound) {
                Ordering::Greater => return fail("submultiplicativity", a, b),
                Ordering::Less => multiplicative = false,
                Ordering::Equal => {}
            }
            let sum = r.norm(r.add(a, b)?)?;
            if sum > na.clone().max(nb.clone()) {
                strong_holds = false;
                if non_arch {
                    return fail("strong triangle inequality", a, b);
                }
            }
            if sum > na.add(&nb)? {
                return fail("triangle inequality", a, b);
            }
        }
    }
    if !non_arch && strong_holds {
        return Err(Error::ValidationFailure {
            law: "declared Archimedean flag".into(),
            witness: "strong triangle inequality held on every sampled pair".into(),
        });
    }
    Ok(RingReport {
        ring: *r,
        sample_size: sample.len(),
        pairs_checked: pairs,
        multiplicative,
        triangle: if non_arch {
            TriangleLaw::Strong
        } else {
            TriangleLaw::Ordinary
        },
        isolation_gap: gap,
        one_norm: r.one_norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nv(s: &str) -> NormValue {
        s.parse().unwrap()
    }

    #[test]
    fn compare_examples() {
        assert_eq!(nv_compare(&nv("7^(1/2)"), &nv("3")), Ordering::Less);
        assert_eq!(
            nv_compare(&NormValue::Zero, &NormValue::one()),
            Ordering::Less
        );
        assert_eq!(nv_compare(&nv("2^(3/2)"), &nv("2^(3/2)")), Ordering::Equal);
        assert_eq!(nv("4^(1/2)"), nv("2"));
        assert_eq!(nv("4^(1/2)").to_string(), "2");
    }

    #[test]
    fn multiplication_across_exponents() {
        let a = nv("2^(1/2)");
        let b = nv("2^(3/2)");
        assert_eq!(a.mul(&b), nv("4"));
        let c = nv("(1/3)^(1/2)").mul(&nv("(1/3)^(1/3)"));
        assert_eq!(c, nv("(1/3)^(5/6)"));
        assert!(nv("7^(1/2)").add(&NormValue::one()).is_err());
    }

    #[test]
    fn norms() {
        assert_eq!(
            RingDescriptor::IntInf.norm(-7).unwrap(),
            NormValue::from_int(7)
        );
        assert_eq!(RingDescriptor::IntTriv.norm(42).unwrap(), NormValue::one());
        assert_eq!(quotient_norm(5, 3).unwrap(), NormValue::from_int(2));
        assert_eq!(quotient_norm(5, 0).unwrap(), NormValue::Zero);
        assert_eq!(quotient_norm(2, 1).unwrap(), NormValue::one());
        assert!(matches!(
            RingDescriptor::ZmodQuot(5).norm(7),
            Err(Error::ElementOutOfRange { .. })
        ));
    }

    #[test]
    fn ring_parsing() {
        let r: RingDescriptor = "ZmodQuot(6)".parse().unwrap();
        assert_eq!(r, RingDescriptor::ZmodQuot(6));
        let json = serde_json::to_string(&RingDescriptor::FpTriv(3)).unwrap();
        assert_eq!(json, r#"{"kind":"FpTriv","p":3}"#);
        let back: RingDescriptor = serde_json::from_str(&json).unwrap();
        assert_eq!(back, RingDescriptor::FpTriv(3));
        assert!(matches!(
            "OK".parse::<RingDescriptor>(),
            Err(Error::UnsupportedRing(_))
        ));
        assert!("FpTriv(4)".parse::<RingDescriptor>().is_err());
    }

    #[test]
    fn ring_validation() {
        let r = validate_ring(&RingDescriptor::IntInf, 50).unwrap();
        assert!(r.multiplicative);
        assert_eq!(r.isolation_gap, NormValue::one());
        validate_ring(&RingDescriptor::ZmodQuot(6), 6).unwrap();
        let t = validate_ring(&RingDescriptor::IntTriv, 50).unwrap();
        assert_eq!(t.triangle, TriangleLaw::Strong);
        for n in 2..12 {
            validate_ring(&RingDescriptor::ZmodQuot(n), 2).unwrap();
            validate_ring(&RingDescriptor::ZmodTriv(n), 2).unwrap();
        }
    }

    #[test]
    fn idempotents_of_z6() {
        assert_eq!(RingDescriptor::ZmodTriv(6).idempotents(), vec![3, 4]);
        assert!(!RingDescriptor::ZmodTriv(6).is_spectrum_connected());
        assert!(RingDescriptor::ZmodQuot(8).is_spectrum_connected());
    }
}
