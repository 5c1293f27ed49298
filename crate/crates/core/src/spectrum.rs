//! Points of the Berkovich spectrum of `R` and of `C_fin(X, R)`, the
//! homeomorphism `x ↦ (F_x, x|_R)` and its inverse.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::CfinFunction;
use crate::scalars::{
    is_prime, prime_factors, ratio_serde, Int, NormValue, RingDescriptor, TriangleLaw,
};
use crate::spaces::{FiniteSpace, PointSet};

/// A bounded multiplicative seminorm on one of the supported rings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum BasePoint {
    /// `|a|_∞^ε`.
    ArchPow {
        #[serde(with = "ratio_serde")]
        eps: Ratio<i64>,
    },
    /// `p^(-ε v_p(a))`.
    PadicPow {
        p: u64,
        #[serde(with = "ratio_serde")]
        eps: Ratio<i64>,
    },
    /// 0 on multiples of p, 1 elsewhere.
    PadicResidue {
        p: u64,
    },
    Trivial,
}

impl fmt::Display for BasePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasePoint::ArchPow { eps } => write!(f, "ArchPow({})", ratio_serde::to_string(eps)),
            BasePoint::PadicPow { p, eps } => {
                write!(f, "PadicPow({p}, {})", ratio_serde::to_string(eps))
            }
            BasePoint::PadicResidue { p } => write!(f, "PadicResidue({p})"),
            BasePoint::Trivial => write!(f, "Trivial"),
        }
    }
}

fn big(r: Ratio<i64>) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

fn valuation(mut a: Int, p: u64) -> u32 {
    let p = p as Int;
    let mut v = 0;
    while a != 0 && a % p == 0 {
        a /= p;
        v += 1;
    }
    v
}

impl BasePoint {
    pub fn arch(num: i64, den: i64) -> Self {
        BasePoint::ArchPow {
            eps: Ratio::new(num, den),
        }
    }

    pub fn padic(p: u64, num: i64, den: i64) -> Self {
        BasePoint::PadicPow {
            p,
            eps: Ratio::new(num, den),
        }
    }

    /// Checks that the point is of a kind that lives on `ring`.
    pub fn check_admissible(&self, ring: &RingDescriptor) -> Result<()> {
        let ok = match (*self, ring.modulus()) {
            (_, Some(1)) => false,
            (BasePoint::Trivial, _) => true,
            (BasePoint::ArchPow { .. }, None) => true,
            (BasePoint::PadicPow { p, .. }, None) | (BasePoint::PadicResidue { p }, None) => {
                is_prime(p)
            }
            (BasePoint::PadicResidue { p }, Some(n)) => is_prime(p) && n % p == 0,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::RingMismatch {
                point: self.to_string(),
                ring: ring.to_string(),
            })
        }
    }

    /// The representative used for equality of seminorms: `ArchPow(0)` is the
    /// trivial absolute value, and on F_p the residue point is trivial.
    pub fn canonical(&self, ring: &RingDescriptor) -> BasePoint {
        match *self {
            BasePoint::ArchPow { eps } if eps.is_zero() => BasePoint::Trivial,
            BasePoint::PadicResidue { p } if ring.modulus() == Some(p) => BasePoint::Trivial,
            other => other,
        }
    }

    /// Value on a ring element (an integer representative).
    pub fn eval(&self, a: Int) -> Result<NormValue> {
        if a == 0 {
            return Ok(NormValue::Zero);
        }
        Ok(match *self {
            BasePoint::ArchPow { eps } => {
                NormValue::from_int(a.unsigned_abs()).pow_rational(&big(eps))?
            }
            BasePoint::PadicPow { p, eps } => {
                let v = valuation(a, p);
                NormValue::pow(
                    BigRational::new(BigInt::one(), BigInt::from(p)),
                    big(eps) * BigRational::from_integer(v.into()),
                )?
            }
            BasePoint::PadicResidue { p } => {
                if a.rem_euclid(p as Int) == 0 {
                    NormValue::Zero
                } else {
                    NormValue::one()
                }
            }
            BasePoint::Trivial => NormValue::one(),
        })
    }
}

const SAMPLE_PRIMES: [u64; 3] = [2, 3, 5];

/// The grid of base points used throughout: for Z, `ArchPow` with
/// ε ∈ {0, 1/2, 1}, `PadicPow` with p ∈ {2,3,5} and ε ∈ {1/2, 1},
/// `PadicResidue` with p ∈ {2,3,5}, and the trivial point; on finite rings,
/// the residue points. `ArchPow` is only bounded on `IntInf`.
pub fn admissible_sample(ring: &RingDescriptor) -> Vec<BasePoint> {
    let mut out = Vec::new();
    match *ring {
        RingDescriptor::IntInf | RingDescriptor::IntTriv => {
            if *ring == RingDescriptor::IntInf {
                out.extend([
                    BasePoint::arch(0, 1),
                    BasePoint::arch(1, 2),
                    BasePoint::arch(1, 1),
                ]);
            }
            for p in SAMPLE_PRIMES {
                out.extend([BasePoint::padic(p, 1, 2), BasePoint::padic(p, 1, 1)]);
            }
            out.extend(SAMPLE_PRIMES.map(|p| BasePoint::PadicResidue { p }));
            out.push(BasePoint::Trivial);
        }
        _ => {
            let n = ring.modulus().unwrap();
            out.extend(
                prime_factors(n)
                    .into_iter()
                    .map(|p| BasePoint::PadicResidue { p }),
            );
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct PointReport {
    pub ring: RingDescriptor,
    pub point: BasePoint,
    pub elements: usize,
    pub pairs_checked: usize,
    pub triangle: TriangleLaw,
}

/// Checks multiplicativity, boundedness and the triangle inequality of `b` on
/// the elements `R.sample(sample_bound)`.
pub fn validate_point(
    ring: &RingDescriptor,
    b: &BasePoint,
    sample_bound: Int,
) -> Result<PointReport> {
    b.check_admissible(ring)?;
    let fail = |law: &str, witness: String| {
        Err(Error::ValidationFailure {
            law: law.into(),
            witness,
        })
    };
    match *b {
        BasePoint::ArchPow { eps }
            if eps < Ratio::from_integer(0) || eps > Ratio::from_integer(1) =>
        {
            return fail(
                "exponent range",
                format!("eps = {} is outside [0, 1]", ratio_serde::to_string(&eps)),
            );
        }
        BasePoint::PadicPow { eps, .. } if eps <= Ratio::from_integer(0) => {
            return fail(
                "exponent range",
                format!("eps = {} is not positive", ratio_serde::to_string(&eps)),
            );
        }
        _ => {}
    }
    if b.eval(ring.one())? != NormValue::one() {
        return fail("unit", "|1| != 1".into());
    }
    let sample = ring.sample(sample_bound);
    let values: Vec<NormValue> = sample.iter().map(|&a| b.eval(a)).collect::<Result<_>>()?;
    for (&a, v) in sample.iter().zip(&values) {
        if *v > ring.norm(a)? {
            return fail("boundedness", format!("|{a}| = {v} > {}", ring.norm(a)?));
        }
    }
    let archimedean = matches!(b, BasePoint::ArchPow { eps } if !eps.is_zero());
    let mut pairs = 0;
    for (i, &a) in sample.iter().enumerate() {
        for (j, &c) in sample.iter().enumerate() {
            pairs += 1;
            let prod = b.eval(ring.mul(a, c)?)?;
            if prod != values[i].mul(&values[j]) {
                return fail("multiplicativity", format!("({a}, {c})"));
            }
            let sum = ring.add(a, c)?;
            let ok = if archimedean {
                // |a+c|^ε ≤ (|a|+|c|)^ε ≤ |a|^ε + |c|^ε for ε ∈ [0,1].
                sum.unsigned_abs() <= a.unsigned_abs() + c.unsigned_abs()
            } else {
                b.eval(sum)? <= values[i].clone().max(values[j].clone())
            };
            if !ok {
                return fail("triangle inequality", format!("({a}, {c})"));
            }
        }
    }
    Ok(PointReport {
        ring: *ring,
        point: *b,
        elements: sample.len(),
        pairs_checked: pairs,
        triangle: if archimedean {
            TriangleLaw::Ordinary
        } else {
            TriangleLaw::Strong
        },
    })
}

/// A point of the spectrum of `C_fin(X, R)`: a quasi-component (equivalently
/// an ultrafilter of clopens) and a base point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub component: usize,
    pub base: BasePoint,
}

pub fn eval_seminorm(pt: &SpectrumPoint, f: &CfinFunction) -> Result<NormValue> {
    pt.base.check_admissible(&f.ring())?;
    let v = f
        .values()
        .get(pt.component)
        .ok_or_else(|| Error::InvalidInput(format!("component {} out of range", pt.component)))?;
    pt.base.eval(*v)
}

/// Anything that evaluates a seminorm on `C_fin(X, R)`.
pub trait SeminormOracle {
    fn eval(&self, f: &CfinFunction) -> Result<NormValue>;
}

impl<F: Fn(&CfinFunction) -> NormValue> SeminormOracle for F {
    fn eval(&self, f: &CfinFunction) -> Result<NormValue> {
        Ok(self(f))
    }
}

/// The seminorm `f ↦ b(lim_F f)` attached to a spectrum point.
#[derive(Clone, Debug)]
pub struct StructuredSeminorm {
    pub point: SpectrumPoint,
    pub ring: RingDescriptor,
}

impl SeminormOracle for StructuredSeminorm {
    fn eval(&self, f: &CfinFunction) -> Result<NormValue> {
        if f.ring() != self.ring {
            return Err(Error::RingMismatch {
                point: self.point.base.to_string(),
                ring: f.ring().to_string(),
            });
        }
        eval_seminorm(&self.point, f)
    }
}

pub fn g_inverse(
    component: usize,
    b: BasePoint,
    x: &FiniteSpace,
    ring: RingDescriptor,
) -> Result<StructuredSeminorm> {
    b.check_admissible(&ring)?;
    if component >= x.component_count() {
        return Err(Error::InvalidInput(format!(
            "component {component} out of range"
        )));
    }
    Ok(StructuredSeminorm {
        point: SpectrumPoint { component, base: b },
        ring,
    })
}

const CHECK_BOUND: Int = 30;
const SEARCH_PRIMES: [u64; 15] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47];

/// Recovers `(F, x|_R)` from a seminorm oracle on `C_fin(X, R)`: the
/// ultrafilter from the values on clopen indicators, the base point from the
/// values on constants. Oracles that are not of this form are rejected.
pub fn g_split(
    x: &dyn SeminormOracle,
    space: &Arc<FiniteSpace>,
    ring: RingDescriptor,
) -> Result<SpectrumPoint> {
    if ring.is_zero_ring() {
        return Err(Error::NotUltrafilter(
            "the zero ring has an empty spectrum".into(),
        ));
    }
    let clopens = space.clopens();
    let mut selected: Vec<PointSet> = Vec::new();
    for &u in &clopens {
        let v = x.eval(&CfinFunction::indicator(space.clone(), ring, u)?)?;
        if v.is_zero() {
            continue;
        }
        if !v.is_one() {
            return Err(Error::NotUltrafilter(format!(
                "value {v} on the idempotent 1_{u}"
            )));
        }
        selected.push(u);
    }
    let singles: Vec<usize> = (0..space.component_count())
        .filter(|&c| selected.contains(&space.quasi_components()[c]))
        .collect();
    let [component] = singles[..] else {
        return Err(Error::NotUltrafilter(format!(
            "{} minimal clopens selected",
            singles.len()
        )));
    };
    let block = space.quasi_components()[component];
    for &u in &clopens {
        if selected.contains(&u) != block.is_subset(u) {
            return Err(Error::NotUltrafilter(format!(
                "clopen {u} breaks the ultrafilter at component {component}"
            )));
        }
    }

    let constant = |a: Int| -> Result<NormValue> {
        x.eval(&CfinFunction::constant(
            space.clone(),
            ring,
            ring.reduce(a),
        )?)
    };
    let base = identify_base(&constant, ring)?;
    let localized = CfinFunction::indicator(space.clone(), ring, block)?;
    for a in ring.sample(CHECK_BOUND) {
        let expected = base.eval(a)?;
        if constant(a)? != expected || x.eval(&localized.scalar(a)?)? != expected {
            return Err(Error::UnrecognizedBasePoint(format!(
                "candidate {base} disagrees at {a}"
            )));
        }
    }
    Ok(SpectrumPoint { component, base })
}

fn identify_base(
    val: &dyn Fn(Int) -> Result<NormValue>,
    ring: RingDescriptor,
) -> Result<BasePoint> {
    let unrecognized = |msg: String| Error::UnrecognizedBasePoint(msg);
    if !ring.is_integers() {
        for cand in admissible_sample(&ring) {
            let mut all = true;
            for a in ring.sample(CHECK_BOUND) {
                if val(a)? != cand.eval(a)? {
                    all = false;
                    break;
                }
            }
            if all {
                return Ok(cand.canonical(&ring));
            }
        }
        return Err(unrecognized("no residue point matches".into()));
    }
    if !val(0)?.is_zero() || !val(1)?.is_one() {
        return Err(unrecognized("values at 0 and 1 are not 0 and 1".into()));
    }
    let to_eps = |t: BigRational| -> Result<Ratio<i64>> {
        match (t.numer().to_i64(), t.denom().to_i64()) {
            (Some(n), Some(d)) => Ok(Ratio::new(n, d)),
            _ => Err(unrecognized(format!("exponent {t} too large"))),
        }
    };
    let two = val(2)?;
    if two > NormValue::one() {
        let t = two
            .log_base(2)
            .ok_or_else(|| unrecognized(format!("|2| = {two} is not a power of 2")))?;
        return Ok(BasePoint::ArchPow { eps: to_eps(t)? });
    }
    for p in SEARCH_PRIMES {
        let v = val(p as Int)?;
        if v.is_zero() {
            return Ok(BasePoint::PadicResidue { p });
        }
        if v < NormValue::one() {
            let t = v
                .log_base(p)
                .ok_or_else(|| unrecognized(format!("|{p}| = {v} is not a power of {p}")))?;
            if !t.is_negative() {
                return Err(unrecognized(format!("|{p}| = {v}")));
            }
            return Ok(BasePoint::PadicPow {
                p,
                eps: to_eps(-t)?,
            });
        }
    }
    Ok(BasePoint::Trivial)
}

#[derive(Clone, Debug, Serialize)]
pub struct GelfandWitness {
    pub ring: RingDescriptor,
    pub components: usize,
    pub recovered_classes: usize,
    /// `(component, recovered class)` pairs; a bijection.
    pub bijection: Vec<(usize, usize)>,
    pub points_checked: usize,
}

/// Round trip through the spectrum: every structured point is recovered
/// exactly, and the connected pieces of the recovered spectrum are in
/// bijection with the quasi-components of `X`.
pub fn gelfand_roundtrip(space: &Arc<FiniteSpace>, ring: RingDescriptor) -> Result<GelfandWitness> {
    if !ring.is_spectrum_connected() {
        return Err(Error::DisconnectedSpectrum {
            ring: ring.to_string(),
            idempotents: ring.idempotents(),
        });
    }
    let mut bijection = Vec::new();
    let mut checked = 0;
    for c in 0..space.component_count() {
        let mut class: Option<usize> = None;
        for b in admissible_sample(&ring) {
            let oracle = g_inverse(c, b, space, ring)?;
            let sp = g_split(&oracle, space, ring)?;
            checked += 1;
            if sp.base != b.canonical(&ring) || class.is_some_and(|k| k != sp.component) {
                return Err(Error::Internal(format!(
                    "round trip of ({c}, {b}) gave ({}, {})",
                    sp.component, sp.base
                )));
            }
            class = Some(sp.component);
        }
        if let Some(k) = class {
            bijection.push((c, k));
        }
    }
    let mut classes: Vec<usize> = bijection.iter().map(|p| p.1).collect();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() != bijection.len() {
        return Err(Error::Internal(
            "two components share a recovered class".into(),
        ));
    }
    Ok(GelfandWitness {
        ring,
        components: space.component_count(),
        recovered_classes: classes.len(),
        bijection,
        points_checked: checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::Cfin;

    fn disc(n: usize) -> Arc<FiniteSpace> {
        Arc::new(FiniteSpace::discrete(n).unwrap())
    }

    fn f(space: &Arc<FiniteSpace>, v: &[Int]) -> CfinFunction {
        Cfin::from_points(space.clone(), RingDescriptor::IntInf, v.to_vec()).unwrap()
    }

    #[test]
    fn evaluation_examples() {
        let x = disc(2);
        let pt = SpectrumPoint {
            component: 0,
            base: BasePoint::arch(1, 1),
        };
        assert_eq!(
            eval_seminorm(&pt, &f(&x, &[-3, 5])).unwrap(),
            NormValue::from_int(3)
        );
        let pt = SpectrumPoint {
            component: 1,
            base: BasePoint::PadicResidue { p: 2 },
        };
        assert_eq!(
            eval_seminorm(&pt, &f(&x, &[4, 4])).unwrap(),
            NormValue::Zero
        );
        let pt = SpectrumPoint {
            component: 1,
            base: BasePoint::padic(3, 1, 2),
        };
        let v = eval_seminorm(&pt, &f(&x, &[1, 9])).unwrap();
        assert_eq!(v.to_string(), "1/3");
        let bad = CfinFunction::zero(x.clone(), RingDescriptor::ZmodTriv(6));
        assert!(matches!(
            eval_seminorm(&pt, &bad),
            Err(Error::RingMismatch { .. })
        ));
    }

    #[test]
    fn validation_examples() {
        validate_point(&RingDescriptor::IntInf, &BasePoint::arch(1, 2), 30).unwrap();
        let e = validate_point(&RingDescriptor::IntInf, &BasePoint::arch(2, 1), 30).unwrap_err();
        assert!(matches!(e, Error::ValidationFailure { ref law, .. } if law == "exponent range"));
        let e = validate_point(&RingDescriptor::IntTriv, &BasePoint::arch(1, 1), 30).unwrap_err();
        assert!(
            matches!(e, Error::ValidationFailure { ref law, ref witness } if law == "boundedness" && witness.starts_with("|2|"))
        );
        let e = validate_point(&RingDescriptor::ZmodTriv(6), &BasePoint::Trivial, 6).unwrap_err();
        assert!(matches!(e, Error::ValidationFailure { ref law, .. } if law == "multiplicativity"));
        for ring in [
            RingDescriptor::IntInf,
            RingDescriptor::IntTriv,
            RingDescriptor::FpTriv(5),
            RingDescriptor::ZmodTriv(12),
            RingDescriptor::ZmodQuot(9),
        ] {
            for b in admissible_sample(&ring) {
                validate_point(&ring, &b, 12).unwrap();
            }
        }
    }

    #[test]
    fn split_examples() {
        let x = disc(2);
        let z = RingDescriptor::IntInf;
        let o = g_inverse(0, BasePoint::arch(1, 1), &x, z).unwrap();
        assert_eq!(
            g_split(&o, &x, z).unwrap(),
            SpectrumPoint {
                component: 0,
                base: BasePoint::arch(1, 1)
            }
        );
        let two_adic = |g: &CfinFunction| BasePoint::padic(2, 1, 1).eval(g.values()[1]).unwrap();
        assert_eq!(
            g_split(&two_adic, &x, z).unwrap(),
            SpectrumPoint {
                component: 1,
                base: BasePoint::padic(2, 1, 1)
            }
        );
        let one = disc(1);
        let triv = |g: &CfinFunction| {
            if g.values()[0] == 0 {
                NormValue::Zero
            } else {
                NormValue::one()
            }
        };
        assert_eq!(g_split(&triv, &one, z).unwrap().base, BasePoint::Trivial);
        let sum = |g: &CfinFunction| NormValue::from_int((g.values()[0] + g.values()[1]).abs());
        assert!(matches!(
            g_split(&sum, &x, z),
            Err(Error::NotUltrafilter(_))
        ));
        let weird = |g: &CfinFunction| {
            let a = g.values()[0];
            if a == 0 {
                NormValue::Zero
            } else if a.abs() == 2 {
                NormValue::from_int(3)
            } else {
                NormValue::one()
            }
        };
        assert!(matches!(
            g_split(&weird, &disc(1), z),
            Err(Error::UnrecognizedBasePoint(_))
        ));
    }

    #[test]
    fn inverse_examples() {
        let x = disc(2);
        let z = RingDescriptor::IntInf;
        let o = g_inverse(0, BasePoint::Trivial, &x, z).unwrap();
        assert_eq!(o.eval(&f(&x, &[0, 5])).unwrap(), NormValue::Zero);
        let o = g_inverse(1, BasePoint::arch(1, 1), &x, z).unwrap();
        assert_eq!(o.eval(&f(&x, &[2, -7])).unwrap(), NormValue::from_int(7));
        let glued = Arc::new(
            FiniteSpace::new(
                4,
                vec![
                    [0usize, 1].into_iter().collect(),
                    [2usize, 3].into_iter().collect(),
                ],
            )
            .unwrap(),
        );
        let o = g_inverse(1, BasePoint::PadicResidue { p: 3 }, &glued, z).unwrap();
        assert_eq!(o.eval(&f(&glued, &[1, 1, 6, 6])).unwrap(), NormValue::Zero);
    }

    #[test]
    fn gelfand_examples() {
        assert_eq!(
            gelfand_roundtrip(&disc(2), RingDescriptor::IntInf)
                .unwrap()
                .recovered_classes,
            2
        );
        let s = Arc::new(FiniteSpace::sierpinski());
        assert_eq!(
            gelfand_roundtrip(&s, RingDescriptor::IntInf)
                .unwrap()
                .recovered_classes,
            1
        );
        let e = gelfand_roundtrip(&disc(2), RingDescriptor::ZmodTriv(6)).unwrap_err();
        assert_eq!(
            e,
            Error::DisconnectedSpectrum {
                ring: "ZmodTriv(6)".into(),
                idempotents: vec![3, 4]
            }
        );
        gelfand_roundtrip(&disc(3), RingDescriptor::ZmodQuot(8)).unwrap();
    }

    #[test]
    fn json_shape() {
        let s = serde_json::to_string(&BasePoint::padic(3, 1, 2)).unwrap();
        assert_eq!(s, r#"{"kind":"PadicPow","p":3,"eps":"1/2"}"#);
        let b: BasePoint = serde_json::from_str(r#"{"kind":"ArchPow","eps":"1/2"}"#).unwrap();
        assert_eq!(b, BasePoint::arch(1, 2));
    }
}
