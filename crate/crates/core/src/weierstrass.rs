//! The constructive Stone–Weierstrass algorithm over an ordered ring isolated
//! at 0: for a point-separating family of generators and a clopen `U`, an
//! expression in the generators evaluating to `a_U · 1_U` with `a_U > 0`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{separates_points, CfinFunction, Separation};
use crate::scalars::{Int, RingDescriptor};
use crate::spaces::{FiniteSpace, PointSet};

/// A ring expression in the generators.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Expr {
    Gen {
        index: usize,
    },
    Const {
        #[serde(with = "int_serde")]
        value: Int,
    },
    Add {
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Sub {
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Mul {
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
}

/// Integers as JSON numbers when they fit in `i64`, as strings otherwise.
mod int_serde {
    use super::Int;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Int, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*v) {
            Ok(i) => s.serialize_i64(i),
            Err(_) => s.serialize_str(&v.to_string()),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(i64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Int, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(i) => Ok(i as Int),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl Expr {
    pub fn gen(index: usize) -> Self {
        Expr::Gen { index }
    }

    pub fn constant(value: Int) -> Self {
        Expr::Const { value }
    }

    pub fn add(self, rhs: Expr) -> Self {
        Expr::Add {
            lhs: Box::new(self),
            rhs: Box::new(rhs),
        }
    }

    pub fn sub(self, rhs: Expr) -> Self {
        Expr::Sub {
            lhs: Box::new(self),
            rhs: Box::new(rhs),
        }
    }

    pub fn mul(self, rhs: Expr) -> Self {
        Expr::Mul {
            lhs: Box::new(self),
            rhs: Box::new(rhs),
        }
    }

    /// Value at one quasi-component, given each generator's component values.
    pub fn eval_at(&self, gens: &[Vec<Int>], c: usize) -> Result<Int> {
        let bin = |l: &Expr, r: &Expr, op: fn(Int, Int) -> Option<Int>| -> Result<Int> {
            op(l.eval_at(gens, c)?, r.eval_at(gens, c)?).ok_or(Error::Overflow)
        };
        match self {
            Expr::Gen { index } => gens
                .get(*index)
                .map(|g| g[c])
                .ok_or_else(|| Error::InvalidInput(format!("no generator g{index}"))),
            Expr::Const { value } => Ok(*value),
            Expr::Add { lhs, rhs } => bin(lhs, rhs, Int::checked_add),
            Expr::Sub { lhs, rhs } => bin(lhs, rhs, Int::checked_sub),
            Expr::Mul { lhs, rhs } => bin(lhs, rhs, Int::checked_mul),
        }
    }

    pub fn eval(&self, gens: &[Vec<Int>], components: usize) -> Result<Vec<Int>> {
        (0..components).map(|c| self.eval_at(gens, c)).collect()
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Expr::Gen { .. } | Expr::Const { .. } => 1,
            Expr::Add { lhs, rhs } | Expr::Sub { lhs, rhs } | Expr::Mul { lhs, rhs } => {
                1 + lhs.size() + rhs.size()
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Gen { index } => write!(f, "g{index}"),
            Expr::Const { value } => write!(f, "{value}"),
            Expr::Add { lhs, rhs } => write!(f, "({lhs} + {rhs})"),
            Expr::Sub { lhs, rhs } => write!(f, "({lhs} - {rhs})"),
            Expr::Mul { lhs, rhs } => write!(f, "{lhs}*{rhs}"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VanishingWitness {
    /// Point of `X \ U` where `f_x` vanishes.
    pub point: usize,
    /// `S_x ⊆ U`, chosen greedily in point order.
    pub support: Vec<usize>,
    pub expr: Expr,
    /// Values per point.
    pub values: Vec<Int>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Idempotent {
    pub a: Int,
    pub expr: Expr,
    pub values: Vec<Int>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SWCertificate {
    pub clopen: PointSet,
    pub a_u: Int,
    /// The points `x ∈ S` whose `e_x` enter the product, with `a_x`.
    pub factors: Vec<(usize, Int)>,
    pub tree: Expr,
    /// Values per point; equals `a_U · 1_U`.
    pub evaluation: Vec<Int>,
}

struct Setup<'a> {
    space: &'a FiniteSpace,
    gens: Vec<Vec<Int>>,
}

impl Setup<'_> {
    fn point_values(&self, e: &Expr) -> Result<Vec<Int>> {
        (0..self.space.points())
            .map(|x| e.eval_at(&self.gens, self.space.component_of(x)))
            .collect()
    }
}

fn setup<'a>(
    space: &'a Arc<FiniteSpace>,
    ring: RingDescriptor,
    gens: &[CfinFunction],
) -> Result<Setup<'a>> {
    if !ring.is_ordered() {
        return Err(Error::UnsupportedRing(format!(
            "{ring} has no compatible total order"
        )));
    }
    if gens.iter().any(|g| g.ring() != ring) {
        return Err(Error::InvalidInput(
            "generators over a different ring".into(),
        ));
    }
    if let Separation::Indistinguishable { first, second } = separates_points(gens, space)? {
        let q = space.quasi_components();
        return Err(Error::NonSeparating(
            q[first].min_point().unwrap(),
            q[second].min_point().unwrap(),
        ));
    }
    Ok(Setup {
        space,
        gens: gens.iter().map(|g| g.values().to_vec()).collect(),
    })
}

fn vanishing(s: &Setup, x: usize, u: PointSet) -> Result<VanishingWitness> {
    let cx = s.space.component_of(x);
    let mut covered = PointSet::EMPTY;
    let mut support = Vec::new();
    let mut expr: Option<Expr> = None;
    for y in u.iter() {
        if covered.contains(y) {
            continue;
        }
        let cy = s.space.component_of(y);
        let g = (0..s.gens.len())
            .find(|&i| s.gens[i][cx] != s.gens[i][cy])
            .ok_or(Error::NonSeparating(x, y))?;
        let fxy = Expr::gen(g).sub(Expr::constant(s.gens[g][cx]));
        let vals = s.point_values(&fxy)?;
        covered = covered.union((0..s.space.points()).filter(|&z| vals[z] != 0).collect());
        let sq = fxy.clone().mul(fxy);
        expr = Some(match expr {
            None => sq,
            Some(e) => e.add(sq),
        });
        support.push(y);
    }
    let expr = expr.unwrap_or_else(|| Expr::constant(0));
    let values = s.point_values(&expr)?;
    Ok(VanishingWitness {
        point: x,
        support,
        expr,
        values,
    })
}

/// `f_x = Σ_{y ∈ S_x} (g_y - g_y(x))²`: zero at `x`, positive on `U`,
/// nonnegative everywhere.
pub fn sw_vanishing_witness(
    space: &Arc<FiniteSpace>,
    ring: RingDescriptor,
    gens: &[CfinFunction],
    x: usize,
    u: PointSet,
) -> Result<VanishingWitness> {
    let s = setup(space, ring, gens)?;
    if !space.is_clopen(u) {
        return Err(Error::NotClopen(u.to_string()));
    }
    if u.contains(x) || x >= space.points() {
        return Err(Error::InvalidInput(format!(
            "point {x} must lie outside {u}"
        )));
    }
    vanishing(&s, x, u)
}

fn idempotentize(s: &Setup, f: &Expr) -> Result<Idempotent> {
    let vals = s.point_values(f)?;
    let mut nonzero: Vec<Int> = vals.iter().copied().filter(|v| *v != 0).collect();
    nonzero.sort();
    nonzero.dedup();
    if nonzero.is_empty() {
        return Err(Error::ZeroFunction);
    }
    let a = nonzero
        .iter()
        .try_fold(1 as Int, |acc, v| acc.checked_mul(*v))
        .ok_or(Error::Overflow)?;
    let prod = nonzero
        .iter()
        .map(|v| Expr::constant(*v).sub(f.clone()))
        .reduce(|l, r| l.mul(r))
        .expect("nonempty");
    let expr = Expr::constant(a).sub(prod);
    let values = s.point_values(&expr)?;
    Ok(Idempotent { a, expr, values })
}

/// `a_x = ∏ a` over the nonzero values of `f_x` and
/// `e_x = a_x - ∏ (a - f_x)`, so `e_x` vanishes exactly where `f_x` does and
/// equals `a_x` elsewhere.
pub fn sw_idempotentize(
    space: &Arc<FiniteSpace>,
    ring: RingDescriptor,
    gens: &[CfinFunction],
    f: &Expr,
) -> Result<Idempotent> {
    let s = setup(space, ring, gens)?;
    idempotentize(&s, f)
}

/// A certificate `a_U · 1_U = ∏_{x ∈ S} e_x` lying in the subring generated
/// by `gens`, with `S ⊆ X \ U` chosen greedily in point order.
pub fn sw_construct_indicator(
    space: &Arc<FiniteSpace>,
    ring: RingDescriptor,
    gens: &[CfinFunction],
    u: PointSet,
) -> Result<SWCertificate> {
    let s = setup(space, ring, gens)?;
    if !space.is_clopen(u) {
        return Err(Error::NotClopen(u.to_string()));
    }
    let n = space.points();
    let (tree, a_u, factors) = if u == space.full_set() {
        (Expr::constant(1), 1, Vec::new())
    } else if u.is_empty() {
        (Expr::constant(0), 1, Vec::new())
    } else {
        let mut zeros = PointSet::EMPTY;
        let mut tree: Option<Expr> = None;
        let mut a_u: Int = 1;
        let mut factors = Vec::new();
        for x in space.full_set().minus(u).iter() {
            if zeros.contains(x) {
                continue;
            }
            let f = vanishing(&s, x, u)?;
            let e = idempotentize(&s, &f.expr)?;
            zeros = zeros.union((0..n).filter(|&z| e.values[z] == 0).collect());
            a_u = a_u.checked_mul(e.a).ok_or(Error::Overflow)?;
            factors.push((x, e.a));
            tree = Some(match tree {
                None => e.expr,
                Some(t) => t.mul(e.expr),
            });
        }
        (tree.expect("complement is nonempty"), a_u, factors)
    };
    let evaluation = s.point_values(&tree)?;
    let expected: Vec<Int> = (0..n)
        .map(|x| if u.contains(x) { a_u } else { 0 })
        .collect();
    if evaluation != expected || a_u <= 0 {
        return Err(Error::ValidationFailure {
            law: "certificate equals a_U 1_U".into(),
            witness: format!("{evaluation:?}"),
        });
    }
    Ok(SWCertificate {
        clopen: u,
        a_u,
        factors,
        tree,
        evaluation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::Cfin;

    fn setup3() -> (Arc<FiniteSpace>, Vec<CfinFunction>) {
        let x = Arc::new(FiniteSpace::discrete(3).unwrap());
        let g = Cfin::from_points(x.clone(), RingDescriptor::IntInf, vec![0, 1, 2]).unwrap();
        (x, vec![g])
    }

    #[test]
    fn worked_trace() {
        let (x, g) = setup3();
        let r = RingDescriptor::IntInf;
        let u: PointSet = [1].into_iter().collect();
        assert_eq!(
            sw_vanishing_witness(&x, r, &g, 0, u).unwrap().values,
            vec![0, 1, 4]
        );
        let f2 = sw_vanishing_witness(&x, r, &g, 2, u).unwrap();
        assert_eq!(f2.values, vec![4, 1, 0]);
        let f0 = sw_vanishing_witness(&x, r, &g, 0, u).unwrap();
        let e0 = sw_idempotentize(&x, r, &g, &f0.expr).unwrap();
        assert_eq!((e0.a, e0.values.clone()), (4, vec![0, 4, 4]));
        assert_eq!(
            sw_idempotentize(&x, r, &g, &f2.expr).unwrap().values,
            vec![4, 4, 0]
        );
        let cert = sw_construct_indicator(&x, r, &g, u).unwrap();
        assert_eq!(cert.a_u, 16);
        assert_eq!(cert.evaluation, vec![0, 16, 0]);
        assert_eq!(cert.factors, vec![(0, 4), (2, 4)]);
        let all = sw_construct_indicator(&x, r, &g, x.full_set()).unwrap();
        assert_eq!((all.a_u, all.tree), (1, Expr::constant(1)));
        let none = sw_construct_indicator(&x, r, &g, PointSet::EMPTY).unwrap();
        assert_eq!(none.evaluation, vec![0, 0, 0]);
    }

    #[test]
    fn errors() {
        let (x, _) = setup3();
        let r = RingDescriptor::IntInf;
        let flat = Cfin::from_points(x.clone(), r, vec![1, 1, 2]).unwrap();
        let u: PointSet = [1].into_iter().collect();
        assert_eq!(
            sw_construct_indicator(&x, r, &[flat], u).unwrap_err(),
            Error::NonSeparating(0, 1)
        );
        let zero = Expr::constant(0);
        let (_, g) = setup3();
        assert_eq!(
            sw_idempotentize(&x, r, &g, &zero).unwrap_err(),
            Error::ZeroFunction
        );
        let two = Cfin::from_points(x.clone(), RingDescriptor::FpTriv(2), vec![0, 1, 0]).unwrap();
        assert!(matches!(
            sw_construct_indicator(&x, RingDescriptor::FpTriv(2), &[two], u),
            Err(Error::UnsupportedRing(_))
        ));
    }

    #[test]
    fn expression_json() {
        let e = Expr::gen(0).sub(Expr::constant(2));
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(
            s,
            r#"{"op":"sub","lhs":{"op":"gen","index":0},"rhs":{"op":"const","value":2}}"#
        );
        assert_eq!(serde_json::from_str::<Expr>(&s).unwrap(), e);
        assert_eq!(e.to_string(), "(g0 - 2)");
    }
}
