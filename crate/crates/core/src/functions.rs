//! Finite-image continuous functions `C_fin(X, M)`, stored as one value per
//! quasi-component, with the idempotent calculus on them.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalars::{Int, NormValue, RingDescriptor};
use crate::spaces::{
    banaschewski, component_map, zeta_embedding_check, EmbeddingCheck, FiniteSpace, PointSet,
    Ultrafilter,
};

/// A coefficient object: the ring itself or a normed module over it.
pub trait Coefficients: Clone + fmt::Debug + PartialEq + Send + Sync {
    type Elem: Clone + fmt::Debug + PartialEq + Send + Sync;

    fn zero(&self) -> Self::Elem;
    fn check(&self, a: &Self::Elem) -> Result<()>;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem>;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    /// Action of the base ring.
    fn scale(&self, r: Int, a: &Self::Elem) -> Result<Self::Elem>;
    fn norm(&self, a: &Self::Elem) -> Result<NormValue>;
    fn base_ring(&self) -> RingDescriptor;

    fn is_zero(&self, a: &Self::Elem) -> bool {
        *a == self.zero()
    }
}

impl Coefficients for RingDescriptor {
    type Elem = Int;

    fn zero(&self) -> Int {
        0
    }
    fn check(&self, a: &Int) -> Result<()> {
        RingDescriptor::check(self, *a)
    }
    fn add(&self, a: &Int, b: &Int) -> Result<Int> {
        RingDescriptor::add(self, *a, *b)
    }
    fn neg(&self, a: &Int) -> Int {
        RingDescriptor::neg(self, *a)
    }
    fn scale(&self, r: Int, a: &Int) -> Result<Int> {
        RingDescriptor::mul(self, self.reduce(r), *a)
    }
    fn norm(&self, a: &Int) -> Result<NormValue> {
        RingDescriptor::norm(self, *a)
    }
    fn base_ring(&self) -> RingDescriptor {
        *self
    }
}

/// An element of `C_fin(X, M)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cfin<C: Coefficients> {
    space: Arc<FiniteSpace>,
    coeffs: C,
    values: Vec<C::Elem>,
}

/// Scalar-valued functions.
pub type CfinFunction = Cfin<RingDescriptor>;

fn same_space(a: &Arc<FiniteSpace>, b: &Arc<FiniteSpace>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl<C: Coefficients> Cfin<C> {
    /// From one value per quasi-component.
    pub fn new(space: Arc<FiniteSpace>, coeffs: C, values: Vec<C::Elem>) -> Result<Self> {
        if values.len() != space.component_count() {
            return Err(Error::SizeMismatch {
                expected: space.component_count(),
                got: values.len(),
            });
        }
        for v in &values {
            coeffs.check(v)?;
        }
        Ok(Cfin {
            space,
            coeffs,
            values,
        })
    }

    /// From one value per point; the values must be constant on quasi-components.
    pub fn from_points(
        space: Arc<FiniteSpace>,
        coeffs: C,
        point_values: Vec<C::Elem>,
    ) -> Result<Self> {
        if point_values.len() != space.points() {
            return Err(Error::SizeMismatch {
                expected: space.points(),
                got: point_values.len(),
            });
        }
        for x in 0..space.points() {
            let rep = space.quasi_components()[space.component_of(x)]
                .min_point()
                .unwrap();
            if point_values[x] != point_values[rep] {
                return Err(Error::NotContinuous { point: x });
            }
        }
        let values = space
            .quasi_components()
            .iter()
            .map(|c| point_values[c.min_point().unwrap()].clone())
            .collect();
        Self::new(space, coeffs, values)
    }

    pub fn constant(space: Arc<FiniteSpace>, coeffs: C, v: C::Elem) -> Result<Self> {
        let values = vec![v; space.component_count()];
        Self::new(space, coeffs, values)
    }

    pub fn zero(space: Arc<FiniteSpace>, coeffs: C) -> Self {
        let values = vec![coeffs.zero(); space.component_count()];
        Cfin {
            space,
            coeffs,
            values,
        }
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &C {
        &self.coeffs
    }

    /// Values per quasi-component.
    pub fn values(&self) -> &[C::Elem] {
        &self.values
    }

    pub fn eval(&self, x: usize) -> &C::Elem {
        &self.values[self.space.component_of(x)]
    }

    pub fn point_values(&self) -> Vec<C::Elem> {
        (0..self.space.points())
            .map(|x| self.eval(x).clone())
            .collect()
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if same_space(&self.space, &other.space) && self.coeffs == other.coeffs {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    fn zip(
        &self,
        other: &Self,
        op: impl Fn(&C::Elem, &C::Elem) -> Result<C::Elem>,
    ) -> Result<Self> {
        self.compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| op(a, b))
            .collect::<Result<_>>()?;
        Ok(Cfin {
            space: self.space.clone(),
            coeffs: self.coeffs.clone(),
            values,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| self.coeffs.add(a, b))
    }

    pub fn neg(&self) -> Self {
        let values = self.values.iter().map(|a| self.coeffs.neg(a)).collect();
        Cfin {
            space: self.space.clone(),
            coeffs: self.coeffs.clone(),
            values,
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn scalar(&self, r: Int) -> Result<Self> {
        let values = self
            .values
            .iter()
            .map(|a| self.coeffs.scale(r, a))
            .collect::<Result<_>>()?;
        Ok(Cfin {
            space: self.space.clone(),
            coeffs: self.coeffs.clone(),
            values,
        })
    }

    /// Pointwise action of a scalar function.
    pub fn scale_by(&self, g: &CfinFunction) -> Result<Self> {
        if !same_space(&self.space, &g.space) || g.coeffs != self.coeffs.base_ring() {
            return Err(Error::SpaceMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&g.values)
            .map(|(a, r)| self.coeffs.scale(*r, a))
            .collect::<Result<_>>()?;
        Ok(Cfin {
            space: self.space.clone(),
            coeffs: self.coeffs.clone(),
            values,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| self.coeffs.is_zero(v))
    }

    /// Points where the function is nonzero.
    pub fn support(&self) -> PointSet {
        self.space.union_of_components(
            self.values
                .iter()
                .enumerate()
                .filter(|(_, v)| !self.coeffs.is_zero(v))
                .map(|(i, _)| i),
        )
    }

    /// Points where the function vanishes.
    pub fn zero_set(&self) -> PointSet {
        self.space.full_set().minus(self.support())
    }

    pub fn vanishes_on(&self, s: PointSet) -> bool {
        !self.support().meets(s)
    }

    pub fn sup_norm(&self) -> Result<NormValue> {
        self.values
            .iter()
            .try_fold(NormValue::Zero, |acc, v| Ok(acc.max(self.coeffs.norm(v)?)))
    }

    /// The partition into level sets, in order of first point.
    pub fn decompose(&self) -> Vec<(PointSet, C::Elem)> {
        let mut parts: Vec<(PointSet, C::Elem)> = Vec::new();
        for (c, v) in self.values.iter().enumerate() {
            let block = self.space.quasi_components()[c];
            match parts.iter_mut().find(|(_, m)| m == v) {
                Some((u, _)) => *u = u.union(block),
                None => parts.push((block, v.clone())),
            }
        }
        parts
    }

    /// `Σ 1_U · m` over a family of clopens.
    pub fn reconstruct(
        space: Arc<FiniteSpace>,
        coeffs: C,
        parts: &[(PointSet, C::Elem)],
    ) -> Result<Self> {
        let mut f = Self::zero(space.clone(), coeffs.clone());
        for (u, m) in parts {
            if !space.is_clopen(*u) {
                return Err(Error::NotClopen(u.to_string()));
            }
            coeffs.check(m)?;
            for c in space.components_meeting(*u).iter() {
                f.values[c] = coeffs.add(&f.values[c], m)?;
            }
        }
        Ok(f)
    }

    /// Pullback `f ∘ j` along a continuous `j: K → X`.
    pub fn restrict(&self, j: &[usize], k: Arc<FiniteSpace>) -> Result<Self> {
        let cm = component_map(j, &k, &self.space)?;
        let values = cm.iter().map(|&c| self.values[c].clone()).collect();
        Ok(Cfin {
            space: k,
            coeffs: self.coeffs.clone(),
            values,
        })
    }

    /// Restriction to a subset, viewed as a subspace.
    pub fn restrict_to(&self, k: PointSet) -> Result<Self> {
        let (sub, incl) = self.space.subspace(k)?;
        self.restrict(&incl, Arc::new(sub))
    }

    /// The function on ζ(X) whose pullback along ι is `self`.
    pub fn extend_banaschewski(&self) -> Self {
        let b = banaschewski(&self.space);
        Cfin {
            space: Arc::new(b.zeta),
            coeffs: self.coeffs.clone(),
            values: self.values.clone(),
        }
    }

    /// Inverse of [`Cfin::extend_banaschewski`]: pull back along ι: X → ζ(X).
    pub fn restrict_along_iota(&self, x: Arc<FiniteSpace>) -> Result<Self> {
        let b = banaschewski(&x);
        if !same_space(&self.space, &Arc::new(b.zeta.clone())) {
            return Err(Error::SpaceMismatch);
        }
        self.restrict(&b.iota, x)
    }

    /// Extends a function on `K` along a ζ-embedding `j: K → X`, by zero off
    /// the image. The sup norm is preserved.
    pub fn tietze_extend(&self, j: &[usize], x: Arc<FiniteSpace>) -> Result<Self> {
        if let EmbeddingCheck::Merged { first, second } = zeta_embedding_check(j, &self.space, &x)?
        {
            return Err(Error::NotEmbedding(first, second));
        }
        let cm = component_map(j, &self.space, &x)?;
        let mut out = Self::zero(x, self.coeffs.clone());
        for (k, &c) in cm.iter().enumerate() {
            out.values[c] = self.values[k].clone();
        }
        Ok(out)
    }

    pub fn limit_along(&self, f: &Ultrafilter) -> &C::Elem {
        &self.values[f.component]
    }
}

impl CfinFunction {
    /// The characteristic function of a clopen.
    pub fn indicator(space: Arc<FiniteSpace>, ring: RingDescriptor, u: PointSet) -> Result<Self> {
        if !space.is_clopen(u) {
            return Err(Error::NotClopen(u.to_string()));
        }
        let one = ring.one();
        let values = space
            .quasi_components()
            .iter()
            .map(|c| if c.meets(u) { one } else { 0 })
            .collect();
        Ok(Cfin {
            space,
            coeffs: ring,
            values,
        })
    }

    pub fn ring(&self) -> RingDescriptor {
        self.coeffs
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| self.coeffs.mul(*a, *b))
    }
}

impl<C> Serialize for Cfin<C>
where
    C: Coefficients + Serialize,
    C::Elem: Serialize,
{
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        struct Values<'a, E>(&'a [E]);
        impl<E: Serialize> Serialize for Values<'_, E> {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                let mut m = s.serialize_map(Some(self.0.len()))?;
                for (i, v) in self.0.iter().enumerate() {
                    m.serialize_entry(&i.to_string(), v)?;
                }
                m.end()
            }
        }
        let mut m = s.serialize_map(Some(3))?;
        m.serialize_entry("space", &*self.space)?;
        m.serialize_entry("ring", &self.coeffs)?;
        m.serialize_entry("values", &Values(&self.values))?;
        m.end()
    }
}

#[derive(Deserialize)]
struct RawFunction {
    space: FiniteSpace,
    ring: RingDescriptor,
    values: BTreeMap<String, Int>,
}

impl<'de> Deserialize<'de> for CfinFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = RawFunction::deserialize(d)?;
        let n = raw.space.component_count();
        let mut values = vec![0; n];
        for (k, v) in raw.values {
            let i: usize = k.parse().map_err(D::Error::custom)?;
            if i >= n {
                return Err(D::Error::custom(format!(
                    "component index {i} out of range"
                )));
            }
            values[i] = v;
        }
        Cfin::new(Arc::new(raw.space), raw.ring, values).map_err(D::Error::custom)
    }
}

/// The vanishing ideal `I_{X0} = { f : f|_{X0} = 0 }`.
#[derive(Clone, Debug)]
pub struct Ideal {
    pub space: Arc<FiniteSpace>,
    pub ring: RingDescriptor,
    pub vanishing: PointSet,
}

impl Ideal {
    pub fn new(space: Arc<FiniteSpace>, ring: RingDescriptor, vanishing: PointSet) -> Self {
        Ideal {
            space,
            ring,
            vanishing,
        }
    }

    pub fn contains(&self, f: &CfinFunction) -> bool {
        f.vanishes_on(self.vanishing)
    }

    /// The clopen whose indicator generates the ideal: all components
    /// disjoint from the vanishing set.
    pub fn generator_set(&self) -> PointSet {
        self.space.full_set().minus(
            self.space
                .union_of_components(self.space.components_meeting(self.vanishing).iter()),
        )
    }

    pub fn generator(&self) -> CfinFunction {
        CfinFunction::indicator(self.space.clone(), self.ring, self.generator_set())
            .expect("union of components is clopen")
    }
}

/// A clopen `U` disjoint from `X0` with `1_U · f = f` for every `f`.
pub fn dominating_idempotent(fs: &[CfinFunction], x0: PointSet) -> Result<PointSet> {
    let mut u = PointSet::EMPTY;
    for f in fs {
        if let Some(bad) = f.support().intersect(x0).min_point() {
            return Err(Error::NotInIdeal(bad));
        }
        u = u.union(f.support());
    }
    Ok(u)
}

/// `f = f0 · f1` with `f0 = 1_{supp f} ∈ I_{K0}` and `f1 = f ∈ I_{K1}`.
pub fn ideal_product_split(
    f: &CfinFunction,
    k0: PointSet,
    k1: PointSet,
) -> Result<(CfinFunction, CfinFunction)> {
    if let Some(bad) = f.support().intersect(k0.union(k1)).min_point() {
        return Err(Error::NotInIdeal(bad));
    }
    let f0 = CfinFunction::indicator(f.space.clone(), f.ring(), f.support())?;
    Ok((f0, f.clone()))
}

#[derive(Clone, Debug)]
pub struct SumSplit {
    pub f0: CfinFunction,
    pub f1: CfinFunction,
    /// The clopen separating `K0` from `K1 ∖ f⁻¹(0)`.
    pub separator: PointSet,
}

/// `f = f0 + f1` with `f0 ∈ I_{K0}`, `f1 ∈ I_{K1}`, obtained by cutting `f`
/// along a clopen `V ⊇ K0` disjoint from `K1 ∖ f⁻¹(0)`.
pub fn ideal_sum_split(f: &CfinFunction, k0: PointSet, k1: PointSet) -> Result<SumSplit> {
    let x = f.space();
    for k in [k0, k1] {
        if !x.is_closed(k) {
            return Err(Error::InvalidInput(format!("{k} is not closed")));
        }
    }
    if let Some(bad) = f.support().intersect(k0.intersect(k1)).min_point() {
        return Err(Error::NotInIdeal(bad));
    }
    let k2 = k1.intersect(f.support());
    let v = x.union_of_components(x.components_meeting(k0).iter());
    if v.meets(k2) {
        return Err(Error::CannotSeparate);
    }
    let ring = f.ring();
    let f0 = f.mul(&CfinFunction::indicator(
        x.clone(),
        ring,
        x.full_set().minus(v),
    )?)?;
    let f1 = f.mul(&CfinFunction::indicator(x.clone(), ring, v)?)?;
    Ok(SumSplit {
        f0,
        f1,
        separator: v,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict")]
pub enum Separation {
    Separated,
    /// Two quasi-components on which every function agrees.
    Indistinguishable {
        first: usize,
        second: usize,
    },
}

impl Separation {
    pub fn is_separated(&self) -> bool {
        matches!(self, Separation::Separated)
    }
}

pub fn separates_points<C: Coefficients>(b: &[Cfin<C>], x: &FiniteSpace) -> Result<Separation> {
    if b.iter().any(|f| **f.space() != *x) {
        return Err(Error::SpaceMismatch);
    }
    let n = x.component_count();
    for c0 in 0..n {
        for c1 in c0 + 1..n {
            if b.iter().all(|f| f.values[c0] == f.values[c1]) {
                return Ok(Separation::Indistinguishable {
                    first: c0,
                    second: c1,
                });
            }
        }
    }
    Ok(Separation::Separated)
}
