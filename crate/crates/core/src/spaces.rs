//! Finite topological spaces, clopens and quasi-components, the Banaschewski
//! compactification at finite stage, and finite ultrametric spaces.

use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalars::ratio_serde;

/// Largest point count of a [`FiniteSpace`].
pub const MAX_POINTS: usize = 12;
/// Largest point count of an [`UltrametricSpace`].
pub const MAX_METRIC_POINTS: usize = 32;

/// A set of points `0..32` stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PointSet(pub u32);

impl PointSet {
    pub const EMPTY: PointSet = PointSet(0);

    pub fn full(n: usize) -> Self {
        if n >= 32 {
            PointSet(u32::MAX)
        } else {
            PointSet((1u32 << n) - 1)
        }
    }

    pub fn singleton(x: usize) -> Self {
        PointSet(1 << x)
    }

    pub fn contains(self, x: usize) -> bool {
        x < 32 && self.0 >> x & 1 == 1
    }

    pub fn insert(&mut self, x: usize) {
        self.0 |= 1 << x;
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, o: Self) -> Self {
        PointSet(self.0 | o.0)
    }

    pub fn intersect(self, o: Self) -> Self {
        PointSet(self.0 & o.0)
    }

    pub fn minus(self, o: Self) -> Self {
        PointSet(self.0 & !o.0)
    }

    pub fn is_subset(self, o: Self) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn meets(self, o: Self) -> bool {
        self.0 & o.0 != 0
    }

    pub fn min_point(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..32).filter(move |i| bits >> i & 1 == 1)
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl FromIterator<usize> for PointSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = PointSet::EMPTY;
        for x in iter {
            s.insert(x);
        }
        s
    }
}

impl fmt::Debug for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pts: Vec<String> = self.iter().map(|x| x.to_string()).collect();
        write!(f, "{{{}}}", pts.join(","))
    }
}

impl fmt::Display for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Serialize for PointSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for PointSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pts = Vec::<usize>::deserialize(d)?;
        if let Some(&x) = pts.iter().find(|&&x| x >= 32) {
            return Err(serde::de::Error::custom(format!("point {x} out of range")));
        }
        Ok(pts.into_iter().collect())
    }
}

/// Canonical order on families of sets: by size, then by sorted point list.
pub fn canonical_sort(sets: &mut [PointSet]) {
    sets.sort_by_key(|s| (s.len(), s.to_vec()));
}

/// A finite topological space presented by a subbasis of open sets.
#[derive(Clone, Debug)]
pub struct FiniteSpace {
    n: usize,
    generators: Vec<PointSet>,
    nbhd: Vec<PointSet>,
    components: Vec<PointSet>,
    comp_of: Vec<usize>,
}

impl PartialEq for FiniteSpace {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.nbhd == other.nbhd
    }
}
impl Eq for FiniteSpace {}

#[derive(Serialize, Deserialize)]
struct RawSpace {
    points: usize,
    opens: Vec<PointSet>,
}

impl Serialize for FiniteSpace {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawSpace {
            points: self.n,
            opens: self.generators.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteSpace {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSpace::deserialize(d)?;
        FiniteSpace::new(raw.points, raw.opens).map_err(serde::de::Error::custom)
    }
}

impl FiniteSpace {
    /// The topology generated by `generators` (plus ∅ and the whole set).
    pub fn new(n: usize, generators: Vec<PointSet>) -> Result<Self> {
        if n > MAX_POINTS {
            return Err(Error::SizeExceeded(format!(
                "{n} points (limit {MAX_POINTS})"
            )));
        }
        let full = PointSet::full(n);
        if let Some(g) = generators.iter().find(|g| !g.is_subset(full)) {
            return Err(Error::InvalidInput(format!(
                "open set {g} has points outside 0..{n}"
            )));
        }
        let nbhd: Vec<PointSet> = (0..n)
            .map(|x| {
                generators
                    .iter()
                    .filter(|g| g.contains(x))
                    .fold(full, |acc, g| acc.intersect(*g))
            })
            .collect();
        let mut space = FiniteSpace {
            n,
            generators,
            nbhd,
            components: Vec::new(),
            comp_of: vec![0; n],
        };
        let clopens = space.clopens();
        let mut components: Vec<PointSet> = Vec::new();
        for x in 0..n {
            if components.iter().any(|c| c.contains(x)) {
                continue;
            }
            let block = clopens
                .iter()
                .filter(|c| c.contains(x))
                .fold(full, |acc, c| acc.intersect(*c));
            components.push(block);
        }
        for (i, c) in components.iter().enumerate() {
            for x in c.iter() {
                space.comp_of[x] = i;
            }
        }
        space.components = components;
        Ok(space)
    }

    pub fn discrete(n: usize) -> Result<Self> {
        Self::new(n, (0..n).map(PointSet::singleton).collect())
    }

    pub fn indiscrete(n: usize) -> Result<Self> {
        Self::new(n, Vec::new())
    }

    /// Two points, opens ∅, {1}, {0,1}.
    pub fn sierpinski() -> Self {
        Self::new(2, vec![PointSet::singleton(1)]).expect("valid space")
    }

    pub fn points(&self) -> usize {
        self.n
    }

    pub fn full_set(&self) -> PointSet {
        PointSet::full(self.n)
    }

    pub fn generators(&self) -> &[PointSet] {
        &self.generators
    }

    /// Smallest open set containing `x`.
    pub fn min_open(&self, x: usize) -> PointSet {
        self.nbhd[x]
    }

    pub fn is_open(&self, s: PointSet) -> bool {
        s.is_subset(self.full_set()) && s.iter().all(|x| self.nbhd[x].is_subset(s))
    }

    pub fn is_closed(&self, s: PointSet) -> bool {
        s.is_subset(self.full_set()) && self.is_open(self.full_set().minus(s))
    }

    pub fn is_clopen(&self, s: PointSet) -> bool {
        self.is_open(s) && self.is_closed(s)
    }

    fn all_subsets(&self) -> impl Iterator<Item = PointSet> {
        (0..1u32 << self.n).map(PointSet)
    }

    pub fn opens(&self) -> Vec<PointSet> {
        let mut v: Vec<_> = self.all_subsets().filter(|s| self.is_open(*s)).collect();
        canonical_sort(&mut v);
        v
    }

    pub fn closed_sets(&self) -> Vec<PointSet> {
        let mut v: Vec<_> = self.all_subsets().filter(|s| self.is_closed(*s)).collect();
        canonical_sort(&mut v);
        v
    }

    pub fn clopens(&self) -> Vec<PointSet> {
        let mut v: Vec<_> = self.all_subsets().filter(|s| self.is_clopen(*s)).collect();
        canonical_sort(&mut v);
        v
    }

    /// Quasi-components, ordered by their smallest point.
    pub fn quasi_components(&self) -> &[PointSet] {
        &self.components
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn component_of(&self, x: usize) -> usize {
        self.comp_of[x]
    }

    /// Union of the components with the given indices.
    pub fn union_of_components(&self, comps: impl IntoIterator<Item = usize>) -> PointSet {
        comps
            .into_iter()
            .fold(PointSet::EMPTY, |acc, c| acc.union(self.components[c]))
    }

    /// Indices of the components meeting `s`.
    pub fn components_meeting(&self, s: PointSet) -> PointSet {
        s.iter().map(|x| self.comp_of[x]).collect()
    }

    pub fn is_discrete(&self) -> bool {
        (0..self.n).all(|x| self.nbhd[x] == PointSet::singleton(x))
    }

    /// Every quasi-component is a single point.
    pub fn is_totally_disconnected(&self) -> bool {
        self.components.len() == self.n
    }

    /// The subspace on `k`, with points renumbered in increasing order, and
    /// the inclusion map as a point list.
    pub fn subspace(&self, k: PointSet) -> Result<(FiniteSpace, Vec<usize>)> {
        if !k.is_subset(self.full_set()) {
            return Err(Error::InvalidInput(format!(
                "{k} is not a subset of the space"
            )));
        }
        let incl = k.to_vec();
        let relabel = |s: PointSet| -> PointSet {
            incl.iter()
                .enumerate()
                .filter(|(_, &x)| s.contains(x))
                .map(|(i, _)| i)
                .collect()
        };
        let gens = incl
            .iter()
            .map(|&x| relabel(self.nbhd[x].intersect(k)))
            .collect();
        Ok((FiniteSpace::new(incl.len(), gens)?, incl))
    }
}

fn check_map(j: &[usize], k: &FiniteSpace, x: &FiniteSpace) -> Result<()> {
    if j.len() != k.points() {
        return Err(Error::SizeMismatch {
            expected: k.points(),
            got: j.len(),
        });
    }
    if let Some(&bad) = j.iter().find(|&&y| y >= x.points()) {
        return Err(Error::InvalidInput(format!(
            "map sends a point to {bad}, outside the target"
        )));
    }
    Ok(())
}

/// Checks continuity of `j: K → X`; the error names the first bad point.
pub fn check_continuous(j: &[usize], k: &FiniteSpace, x: &FiniteSpace) -> Result<()> {
    check_map(j, k, x)?;
    for p in 0..k.points() {
        let target = x.min_open(j[p]);
        if k.min_open(p).iter().any(|q| !target.contains(j[q])) {
            return Err(Error::NotContinuous { point: p });
        }
    }
    Ok(())
}

/// The induced map on quasi-components of a continuous map.
pub fn component_map(j: &[usize], k: &FiniteSpace, x: &FiniteSpace) -> Result<Vec<usize>> {
    check_continuous(j, k, x)?;
    Ok(k.quasi_components()
        .iter()
        .map(|c| x.component_of(j[c.min_point().expect("nonempty component")]))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict")]
pub enum EmbeddingCheck {
    Embedding,
    /// Two components of the source land in one component of the target.
    Merged {
        first: usize,
        second: usize,
    },
}

impl EmbeddingCheck {
    pub fn is_embedding(&self) -> bool {
        matches!(self, EmbeddingCheck::Embedding)
    }
}

/// Whether `j` induces an injection on quasi-components.
pub fn zeta_embedding_check(
    j: &[usize],
    k: &FiniteSpace,
    x: &FiniteSpace,
) -> Result<EmbeddingCheck> {
    let cm = component_map(j, k, x)?;
    for a in 0..cm.len() {
        for b in a + 1..cm.len() {
            if cm[a] == cm[b] {
                return Ok(EmbeddingCheck::Merged {
                    first: a,
                    second: b,
                });
            }
        }
    }
    Ok(EmbeddingCheck::Embedding)
}

/// ζ(X) together with the quotient map ι: X → ζ(X).
#[derive(Clone, Debug, Serialize)]
pub struct Banaschewski {
    pub zeta: FiniteSpace,
    pub iota: Vec<usize>,
}

pub fn banaschewski(x: &FiniteSpace) -> Banaschewski {
    let zeta = FiniteSpace::discrete(x.component_count()).expect("component count within limit");
    let iota = (0..x.points()).map(|p| x.component_of(p)).collect();
    Banaschewski { zeta, iota }
}

/// The clopen of ζ(X) whose preimage under ι is `u`.
pub fn clopen_closure(x: &FiniteSpace, u: PointSet) -> Result<PointSet> {
    if !x.is_clopen(u) {
        return Err(Error::NotClopen(u.to_string()));
    }
    Ok(x.components_meeting(u))
}

/// An ultrafilter of CO(X): every clopen containing one quasi-component.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Ultrafilter {
    pub component: usize,
    pub members: Vec<PointSet>,
}

pub fn ultrafilters(x: &FiniteSpace) -> Vec<Ultrafilter> {
    let clopens = x.clopens();
    x.quasi_components()
        .iter()
        .enumerate()
        .map(|(i, block)| Ultrafilter {
            component: i,
            members: clopens
                .iter()
                .copied()
                .filter(|u| block.is_subset(*u))
                .collect(),
        })
        .collect()
}

/// A finite ultrametric space with rational distances.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UltrametricSpace {
    n: usize,
    dist: Vec<Vec<Ratio<i64>>>,
}

#[derive(Serialize, Deserialize)]
struct RawMetric {
    points: usize,
    dist: Vec<Vec<RatioCell>>,
}

#[derive(Serialize, Deserialize)]
#[serde(transparent)]
struct RatioCell(#[serde(with = "ratio_serde")] Ratio<i64>);

impl Serialize for UltrametricSpace {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let dist = self
            .dist
            .iter()
            .map(|r| r.iter().map(|d| RatioCell(*d)).collect())
            .collect();
        RawMetric {
            points: self.n,
            dist,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for UltrametricSpace {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawMetric::deserialize(d)?;
        let dist = raw
            .dist
            .into_iter()
            .map(|r| r.into_iter().map(|c| c.0).collect())
            .collect();
        UltrametricSpace::new(raw.points, dist).map_err(serde::de::Error::custom)
    }
}

impl UltrametricSpace {
    pub fn new(n: usize, dist: Vec<Vec<Ratio<i64>>>) -> Result<Self> {
        if n > MAX_METRIC_POINTS {
            return Err(Error::SizeExceeded(format!(
                "{n} points (limit {MAX_METRIC_POINTS})"
            )));
        }
        if dist.len() != n || dist.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("distance matrix must be n × n".into()));
        }
        let zero = Ratio::from_integer(0);
        for x in 0..n {
            for y in 0..n {
                let d = dist[x][y];
                if d != dist[y][x] {
                    return Err(Error::InvalidInput(format!(
                        "asymmetric distance at ({x},{y})"
                    )));
                }
                if (d == zero) != (x == y) || d < zero {
                    return Err(Error::InvalidInput(format!(
                        "invalid distance at ({x},{y})"
                    )));
                }
                for z in 0..n {
                    if dist[x][z] > d.max(dist[y][z]) {
                        return Err(Error::InvalidInput(format!(
                            "ultrametric inequality fails for ({x},{y},{z})"
                        )));
                    }
                }
            }
        }
        Ok(UltrametricSpace { n, dist })
    }

    pub fn points(&self) -> usize {
        self.n
    }

    pub fn dist(&self, x: usize, y: usize) -> Ratio<i64> {
        self.dist[x][y]
    }

    pub fn closed_ball(&self, x: usize, r: Ratio<i64>) -> PointSet {
        (0..self.n).filter(|&y| self.dist[x][y] <= r).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BallNode {
    pub points: PointSet,
    #[serde(with = "ratio_serde")]
    pub radius: Ratio<i64>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

/// Closed balls ordered by inclusion; node 0 is the root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BallTree {
    pub nodes: Vec<BallNode>,
}

impl BallTree {
    pub fn root(&self) -> &BallNode {
        &self.nodes[0]
    }
}

pub fn ball_tree(u: &UltrametricSpace) -> BallTree {
    let n = u.points();
    let mut radii: Vec<Ratio<i64>> = vec![Ratio::from_integer(0)];
    radii.extend(
        (0..n)
            .flat_map(|x| (0..n).map(move |y| (x, y)))
            .map(|(x, y)| u.dist(x, y)),
    );
    radii.sort();
    radii.dedup();
    // Smallest radius first, so the first occurrence of a ball keeps its minimal radius.
    let mut balls: Vec<(PointSet, Ratio<i64>)> = Vec::new();
    for &r in &radii {
        for x in 0..n {
            let b = u.closed_ball(x, r);
            if !balls.iter().any(|(s, _)| *s == b) {
                balls.push((b, r));
            }
        }
    }
    balls.sort_by_key(|(s, _)| (std::cmp::Reverse(s.len()), s.min_point()));
    let mut nodes: Vec<BallNode> = balls
        .iter()
        .map(|&(points, radius)| BallNode {
            points,
            radius,
            parent: None,
            children: Vec::new(),
        })
        .collect();
    for i in 1..nodes.len() {
        let me = nodes[i].points;
        let parent = (0..i)
            .filter(|&j| me.is_subset(nodes[j].points) && nodes[j].points != me)
            .min_by_key(|&j| nodes[j].points.len())
            .expect("root contains every ball");
        nodes[i].parent = Some(parent);
        nodes[parent].children.push(i);
    }
    for node in &mut nodes {
        let mut ch = std::mem::take(&mut node.children);
        ch.sort_by_key(|&c| balls[c].0.min_point());
        node.children = ch;
    }
    BallTree { nodes }
}
