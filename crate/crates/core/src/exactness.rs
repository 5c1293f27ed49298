//! Strict short exact sequences of finitely presented modules over `IntTriv`
//! and the strong exactness of `C_fin(X, ·)`: sections of the induced maps
//! are built blockwise from the level-set partition of a function.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::IntMatrix;
use crate::modtensor::{FinModule, NormMode};
use crate::scalars::{Int, NormValue, RingDescriptor};
use crate::spaces::FiniteSpace;

/// `0 → A --α--> B --β--> C → 0`, maps given on generators
/// (`alpha` is `gens(B) × gens(A)`).
#[derive(Clone, Debug, Serialize)]
pub struct ShortExactSequence {
    pub a: FinModule,
    pub b: FinModule,
    pub c: FinModule,
    pub alpha: IntMatrix,
    pub beta: IntMatrix,
}

fn big(v: &[Int]) -> Vec<BigInt> {
    v.iter().map(|x| BigInt::from(*x)).collect()
}

fn small(v: &[BigInt]) -> Result<Vec<Int>> {
    v.iter()
        .map(|x| x.to_i128().ok_or(Error::Overflow))
        .collect()
}

fn apply(m: &IntMatrix, v: &[Int]) -> Result<Vec<Int>> {
    small(&m.mul_vec(&big(v)))
}

/// `[m | relations of target]`.
fn with_relations(m: &IntMatrix, target: &FinModule) -> IntMatrix {
    let k = target.relations.len();
    IntMatrix::from_fn(m.rows(), m.cols() + k, |i, j| {
        if j < m.cols() {
            m.get(i, j).clone()
        } else {
            BigInt::from(target.relations[j - m.cols()][i])
        }
    })
}

fn fail(law: &str, witness: impl std::fmt::Debug) -> Error {
    Error::ValidationFailure {
        law: law.into(),
        witness: format!("{witness:?}"),
    }
}

/// `sup |s|` over `M`'s generators divided by the isolation gap of `N`:
/// under trivial norms every class of `M` has norm at most the largest weight
/// and every nonzero class of `N` has norm at least the smallest.
fn trivial_norm_constant(m: &FinModule, n: &FinModule) -> BigRational {
    let max = m
        .ambient
        .weights
        .iter()
        .max()
        .and_then(NormValue::as_rational)
        .unwrap_or_else(BigRational::zero);
    let gap = n
        .ambient
        .isolation_gap()
        .as_rational()
        .expect("rational weights");
    max / gap
}

impl ShortExactSequence {
    pub fn new(
        a: FinModule,
        b: FinModule,
        c: FinModule,
        alpha: IntMatrix,
        beta: IntMatrix,
    ) -> Result<Self> {
        for m in [&a, &b, &c] {
            if m.ambient.ring != RingDescriptor::IntTriv {
                return Err(Error::UnsupportedRing(m.ambient.ring.to_string()));
            }
            if m.ambient.mode != NormMode::NonArchimedean {
                return Err(Error::ModeMismatch);
            }
            if m.ambient.weights.iter().any(|w| w.as_rational().is_none()) {
                return Err(Error::UnsupportedValue("irrational weight".into()));
            }
        }
        if (alpha.rows(), alpha.cols()) != (b.generators(), a.generators()) {
            return Err(Error::SizeMismatch {
                expected: b.generators() * a.generators(),
                got: alpha.rows() * alpha.cols(),
            });
        }
        if (beta.rows(), beta.cols()) != (c.generators(), b.generators()) {
            return Err(Error::SizeMismatch {
                expected: c.generators() * b.generators(),
                got: beta.rows() * beta.cols(),
            });
        }
        Ok(ShortExactSequence {
            a,
            b,
            c,
            alpha,
            beta,
        })
    }

    /// Well-definedness, `β∘α = 0`, injectivity of `α`, `ker β ⊆ im α` and
    /// surjectivity of `β`, all on classes.
    pub fn check_exact(&self) -> Result<()> {
        for r in &self.a.relations {
            if !self.b.is_zero_class(&apply(&self.alpha, r)?)? {
                return Err(fail("alpha well-defined", r));
            }
        }
        for r in &self.b.relations {
            if !self.c.is_zero_class(&apply(&self.beta, r)?)? {
                return Err(fail("beta well-defined", r));
            }
        }
        let ba = self.beta.mul(&self.alpha);
        for j in 0..ba.cols() {
            if !self.c.is_zero_class(&small(&ba.column(j))?)? {
                return Err(fail("beta . alpha = 0", j));
            }
        }
        let ga = self.a.generators();
        for k in with_relations(&self.alpha, &self.b).kernel_basis() {
            let v = small(&k[..ga])?;
            if !self.a.is_zero_class(&v)? {
                return Err(fail("alpha injective", v));
            }
        }
        let gb = self.b.generators();
        let alpha_rel = with_relations(&self.alpha, &self.b).smith();
        for k in with_relations(&self.beta, &self.c).kernel_basis() {
            if alpha_rel.solve(&k[..gb]).is_none() {
                return Err(fail("ker beta in im alpha", &k[..gb]));
            }
        }
        let beta_rel = with_relations(&self.beta, &self.c).smith();
        for i in 0..self.c.generators() {
            let e: Vec<BigInt> = (0..self.c.generators())
                .map(|j| BigInt::from(i == j))
                .collect();
            if beta_rel.solve(&e).is_none() {
                return Err(fail("beta surjective", i));
            }
        }
        Ok(())
    }

    /// `C_0`: bound for preimages under `α` of elements of `ker β`.
    pub fn c0(&self) -> BigRational {
        trivial_norm_constant(&self.a, &self.b)
    }

    /// `C_1`: bound for preimages under `β`.
    pub fn c1(&self) -> BigRational {
        trivial_norm_constant(&self.b, &self.c)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StrongExactnessReport {
    pub c0: NormValue,
    pub c1: NormValue,
    pub components: usize,
    pub functions_checked: usize,
    /// Largest observed `‖f̃‖ / ‖f‖` for the two sections.
    pub worst_kernel_ratio: NormValue,
    pub worst_section_ratio: NormValue,
}

type ModuleFn = Vec<Vec<Int>>;

fn sup_norm(m: &FinModule, f: &ModuleFn) -> Result<NormValue> {
    f.iter()
        .try_fold(NormValue::Zero, |acc, v| Ok(acc.max(m.class_norm(v, 1)?)))
}

/// Lifts a function blockwise: equal values share a block and a lift.
fn lift_blockwise(
    f: &ModuleFn,
    mut lift: impl FnMut(&[Int]) -> Result<Vec<Int>>,
) -> Result<ModuleFn> {
    let mut blocks: Vec<(&Vec<Int>, Vec<Int>)> = Vec::new();
    let mut out = Vec::with_capacity(f.len());
    for v in f {
        let l = match blocks.iter().find(|(w, _)| *w == v) {
            Some((_, l)) => l.clone(),
            None => {
                let l = lift(v)?;
                blocks.push((v, l.clone()));
                l
            }
        };
        out.push(l);
    }
    Ok(out)
}

fn ratio(num: &NormValue, den: &NormValue) -> NormValue {
    match (num.as_rational(), den.as_rational()) {
        (Some(n), Some(d)) if !d.is_zero() => NormValue::from_rational(n / d),
        _ => NormValue::Zero,
    }
}

fn random_vec(rng: &mut impl Rng, len: usize) -> Vec<Int> {
    (0..len).map(|_| rng.gen_range(-3..=3)).collect()
}

/// Checks that `C_fin(X, A) → C_fin(X, B) → C_fin(X, C)` is strictly exact on
/// `samples` random functions: `C_fin(X, α)` is injective, the blockwise
/// `β`-lift of `f` maps to `f` with norm at most `C_1 ‖f‖`, and every `g` in
/// the kernel of `C_fin(X, β)` has a blockwise `α`-preimage of norm at most
/// `C_0 ‖g‖`.
pub fn check_strong_exactness(
    ses: &ShortExactSequence,
    x: &FiniteSpace,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<StrongExactnessReport> {
    ses.check_exact()?;
    let comps = x.component_count();
    let (ga, gb, gc) = (ses.a.generators(), ses.b.generators(), ses.c.generators());
    let c0 = NormValue::from_rational(ses.c0());
    let c1 = NormValue::from_rational(ses.c1());
    let alpha_rel = with_relations(&ses.alpha, &ses.b).smith();
    let beta_rel = with_relations(&ses.beta, &ses.c).smith();
    let mut worst_kernel = NormValue::Zero;
    let mut worst_section = NormValue::Zero;
    for _ in 0..samples {
        // injectivity
        let h: ModuleFn = (0..comps).map(|_| random_vec(rng, ga)).collect();
        for v in &h {
            if !ses.a.is_zero_class(v)? && ses.b.is_zero_class(&apply(&ses.alpha, v)?)? {
                return Err(fail("C_fin(alpha) injective", v));
            }
        }
        // section of beta
        let f: ModuleFn = (0..comps).map(|_| random_vec(rng, gc)).collect();
        let f_lift = lift_blockwise(&f, |v| {
            if ses.c.is_zero_class(v)? {
                return Ok(vec![0; gb]);
            }
            let sol = beta_rel
                .solve(&big(v))
                .ok_or_else(|| fail("beta surjective", v))?;
            small(&sol[..gb])
        })?;
        for (l, v) in f_lift.iter().zip(&f) {
            if !ses.c.same_class(&apply(&ses.beta, l)?, v)? {
                return Err(fail("beta . lift = f", v));
            }
        }
        let (nl, nf) = (sup_norm(&ses.b, &f_lift)?, sup_norm(&ses.c, &f)?);
        if nl > c1.mul(&nf) {
            return Err(fail("section bound C_1", (&f, &f_lift)));
        }
        worst_section = worst_section.max(ratio(&nl, &nf));
        // kernel of beta: alpha of something plus relations of B
        let g: ModuleFn = h
            .iter()
            .map(|v| {
                let mut w = apply(&ses.alpha, v)?;
                for r in &ses.b.relations {
                    let k: Int = rng.gen_range(-2..=2);
                    for (x, y) in w.iter_mut().zip(r) {
                        *x += k * y;
                    }
                }
                Ok(w)
            })
            .collect::<Result<_>>()?;
        for v in &g {
            if !ses.c.is_zero_class(&apply(&ses.beta, v)?)? {
                return Err(fail("beta . g = 0", v));
            }
        }
        let g_lift = lift_blockwise(&g, |v| {
            if ses.b.is_zero_class(v)? {
                return Ok(vec![0; ga]);
            }
            let sol = alpha_rel
                .solve(&big(v))
                .ok_or_else(|| fail("ker beta in im alpha", v))?;
            small(&sol[..ga])
        })?;
        for (l, v) in g_lift.iter().zip(&g) {
            if !ses.b.same_class(&apply(&ses.alpha, l)?, v)? {
                return Err(fail("alpha . lift = g", v));
            }
        }
        let (nl, ng) = (sup_norm(&ses.a, &g_lift)?, sup_norm(&ses.b, &g)?);
        if nl > c0.mul(&ng) {
            return Err(fail("kernel bound C_0", (&g, &g_lift)));
        }
        worst_kernel = worst_kernel.max(ratio(&nl, &ng));
    }
    Ok(StrongExactnessReport {
        c0,
        c1,
        components: comps,
        functions_checked: samples,
        worst_kernel_ratio: worst_kernel,
        worst_section_ratio: worst_section,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{random_ses, rng};

    #[test]
    fn seeded_sequences_are_strongly_exact() {
        let mut r = rng(11);
        let x = FiniteSpace::discrete(4).unwrap();
        for _ in 0..20 {
            let ses = random_ses(&mut r);
            let rep = check_strong_exactness(&ses, &x, 10, &mut r).unwrap();
            assert_eq!(rep.c0, NormValue::one());
            assert!(rep.worst_section_ratio <= rep.c1);
        }
    }

    #[test]
    fn non_exact_sequence_is_rejected() {
        let m = |rel: Vec<Vec<Int>>| {
            let amb = crate::modtensor::WeightedFreeModule::unit(
                RingDescriptor::IntTriv,
                &["g"],
                NormMode::NonArchimedean,
            );
            FinModule::new(amb, rel).unwrap()
        };
        // Z --2--> Z --1--> Z/4 has beta . alpha != 0
        let one = |k: Int| IntMatrix::from_rows(1, &[vec![k]]);
        let ses = ShortExactSequence::new(m(vec![]), m(vec![]), m(vec![vec![4]]), one(2), one(1))
            .unwrap();
        assert!(matches!(
            ses.check_exact(),
            Err(Error::ValidationFailure { .. })
        ));
    }
}
