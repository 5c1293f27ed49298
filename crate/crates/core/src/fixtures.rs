//! Deterministic sample inputs shared by tests, the acceptance harness and
//! the command line: finite spaces, ultrametric spaces and short exact
//! sequences.

use num_bigint::BigInt;
use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exactness::ShortExactSequence;
use crate::linalg::IntMatrix;
use crate::modtensor::{FinModule, NormMode, WeightedFreeModule};
use crate::scalars::{Int, RingDescriptor};
use crate::spaces::{FiniteSpace, PointSet, UltrametricSpace};

pub const FIXTURE_SEED: u64 = 0x5eed_cafe;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn set(points: &[usize]) -> PointSet {
    points.iter().copied().collect()
}

fn space(n: usize, gens: &[&[usize]]) -> FiniteSpace {
    FiniteSpace::new(n, gens.iter().map(|g| set(g)).collect()).expect("valid fixture")
}

/// A random topology on `n` points from `k` random generating opens.
pub fn random_space(rng: &mut impl Rng, n: usize, k: usize) -> FiniteSpace {
    let gens = (0..k)
        .map(|_| {
            let mut s = PointSet::EMPTY;
            for x in 0..n {
                if rng.gen_bool(0.35) {
                    s.insert(x);
                }
            }
            s
        })
        .collect();
    FiniteSpace::new(n, gens).expect("points below cap")
}

/// Thirty spaces with at most six quasi-components: named examples first,
/// then seeded random topologies.
pub fn fixture_spaces() -> Vec<(String, FiniteSpace)> {
    let mut out: Vec<(String, FiniteSpace)> = vec![
        ("point".into(), FiniteSpace::discrete(1).unwrap()),
        ("discrete-2".into(), FiniteSpace::discrete(2).unwrap()),
        ("discrete-3".into(), FiniteSpace::discrete(3).unwrap()),
        ("discrete-4".into(), FiniteSpace::discrete(4).unwrap()),
        ("discrete-6".into(), FiniteSpace::discrete(6).unwrap()),
        ("indiscrete-3".into(), FiniteSpace::indiscrete(3).unwrap()),
        ("sierpinski".into(), FiniteSpace::sierpinski()),
        (
            "two-sierpinski".into(),
            space(4, &[&[1], &[0, 1], &[3], &[2, 3]]),
        ),
        ("chain-3".into(), space(3, &[&[0], &[0, 1]])),
        ("v-shape".into(), space(3, &[&[0], &[1]])),
        ("pair-plus-point".into(), space(3, &[&[0, 1], &[2]])),
        (
            "pseudo-circle".into(),
            space(4, &[&[0], &[1], &[0, 1, 2], &[0, 1, 3]]),
        ),
        ("empty".into(), FiniteSpace::discrete(0).unwrap()),
    ];
    let mut r = rng(FIXTURE_SEED);
    let mut i = 0;
    while out.len() < 30 {
        let n = r.gen_range(2..=10);
        let k = r.gen_range(1..=n);
        let x = random_space(&mut r, n, k);
        if x.component_count() <= 6 {
            out.push((format!("random-{i}"), x));
        }
        i += 1;
    }
    out
}

/// Points labelled by distinct random words of length `depth` over a
/// `branching`-letter alphabet; `d(x, y) = p^{-(common prefix length)}`.
pub fn random_ultrametric(
    rng: &mut impl Rng,
    n: usize,
    depth: u32,
    branching: u32,
    p: i64,
) -> UltrametricSpace {
    assert!(
        (branching as u64).pow(depth) >= n as u64,
        "not enough words"
    );
    let mut words: Vec<Vec<u32>> = Vec::new();
    while words.len() < n {
        let w: Vec<u32> = (0..depth).map(|_| rng.gen_range(0..branching)).collect();
        if !words.contains(&w) {
            words.push(w);
        }
    }
    let dist = (0..n)
        .map(|x| {
            (0..n)
                .map(|y| {
                    if x == y {
                        return Ratio::from_integer(0);
                    }
                    let common = words[x]
                        .iter()
                        .zip(&words[y])
                        .take_while(|(a, b)| a == b)
                        .count() as u32;
                    Ratio::new(1, p.pow(common))
                })
                .collect()
        })
        .collect();
    UltrametricSpace::new(n, dist).expect("ultrametric by construction")
}

/// A unimodular matrix: a product of elementary row operations.
pub fn random_unimodular(rng: &mut impl Rng, n: usize) -> IntMatrix {
    let mut m: Vec<Vec<Int>> = (0..n)
        .map(|i| (0..n).map(|j| Int::from(i == j)).collect())
        .collect();
    if n < 2 {
        return IntMatrix::from_rows(n, &m);
    }
    for _ in 0..2 * n {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let k: Int = *[-2, -1, 1, 2].choose(rng).unwrap();
        for c in 0..n {
            m[i][c] += k * m[j][c];
        }
    }
    IntMatrix::from_rows(n, &m)
}

fn triv_module(gens: usize, relations: Vec<Vec<Int>>) -> FinModule {
    let labels: Vec<String> = (0..gens).map(|i| format!("g{i}")).collect();
    let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    let ambient =
        WeightedFreeModule::unit(RingDescriptor::IntTriv, &refs, NormMode::NonArchimedean);
    FinModule::new(ambient, relations).expect("relations fit")
}

fn cyclic(n: Int) -> FinModule {
    triv_module(1, vec![vec![n]])
}

/// A strict short exact sequence of finitely generated `IntTriv`-modules:
/// a split sequence of free modules twisted by a unimodular change of basis,
/// `0 → Z --n--> Z → Z/n → 0`, or `0 → Z/m --k--> Z/mk → Z/k → 0`.
pub fn random_ses(rng: &mut impl Rng) -> ShortExactSequence {
    let big = |m: Vec<Vec<Int>>, cols: usize| IntMatrix::from_rows(cols, &m);
    match rng.gen_range(0..3) {
        0 => {
            let a = rng.gen_range(1..=2);
            let c = rng.gen_range(1..=2);
            let u = random_unimodular(rng, a + c);
            let u_inv = u.inverse_int().expect("unimodular");
            let incl = IntMatrix::from_fn(a + c, a, |i, j| BigInt::from(i == j));
            let proj = IntMatrix::from_fn(c, a + c, |i, j| BigInt::from(j == a + i));
            ShortExactSequence::new(
                triv_module(a, vec![]),
                triv_module(a + c, vec![]),
                triv_module(c, vec![]),
                u.mul(&incl),
                proj.mul(&u_inv),
            )
            .expect("well-formed")
        }
        1 => {
            let n = rng.gen_range(2..=9);
            ShortExactSequence::new(
                triv_module(1, vec![]),
                triv_module(1, vec![]),
                cyclic(n),
                big(vec![vec![n]], 1),
                big(vec![vec![1]], 1),
            )
            .expect("well-formed")
        }
        _ => {
            let m = rng.gen_range(2..=5);
            let k = rng.gen_range(2..=5);
            ShortExactSequence::new(
                cyclic(m),
                cyclic(m * k),
                cyclic(k),
                big(vec![vec![k]], 1),
                big(vec![vec![1]], 1),
            )
            .expect("well-formed")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_spaces_are_stable() {
        let a = fixture_spaces();
        assert_eq!(a.len(), 30);
        assert!(a.iter().all(|(_, x)| x.component_count() <= 6));
        assert_eq!(a, fixture_spaces());
    }

    #[test]
    fn unimodular_has_unit_determinant() {
        let mut r = rng(3);
        for n in 1..5 {
            let d = random_unimodular(&mut r, n).determinant();
            assert!(d == BigInt::from(1) || d == BigInt::from(-1));
        }
    }
}
