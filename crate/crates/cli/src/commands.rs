use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use dbl_core::bases::{
    generalised_vdp, mahler_coeffs, mahler_eval, mahler_level_unimodular, mahler_pairing,
    partition_basis, vdp_basis_level, BasisFamily,
};
use dbl_core::cech::{tate_equivalence_report, CoverFamily};
use dbl_core::exactness::check_strong_exactness;
use dbl_core::fixtures::{fixture_spaces, random_ses, random_ultrametric, rng};
use dbl_core::functions::{Cfin, CfinFunction};
use dbl_core::modtensor::{
    archimedean_counterexample, tensor_elem_norm_arch_upper, tensor_norm_nonarch, AbsorbingMap,
    NormMode, TensorElement, WeightedFreeModule,
};
use dbl_core::scalars::{Int, NormValue, RingDescriptor};
use dbl_core::spaces::{banaschewski, ultrafilters, FiniteSpace, PointSet};
use dbl_core::spectrum::{admissible_sample, g_inverse, g_split, gelfand_roundtrip, SpectrumPoint};
use dbl_core::weierstrass::sw_construct_indicator;
use dbl_core::Error;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::report::{verdict, Failure, Verdict};

pub type Outcome = Result<Vec<Verdict>, Failure>;

/// Families larger than this are refused by `cech --exhaustive`.
const MAX_FAMILIES: usize = 2_000_000;

pub fn parse_ring(s: Option<&str>) -> Result<RingDescriptor, Failure> {
    Ok(s.unwrap_or("IntInf").parse::<RingDescriptor>()?)
}

pub fn load_space(path: Option<&Path>, default_points: usize) -> Result<FiniteSpace, Failure> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
            Ok(serde_json::from_str(&text)?)
        }
        None => Ok(FiniteSpace::discrete(default_points)?),
    }
}

pub fn parse_ints(s: &str) -> Result<Vec<Int>, Failure> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<Int>()
                .map_err(|_| Failure::Input(format!("not an integer: {t:?}")))
        })
        .collect()
}

fn all_vectors(len: usize, lo: Int, hi: Int) -> Vec<Vec<Int>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|v| (lo..=hi).map(move |a| [v.clone(), vec![a]].concat()))
            .collect();
    }
    out
}

pub fn space(x: FiniteSpace) -> Outcome {
    let x = Arc::new(x);
    let uf = ultrafilters(&x);
    let b = banaschewski(&x);
    let mut out = vec![verdict(
        "ultrafilters biject with quasi-components",
        uf.len() == x.component_count(),
        json!({
            "points": x.points(),
            "quasi_components": x.quasi_components(),
            "clopens": x.clopens(),
            "totally_disconnected": x.is_totally_disconnected(),
            "banaschewski": b,
        }),
    )];
    let c = x.component_count();
    if c <= 8 {
        let mut bad = None;
        let mut checked = 0usize;
        for vals in all_vectors(c, -2, 2) {
            let f = Cfin::new(x.clone(), RingDescriptor::IntInf, vals)?;
            let g = f.extend_banaschewski();
            if g.restrict_along_iota(x.clone())? != f || g.sup_norm()? != f.sup_norm()? {
                bad = Some(f.values().to_vec());
                break;
            }
            checked += 1;
        }
        out.push(verdict(
            "extension along the Banaschewski map is isometric",
            bad.is_none(),
            json!({"functions_checked": checked, "counterexample": bad}),
        ));
    }
    Ok(out)
}

pub fn spectrum(x: FiniteSpace, ring: RingDescriptor) -> Outcome {
    let x = Arc::new(x);
    let mut mismatches = Vec::new();
    let sample = admissible_sample(&ring);
    for b in &sample {
        for c in 0..x.component_count() {
            let sn = g_inverse(c, *b, &x, ring)?;
            let back = g_split(&sn, &x, ring)?;
            if back
                != (SpectrumPoint {
                    component: c,
                    base: b.canonical(&ring),
                })
            {
                mismatches.push(json!({"component": c, "base": b.to_string()}));
            }
        }
    }
    let mut out = vec![verdict(
        "split inverts the structured seminorm",
        mismatches.is_empty(),
        json!({"base_points": sample.iter().map(|b| b.to_string()).collect::<Vec<_>>(), "mismatches": mismatches}),
    )];
    match gelfand_roundtrip(&x, ring) {
        Ok(w) => out.push(verdict(
            "Gelfand round trip",
            w.recovered_classes == x.component_count(),
            w,
        )),
        Err(e @ Error::DisconnectedSpectrum { .. }) => out.push(verdict(
            "Gelfand round trip",
            false,
            json!({"error": e.to_string()}),
        )),
        Err(e) => return Err(e.into()),
    }
    Ok(out)
}

fn families(n: usize, max: usize) -> Vec<Vec<PointSet>> {
    let sets: Vec<PointSet> = (0..1u32 << n).map(PointSet).collect();
    let mut out = Vec::new();
    let mut stack: Vec<(usize, Vec<PointSet>)> = vec![(0, vec![])];
    while let Some((start, cur)) = stack.pop() {
        if !cur.is_empty() {
            out.push(cur.clone());
        }
        if cur.len() == max {
            continue;
        }
        for i in (start..sets.len()).rev() {
            let mut next = cur.clone();
            next.push(sets[i]);
            stack.push((i + 1, next));
        }
    }
    out
}

fn count_families(n: usize, max: usize) -> usize {
    let m = 1usize << n;
    let mut total = 0usize;
    let mut c = 1usize;
    for k in 1..=max.min(m) {
        c = c.saturating_mul(m + 1 - k) / k;
        total = total.saturating_add(c);
    }
    total
}

pub fn cech_exhaustive(max_points: usize, max_sets: usize, rings: &[RingDescriptor]) -> Outcome {
    let mut total = 0usize;
    for n in 0..=max_points {
        total = total.saturating_add(count_families(n, max_sets).saturating_mul(rings.len()));
    }
    if max_points > 12 || max_sets > 6 || total > MAX_FAMILIES {
        return Err(Failure::Input(format!(
            "{total} cases for --max-points {max_points} --max-sets {max_sets} (limit {MAX_FAMILIES})"
        )));
    }
    let mut cases = Vec::new();
    for n in 0..=max_points {
        for fam in families(n, max_sets) {
            for r in rings {
                cases.push((n, fam.clone(), *r));
            }
        }
    }
    let results: Vec<Result<Option<Value>, Failure>> = cases
        .par_iter()
        .map(|(n, fam, ring)| {
            let x = Arc::new(FiniteSpace::discrete(*n)?);
            let f = CoverFamily::new(x.clone(), fam.clone())?;
            match tate_equivalence_report(&f, *ring) {
                Ok(_) => Ok(None),
                Err(e @ Error::EquivalenceViolation { .. }) => Ok(Some(
                    json!({"points": n, "sets": fam, "ring": ring, "error": e.to_string()}),
                )),
                Err(e) => Err(e.into()),
            }
        })
        .collect();
    let mut disagreements = Vec::new();
    for r in results {
        if let Some(v) = r? {
            disagreements.push(v);
        }
    }
    Ok(vec![verdict(
        "cover iff Čech complex exact",
        disagreements.is_empty(),
        json!({"cases": cases.len(), "disagreements": disagreements}),
    )])
}

#[derive(Deserialize)]
struct CechInput {
    space: FiniteSpace,
    sets: Vec<PointSet>,
}

pub fn cech_input(path: &Path, ring: RingDescriptor) -> Outcome {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let input: CechInput = serde_json::from_str(&text)?;
    let f = CoverFamily::new(Arc::new(input.space), input.sets)?;
    let rep = tate_equivalence_report(&f, ring)?;
    Ok(vec![verdict(
        "cover iff Čech complex exact",
        rep.is_cover == rep.exact,
        rep,
    )])
}

/// The diagonal `Σ 1_{x_i} ⊗ δ_i` on `n + 1` components.
fn diagonal_tensor(n: usize) -> Result<TensorElement, Failure> {
    let ring = RingDescriptor::IntInf;
    let one = WeightedFreeModule::unit(ring, &["1"], NormMode::Archimedean);
    let labels: Vec<String> = (0..=n).map(|i| format!("d{i}")).collect();
    let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    let delta = WeightedFreeModule::unit(ring, &refs, NormMode::Archimedean);
    let map = AbsorbingMap::new(n + 1, &one, &delta)?;
    let id = (0..=n)
        .map(|i| (0..=n).map(|j| Int::from(i == j)).collect())
        .collect();
    Ok(TensorElement::from_matrix(map.source, delta, id)?)
}

pub fn tensor(n: usize, budget: u32) -> Outcome {
    if n == 0 || n > 64 {
        return Err(Failure::Input(format!("--n must be in 1..=64, got {n}")));
    }
    let rep = archimedean_counterexample(n)?;
    let expected = NormValue::from_int(n as u64 + 1);
    let mut out = vec![verdict(
        "Archimedean tensor norm outgrows the sup norm",
        rep.tensor_lower_bound == expected && rep.forward_norm == NormValue::one(),
        &rep,
    )];
    let ub = tensor_elem_norm_arch_upper(&diagonal_tensor(n)?, budget)?;
    out.push(verdict(
        "lower bound below upper bound",
        rep.tensor_lower_bound <= ub.value,
        json!({"lower": rep.tensor_lower_bound, "upper": ub.value, "candidates": ub.candidates}),
    ));

    let triv = RingDescriptor::IntTriv;
    let m0 = WeightedFreeModule::unit(triv, &["a"], NormMode::NonArchimedean);
    let m1 = WeightedFreeModule::new(
        triv,
        vec![
            ("b".into(), NormValue::one()),
            ("c".into(), NormValue::from_int(2)),
        ],
        NormMode::NonArchimedean,
    )?;
    let map = AbsorbingMap::new(2, &m0, &m1)?;
    let mut bad = None;
    let mut checked = 0;
    for flat in all_vectors(4, -2, 2) {
        let rows = flat.chunks(2).map(<[Int]>::to_vec).collect();
        let t = TensorElement::from_matrix(map.source.clone(), m1.clone(), rows)?;
        let fw = map.forward(&t)?;
        if map.backward(&fw)? != t || tensor_norm_nonarch(&t)? != map.sup_norm(&fw)? {
            bad = Some(flat);
            break;
        }
        checked += 1;
    }
    out.push(verdict(
        "non-Archimedean absorbing map is isometric",
        bad.is_none(),
        json!({"tensors_checked": checked, "counterexample": bad}),
    ));
    Ok(out)
}

pub enum BasisChoice {
    Partition(FiniteSpace),
    Vdp(u64, u32),
    Generalised { points: usize, p: i64, seed: u64 },
    Mahler(u64, u32),
}

fn family_verdicts(f: &BasisFamily) -> Outcome {
    let cert = f.certificate()?;
    Ok(vec![
        verdict(
            "determinant is a unit",
            cert.unimodular,
            json!({"size": f.len(), "certificate": cert}),
        ),
        verdict(
            "pair products lie in {e0, e1, 0}",
            f.pairwise_products_ok(),
            json!({"sets": f.sets}),
        ),
    ])
}

pub fn basis(choice: BasisChoice) -> Outcome {
    match choice {
        BasisChoice::Partition(x) => family_verdicts(&partition_basis(&x)),
        BasisChoice::Vdp(p, k) => family_verdicts(&vdp_basis_level(p, k)?),
        BasisChoice::Generalised { points, p, seed } => {
            if points == 0 || points > 64 {
                return Err(Failure::Input(format!(
                    "--max-points must be in 1..=64, got {points}"
                )));
            }
            let u = random_ultrametric(&mut rng(seed), points, 4, 3, p);
            family_verdicts(&generalised_vdp(&u))
        }
        BasisChoice::Mahler(p, k) => {
            let c = mahler_level_unimodular(p, k)?;
            let ok = c.lower_unitriangular && c.determinant.abs().is_one();
            Ok(vec![verdict("Mahler level is unimodular", ok, c)])
        }
    }
}

pub fn mahler(pairing: Option<u64>, values: Option<Vec<Int>>) -> Outcome {
    if pairing.is_none() && values.is_none() {
        return Err(Failure::Input("mahler needs --pairing or --values".into()));
    }
    let mut out = Vec::new();
    if let Some(max) = pairing {
        if max > 200 {
            return Err(Failure::Input(format!("--max {max} exceeds 200")));
        }
        let mut off = Vec::new();
        for n in 0..=max {
            for i in 0..=max {
                let v = mahler_pairing(n, i);
                let expect = if n == i {
                    BigInt::one()
                } else {
                    BigInt::zero()
                };
                if v != expect {
                    off.push(json!({"n": n, "i": i, "value": v.to_string()}));
                }
            }
        }
        let cases = (max + 1) * (max + 1);
        out.push(verdict(
            "pairing is the Kronecker delta",
            off.is_empty(),
            json!({"cases": cases, "failures": off}),
        ));
    }
    if let Some(vals) = values {
        let big: Vec<BigInt> = vals.iter().map(|&v| BigInt::from(v)).collect();
        let coeffs = mahler_coeffs(&big);
        let ok = big
            .iter()
            .enumerate()
            .all(|(x, v)| &mahler_eval(&coeffs, x as u64) == v);
        let shown: Vec<String> = coeffs.iter().map(BigInt::to_string).collect();
        out.push(verdict(
            "Mahler series reproduces the values",
            ok,
            json!({"coefficients": shown}),
        ));
    }
    Ok(out)
}

pub fn sw(
    x: Option<FiniteSpace>,
    ring: RingDescriptor,
    gens: &[Vec<Int>],
    clopen: &[Int],
) -> Outcome {
    let first = gens
        .first()
        .ok_or_else(|| Failure::Input("at least one --gen is required".into()))?;
    let x = Arc::new(match x {
        Some(x) => x,
        None => FiniteSpace::discrete(first.len())?,
    });
    let gens: Vec<CfinFunction> = gens
        .iter()
        .map(|g| Cfin::new(x.clone(), ring, g.clone()))
        .collect::<Result<_, _>>()?;
    let mut u = PointSet::default();
    for &p in clopen {
        if p < 0 || p as usize >= x.points() {
            return Err(Failure::Input(format!("point {p} outside the space")));
        }
        u.insert(p as usize);
    }
    match sw_construct_indicator(&x, ring, &gens, u) {
        Ok(c) => {
            let ok = c.a_u > 0
                && (0..x.points())
                    .all(|p| c.evaluation[p] == if u.contains(p) { c.a_u } else { 0 });
            let expr = c.tree.to_string();
            Ok(vec![verdict(
                "certificate evaluates to a_U·1_U",
                ok,
                json!({"certificate": c, "expression": expr}),
            )])
        }
        Err(Error::NonSeparating(a, b)) => Ok(vec![verdict(
            "generators separate the quasi-components",
            false,
            json!({"witness": {"NonSeparating": [a, b]}}),
        )]),
        Err(e) => Err(e.into()),
    }
}

/// A fast pass over every module with a fixed seed.
pub fn suite(seed: u64) -> Outcome {
    let mut out = Vec::new();
    let rings = [
        RingDescriptor::IntInf,
        RingDescriptor::IntTriv,
        RingDescriptor::FpTriv(2),
    ];
    out.extend(cech_exhaustive(3, 3, &rings)?);
    out.extend(mahler(Some(12), None)?);
    for (p, k) in [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (5, 1)] {
        out.extend(basis(BasisChoice::Vdp(p, k))?);
        out.extend(basis(BasisChoice::Mahler(p, k))?);
    }
    out.extend(basis(BasisChoice::Generalised {
        points: 12,
        p: 2,
        seed,
    })?);
    out.extend(sw(None, RingDescriptor::IntInf, &[vec![0, 1, 2]], &[1])?);

    let mut recovered = Vec::new();
    for (name, x) in fixture_spaces() {
        let x = Arc::new(x);
        let w = gelfand_roundtrip(&x, RingDescriptor::IntInf)?;
        if w.recovered_classes != x.component_count() {
            recovered.push(name);
        }
    }
    out.push(verdict(
        "Gelfand round trip on fixtures",
        recovered.is_empty(),
        json!({"failures": recovered}),
    ));

    for n in [1, 4, 8] {
        out.extend(tensor(n, 1)?);
    }

    let spaces = fixture_spaces();
    let mut r = rng(seed);
    let mut worst = Vec::new();
    for i in 0..20 {
        let ses = random_ses(&mut r);
        let idx = r.gen_range(0..spaces.len());
        let rep = check_strong_exactness(&ses, &spaces[idx].1, 10, &mut r)?;
        if rep.worst_kernel_ratio > rep.c0 || rep.worst_section_ratio > rep.c1 {
            worst.push(i);
        }
    }
    out.push(verdict(
        "strong exactness on seeded sequences",
        worst.is_empty(),
        json!({"sequences": 20, "failures": worst}),
    ));
    Ok(out)
}
