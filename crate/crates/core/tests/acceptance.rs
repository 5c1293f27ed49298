//! One PASS/FAIL line per acceptance criterion. Exits nonzero on failure.

use std::sync::Arc;
use std::time::Instant;

use dbl_core::bases::{
    generalised_vdp, mahler_level_unimodular, mahler_pairing, partition_basis, vdp_basis_level,
    vdp_expand, BasisFamily, CoefficientNorm,
};
use dbl_core::cech::{tate_equivalence_report, CoverFamily};
use dbl_core::exactness::check_strong_exactness;
use dbl_core::fixtures::{fixture_spaces, random_ses, random_ultrametric, rng};
use dbl_core::functions::{ideal_sum_split, Cfin, CfinFunction};
use dbl_core::modtensor::{
    archimedean_counterexample, tensor_elem_norm_arch_upper, tensor_norm_nonarch, AbsorbingMap,
    NormMode, TensorElement, WeightedFreeModule,
};
use dbl_core::scalars::{Int, NormValue, RingDescriptor};
use dbl_core::spaces::{FiniteSpace, PointSet};
use dbl_core::spectrum::{
    admissible_sample, eval_seminorm, g_inverse, g_split, gelfand_roundtrip, SpectrumPoint,
};
use dbl_core::weierstrass::sw_construct_indicator;
use dbl_core::Error;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

/// All vectors in `lo..=hi` of length `len`.
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

fn subsets(n: usize) -> Vec<PointSet> {
    (0..1u32 << n).map(PointSet).collect()
}

fn families(n: usize, max: usize) -> Vec<Vec<PointSet>> {
    let sets = subsets(n);
    let mut out = Vec::new();
    fn rec(
        start: usize,
        sets: &[PointSet],
        cur: &mut Vec<PointSet>,
        max: usize,
        out: &mut Vec<Vec<PointSet>>,
    ) {
        if !cur.is_empty() {
            out.push(cur.clone());
        }
        if cur.len() == max {
            return;
        }
        for i in start..sets.len() {
            cur.push(sets[i]);
            rec(i + 1, sets, cur, max, out);
            cur.pop();
        }
    }
    rec(0, &sets, &mut Vec::new(), max, &mut out);
    out
}

fn criterion_1() -> Outcome {
    let rings = [
        RingDescriptor::IntInf,
        RingDescriptor::IntTriv,
        RingDescriptor::FpTriv(2),
    ];
    let mut cases = Vec::new();
    for n in 0..=4 {
        for fam in families(n, 3) {
            for r in rings {
                cases.push((n, fam.clone(), r));
            }
        }
    }
    let failures: Vec<String> = cases
        .par_iter()
        .filter_map(|(n, fam, ring)| {
            let x = Arc::new(FiniteSpace::discrete(*n).unwrap());
            let f = CoverFamily::new(x.clone(), fam.clone()).unwrap();
            let rep = match tate_equivalence_report(&f, *ring) {
                Ok(r) => r,
                Err(e) => return Some(format!("n={n} {fam:?} {ring}: {e}")),
            };
            // oracle: H^0 is free on the uncovered points, higher groups vanish
            let uncovered = n - f.union().len();
            let h0_ok =
                rep.homology[0].free_rank == uncovered && rep.homology[0].torsion.is_empty();
            let higher_ok = rep.homology[1..]
                .iter()
                .all(|g| g.free_rank == 0 && g.torsion.is_empty());
            let cover_oracle = f.union() == x.full_set();
            if !(h0_ok && higher_ok) || rep.is_cover != cover_oracle || rep.exact != cover_oracle {
                Some(format!("n={n} {fam:?} {ring}"))
            } else {
                None
            }
        })
        .collect();
    if failures.is_empty() {
        Ok(format!("{} (space, family, ring) cases agree", cases.len()))
    } else {
        Err(format!(
            "{} disagreements, first {}",
            failures.len(),
            failures[0]
        ))
    }
}

fn criterion_2() -> Outcome {
    let mut r = rng(2);
    let mut checks = 0usize;
    for (name, x) in fixture_spaces() {
        let x = Arc::new(x);
        let k = x.component_count();
        for ring in [RingDescriptor::IntInf, RingDescriptor::IntTriv] {
            for b in admissible_sample(&ring) {
                for c in 0..k {
                    let sn = g_inverse(c, b, &x, ring).map_err(|e| format!("{name}: {e}"))?;
                    let back = g_split(&sn, &x, ring).map_err(|e| format!("{name} {b}: {e}"))?;
                    let expect = SpectrumPoint {
                        component: c,
                        base: b.canonical(&ring),
                    };
                    if back != expect {
                        return Err(format!("{name} {ring} {b} c={c}: got {back:?}"));
                    }
                    // multiplicativity: every pair of values in -3..3 at c,
                    // seeded values elsewhere
                    for u in -3..=3 {
                        for v in -3..=3 {
                            let mut fv: Vec<Int> = (0..k).map(|_| r.gen_range(-3..=3)).collect();
                            let mut gv: Vec<Int> = (0..k).map(|_| r.gen_range(-3..=3)).collect();
                            fv[c] = u;
                            gv[c] = v;
                            let f = Cfin::new(x.clone(), ring, fv).unwrap();
                            let g = Cfin::new(x.clone(), ring, gv).unwrap();
                            let fg = f.mul(&g).unwrap();
                            let lhs = eval_seminorm(&sn.point, &fg).unwrap();
                            let rhs = eval_seminorm(&sn.point, &f)
                                .unwrap()
                                .mul(&eval_seminorm(&sn.point, &g).unwrap());
                            if lhs != rhs {
                                return Err(format!("{name} {b}: |fg| = {lhs} != {rhs}"));
                            }
                            checks += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(format!(
        "{checks} multiplicativity checks, all round trips exact"
    ))
}

fn criterion_3() -> Outcome {
    let mut r = rng(3);
    let (mut done, mut strict) = (0, 0);
    while done < 1000 {
        let n = r.gen_range(2..=8);
        let x = Arc::new(FiniteSpace::discrete(n).unwrap());
        let k0 = PointSet(r.gen_range(0..1u32 << n));
        let k1 = PointSet(r.gen_range(0..1u32 << n));
        let both = k0.intersect(k1);
        let vals: Vec<Int> = (0..n)
            .map(|p| {
                if both.contains(p) {
                    0
                } else {
                    r.gen_range(-3..=3)
                }
            })
            .collect();
        let f = Cfin::new(x.clone(), RingDescriptor::IntInf, vals).unwrap();
        let s = ideal_sum_split(&f, k0, k1).map_err(|e| e.to_string())?;
        if s.f0.add(&s.f1).unwrap() != f || !s.f0.vanishes_on(k0) || !s.f1.vanishes_on(k1) {
            return Err(format!("bad split of {:?}", f.values()));
        }
        let nf = f.sup_norm().unwrap();
        let total =
            s.f0.sup_norm()
                .unwrap()
                .add(&s.f1.sup_norm().unwrap())
                .unwrap();
        if total > NormValue::from_int(2).mul(&nf) {
            return Err(format!("constant exceeded on {:?}", f.values()));
        }
        if total > nf {
            strict += 1;
        }
        done += 1;
    }
    if strict == 0 {
        return Err("no case with ‖f0‖+‖f1‖ > ‖f‖".into());
    }
    Ok(format!("{done} splits within 2‖f‖, {strict} exceed ‖f‖"))
}

fn criterion_4() -> Outcome {
    // (a) non-Archimedean isometry, exhaustive over small coefficient matrices
    let triv = RingDescriptor::IntTriv;
    let m0 = WeightedFreeModule::new(
        triv,
        vec![("a".into(), NormValue::one())],
        NormMode::NonArchimedean,
    )
    .unwrap();
    let m1 = WeightedFreeModule::new(
        triv,
        vec![
            ("b".into(), NormValue::one()),
            ("c".into(), NormValue::from_int(2)),
        ],
        NormMode::NonArchimedean,
    )
    .unwrap();
    let mut checked = 0;
    for comps in [1, 2] {
        let map = AbsorbingMap::new(comps, &m0, &m1).unwrap();
        for flat in all_vectors(comps * 2, -2, 2) {
            let rows: Vec<Vec<Int>> = flat.chunks(2).map(|c| c.to_vec()).collect();
            let t = TensorElement::from_matrix(map.source.clone(), m1.clone(), rows).unwrap();
            let fw = map.forward(&t).unwrap();
            let back = map.backward(&fw).unwrap();
            let (nt, nf) = (tensor_norm_nonarch(&t).unwrap(), map.sup_norm(&fw).unwrap());
            // oracle: trivial norms give max weight over nonzero entries
            let oracle = flat
                .iter()
                .enumerate()
                .filter(|(_, a)| **a != 0)
                .map(|(i, _)| {
                    if i % 2 == 0 {
                        NormValue::one()
                    } else {
                        NormValue::from_int(2)
                    }
                })
                .max()
                .unwrap_or(NormValue::Zero);
            if back != t || nt != nf || nt != oracle {
                return Err(format!("isometry fails on {flat:?}: {nt} vs {nf}"));
            }
            checked += 1;
        }
    }
    // (b) Archimedean unboundedness
    for n in 1..=16 {
        let rep = archimedean_counterexample(n).map_err(|e| e.to_string())?;
        if rep.tensor_lower_bound != NormValue::from_int(n as u64 + 1)
            || rep.forward_norm != NormValue::one()
        {
            return Err(format!(
                "n={n}: bound {} forward {}",
                rep.tensor_lower_bound, rep.forward_norm
            ));
        }
    }
    // the elementary representation attains the bound, so it is exact
    let ring = RingDescriptor::IntInf;
    let one = WeightedFreeModule::unit(ring, &["1"], NormMode::Archimedean);
    let labels: Vec<String> = (0..=4).map(|i| format!("d{i}")).collect();
    let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    let delta = WeightedFreeModule::unit(ring, &refs, NormMode::Archimedean);
    let map = AbsorbingMap::new(5, &one, &delta).unwrap();
    let id: Vec<Vec<Int>> = (0..5)
        .map(|i| (0..5).map(|j| Int::from(i == j)).collect())
        .collect();
    let t = TensorElement::from_matrix(map.source.clone(), delta, id).unwrap();
    let ub = tensor_elem_norm_arch_upper(&t, 1).map_err(|e| e.to_string())?;
    if ub.value != NormValue::from_int(5) {
        return Err(format!("upper bound for f_4 is {}", ub.value));
    }
    Ok(format!(
        "(a) {checked} tensors isometric; (b) n=1..16 bound n+1 with sup norm 1"
    ))
}

fn criterion_5() -> Outcome {
    for n in 0..=12u64 {
        for i in 0..=12u64 {
            let expect = if n == i {
                BigInt::one()
            } else {
                BigInt::zero()
            };
            let got = mahler_pairing(n, i);
            if got != expect {
                return Err(format!("pairing({n},{i}) = {got}"));
            }
        }
    }
    Ok("169 cases equal the Kronecker delta".into())
}

fn dense_unimodular(f: &BasisFamily) -> bool {
    f.evaluation_matrix().determinant().abs().is_one()
        && f.determinant().map(|d| d.abs().is_one()).unwrap_or(false)
}

fn criterion_6() -> Outcome {
    let levels = [(2u64, 1u32), (2, 2), (2, 3), (3, 1), (3, 2), (5, 1)];
    for (name, x) in fixture_spaces() {
        if !dense_unimodular(&partition_basis(&x)) {
            return Err(format!("partition basis of {name}"));
        }
    }
    let mut level_families = Vec::new();
    for &(p, k) in &levels {
        let f = vdp_basis_level(p, k).map_err(|e| e.to_string())?;
        if !dense_unimodular(&f) {
            return Err(format!("vdP level ({p},{k})"));
        }
        let m = mahler_level_unimodular(p, k).map_err(|e| e.to_string())?;
        if !m.lower_unitriangular || !m.determinant.is_one() {
            return Err(format!("Mahler level ({p},{k})"));
        }
        level_families.push((p, f));
    }
    let mut r = rng(6);
    let mut ultra = Vec::new();
    for i in 0..20 {
        let n = r.gen_range(1..=16);
        let u = random_ultrametric(&mut r, n, 4, 3, [2, 3, 5][i % 3]);
        let g = generalised_vdp(&u);
        if g.len() != n || !dense_unimodular(&g) || !g.pairwise_products_ok() {
            return Err(format!("generalised vdP on ultrametric space {i}"));
        }
        ultra.push(g);
    }
    for i in 0..100 {
        let (family, ring, norm) = match i % 3 {
            0 => {
                let (p, f) = &level_families[i % level_families.len()];
                (f.clone(), RingDescriptor::FpTriv(*p), CoefficientNorm::Ring)
            }
            1 => {
                let (p, f) = &level_families[i % level_families.len()];
                (
                    f.clone(),
                    RingDescriptor::IntInf,
                    CoefficientNorm::Padic(*p),
                )
            }
            _ => (
                ultra[i % ultra.len()].clone(),
                RingDescriptor::IntTriv,
                CoefficientNorm::Ring,
            ),
        };
        let hi = ring.modulus().map_or(20, |m| m as Int - 1);
        let lo = if ring.modulus().is_some() { 0 } else { -20 };
        let values: Vec<Int> = (0..family.points).map(|_| r.gen_range(lo..=hi)).collect();
        let e = vdp_expand(&values, ring, &family, norm).map_err(|e| e.to_string())?;
        // reconstruct pointwise
        for (x, v) in values.iter().enumerate() {
            let s: Int = family
                .sets
                .iter()
                .zip(&e.coefficients)
                .filter(|(set, _)| set.contains(&x))
                .map(|(_, a)| *a)
                .sum();
            if ring.reduce(s) != *v {
                return Err(format!("expansion {i} does not reconstruct"));
            }
        }
        if e.orthonormal != Some(true) {
            return Err(format!(
                "expansion {i}: max|a| = {} but ‖f‖ = {}",
                e.max_coefficient, e.sup_norm
            ));
        }
    }
    Ok("all determinants ±1, pair products nested or disjoint, 100 expansions orthonormal".into())
}

fn criterion_7() -> Outcome {
    let mut certs = 0;
    for n in 1..=4usize {
        let x = Arc::new(FiniteSpace::discrete(n).unwrap());
        for g in all_vectors(n, -2, 2) {
            let mut sorted = g.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != n {
                continue;
            }
            let gen: CfinFunction =
                Cfin::new(x.clone(), RingDescriptor::IntInf, g.clone()).unwrap();
            for u in subsets(n) {
                let c = sw_construct_indicator(
                    &x,
                    RingDescriptor::IntInf,
                    std::slice::from_ref(&gen),
                    u,
                )
                .map_err(|e| format!("g={g:?} U={u}: {e}"))?;
                // re-evaluate the tree independently
                let vals = c
                    .tree
                    .eval(std::slice::from_ref(&g), n)
                    .map_err(|e| e.to_string())?;
                let expect: Vec<Int> = (0..n)
                    .map(|p| if u.contains(p) { c.a_u } else { 0 })
                    .collect();
                if c.a_u <= 0 || vals != expect {
                    return Err(format!("g={g:?} U={u}: {vals:?}"));
                }
                certs += 1;
            }
        }
    }
    let x = Arc::new(FiniteSpace::discrete(3).unwrap());
    let g = Cfin::new(x.clone(), RingDescriptor::IntInf, vec![0, 1, 2]).unwrap();
    let c = sw_construct_indicator(&x, RingDescriptor::IntInf, &[g], PointSet::singleton(1))
        .map_err(|e| e.to_string())?;
    if c.a_u != 16 || c.evaluation != vec![0, 16, 0] {
        return Err(format!(
            "worked trace gives a_U={} {:?}",
            c.a_u, c.evaluation
        ));
    }
    Ok(format!(
        "{certs} certificates exact; worked trace a_U=16, (0,16,0)"
    ))
}

fn criterion_8() -> Outcome {
    for (name, x) in fixture_spaces() {
        let x = Arc::new(x);
        let w =
            gelfand_roundtrip(&x, RingDescriptor::IntInf).map_err(|e| format!("{name}: {e}"))?;
        if w.recovered_classes != x.component_count() {
            return Err(format!(
                "{name}: {} classes for {} components",
                w.recovered_classes,
                x.component_count()
            ));
        }
    }
    let x = Arc::new(FiniteSpace::discrete(2).unwrap());
    match gelfand_roundtrip(&x, RingDescriptor::ZmodTriv(6)) {
        Err(Error::DisconnectedSpectrum { .. }) => {
            Ok("30 fixtures recovered; ZmodTriv(6) disconnected".into())
        }
        other => Err(format!("ZmodTriv(6) gave {other:?}")),
    }
}

fn criterion_9() -> Outcome {
    let spaces = fixture_spaces();
    let mut r = rng(9);
    for i in 0..50 {
        let ses = random_ses(&mut r);
        let x = &spaces[i % spaces.len()].1;
        let rep = check_strong_exactness(&ses, x, 20, &mut r)
            .map_err(|e| format!("sequence {i}: {e}"))?;
        if rep.worst_kernel_ratio > rep.c0 || rep.worst_section_ratio > rep.c1 {
            return Err(format!("sequence {i}: constants exceeded"));
        }
    }
    Ok("50 sequences strictly exact with C0 = C1 = 1".into())
}

fn criterion_10() -> Outcome {
    let mut checked = 0;
    for (name, x) in fixture_spaces() {
        let x = Arc::new(x);
        for vals in all_vectors(x.component_count(), -2, 2) {
            let f = Cfin::new(x.clone(), RingDescriptor::IntInf, vals).unwrap();
            let g = f.extend_banaschewski();
            let back = g
                .restrict_along_iota(x.clone())
                .map_err(|e| e.to_string())?;
            if back != f || g.sup_norm().unwrap() != f.sup_norm().unwrap() {
                return Err(format!("{name}: {:?}", f.values()));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} functions extend isometrically"))
}

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("Tate acyclicity equivalence", criterion_1),
        ("spectrum homeomorphism", criterion_2),
        ("ideal sum-split constant", criterion_3),
        ("absorbing-law dichotomy", criterion_4),
        ("Mahler identity", criterion_5),
        ("basis certificates", criterion_6),
        ("Stone-Weierstrass construction", criterion_7),
        ("Gelfand round trip", criterion_8),
        ("strong exactness", criterion_9),
        ("extension isometry", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({secs:.2}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} ({secs:.2}s)", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
