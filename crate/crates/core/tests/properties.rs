use std::sync::Arc;

use dbl_core::bases::{mahler_coeffs, mahler_eval, vdp_basis_level, vdp_expand, CoefficientNorm};
use dbl_core::cech::{build_tate_cech, exactness, CoverFamily};
use dbl_core::fixtures::{random_space, rng};
use dbl_core::functions::{ideal_product_split, Cfin};
use dbl_core::modtensor::{
    tensor_elem_norm_arch_upper, tensor_norm_nonarch, tensor_rank_lower_bound, AbsorbingMap,
    FinModule, NormMode, TensorElement, WeightedFreeModule,
};
use dbl_core::scalars::{Int, NormValue, RingDescriptor};
use dbl_core::spaces::{FiniteSpace, PointSet};
use dbl_core::spectrum::gelfand_roundtrip;
use dbl_core::weierstrass::sw_construct_indicator;
use num_bigint::BigInt;
use proptest::prelude::*;

const RINGS: [RingDescriptor; 6] = [
    RingDescriptor::IntInf,
    RingDescriptor::IntTriv,
    RingDescriptor::FpTriv(5),
    RingDescriptor::ZmodTriv(6),
    RingDescriptor::ZmodQuot(12),
    RingDescriptor::ZmodQuot(7),
];

fn ring() -> impl Strategy<Value = RingDescriptor> {
    prop::sample::select(RINGS.to_vec())
}

proptest! {
    #[test]
    fn ring_norm_laws(r in ring(), a in -60i128..60, b in -60i128..60) {
        let (a, b) = (r.reduce(a), r.reduce(b));
        let na = r.norm(a).unwrap();
        let nb = r.norm(b).unwrap();
        prop_assert_eq!(na.is_zero(), a == 0);
        if a != 0 {
            prop_assert!(na >= r.isolation_gap());
        }
        let nsum = r.norm(r.add(a, b).unwrap()).unwrap();
        if r.is_non_archimedean() {
            prop_assert!(nsum <= na.clone().max(nb.clone()));
        } else {
            prop_assert!(nsum <= na.add(&nb).unwrap());
        }
        prop_assert!(r.norm(r.mul(a, b).unwrap()).unwrap() <= na.mul(&nb));
        prop_assert_eq!(r.norm(r.neg(a)).unwrap(), na);
    }

    #[test]
    fn sup_norm_is_submultiplicative(seed in any::<u64>(), n in 1usize..8) {
        let mut g = rng(seed);
        let x = Arc::new(random_space(&mut g, n, 3));
        let k = x.component_count();
        let vals = |s: u64| -> Vec<Int> { (0..k).map(|i| ((s >> (3 * i)) % 9) as Int - 4).collect() };
        let f = Cfin::new(x.clone(), RingDescriptor::IntInf, vals(seed)).unwrap();
        let h = Cfin::new(x.clone(), RingDescriptor::IntInf, vals(seed.rotate_left(17))).unwrap();
        let fh = f.mul(&h).unwrap();
        prop_assert!(fh.sup_norm().unwrap() <= f.sup_norm().unwrap().mul(&h.sup_norm().unwrap()));
        prop_assert_eq!(f.add(&h).unwrap(), h.add(&f).unwrap());
        let back = f.extend_banaschewski().restrict_along_iota(x.clone()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn product_split_multiplies_back(n in 1usize..7, a in any::<u32>(), b in any::<u32>(), v in prop::collection::vec(-3i128..=3, 7)) {
        let x = Arc::new(FiniteSpace::discrete(n).unwrap());
        let (k0, k1) = (PointSet(a % (1 << n)), PointSet(b % (1 << n)));
        let both = k0.union(k1);
        let vals: Vec<Int> = (0..n).map(|p| if both.contains(p) { 0 } else { v[p] }).collect();
        // f vanishes on K0 ∪ K1, so it lies in I_{K0} I_{K1}
        let f = Cfin::new(x.clone(), RingDescriptor::IntInf, vals).unwrap();
        let (g, h) = ideal_product_split(&f, k0, k1).unwrap();
        prop_assert!(g.vanishes_on(k0) && h.vanishes_on(k1));
        prop_assert_eq!(g.mul(&h).unwrap(), f);
    }

    #[test]
    fn arch_tensor_bounds_bracket(m in prop::collection::vec(-2i128..=2, 6)) {
        let ring = RingDescriptor::IntInf;
        let left = WeightedFreeModule::new(ring, vec![("a".into(), NormValue::one()), ("b".into(), NormValue::from_int(2))], NormMode::Archimedean).unwrap();
        let right = WeightedFreeModule::unit(ring, &["x", "y", "z"], NormMode::Archimedean);
        let rows = m.chunks(3).map(<[Int]>::to_vec).collect();
        let t = TensorElement::from_matrix(left, right, rows).unwrap();
        let lower = tensor_rank_lower_bound(&t);
        let loose = tensor_elem_norm_arch_upper(&t, 0).unwrap().value;
        let tight = tensor_elem_norm_arch_upper(&t, 2).unwrap().value;
        prop_assert!(lower <= tight.clone());
        prop_assert!(tight <= loose);
    }

    #[test]
    fn nonarch_absorbing_map_round_trips(comps in 1usize..4, m in prop::collection::vec(-4i128..=4, 6)) {
        let ring = RingDescriptor::IntTriv;
        let m0 = WeightedFreeModule::unit(ring, &["a"], NormMode::NonArchimedean);
        let m1 = WeightedFreeModule::new(ring, vec![("b".into(), NormValue::from_int(3)), ("c".into(), NormValue::one())], NormMode::NonArchimedean).unwrap();
        let map = AbsorbingMap::new(comps, &m0, &m1).unwrap();
        let rows = m[..2 * comps].chunks(2).map(<[Int]>::to_vec).collect();
        let t = TensorElement::from_matrix(map.source.clone(), m1, rows).unwrap();
        let fw = map.forward(&t).unwrap();
        prop_assert_eq!(map.backward(&fw).unwrap(), t.clone());
        prop_assert_eq!(map.sup_norm(&fw).unwrap(), tensor_norm_nonarch(&t).unwrap());
    }

    #[test]
    fn diagonal_quotient_norm_matches_search(n in 2i128..9, v in prop::collection::vec(-30i128..=30, 2)) {
        let ambient = WeightedFreeModule::new(RingDescriptor::IntInf, vec![("a".into(), NormValue::one()), ("b".into(), NormValue::from_int(2))], NormMode::Archimedean).unwrap();
        let q = FinModule::new(ambient.clone(), vec![vec![n, 0], vec![0, n]]).unwrap();
        // oracle: scan multiples of n per coordinate
        let k = 30 / n + 1;
        let best = (-k..=k)
            .flat_map(|i| (-k..=k).map(move |j| (i, j)))
            .map(|(i, j)| ambient.norm(&[v[0] + i * n, v[1] + j * n]).unwrap())
            .min()
            .unwrap();
        prop_assert_eq!(q.class_norm(&v, 0).unwrap(), best);
    }

    #[test]
    fn mahler_series_interpolates(vals in prop::collection::vec(-1000i64..1000, 1..12)) {
        let big: Vec<BigInt> = vals.iter().map(|&v| BigInt::from(v)).collect();
        let c = mahler_coeffs(&big);
        for (x, v) in big.iter().enumerate() {
            prop_assert_eq!(&mahler_eval(&c, x as u64), v);
        }
    }

    #[test]
    fn vdp_expansion_is_orthonormal(vals in prop::collection::vec(-40i128..40, 8)) {
        let f = vdp_basis_level(2, 3).unwrap();
        let e = vdp_expand(&vals, RingDescriptor::IntInf, &f, CoefficientNorm::Padic(2)).unwrap();
        prop_assert_eq!(e.orthonormal, Some(true));
    }

    #[test]
    fn sw_certificates_on_five_points(perm in Just((0..5).collect::<Vec<Int>>()).prop_shuffle(), shift in -3i128..3, u in 0u32..32) {
        let x = Arc::new(FiniteSpace::discrete(5).unwrap());
        let g: Vec<Int> = perm.iter().map(|v| v + shift).collect();
        let gen = Cfin::new(x.clone(), RingDescriptor::IntInf, g).unwrap();
        let c = sw_construct_indicator(&x, RingDescriptor::IntInf, &[gen], PointSet(u)).unwrap();
        prop_assert!(c.a_u > 0);
        for p in 0..5 {
            prop_assert_eq!(c.evaluation[p], if PointSet(u).contains(p) { c.a_u } else { 0 });
        }
    }

    #[test]
    fn gelfand_on_random_spaces(seed in any::<u64>(), n in 1usize..9) {
        let x = Arc::new(random_space(&mut rng(seed), n, 4));
        let w = gelfand_roundtrip(&x, RingDescriptor::IntTriv).unwrap();
        prop_assert_eq!(w.recovered_classes, x.component_count());
    }
}

#[test]
fn cech_over_other_coefficients() {
    // covers are exact over Z/n and F_p as well; missing a point leaves H^0
    let x = Arc::new(FiniteSpace::discrete(4).unwrap());
    for r in [
        RingDescriptor::FpTriv(3),
        RingDescriptor::ZmodTriv(4),
        RingDescriptor::ZmodQuot(6),
    ] {
        for sets in [
            vec![PointSet(0b0011), PointSet(0b1110)],
            vec![PointSet(0b0011), PointSet(0b0110)],
        ] {
            let fam = CoverFamily::new(x.clone(), sets).unwrap();
            let rep = exactness(&build_tate_cech(&fam, r, 1).unwrap()).unwrap();
            assert_eq!(rep.exact, fam.union() == x.full_set(), "{r}");
        }
    }
}
