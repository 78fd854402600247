mod common;

use common::{nonzero_series, rng, series, transform};
use gps::division::{compose, solve_implicit, unit_root};
use gps::parser::parse_series;
use gps::transforms::pullback;
use gps::{q, MultiExponent, Series, Signature};
use proptest::prelude::*;

const SIG: Signature = Signature { m: 2, n: 2 };

fn triple(seed: u64, prec: i64) -> (Series, Series, Series) {
    let mut r = rng(seed);
    (series(&mut r, SIG, prec, 5, true), series(&mut r, SIG, prec - 1, 5, true), series(&mut r, SIG, prec, 4, true))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_laws(seed in any::<u64>(), prec in 3i64..8) {
        let (a, b, c) = triple(seed, prec);
        prop_assert!(a.add(&b).unwrap().add(&c).unwrap().eq_mod_precision(&a.add(&b.add(&c).unwrap()).unwrap()));
        prop_assert!(a.mul(&b).unwrap().eq_mod_precision(&b.mul(&a).unwrap()));
        prop_assert!(a.mul(&b).unwrap().mul(&c).unwrap().eq_mod_precision(&a.mul(&b.mul(&c).unwrap()).unwrap()));
        let lhs = a.mul(&b.add(&c).unwrap()).unwrap();
        let rhs = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
        prop_assert!(lhs.eq_mod_precision(&rhs));
        prop_assert!(a.sub(&a).unwrap().is_zero());
    }

    #[test]
    fn leibniz_rule(seed in any::<u64>(), j in 1usize..=2) {
        let (a, b, _) = triple(seed, 7);
        let lhs = a.mul(&b).unwrap().partial_y(j).unwrap();
        let rhs = a.partial_y(j).unwrap().mul(&b).unwrap().add(&a.mul(&b.partial_y(j).unwrap()).unwrap()).unwrap();
        prop_assert!(lhs.eq_mod_precision(&rhs));
    }

    #[test]
    fn unit_roots_invert_powers(seed in any::<u64>(), k in 1u32..4) {
        let mut r = rng(seed);
        let h = series(&mut r, SIG, 6, 4, true);
        let h = h.sub(&Series::constant(SIG, h.constant_term(), q(6))).unwrap();
        let u = Series::one(SIG, q(6)).add(&h).unwrap().pow(k).unwrap();
        let v = unit_root(&u, k).unwrap();
        prop_assert!(v.pow(k).unwrap().eq_mod_precision(&u));
        prop_assert_eq!(v.constant_term(), q(1));
    }

    #[test]
    fn implicit_function_solves(seed in any::<u64>()) {
        let mut r = rng(seed);
        let rest = series(&mut r, SIG, 7, 5, true);
        let rest = rest.sub(&Series::constant(SIG, rest.constant_term(), q(7))).unwrap();
        let g = Series::y(SIG, 2, q(7)).scale(&q(3)).add(&rest.mul_monomial(&MultiExponent::x_power(SIG, 1, q(1)), &q(1))).unwrap();
        let a = solve_implicit(&g, 2).unwrap();
        prop_assert!(a.constant_term() == q(0));
        prop_assert!(compose(&g, 2, &a).unwrap().is_zero());
    }

    #[test]
    fn pullback_is_a_ring_homomorphism(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (t, fractional) = transform(&mut r, SIG);
        let f = series(&mut r, SIG, 6, 4, fractional);
        let g = series(&mut r, SIG, 6, 4, fractional);
        let sum = pullback(&t, &f.add(&g).unwrap()).unwrap();
        prop_assert!(sum.eq_mod_precision(&pullback(&t, &f).unwrap().add(&pullback(&t, &g).unwrap()).unwrap()));
        let prod = pullback(&t, &f.mul(&g).unwrap()).unwrap();
        prop_assert!(prod.eq_mod_precision(&pullback(&t, &f).unwrap().mul(&pullback(&t, &g).unwrap()).unwrap()));
    }

    #[test]
    fn min_support_matches_brute_force(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = nonzero_series(&mut r, SIG, 8, 8, true);
        let support: Vec<MultiExponent> = s.terms().map(|(e, _)| e.clone()).collect();
        let mut expected: Vec<MultiExponent> = support
            .iter()
            .filter(|e| !support.iter().any(|o| o != *e && o.divides(e)))
            .cloned()
            .collect();
        expected.sort();
        prop_assert_eq!(s.min_support(), expected);
    }

    #[test]
    fn rendering_parses_back(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = series(&mut r, SIG, 8, 6, true);
        prop_assert_eq!(parse_series(&s.render(), SIG, &q(8)).unwrap(), s);
    }
}
