//! Property tests for the coefficient ring and the plethystic operations.

use std::collections::BTreeMap;

use motdt::coeffring::{rat, MotScalar, Rational};
use motdt::dt::{pair_nilp_total, GlobalFactorTable};
use motdt::gammaring::{GammaIndex, ParSeries, Truncation};
use proptest::prelude::*;

/// Small elements `c * q^k / (q^i - 1)^e`, summed.
fn scalar() -> impl Strategy<Value = MotScalar> {
    prop::collection::vec((-4i64..=4, -2i64..=2, 1u32..=3, 0u32..=2), 1..=3).prop_map(|terms| {
        let mut acc = MotScalar::zero();
        for (c, k, i, e) in terms {
            let mut t = MotScalar::from_integer(c).mul(&MotScalar::q_pow(k));
            for _ in 0..e {
                t = t.mul(&MotScalar::inv_q_power_minus_one(i));
            }
            acc = acc.add(&t);
        }
        acc
    })
}

fn window() -> Truncation {
    Truncation::new(vec![0, 1], 3, 2, 1).unwrap()
}

fn rank_one_and_two() -> Vec<GammaIndex> {
    let mut out = vec![];
    for r in 1..=2u32 {
        for a in 0..=r {
            for b in 0..=r {
                for d in -1..=0 {
                    let flags = BTreeMap::from([(0, vec![a, r - a]), (1, vec![b, r - b])]);
                    out.push(GammaIndex::new(r, flags, d).unwrap());
                }
            }
        }
    }
    out
}

/// Series without constant term on a fixed two-point window.
fn series() -> impl Strategy<Value = ParSeries> {
    let keys = rank_one_and_two();
    prop::collection::vec(prop::option::of(scalar()), keys.len()).prop_map(move |cs| {
        let mut s = ParSeries::zero(&window());
        for (g, c) in keys.iter().zip(cs) {
            if let Some(c) = c {
                s.add_term(g.clone(), c);
            }
        }
        s
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ring_axioms(a in scalar(), b in scalar(), c in scalar()) {
        prop_assert_eq!(a.add(&b), b.add(&a));
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
        prop_assert!(a.sub(&a).is_zero());
    }

    #[test]
    fn units_invert(a in scalar()) {
        if a.is_unit() {
            prop_assert!(a.mul(&a.invert().unwrap()).is_one());
        }
    }

    #[test]
    fn evaluation_is_a_homomorphism(a in scalar(), b in scalar(), q0 in 4i64..9) {
        let q0 = rat(q0);
        let ea = a.evaluate(&q0).unwrap();
        let eb = b.evaluate(&q0).unwrap();
        prop_assert_eq!(a.mul(&b).evaluate(&q0).unwrap(), &ea * &eb);
        prop_assert_eq!(a.add(&b).evaluate(&q0).unwrap(), ea + eb);
    }

    #[test]
    fn adams_is_a_ring_map(a in scalar(), b in scalar(), n in 1u32..4) {
        prop_assert_eq!(a.mul(&b).adams(n), a.adams(n).mul(&b.adams(n)));
        prop_assert_eq!(a.add(&b).adams(n), a.adams(n).add(&b.adams(n)));
    }

    #[test]
    fn text_and_json_round_trip(a in scalar()) {
        prop_assert_eq!(MotScalar::from_text(&a.to_text()).unwrap(), a.clone());
        prop_assert_eq!(MotScalar::from_json(&a.to_json()).unwrap(), a);
    }

    #[test]
    fn exp_log_round_trip(f in series()) {
        let e = f.exp_pleth().unwrap();
        prop_assert!(e.constant_term().is_one());
        prop_assert_eq!(e.log_pleth().unwrap(), f);
    }

    #[test]
    fn exp_is_multiplicative(f in series(), g in series()) {
        let lhs = f.add(&g).unwrap().exp_pleth().unwrap();
        let rhs = f.exp_pleth().unwrap().mul(&g.exp_pleth().unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn pow_composes(f in series(), a in -2i64..=2, b in -2i64..=2) {
        let big_f = f.exp_pleth().unwrap();
        let (sa, sb) = (MotScalar::from_integer(a).mul(&MotScalar::q()), MotScalar::from_integer(b));
        let twice = big_f.pow_pleth(&sa).unwrap().pow_pleth(&sb).unwrap();
        prop_assert_eq!(twice, big_f.pow_pleth(&sa.mul(&sb)).unwrap());
    }

    #[test]
    fn json_series_round_trip(f in series()) {
        prop_assert_eq!(ParSeries::from_json(&window(), &f.to_json()).unwrap(), f);
    }
}

#[test]
fn pair_series_is_level_permutation_invariant() {
    // Permuting the levels at a point is a symmetry of the symmetric functions.
    let t = Truncation::new(vec![0, 1], 3, 3, 2).unwrap();
    let s = pair_nilp_total(&t, &GlobalFactorTable::Genus0).unwrap();
    let b = s.log_pleth().unwrap().scale(&MotScalar::q());
    for perm in [[2usize, 1, 3], [3, 2, 1], [2, 3, 1]] {
        for (g, c) in b.iter() {
            let h = g.permute_levels(0, &perm);
            assert_eq!(&b.coeff(&h), c, "B not invariant at {g} -> {h}");
            assert_eq!(s.coeff(&h), s.coeff(g));
        }
    }
}

#[test]
fn dt_invariants_have_integral_canonical_coefficients() {
    let t = Truncation::new(vec![0, 1, 2], 3, 2, 2).unwrap();
    let b = motdt::dt::dt_series(&t, &GlobalFactorTable::Genus0).unwrap();
    assert!(b.coeff(&GammaIndex::zero()).is_zero());
    for (g, c) in b.iter() {
        let (coeffs, _, _) = c.canonical_parts();
        assert!(
            coeffs.iter().all(|(r, _)| r.is_integer()),
            "B_{g} = {c} has a rational coefficient"
        );
    }
    let _: Rational = rat(0);
}
