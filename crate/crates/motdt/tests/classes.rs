//! Motivic classes of moduli stacks: closed forms, frozen values, vanishing,
//! stabilization and error handling.

use std::collections::BTreeMap;

use motdt::coeffring::{rat, ratio, Rational};
use motdt::dt::{chi, nonresonant_check, DtEngine, Eigenvalues, GlobalFactorTable, Weights};
use motdt::gammaring::{GammaIndex, PointId, Truncation};
use motdt::{Error, MotScalar, Partition, ZSeries};

fn gamma(r: u32, flags: &[(PointId, &[u32])], d: i64) -> GammaIndex {
    GammaIndex::new(r, flags.iter().map(|(x, v)| (*x, v.to_vec())).collect(), d).unwrap()
}

fn zeta(entries: &[(PointId, usize, Rational)]) -> Eigenvalues {
    Eigenvalues::rational(entries.iter().map(|(x, j, v)| ((*x, *j), v.clone())))
}

fn weights(kappa: Rational, entries: &[(PointId, usize, Rational)]) -> Weights {
    Weights::new(kappa, entries.iter().map(|(x, j, v)| ((*x, *j), v.clone())).collect()).unwrap()
}

/// `(c_0 + c_1 q + c_2 q^2 + ...) / (q - 1)^e`.
fn over_q_minus_one(coeffs: &[i64], e: u32) -> MotScalar {
    let mut s = MotScalar::from_poly(&coeffs.iter().map(|c| rat(*c)).collect::<Vec<_>>());
    for _ in 0..e {
        s = s.mul(&bgm());
    }
    s
}

fn floor(x: &Rational) -> i64 {
    i64::try_from(x.floor().to_integer()).unwrap()
}

/// `1/(q-1)`: the class of `B G_m`.
fn bgm() -> MotScalar {
    MotScalar::inv_q_power_minus_one(1)
}

/// Generic weights `0 <= s_x` at level 2 of `n` points.
fn generic_sigma(n: usize) -> Vec<(PointId, usize, Rational)> {
    let s = [ratio(1, 7), ratio(2, 11), ratio(3, 13), ratio(5, 17)];
    (0..n).map(|x| (x as PointId, 2, s[x].clone())).collect()
}

#[test]
fn chi_examples() {
    assert_eq!(chi(&gamma(1, &[(0, &[1])], 0), 0), -1);
    assert_eq!(chi(&gamma(2, &[(0, &[1, 1])], 0), 0), -3);
    assert_eq!(chi(&gamma(3, &[], -2), 1), 0);
    assert_eq!(chi(&gamma(4, &[(0, &[1, 1, 1, 1])], 0), 1), 6);
}

#[test]
fn rank_one_dt_and_pair_coefficients() {
    let t = Truncation::new(vec![0, 1], 2, 3, 2).unwrap();
    let table = GlobalFactorTable::Genus0;
    let b = motdt::dt::dt_series(&t, &table).unwrap();
    let pairs = motdt::dt::pair_series(&t, &table).unwrap();
    let nilp = motdt::dt::pair_nilp_series(&Partition::new(vec![1]), &t, &table).unwrap();
    let q_over = MotScalar::q().mul(&bgm());
    assert!(b.coeff(&GammaIndex::zero()).is_zero());
    assert!(pairs.coeff(&GammaIndex::zero()).is_one());
    for j0 in 1..=3u32 {
        for j1 in 1..=3u32 {
            for d in -2..=0 {
                let mut f0 = vec![0; j0 as usize];
                let mut f1 = vec![0; j1 as usize];
                f0[j0 as usize - 1] = 1;
                f1[j1 as usize - 1] = 1;
                let g = gamma(1, &[(0, &f0), (1, &f1)], d);
                assert_eq!(b.coeff(&g), q_over, "B at {g}");
                assert_eq!(pairs.coeff(&g), q_over, "pairs at {g}");
                assert_eq!(nilp.coeff(&g), bgm(), "nilpotent pairs at {g}");
            }
        }
    }
}

#[test]
fn rank_one_classes() {
    let e = DtEngine::genus0(vec![0, 1, 2]).unwrap();
    let z = zeta(&[(0, 1, ratio(1, 2)), (1, 2, ratio(-1, 2))]);
    let g = gamma(1, &[(0, &[1]), (1, &[0, 1]), (2, &[0, 0, 1])], 0);
    let s = weights(rat(1), &generic_sigma(3));
    assert_eq!(e.conn_class(&g, &z).unwrap(), bgm());
    assert_eq!(e.conn_ss_class(&g, &z, &s).unwrap(), bgm());
    assert_eq!(e.higgs_ss_class(&g, &Eigenvalues::zero(0), &s).unwrap(), bgm());
    // Trivial connection on O with one marked point.
    let e1 = DtEngine::genus0(vec![0]).unwrap();
    assert_eq!(e1.conn_class(&gamma(1, &[(0, &[1])], 0), &Eigenvalues::zero(0)).unwrap(), bgm());
}

#[test]
fn degree_obstruction_gives_zero() {
    let e = DtEngine::genus0(vec![0, 1]).unwrap();
    let z = zeta(&[(0, 1, ratio(1, 3)), (1, 1, ratio(2, 3))]);
    let w = Weights::trivial();
    for r in 1..=2u32 {
        for a in 0..=r {
            for d in -3..=0 {
                let g = gamma(r, &[(0, &[a, r - a]), (1, &[r])], d);
                let conn_deg = z.degree(&g, &rat(1));
                let higgs_deg = z.degree(&g, &rat(0));
                if conn_deg.iter().any(|c| *c != rat(0)) {
                    assert!(e.conn_class(&g, &z).unwrap().is_zero(), "conn at {g}");
                    assert!(e.conn_ss_class(&g, &z, &w).unwrap().is_zero(), "conn_ss at {g}");
                }
                if higgs_deg.iter().any(|c| *c != rat(0)) {
                    assert!(e.higgs_ss_class(&g, &z, &w).unwrap().is_zero(), "higgs at {g}");
                }
            }
        }
    }
}

/// Rank-2 bundles at four points (affine D4): the moduli space retracts
/// onto a Hitchin fibre of Kodaira type I0* (five components), so
/// `E = q^2 + 5q`; every stable object has automorphisms `G_m`.
#[test]
fn affine_d4_generic_classes() {
    let e = DtEngine::genus0(vec![0, 1, 2, 3]).unwrap();
    let expected = over_q_minus_one(&[0, 5, 1], 1);
    let f: &[u32] = &[1, 1];
    let w = weights(rat(1), &generic_sigma(4));
    for d in [-1, 0] {
        let g = gamma(2, &[(0, f), (1, f), (2, f), (3, f)], d);
        assert_eq!(e.higgs_ss_class(&g, &Eigenvalues::zero(0), &w).unwrap(), expected, "d = {d}");
    }
    // Generic eigenvalues c_x * beta, -c_x * beta: no sub-object has degree 0.
    let mut z = Eigenvalues::zero(1);
    for (x, c) in [1i64, 2, 4, 8].into_iter().enumerate() {
        z.set(x as PointId, 1, vec![rat(0), rat(c)]).unwrap();
        z.set(x as PointId, 2, vec![rat(0), rat(-c)]).unwrap();
    }
    assert!(nonresonant_check(&z));
    let g = gamma(2, &[(0, f), (1, f), (2, f), (3, f)], 0);
    assert_eq!(e.conn_class(&g, &z).unwrap(), expected);
}

/// Rank 3 at three points with full flags (affine E6): Hitchin fibre of
/// type IV* with seven components.
#[test]
fn affine_e6_generic_class() {
    let e = DtEngine::genus0(vec![0, 1, 2]).unwrap();
    let f: &[u32] = &[1, 1, 1];
    let s: Vec<_> = [ratio(1, 7), ratio(2, 11), ratio(3, 13)]
        .into_iter()
        .enumerate()
        .flat_map(|(x, s)| [(x as PointId, 2, s.clone()), (x as PointId, 3, s * rat(3))])
        .collect();
    let w = weights(rat(1), &s);
    let g = gamma(3, &[(0, f), (1, f), (2, f)], 0);
    assert_eq!(
        e.higgs_ss_class(&g, &Eigenvalues::zero(0), &w).unwrap(),
        over_q_minus_one(&[0, 7, 1], 1)
    );
}

/// Rank 2 at three points: a real root, so the moduli space is a point.
#[test]
fn rigid_d4_class() {
    let e = DtEngine::genus0(vec![0, 1, 2]).unwrap();
    let f: &[u32] = &[1, 1];
    let g = gamma(2, &[(0, f), (1, f), (2, f)], -1);
    let w = weights(rat(1), &generic_sigma(3));
    assert_eq!(e.higgs_ss_class(&g, &Eigenvalues::zero(0), &w).unwrap(), bgm());
}

/// Regression value: the full stack of rank-2 connections at four points
/// with zero residues (non-generic, so strictly semistable objects occur).
#[test]
fn affine_d4_zero_residue_regression() {
    let e = DtEngine::genus0(vec![0, 1, 2, 3]).unwrap();
    let f: &[u32] = &[1, 1];
    let g = gamma(2, &[(0, f), (1, f), (2, f), (3, f)], 0);
    assert_eq!(
        e.conn_class(&g, &Eigenvalues::zero(0)).unwrap(),
        over_q_minus_one(&[0, -5, 12, 1], 2)
    );
}

#[test]
fn shift_independence() {
    let e = DtEngine::genus0(vec![0, 1, 2]).unwrap();
    let f: &[u32] = &[1, 1];
    let w = weights(rat(1), &generic_sigma(3));
    let z = zeta(&[(0, 1, ratio(1, 3)), (1, 1, ratio(-1, 3)), (2, 1, ratio(1, 2)), (2, 2, ratio(-1, 2))]);
    for g in [gamma(2, &[(0, f), (1, f), (2, f)], -1), gamma(2, &[(0, f), (1, &[2]), (2, &[2])], 0)] {
        let n0 = floor(&e.higgs_shift_bound(&g, &w)) + 1;
        let base = e.higgs_ss_class_with_shift(&g, &Eigenvalues::zero(0), &w, n0).unwrap();
        let c0 = floor(&e.conn_shift_bound(&g, &z)) + 1;
        let conn = e.conn_class_with_shift(&g, &z, c0).unwrap();
        for k in 1..=2 {
            assert_eq!(e.higgs_ss_class_with_shift(&g, &Eigenvalues::zero(0), &w, n0 + k).unwrap(), base);
            assert_eq!(e.conn_class_with_shift(&g, &z, c0 + k).unwrap(), conn);
        }
    }
}

#[test]
fn equal_submonoids_give_equal_classes() {
    let e = DtEngine::genus0(vec![0, 1, 2]).unwrap();
    let f: &[u32] = &[1, 1];
    let g = gamma(2, &[(0, f), (1, f), (2, &[2])], 0);
    let z = zeta(&[(0, 1, ratio(1, 3)), (0, 2, ratio(-1, 3)), (1, 1, ratio(1, 5)), (1, 2, ratio(-1, 5))]);
    let w = weights(rat(1), &generic_sigma(2));
    let base = e.higgs_ss_class(&g, &z, &w).unwrap();
    // Scaling zeta preserves the kernel of deg_{0,zeta}.
    let z2 = zeta(&[(0, 1, ratio(2, 3)), (0, 2, ratio(-2, 3)), (1, 1, ratio(2, 5)), (1, 2, ratio(-2, 5))]);
    assert_eq!(e.higgs_ss_class(&g, &z2, &w).unwrap(), base);
    // Adding a constant to sigma at one point shifts every slope equally.
    let mut shifted = generic_sigma(2);
    shifted.push((0, 1, ratio(1, 4)));
    for s in shifted.iter_mut().filter(|s| s.0 == 0 && s.1 == 2) {
        s.2 += ratio(1, 4);
    }
    let w2 = weights(rat(1), &shifted);
    assert_eq!(e.higgs_ss_class(&g, &z, &w2).unwrap(), base);
}

#[test]
fn conn_ss_with_trivial_weights_is_conn() {
    let e = DtEngine::genus0(vec![0, 1]).unwrap();
    let z = zeta(&[(0, 1, ratio(1, 3)), (1, 1, ratio(-1, 3))]);
    let zero = weights(rat(0), &[]);
    for r in 1..=3u32 {
        for a in 0..=r {
            for b in 0..=r {
                let g = gamma(r, &[(0, &[a, r - a]), (1, &[b, r - b])], 0);
                assert_eq!(e.conn_ss_class(&g, &z, &zero).unwrap(), e.conn_class(&g, &z).unwrap(), "{g}");
            }
        }
    }
}

#[test]
fn classes_have_canonical_denominators() {
    let e = DtEngine::genus0(vec![0, 1, 2]).unwrap();
    let w = weights(rat(1), &generic_sigma(3));
    for r in 1..=2u32 {
        for a in 0..=r {
            for b in 0..=r {
                for d in -1..=0 {
                    let g = gamma(r, &[(0, &[a, r - a]), (1, &[b, r - b]), (2, &[1, r - 1])], d);
                    for c in [
                        e.higgs_ss_class(&g, &Eigenvalues::zero(0), &w).unwrap(),
                        e.conn_class(&g, &Eigenvalues::zero(0)).unwrap(),
                    ] {
                        let (num, _, _) = c.canonical_parts();
                        assert!(num.iter().all(|(k, _)| k.is_integer()), "{g}: {c}");
                    }
                }
            }
        }
    }
}

#[test]
fn nonresonance_examples() {
    assert!(nonresonant_check(&Eigenvalues::zero(0)));
    assert!(!nonresonant_check(&zeta(&[(0, 1, rat(1))])));
    let mut z = Eigenvalues::zero(1);
    z.set(0, 1, vec![rat(0), rat(1)]).unwrap();
    assert!(nonresonant_check(&z));
}

#[test]
fn error_cases() {
    let e = DtEngine::genus0(vec![0, 1]).unwrap();
    let g = gamma(2, &[(0, &[1, 1]), (1, &[1, 1])], 0);
    let zero = Eigenvalues::zero(0);

    let bad = weights(rat(1), &[(0, 2, rat(2))]);
    assert!(matches!(e.higgs_ss_class(&g, &zero, &bad), Err(Error::InvalidWeights(_))));
    assert!(matches!(Weights::new(rat(-1), BTreeMap::new()), Err(Error::InvalidWeights(_))));

    assert!(matches!(
        e.higgs_ss_class_with_shift(&g, &zero, &Weights::trivial(), -5),
        Err(Error::InsufficientShift { .. })
    ));

    let resonant = zeta(&[(0, 1, rat(1))]);
    let w = weights(rat(0), &[(0, 2, ratio(1, 2))]);
    assert!(matches!(e.conn_ss_class(&g, &resonant, &w), Err(Error::ResonantWithBadWeights)));

    let mut entries = BTreeMap::new();
    entries.insert(Partition::new(vec![1]), ZSeries::constant(MotScalar::one(), 4));
    let table = GlobalFactorTable::External { genus: 1, entries };
    let e1 = DtEngine::new(vec![0, 1], table).unwrap();
    assert!(matches!(e1.conn_class(&g, &zero), Err(Error::MissingTableEntry(_))));
}
