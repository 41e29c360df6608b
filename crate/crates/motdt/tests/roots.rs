//! Star-shaped root systems and the non-emptiness deciders.

use motdt::coeffring::{rat, ratio, Rational};
use motdt::dt::{DtEngine, Eigenvalues, Weights};
use motdt::gammaring::{GammaIndex, PointId};
use motdt::kacmoody::{
    gamma_is_root, is_root, nonempty_conn, nonempty_conn_ss, nonempty_higgs_ss, rho_of_gamma, tits_form, RootKind,
    RootVector, StarGraph,
};
use motdt::oracle::enumerate_roots;
use motdt::Error;

fn gamma(r: u32, flags: &[(PointId, &[u32])], d: i64) -> GammaIndex {
    GammaIndex::new(r, flags.iter().map(|(x, v)| (*x, v.to_vec())).collect(), d).unwrap()
}

fn zeta(entries: &[(PointId, usize, Rational)]) -> Eigenvalues {
    Eigenvalues::rational(entries.iter().map(|(x, j, v)| ((*x, *j), v.clone())))
}

fn root(center: i64, legs: &[&[i64]]) -> RootVector {
    RootVector {
        center,
        legs: legs.iter().map(|l| l.to_vec()).collect(),
    }
}

fn neg(a: &RootVector) -> RootVector {
    RootVector {
        center: -a.center,
        legs: a.legs.iter().map(|l| l.iter().map(|c| -c).collect()).collect(),
    }
}

#[test]
fn rho_examples() {
    let f: &[u32] = &[1, 1];
    let g = gamma(2, &[(0, f), (1, f), (2, f), (3, f)], -1);
    let star = StarGraph::new(vec![1; 4]);
    assert_eq!(rho_of_gamma(&g, &star).unwrap(), root(2, &[&[1], &[1], &[1], &[1]]));

    let g = gamma(2, &[(0, &[2])], 0);
    assert_eq!(rho_of_gamma(&g, &StarGraph::new(vec![1])).unwrap(), root(2, &[&[0]]));

    let g = gamma(1, &[(0, &[0, 0, 1])], 0);
    assert_eq!(rho_of_gamma(&g, &StarGraph::new(vec![3])).unwrap(), root(1, &[&[1, 1, 0]]));
}

#[test]
fn rho_ignores_degree_and_leg_padding() {
    let g = gamma(3, &[(0, &[1, 2]), (1, &[1, 1, 1])], 0);
    let short = StarGraph::new(vec![1, 2]);
    let long = StarGraph::new(vec![3, 4]);
    let base = rho_of_gamma(&g, &short).unwrap();
    for d in [-1, -5] {
        assert_eq!(rho_of_gamma(&g.shift_degree(d), &short).unwrap(), base);
    }
    let padded = rho_of_gamma(&g, &long).unwrap();
    assert_eq!(is_root(&base, &short), is_root(&padded, &long));
    assert!(matches!(
        rho_of_gamma(&g, &StarGraph::new(vec![0, 2])),
        Err(Error::LegTooShort { .. })
    ));
}

#[test]
fn tits_form_examples() {
    let star = StarGraph::new(vec![1; 4]);
    assert_eq!(tits_form(&root(0, &[&[1], &[0], &[0], &[0]]), &star), 1);
    assert_eq!(tits_form(&root(2, &[&[1], &[1], &[1], &[1]]), &star), 0);
    assert_eq!(tits_form(&root(2, &[&[2]]), &StarGraph::new(vec![1])), 4);
}

#[test]
fn root_classification_examples() {
    let star = StarGraph::new(vec![1; 4]);
    assert_eq!(is_root(&root(1, &[&[0], &[0], &[0], &[0]]), &star), RootKind::RealRoot);
    let null = root(2, &[&[1], &[1], &[1], &[1]]);
    assert_eq!(is_root(&null, &star), RootKind::ImaginaryRoot);
    assert_eq!(is_root(&neg(&null), &star), RootKind::ImaginaryRoot);
    let a1 = StarGraph::new(vec![1]);
    assert_eq!(is_root(&root(2, &[&[2]]), &a1), RootKind::NotARoot);
    assert_eq!(is_root(&root(1, &[&[-1]]), &a1), RootKind::NotARoot);
}

#[test]
fn enumeration_examples() {
    let a2 = StarGraph::new(vec![1]);
    let roots = enumerate_roots(&a2, 3);
    let expected = [root(1, &[&[0]]), root(0, &[&[1]]), root(1, &[&[1]])];
    assert_eq!(roots.into_iter().collect::<Vec<_>>().len(), 3);
    for r in &expected {
        assert!(enumerate_roots(&a2, 3).contains(r));
    }
    let d4 = StarGraph::new(vec![1; 4]);
    let roots = enumerate_roots(&d4, 6);
    assert!(roots.contains(&root(2, &[&[1], &[1], &[1], &[1]])));
    for r in &roots {
        assert!(r.center >= 0 && r.legs.iter().flatten().all(|c| *c >= 0), "{r}");
        assert_ne!(is_root(r, &d4), RootKind::NotARoot, "{r}");
        assert_eq!(is_root(&neg(r), &d4), is_root(r, &d4));
    }
}

#[test]
fn conn_examples() {
    // Rank one with zero degree.
    let z = zeta(&[(0, 1, ratio(1, 2)), (1, 1, ratio(-1, 2))]);
    let g = gamma(1, &[(0, &[1]), (1, &[1])], 0);
    let ne = nonempty_conn(&g, &z, 0).unwrap();
    assert!(ne.nonempty);
    assert_eq!(ne.witness, vec![g.clone()]);

    // Zero residues force degree zero; the class splits into two rank-one roots.
    let g = gamma(2, &[(0, &[2]), (1, &[2])], 0);
    let ne = nonempty_conn(&g, &Eigenvalues::zero(0), 0).unwrap();
    assert!(ne.nonempty);
    assert_eq!(ne.witness.len(), 2);
    assert!(ne.witness.iter().all(|h| h.r() == 1 && h.d() == 0));
    let g = gamma(2, &[(0, &[2]), (1, &[2])], -2);
    assert!(!nonempty_conn(&g, &Eigenvalues::zero(0), 0).unwrap().nonempty);

    // Non-zero total degree is always empty; higher genus only sees the degree.
    let g = gamma(2, &[(0, &[2]), (1, &[2])], -1);
    assert!(!nonempty_conn(&g, &Eigenvalues::zero(0), 0).unwrap().nonempty);
    assert!(!nonempty_conn(&g, &Eigenvalues::zero(0), 1).unwrap().nonempty);
    let g = gamma(2, &[(0, &[1, 1])], 0);
    assert!(nonempty_conn(&g, &Eigenvalues::zero(0), 1).unwrap().nonempty);
}

#[test]
fn higgs_examples() {
    let zero = Eigenvalues::zero(0);
    let f: &[u32] = &[1, 1];
    let g = gamma(2, &[(0, f), (1, f), (2, f), (3, f)], -1);
    assert!(nonempty_higgs_ss(&g, &zero, &Weights::trivial(), 0).unwrap().nonempty);
    let z = zeta(&[(0, 1, rat(1))]);
    let g1 = gamma(1, &[(0, &[1]), (1, &[1])], 0);
    assert!(!nonempty_higgs_ss(&g1, &z, &Weights::trivial(), 0).unwrap().nonempty);
    let g1 = gamma(1, &[(0, &[0, 1]), (1, &[1])], 0);
    assert!(nonempty_higgs_ss(&g1, &z, &Weights::trivial(), 0).unwrap().nonempty);
}

#[test]
fn conn_ss_with_trivial_weights_matches_conn() {
    let zero_w = Weights::new(rat(0), Default::default()).unwrap();
    let z = zeta(&[(0, 1, ratio(1, 3)), (1, 1, ratio(-1, 3))]);
    for r in 1..=3u32 {
        for a in 0..=r {
            for b in 0..=r {
                for d in -2..=0 {
                    let g = gamma(r, &[(0, &[a, r - a]), (1, &[b, r - b])], d);
                    let lhs = nonempty_conn_ss(&g, &z, &zero_w, 0).unwrap().nonempty;
                    let rhs = nonempty_conn(&g, &z, 0).unwrap().nonempty;
                    assert_eq!(lhs, rhs, "{g}");
                }
            }
        }
    }
}

#[test]
fn nonemptiness_agrees_with_class_on_generic_cases() {
    let e = DtEngine::genus0(vec![0, 1, 2]).unwrap();
    let w = Weights::new(
        rat(1),
        [((0, 2), ratio(1, 7)), ((1, 2), ratio(2, 11)), ((2, 2), ratio(3, 13))].into_iter().collect(),
    )
    .unwrap();
    let zero = Eigenvalues::zero(0);
    for r in 1..=2u32 {
        for a in 0..=r {
            for b in 0..=r {
                for c in 0..=r {
                    let g = gamma(r, &[(0, &[a, r - a]), (1, &[b, r - b]), (2, &[c, r - c])], -1);
                    let ne = nonempty_higgs_ss(&g, &zero, &w, 0).unwrap().nonempty;
                    let class = e.higgs_ss_class(&g, &zero, &w).unwrap();
                    assert_eq!(ne, !class.is_zero(), "{g}");
                }
            }
        }
    }
}

#[test]
fn gamma_root_helper() {
    let f: &[u32] = &[1, 1];
    assert!(gamma_is_root(&gamma(2, &[(0, f), (1, f), (2, f), (3, f)], 0)));
    assert!(!gamma_is_root(&gamma(2, &[(0, &[2])], 0)));
}
