//! Acceptance suite: nine exact (zero-tolerance) criteria, one pass/fail
//! line each.  Exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use motdt::verify::{
    default_oracle_grid, dim_identity_random, ks_consistency, macdonald_homogeneity, macdonald_kernel_identity,
    macdonald_normalization, macdonald_triangularity, nonempty_grid, oracle_grid, periodicity_check,
    rank_one_closed_forms, root_enumeration_check, two_point_identity, universality_check, CheckResult,
};
use motdt::Result;

struct Criterion {
    id: u32,
    title: &'static str,
    budget: Option<Duration>,
    run: fn() -> Result<Vec<CheckResult>>,
}

fn criteria() -> Vec<Criterion> {
    vec![
        Criterion {
            id: 1,
            title: "Macdonald axioms (kernel identity |lambda|<=4, z-degree<=6; (ii)-(iv) |lambda|<=5)",
            budget: Some(Duration::from_secs(60)),
            run: || {
                Ok(vec![
                    macdonald_kernel_identity(4, 6)?,
                    macdonald_triangularity(5)?,
                    macdonald_normalization(5)?,
                    macdonald_homogeneity(5)?,
                ])
            },
        },
        Criterion {
            id: 2,
            title: "two-point identity through rank 4, z^-1 order 4",
            budget: Some(Duration::from_secs(60)),
            run: || Ok(vec![two_point_identity(4, 4)?]),
        },
        Criterion {
            id: 3,
            title: "finite-field oracle grid (q in {2,3}, lambda in {(1),(2),(1,1)}, d in {0,-1,-2}, D in {{},{0},{0,1}})",
            budget: Some(Duration::from_secs(300)),
            run: || Ok(vec![oracle_grid(&default_oracle_grid())?.0]),
        },
        Criterion {
            id: 4,
            title: "rank-one closed forms",
            budget: None,
            run: || Ok(vec![rank_one_closed_forms()?]),
        },
        Criterion {
            id: 5,
            title: "stabilization periodicity and shift independence",
            budget: None,
            run: || Ok(vec![periodicity_check()?]),
        },
        Criterion {
            id: 6,
            title: "slope factorization self-consistency",
            budget: None,
            run: || Ok(vec![ks_consistency()?]),
        },
        Criterion {
            id: 7,
            title: "universality equalities (zeta' construction and real/imaginary recipe)",
            budget: None,
            run: || Ok(vec![universality_check()?]),
        },
        Criterion {
            id: 8,
            title: "non-emptiness equivalence and root enumeration (<=4 legs, height<=12)",
            budget: Some(Duration::from_secs(300)),
            run: || Ok(vec![nonempty_grid()?, root_enumeration_check(4, 3, 12, 200, 11)?]),
        },
        Criterion {
            id: 9,
            title: "dimension identity on 60 random configurations",
            budget: None,
            run: || Ok(vec![dim_identity_random(60, 7)?]),
        },
    ]
}

fn main() -> ExitCode {
    let mut failures = 0;
    for c in criteria() {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(checks) => {
                let ok = checks.iter().all(|r| r.passed);
                let detail = checks
                    .iter()
                    .map(|r| format!("{}: {}", r.name, r.detail))
                    .collect::<Vec<_>>()
                    .join("; ");
                (ok, detail)
            }
            Err(e) => (false, format!("error: {e}")),
        };
        let in_budget = c.budget.is_none_or(|b| elapsed <= b);
        let pass = ok && in_budget;
        if !pass {
            failures += 1;
        }
        let budget_note = if in_budget { String::new() } else { " [over time budget]".to_string() };
        println!(
            "criterion {} {} ({:.1}s){}: {} -- {}",
            c.id,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget_note,
            c.title,
            detail
        );
    }
    if failures == 0 {
        println!("acceptance: all 9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} criteria failed");
        ExitCode::FAILURE
    }
}
