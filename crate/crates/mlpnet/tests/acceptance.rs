//! Acceptance gates. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Each criterion also has a wall-clock budget.

use std::process::ExitCode;
use std::time::Instant;

use mlpnet::verify::{self, CheckResult};

const SEED: u64 = 0;

struct Criterion {
    id: u32,
    title: &'static str,
    budget_seconds: f64,
    run: fn() -> Vec<CheckResult>,
}

fn criteria() -> Vec<Criterion> {
    vec![
        Criterion { id: 1, title: "hat exactness", budget_seconds: 1.0, run: || vec![verify::hat_exactness(20, SEED)] },
        Criterion {
            id: 2,
            title: "calculus algebra",
            budget_seconds: 30.0,
            run: || vec![verify::calculus_algebra(1000, SEED)],
        },
        Criterion { id: 3, title: "product gadget", budget_seconds: 120.0, run: || verify::product_gadget_all(2001) },
        Criterion {
            id: 4,
            title: "compiled vs direct estimator (fixed time)",
            budget_seconds: 120.0,
            run: || vec![verify::fixed_time_agreement(&[1, 2, 3], &[1, 2, 3], &[1, 2, 5], 50, SEED)],
        },
        Criterion {
            id: 5,
            title: "space-time interpolation bound",
            budget_seconds: 60.0,
            run: || vec![verify::space_time_bound(200, SEED)],
        },
        Criterion {
            id: 6,
            title: "PDE accuracy, linear nonlinearity",
            budget_seconds: 300.0,
            run: || vec![verify::mlp_linear_accuracy(20, 4), verify::space_time_l2(10_000, SEED)],
        },
        Criterion {
            id: 7,
            title: "PDE accuracy, sine nonlinearity",
            budget_seconds: 300.0,
            run: || vec![verify::mlp_sine_accuracy(20, 4)],
        },
        Criterion {
            id: 8,
            title: "polynomial parameter scaling",
            budget_seconds: 180.0,
            run: || vec![verify::parameter_scaling(&[1, 2, 4, 8, 16], SEED)],
        },
        Criterion {
            id: 9,
            title: "Brownian moment bound",
            budget_seconds: 30.0,
            run: || vec![verify::brownian_moments(100_000, SEED)],
        },
        Criterion {
            id: 10,
            title: "time transform identities",
            budget_seconds: 10.0,
            run: || vec![verify::transform_identities(100, SEED)],
        },
    ]
}

fn main() -> ExitCode {
    mlpnet::par::init_threads(None);
    let mut failed = 0;
    for c in criteria() {
        let start = Instant::now();
        let checks = (c.run)();
        let seconds = start.elapsed().as_secs_f64();
        let in_budget = seconds <= c.budget_seconds;
        let passed = in_budget && checks.iter().all(|k| k.passed);
        if !passed {
            failed += 1;
        }
        let summary: Vec<String> = checks
            .iter()
            .map(|k| format!("{}={:.4e}/{:.4e}{}", k.name, k.measured, k.threshold, if k.passed { "" } else { "!" }))
            .collect();
        println!(
            "criterion {:>2} {} {} [{:.1}s of {:.0}s] {}",
            c.id,
            if passed { "PASS" } else { "FAIL" },
            c.title,
            seconds,
            c.budget_seconds,
            summary.join(" ")
        );
        for k in checks.iter().filter(|k| !k.passed) {
            println!("    {}: {}", k.name, k.detail);
        }
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
