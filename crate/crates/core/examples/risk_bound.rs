//! Quadratic risk of the shared-sample estimator against its theoretical bounds.
//!
//! Reference constants come from one run at `n = m = 1000`; each grid point is
//! then replicated with fresh inputs and inner points.
//!
//! ```bash
//! cargo run --release --example risk_bound
//! cargo run --release --example risk_bound -- nmc   # also the independent-sample estimator
//! ```

use setsa::riskbench::{estimate_constants, risk_curve, Estimator, DEFAULT_BUDGET_CAP};

fn main() -> setsa::Result<()> {
    let with_nmc = std::env::args().any(|a| a == "nmc");
    let constants = estimate_constants(1000, 1000, 7)?;
    println!(
        "H_ref = {:.4e}, sigma2 = {:.3}, L = {:.3}",
        constants.h_ref, constants.bandwidth, constants.lipschitz
    );
    println!(
        "sigma1^2 = {:.3e}, sigma2^2 = {:.3e}, sigma3^2 = {:.3e}, sigma4^2 = {:.3e}\n",
        constants.sigma1_sq, constants.sigma2_sq, constants.sigma3_sq, constants.sigma4_sq
    );

    let grid = [(30, 30), (50, 50), (100, 100), (200, 200)];
    let mut estimators = vec![Estimator::Shared];
    if with_nmc {
        estimators.push(Estimator::IndependentNmc);
    }
    for (e, est) in estimators.into_iter().enumerate() {
        let curve = risk_curve(
            &constants,
            &grid,
            100,
            est,
            100 + e as u64,
            DEFAULT_BUDGET_CAP,
        )?;
        println!("{}", est.name());
        println!(
            "{:>5} {:>12} {:>12} {:>12} {:>10}",
            "n=m", "risk", "shared bd", "indep bd", "calls"
        );
        for p in &curve.points {
            println!(
                "{:>5} {:>12.4e} {:>12.4e} {:>12.4e} {:>10}",
                p.n,
                p.empirical_risk,
                p.bound_shared,
                p.bound_independent,
                est.oracle_calls(p.n, p.m)
            );
        }
        println!("log-log slope {:.3}\n", curve.log_log_slope());
    }
    Ok(())
}
