//! Screening and ranking on the toy excursion set.
//!
//! Twenty replicates at n = m = 100 with the Sobolev ANOVA kernel, then the
//! same study once per input kernel family to check the conclusions hold.
//!
//! ```bash
//! cargo run --release --example toy_screening
//! cargo run --release --example toy_screening -- 50   # fewer replicates
//! ```

use setsa::kernels::InputKernelFamily;
use setsa::models::ModelKind;
use setsa::study::{run_study, summary_table, StudyConfig};

fn main() -> setsa::Result<()> {
    let replicates = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(20);
    let mut config = StudyConfig::new(ModelKind::Toy, 100, 100);
    config.replicates = replicates;
    config.master_seed = 2024;

    let report = run_study(&config)?;
    print!("{}", summary_table(&report));

    println!("\nkernel robustness (median first-order indices, influential inputs):");
    for family in InputKernelFamily::ALL {
        config.input_kernel = family;
        let report = run_study(&config)?;
        let medians: Vec<String> = report
            .median_first_order()
            .iter()
            .map(|m| m.map_or("-".into(), |v| format!("{v:.3}")))
            .collect();
        let flagged: Vec<&str> = report
            .aggregates
            .iter()
            .filter(|a| a.acceptance_rate.is_some_and(|r| r < 0.5))
            .map(|a| a.name.as_str())
            .collect();
        println!(
            "  {:<16} S = [{}]  influential: {}",
            family.name(),
            medians.join(", "),
            flagged.join(" ")
        );
    }
    Ok(())
}
