//! Plugging a user-defined excursion set into a replicated study.
//!
//! The set `{x ∈ [−2, 2]² : |x − c(U)|² ≤ r(U)²}` is a disc whose centre moves
//! with `U1`, whose radius grows with `U2`, and which ignores `U3`.

use setsa::domain::{membership_matrix, BoxDomain, Excursion};
use setsa::kernels::MarginalDistribution;
use setsa::models::{ModelKind, OutputMemberships, SetModel};
use setsa::study::{run_study_with, summary_table, StudyConfig};

struct MovingDisc {
    domain: BoxDomain,
}

fn disc(x: &[f64], u: &[f64]) -> f64 {
    let (cx, r) = (u[0], 0.5 + 0.5 * u[1]);
    (x[0] - cx).powi(2) + x[1].powi(2) - r * r
}

impl SetModel for MovingDisc {
    fn name(&self) -> &str {
        "moving_disc"
    }

    fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    fn marginals(&self) -> Vec<MarginalDistribution> {
        vec![
            MarginalDistribution::uniform(-1.0, 1.0).unwrap(),
            MarginalDistribution::normal(1.0, 0.2).unwrap(),
            MarginalDistribution::uniform(0.0, 1.0).unwrap(),
        ]
    }

    fn input_names(&self) -> Vec<String> {
        ["centre", "radius", "noise"].map(String::from).to_vec()
    }

    fn memberships(
        &self,
        inputs: &[Vec<f64>],
        points: &[Vec<f64>],
    ) -> setsa::Result<OutputMemberships> {
        let oracle = Excursion::new(self.domain.clone(), disc);
        Ok(OutputMemberships {
            components: vec![membership_matrix(&oracle, inputs, points)?],
            oracle_calls: (inputs.len() * points.len()) as u64,
        })
    }
}

fn main() -> setsa::Result<()> {
    let model = MovingDisc {
        domain: BoxDomain::new(vec![-2.0, -2.0], vec![2.0, 2.0])?,
    };
    // The model kind in the config is ignored by `run_study_with`.
    let mut config = StudyConfig::new(ModelKind::Toy, 150, 200);
    config.replicates = 10;
    let report = run_study_with(&config, &model)?;
    print!("{}", summary_table(&report));
    Ok(())
}
