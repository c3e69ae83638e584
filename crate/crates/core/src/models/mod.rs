//! Built-in set-valued test cases.
//!
//! A [`SetModel`] bundles a domain, input marginals and a way to produce the
//! membership tables of its output on a shared inner sample. Most outputs
//! are a single set; the oscillator pair output has two component sets whose
//! set-kernel grams are multiplied entrywise.

mod oscillator;
mod toy;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use oscillator::{
    oscillator_trajectory, Constraint, ConstraintOracle, Forcing, OscillatorCase, OscillatorOutput,
    OscillatorParams, OscillatorSettings, Trajectory, TrajectoryMaxima,
};
pub use toy::ToyCase;

use crate::domain::{membership_matrix, BoxDomain, MembershipMatrix};
use crate::error::{Error, Result};
use crate::kernels::MarginalDistribution;

/// Membership tables of one output, all on the same inner sample.
#[derive(Debug, Clone)]
pub struct OutputMemberships {
    pub components: Vec<MembershipMatrix>,
    /// Membership evaluations spent.
    pub oracle_calls: u64,
}

pub trait SetModel: Sync {
    fn name(&self) -> &str;

    fn domain(&self) -> &BoxDomain;

    fn marginals(&self) -> Vec<MarginalDistribution>;

    fn input_names(&self) -> Vec<String>;

    /// `false` when the output kernel is a product of set kernels, which need
    /// not be characteristic.
    fn output_kernel_characteristic(&self) -> bool {
        true
    }

    fn memberships(&self, inputs: &[Vec<f64>], points: &[Vec<f64>]) -> Result<OutputMemberships>;
}

fn calls(inputs: &[Vec<f64>], points: &[Vec<f64>]) -> u64 {
    (inputs.len() * points.len()) as u64
}

impl SetModel for ToyCase {
    fn name(&self) -> &str {
        "toy"
    }

    fn domain(&self) -> &BoxDomain {
        crate::domain::RegionOracle::domain(self)
    }

    fn marginals(&self) -> Vec<MarginalDistribution> {
        ToyCase::marginals()
    }

    fn input_names(&self) -> Vec<String> {
        ToyCase::input_names()
    }

    fn memberships(&self, inputs: &[Vec<f64>], points: &[Vec<f64>]) -> Result<OutputMemberships> {
        Ok(OutputMemberships {
            components: vec![membership_matrix(self, inputs, points)?],
            oracle_calls: calls(inputs, points),
        })
    }
}

/// One output of the oscillator case.
#[derive(Debug, Clone)]
pub struct OscillatorModel {
    case: OscillatorCase,
    output: OscillatorOutput,
    name: String,
}

impl OscillatorModel {
    pub fn new(settings: OscillatorSettings, output: OscillatorOutput) -> Self {
        Self {
            case: OscillatorCase::new(settings),
            output,
            name: ModelKind::Oscillator(output).to_string(),
        }
    }

    pub fn case(&self) -> &OscillatorCase {
        &self.case
    }
}

impl SetModel for OscillatorModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn domain(&self) -> &BoxDomain {
        self.case.domain()
    }

    fn marginals(&self) -> Vec<MarginalDistribution> {
        OscillatorCase::marginals()
    }

    fn input_names(&self) -> Vec<String> {
        OscillatorCase::input_names()
    }

    fn output_kernel_characteristic(&self) -> bool {
        self.output != OscillatorOutput::Pair
    }

    fn memberships(&self, inputs: &[Vec<f64>], points: &[Vec<f64>]) -> Result<OutputMemberships> {
        // A fresh cache per call keeps memory bounded to one replicate.
        let case = self.case.fresh();
        let one = |c: Constraint| membership_matrix(&case.oracle(c), inputs, points);
        let components = match self.output {
            OscillatorOutput::G1 => vec![one(Constraint::G1)?],
            OscillatorOutput::G2 => vec![one(Constraint::G2)?],
            OscillatorOutput::Pair => vec![one(Constraint::G1)?, one(Constraint::G2)?],
            OscillatorOutput::Intersection => vec![one(Constraint::Both)?],
        };
        Ok(OutputMemberships {
            oracle_calls: calls(inputs, points) * components.len() as u64,
            components,
        })
    }
}

/// Model names accepted in configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Toy,
    Oscillator(OscillatorOutput),
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Toy,
        ModelKind::Oscillator(OscillatorOutput::G1),
        ModelKind::Oscillator(OscillatorOutput::G2),
        ModelKind::Oscillator(OscillatorOutput::Pair),
        ModelKind::Oscillator(OscillatorOutput::Intersection),
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Toy => "toy",
            ModelKind::Oscillator(OscillatorOutput::G1) => "oscillator_g1",
            ModelKind::Oscillator(OscillatorOutput::G2) => "oscillator_g2",
            ModelKind::Oscillator(OscillatorOutput::Pair) => "oscillator_pair",
            ModelKind::Oscillator(OscillatorOutput::Intersection) => "oscillator_intersection",
        }
    }

    pub fn build(self, settings: OscillatorSettings) -> Box<dyn SetModel> {
        match self {
            ModelKind::Toy => Box::new(ToyCase::new()),
            ModelKind::Oscillator(output) => Box::new(OscillatorModel::new(settings, output)),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown model `{s}`")))
    }
}

impl Serialize for ModelKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for ModelKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
