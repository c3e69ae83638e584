//! Two-dimensional analytic excursion set with a dummy third input.

use crate::domain::{BoxDomain, RegionOracle};
use crate::error::Result;
use crate::kernels::MarginalDistribution;

/// `Γ(u) = {x ∈ [−5,5]² : −x₁² + 5x₂ − u₁ + u₂² − 1 ≤ 0}`, inputs `U₁,U₂,U₃ ~ U(−5,5)`.
/// `U₃` never enters the constraint.
#[derive(Debug, Clone)]
pub struct ToyCase {
    domain: BoxDomain,
}

impl Default for ToyCase {
    fn default() -> Self {
        Self {
            domain: BoxDomain::new(vec![-5.0, -5.0], vec![5.0, 5.0]).expect("valid box"),
        }
    }
}

impl ToyCase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constraint(x: &[f64], u: &[f64]) -> f64 {
        -x[0] * x[0] + 5.0 * x[1] - u[0] + u[1] * u[1] - 1.0
    }

    pub fn marginals() -> Vec<MarginalDistribution> {
        vec![MarginalDistribution::Uniform { a: -5.0, b: 5.0 }; 3]
    }

    pub fn input_names() -> Vec<String> {
        ["U1", "U2", "U3"].map(String::from).to_vec()
    }
}

impl RegionOracle for ToyCase {
    fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    fn contains(&self, x: &[f64], u: &[f64]) -> Result<bool> {
        Ok(Self::constraint(x, u) <= 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_evaluations() {
        let toy = ToyCase::new();
        let u = [0.0, 0.0, 3.0];
        assert_eq!(ToyCase::constraint(&[0.0, 0.0], &u), -1.0);
        assert!(toy.contains(&[0.0, 0.0], &u).unwrap());
        assert_eq!(ToyCase::constraint(&[0.0, 1.0], &u), 4.0);
        assert!(!toy.contains(&[0.0, 1.0], &u).unwrap());
        assert_eq!(ToyCase::constraint(&[0.0, 5.0], &u), 24.0);
        assert!(!toy.contains(&[0.0, 5.0], &u).unwrap());
    }

    #[test]
    fn third_input_is_inert() {
        let toy = ToyCase::new();
        for x in [[0.3, -1.0], [4.0, 2.5], [-2.0, 0.1]] {
            let a = toy.contains(&x, &[1.0, -2.0, -5.0]).unwrap();
            let b = toy.contains(&x, &[1.0, -2.0, 4.9]).unwrap();
            assert_eq!(a, b);
        }
    }
}
