//! Kernel between sets, `k_set(γ₁, γ₂) = exp(−λ(γ₁ Δ γ₂) / (2σ²))`, and its
//! Monte-Carlo estimate from a shared inner sample.

use serde::{Deserialize, Serialize};

use crate::domain::MembershipMatrix;
use crate::error::{Error, Result};
use crate::gram::GramMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputKernelSpec {
    pub sigma2: f64,
    pub domain_volume: f64,
}

impl OutputKernelSpec {
    pub fn new(sigma2: f64, domain_volume: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::DegenerateBandwidth);
        }
        if !(domain_volume > 0.0) {
            return Err(Error::InvalidDomain(format!("volume {domain_volume}")));
        }
        Ok(Self {
            sigma2,
            domain_volume,
        })
    }

    /// `L = λ(𝒳) / (2σ²)`.
    pub fn lipschitz(&self) -> f64 {
        self.domain_volume / (2.0 * self.sigma2)
    }

    /// `k_set` as a function of the symmetric-difference fraction.
    pub fn eval_fraction(&self, fraction: f64) -> f64 {
        (-self.lipschitz() * fraction).exp()
    }
}

/// Estimated `k̂_set(Γ^(i), Γ^(j))` for every pair of rows.
pub fn set_kernel_gram(matrix: &MembershipMatrix, spec: &OutputKernelSpec) -> Result<GramMatrix> {
    if !(spec.sigma2 > 0.0) {
        return Err(Error::DegenerateBandwidth);
    }
    if matrix.cols() == 0 {
        return Err(Error::EmptyInnerSample);
    }
    let scale = spec.lipschitz() / matrix.cols() as f64;
    Ok(GramMatrix::from_fn(matrix.rows(), |i, j| {
        if i == j {
            1.0
        } else {
            (-scale * matrix.sym_diff_count(i, j) as f64).exp()
        }
    }))
}

/// Result of the mean-symmetric-difference bandwidth rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bandwidth {
    pub sigma2: f64,
    /// All output sets coincide on the inner sample, so `sigma2 == 0`.
    pub degenerate: bool,
}

impl Bandwidth {
    pub fn require(self) -> Result<f64> {
        if self.degenerate {
            Err(Error::DegenerateBandwidth)
        } else {
            Ok(self.sigma2)
        }
    }
}

/// `σ²` = mean over `i < j` of the estimated `λ(Γ^(i) Δ Γ^(j))`.
pub fn bandwidth_heuristic(matrix: &MembershipMatrix) -> Result<Bandwidth> {
    let n = matrix.rows();
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    if matrix.cols() == 0 {
        return Err(Error::EmptyInnerSample);
    }
    let total: u64 = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| matrix.sym_diff_count(i, j))
        .sum();
    let pairs = (n * (n - 1) / 2) as f64;
    let sigma2 = matrix.domain_volume() * total as f64 / (pairs * matrix.cols() as f64);
    Ok(Bandwidth {
        sigma2,
        degenerate: total == 0,
    })
}
