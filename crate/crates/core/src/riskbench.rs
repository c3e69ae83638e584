//! Empirical check of the quadratic-risk bounds of the nested HSIC estimators.
//!
//! The benchmark target is `HSIC(U₁, Γ_g)` on the toy case with the Sobolev
//! input kernel. Two estimators are compared:
//!
//! * `shared`: one inner sample of `m` points reused by every pair (`n·m` oracle calls);
//! * `independent_nmc`: a fresh inner sample for every pair `i < j` (`n(n−1)m` calls).
//!
//! For the shared estimator
//!
//! ```text
//! E(Ĥ − H)² ≤ 2 ( 2σ₁²/(n(n−1)) + 4(n−2)σ₂²/(n(n−1)) + L²σ₃²/m )
//! ```
//!
//! and for independent inner samples
//!
//! ```text
//! E(Ĥ − H)² ≤ 2 ( 2σ₁²/(n(n−1)) + 4(n−2)σ₂²/(n(n−1)) + 2(2n−3)L²σ₃²/(n(n−1)m)
//!                 + (n−2)(n−3)L⁴σ₄⁴/(4n(n−1)m²) )
//! ```
//!
//! with `L = λ(𝒳)/(2σ²)`. Constants and the reference value `H_ref` come
//! from one large shared-sample run; the output bandwidth is frozen at the
//! reference run's heuristic value so every replicate targets the same `H`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{membership_matrix, sample_domain, MembershipMatrix, RegionOracle};
use crate::error::{Error, Result};
use crate::gram::GramMatrix;
use crate::hsic::hsic_ustat;
use crate::kernels::{bandwidth_heuristic, set_kernel_gram, AnovaKernel, OutputKernelSpec};
use crate::models::ToyCase;
use crate::rng;

pub const DEFAULT_BUDGET_CAP: u64 = 20_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskConstants {
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub sigma3_sq: f64,
    pub sigma4_sq: f64,
    /// `L = λ(𝒳) / (2σ²)`.
    pub lipschitz: f64,
    pub h_ref: f64,
    /// Output bandwidth `σ²` used for the reference and for every replicate.
    pub bandwidth: f64,
}

/// Plug-in constants from one sample: `h_ij = (K[i][j] − 1) k̂_set[i][j]`.
///
/// * `σ₁²`: sample variance of `h_ij` over pairs;
/// * `σ₂²`: variance of the row means `(1/(n−1)) Σ_{j≠i} h_ij`;
/// * `σ₃²`, `σ₄²`: pair means of `(K−1)² f(1−f)` and `|K−1| f(1−f)`, with
///   `f` the symmetric-difference fraction.
pub fn constants_from_sample(
    input_gram: &GramMatrix,
    matrix: &MembershipMatrix,
    spec: &OutputKernelSpec,
) -> Result<RiskConstants> {
    let n = input_gram.n();
    if n < 3 || matrix.rows() != n {
        return Err(Error::TooFewSamples(n.min(matrix.rows())));
    }
    let set_gram = set_kernel_gram(matrix, spec)?;
    let pairs = (n * (n - 1) / 2) as f64;
    let mut row_sums = vec![0.0; n];
    let (mut sum, mut sum_sq, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let centred = input_gram.get(i, j) - 1.0;
            let h = centred * set_gram.get(i, j);
            let f = matrix.sym_diff_fraction(i, j)?;
            let bernoulli = f * (1.0 - f);
            sum += h;
            sum_sq += h * h;
            s3 += centred * centred * bernoulli;
            s4 += centred.abs() * bernoulli;
            row_sums[i] += h;
            row_sums[j] += h;
        }
    }
    let mean = sum / pairs;
    let sigma1_sq = ((sum_sq - pairs * mean * mean) / (pairs - 1.0)).max(0.0);
    let row_means: Vec<f64> = row_sums.iter().map(|s| s / (n - 1) as f64).collect();
    let row_mean = row_means.iter().sum::<f64>() / n as f64;
    let sigma2_sq = row_means
        .iter()
        .map(|r| (r - row_mean).powi(2))
        .sum::<f64>()
        / (n - 1) as f64;
    Ok(RiskConstants {
        sigma1_sq,
        sigma2_sq,
        sigma3_sq: s3 / pairs,
        sigma4_sq: s4 / pairs,
        lipschitz: spec.lipschitz(),
        h_ref: mean,
        bandwidth: spec.sigma2,
    })
}

/// Uniform-scale value of the toy case's first input.
fn toy_inputs<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (Vec<Vec<f64>>, Vec<f64>) {
    let raw: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..3).map(|_| -5.0 + 10.0 * rng.random::<f64>()).collect())
        .collect();
    let u1 = raw.iter().map(|u| (u[0] + 5.0) / 10.0).collect();
    (raw, u1)
}

/// Reference run of the shared-sample estimator at `(n_ref, m_ref)`.
pub fn estimate_constants(n_ref: usize, m_ref: usize, seed: u64) -> Result<RiskConstants> {
    if n_ref < 1000 {
        return Err(Error::InvalidParameter(format!(
            "n_ref = {n_ref} is below 1000"
        )));
    }
    let toy = ToyCase::new();
    let (raw, u1) = toy_inputs(n_ref, &mut rng::stream(seed, &[0, 0]));
    let points = sample_domain(toy.domain(), m_ref, &mut rng::stream(seed, &[0, 1]));
    let matrix = membership_matrix(&toy, &raw, &points)?;
    let sigma2 = bandwidth_heuristic(&matrix)?.require()?;
    let spec = OutputKernelSpec::new(sigma2, toy.domain().volume())?;
    let input_gram = AnovaKernel::Sobolev1.gram(&u1)?;
    constants_from_sample(&input_gram, &matrix, &spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Shared,
    Independent,
}

/// Bound split into its `n`-only part and its `m`-dependent part (absolute scale).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundTerms {
    pub outer: f64,
    pub inner: f64,
}

pub fn bound_terms(c: &RiskConstants, n: usize, m: usize, which: BoundKind) -> Result<BoundTerms> {
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    if m < 1 {
        return Err(Error::EmptyInnerSample);
    }
    let nf = n as f64;
    let mf = m as f64;
    let pairs = nf * (nf - 1.0);
    let outer = 2.0 * (2.0 * c.sigma1_sq / pairs + 4.0 * (nf - 2.0) * c.sigma2_sq / pairs);
    let l2 = c.lipschitz * c.lipschitz;
    let inner = match which {
        BoundKind::Shared => 2.0 * l2 * c.sigma3_sq / mf,
        BoundKind::Independent => {
            2.0 * (l2 * 2.0 * (2.0 * nf - 3.0) * c.sigma3_sq / (pairs * mf)
                + l2 * l2 * (nf - 2.0) * (nf - 3.0) * c.sigma4_sq * c.sigma4_sq
                    / (4.0 * pairs * mf * mf))
        }
    };
    Ok(BoundTerms { outer, inner })
}

/// Bound on the relative quadratic risk, i.e. divided by `H_ref²`.
pub fn theoretical_bound(c: &RiskConstants, n: usize, m: usize, which: BoundKind) -> Result<f64> {
    let t = bound_terms(c, n, m, which)?;
    Ok((t.outer + t.inner) / (c.h_ref * c.h_ref))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Shared,
    IndependentNmc,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Shared => "shared",
            Estimator::IndependentNmc => "independent_nmc",
        }
    }

    /// Membership evaluations for one replicate at `(n, m)`.
    pub fn oracle_calls(self, n: usize, m: usize) -> u64 {
        let (n, m) = (n as u64, m as u64);
        match self {
            Estimator::Shared => n * m,
            Estimator::IndependentNmc => n * (n - 1) * m,
        }
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shared" => Ok(Estimator::Shared),
            "independent_nmc" => Ok(Estimator::IndependentNmc),
            _ => Err(Error::Config(format!("unknown estimator `{s}`"))),
        }
    }
}

/// One replicate of `Ĥ(U₁, Γ_g)` with a frozen bandwidth.
pub fn replicate_estimate(
    n: usize,
    m: usize,
    sigma2: f64,
    estimator: Estimator,
    seed: u64,
    path: &[u64],
) -> Result<f64> {
    let toy = ToyCase::new();
    let spec = OutputKernelSpec::new(sigma2, toy.domain().volume())?;
    let mut input_rng = rng::stream(seed, &[path, &[0]].concat());
    let (raw, u1) = toy_inputs(n, &mut input_rng);
    let input_gram = AnovaKernel::Sobolev1.gram(&u1)?;
    let mut inner_rng = rng::stream(seed, &[path, &[1]].concat());
    match estimator {
        Estimator::Shared => {
            let points = sample_domain(toy.domain(), m, &mut inner_rng);
            let matrix = membership_matrix(&toy, &raw, &points)?;
            hsic_ustat(&input_gram, &set_kernel_gram(&matrix, &spec)?)
        }
        Estimator::IndependentNmc => {
            if n < 2 {
                return Err(Error::TooFewSamples(n));
            }
            if m == 0 {
                return Err(Error::EmptyInnerSample);
            }
            let mut total = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    let mut hits = 0usize;
                    for x in sample_domain(toy.domain(), m, &mut inner_rng) {
                        if toy.contains(&x, &raw[i])? != toy.contains(&x, &raw[j])? {
                            hits += 1;
                        }
                    }
                    let k = spec.eval_fraction(hits as f64 / m as f64);
                    total += (input_gram.get(i, j) - 1.0) * k;
                }
            }
            Ok(2.0 * total / (n * (n - 1)) as f64)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskPoint {
    pub n: usize,
    pub m: usize,
    pub estimator: Estimator,
    pub empirical_risk: f64,
    pub bound_shared: f64,
    pub bound_independent: f64,
    pub mean_estimate: f64,
    pub sd_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskCurve {
    pub constants: RiskConstants,
    pub replicates: usize,
    pub points: Vec<RiskPoint>,
}

impl RiskCurve {
    /// Least-squares slope of `log(risk)` against `log(n)`.
    pub fn log_log_slope(&self) -> f64 {
        let xs: Vec<f64> = self.points.iter().map(|p| (p.n as f64).ln()).collect();
        let ys: Vec<f64> = self.points.iter().map(|p| p.empirical_risk.ln()).collect();
        let k = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / k;
        let my = ys.iter().sum::<f64>() / k;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        sxy / sxx
    }
}

/// Replicated estimates and both bounds on every `(n, m)` of `grid`.
///
/// Replicate `r` at grid index `g` draws from the stream `(seed, g, r)`.
pub fn risk_curve(
    constants: &RiskConstants,
    grid: &[(usize, usize)],
    replicates: usize,
    estimator: Estimator,
    seed: u64,
    budget_cap: u64,
) -> Result<RiskCurve> {
    if replicates < 20 {
        return Err(Error::InvalidParameter(format!(
            "{replicates} replicates, need at least 20"
        )));
    }
    let required: u64 = grid
        .iter()
        .map(|&(n, m)| estimator.oracle_calls(n, m) * replicates as u64)
        .sum();
    if required > budget_cap {
        return Err(Error::BudgetExceeded {
            required,
            cap: budget_cap,
        });
    }
    let points = grid
        .iter()
        .enumerate()
        .map(|(g, &(n, m))| {
            let estimates: Vec<f64> = (0..replicates)
                .into_par_iter()
                .map(|r| {
                    replicate_estimate(
                        n,
                        m,
                        constants.bandwidth,
                        estimator,
                        seed,
                        &[g as u64, r as u64],
                    )
                })
                .collect::<Result<_>>()?;
            let rf = replicates as f64;
            let mean = estimates.iter().sum::<f64>() / rf;
            let sd =
                (estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (rf - 1.0)).sqrt();
            let empirical_risk = estimates
                .iter()
                .map(|e| ((e - constants.h_ref) / constants.h_ref).powi(2))
                .sum::<f64>()
                / rf;
            Ok(RiskPoint {
                n,
                m,
                estimator,
                empirical_risk,
                bound_shared: theoretical_bound(constants, n, m, BoundKind::Shared)?,
                bound_independent: theoretical_bound(constants, n, m, BoundKind::Independent)?,
                mean_estimate: mean,
                sd_estimate: sd,
            })
        })
        .collect::<Result<_>>()?;
    Ok(RiskCurve {
        constants: *constants,
        replicates,
        points,
    })
}

/// Default grid: six log-spaced sizes between 30 and `n_ref / 3`.
pub fn default_grid(n_ref: usize) -> Vec<(usize, usize)> {
    let hi = (n_ref / 3).max(31) as f64;
    let lo = 30f64;
    (0..6)
        .map(|k| {
            let v = (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / 5.0)
                .exp()
                .round() as usize;
            (v, v)
        })
        .collect()
}
