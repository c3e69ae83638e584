//! ANOVA kernels on `[0,1]` with respect to the uniform measure.
//!
//! A kernel `K` is ANOVA w.r.t. `ν` when `K = 1 + k₀` with
//! `∫ k₀(x, z) dν(z) = 0` for every `x`. The order-1 Sobolev kernel has
//! this property in closed form. Classic stationary kernels `k` are made
//! ANOVA by the centring transform
//!
//! ```text
//! K(x, y) = 1 + k(x, y) − m(x) − m(y) + M,   m(x) = ∫₀¹ k(x, z) dz,   M = ∫₀¹ m(x) dx
//! ```
//!
//! where `m` is computed by Gauss–Legendre quadrature split at `z = x`
//! (the Laplace and Matérn kernels are not differentiable there).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::quadrature::GaussLegendre;
use crate::error::{Error, Result};
use crate::gram::GramMatrix;

/// Input kernel families, named as they appear in configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKernelFamily {
    Sobolev1,
    AnovaGaussian,
    AnovaLaplace,
    AnovaMatern32,
    AnovaMatern52,
}

impl InputKernelFamily {
    pub const ALL: [InputKernelFamily; 5] = [
        InputKernelFamily::Sobolev1,
        InputKernelFamily::AnovaGaussian,
        InputKernelFamily::AnovaLaplace,
        InputKernelFamily::AnovaMatern32,
        InputKernelFamily::AnovaMatern52,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InputKernelFamily::Sobolev1 => "sobolev1",
            InputKernelFamily::AnovaGaussian => "anova_gaussian",
            InputKernelFamily::AnovaLaplace => "anova_laplace",
            InputKernelFamily::AnovaMatern32 => "anova_matern32",
            InputKernelFamily::AnovaMatern52 => "anova_matern52",
        }
    }

    /// Stationary kernel behind a transformed family; `None` for `sobolev1`.
    pub fn base(self) -> Option<BaseFamily> {
        match self {
            InputKernelFamily::Sobolev1 => None,
            InputKernelFamily::AnovaGaussian => Some(BaseFamily::Gaussian),
            InputKernelFamily::AnovaLaplace => Some(BaseFamily::Laplace),
            InputKernelFamily::AnovaMatern32 => Some(BaseFamily::Matern32),
            InputKernelFamily::AnovaMatern52 => Some(BaseFamily::Matern52),
        }
    }
}

impl fmt::Display for InputKernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InputKernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown input kernel `{s}`")))
    }
}

/// Classic stationary kernels of `r = |x − y| / θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseFamily {
    Gaussian,
    Laplace,
    Matern32,
    Matern52,
}

#[inline]
fn stationary(family: BaseFamily, r: f64) -> f64 {
    match family {
        BaseFamily::Gaussian => (-0.5 * r * r).exp(),
        BaseFamily::Laplace => (-r).exp(),
        BaseFamily::Matern32 => {
            let s = 3f64.sqrt() * r;
            (1.0 + s) * (-s).exp()
        }
        BaseFamily::Matern52 => {
            let s = 5f64.sqrt() * r;
            (1.0 + s + 5.0 * r * r / 3.0) * (-s).exp()
        }
    }
}

pub fn base_kernel(family: BaseFamily, lengthscale: f64, x: f64, y: f64) -> Result<f64> {
    if !(lengthscale > 0.0 && lengthscale.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lengthscale must be positive, got {lengthscale}"
        )));
    }
    Ok(stationary(family, (x - y).abs() / lengthscale))
}

#[inline]
fn sobolev_unchecked(x: f64, y: f64) -> f64 {
    let d = (x - y).abs();
    1.0 + (x - 0.5) * (y - 0.5) + 0.5 * (d * d - d + 1.0 / 6.0)
}

/// Order-1 Sobolev kernel `1 + (x−½)(y−½) + ½[(x−y)² − |x−y| + 1/6]`.
pub fn sobolev_kernel(x: f64, y: f64) -> Result<f64> {
    check_unit("x", x)?;
    check_unit("y", y)?;
    Ok(sobolev_unchecked(x, y))
}

fn check_unit(what: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what,
            value: v,
            range: "[0, 1]".into(),
        })
    }
}

/// Input kernel choice for one input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputKernelSpec {
    pub family: InputKernelFamily,
    /// Only used by the transformed families.
    pub lengthscale: f64,
    pub quadrature_nodes: usize,
}

impl InputKernelSpec {
    pub const DEFAULT_NODES: usize = 64;

    pub fn sobolev() -> Self {
        Self {
            family: InputKernelFamily::Sobolev1,
            lengthscale: 1.0,
            quadrature_nodes: Self::DEFAULT_NODES,
        }
    }

    pub fn new(family: InputKernelFamily, lengthscale: f64) -> Self {
        Self {
            family,
            lengthscale,
            quadrature_nodes: Self::DEFAULT_NODES,
        }
    }
}

/// An input kernel ready for evaluation, with its centring constants resolved.
#[derive(Debug, Clone)]
pub enum AnovaKernel {
    Sobolev1,
    Centred {
        base: BaseFamily,
        lengthscale: f64,
        rule: GaussLegendre,
        grand_mean: f64,
    },
}

impl AnovaKernel {
    pub fn new(spec: &InputKernelSpec) -> Result<Self> {
        let Some(base) = spec.family.base() else {
            return Ok(AnovaKernel::Sobolev1);
        };
        if spec.quadrature_nodes < 8 {
            return Err(Error::InsufficientQuadrature {
                nodes: spec.quadrature_nodes,
            });
        }
        if !(spec.lengthscale > 0.0 && spec.lengthscale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lengthscale must be positive, got {}",
                spec.lengthscale
            )));
        }
        let rule = GaussLegendre::new(spec.quadrature_nodes);
        let grand_mean = rule.integrate(|x| centring(base, spec.lengthscale, &rule, x), 0.0, 1.0);
        Ok(AnovaKernel::Centred {
            base,
            lengthscale: spec.lengthscale,
            rule,
            grand_mean,
        })
    }

    /// `m(x) = ∫₀¹ k(x, z) dz` for the underlying kernel (`1` for Sobolev, whose
    /// centred part already integrates to zero).
    pub fn centring(&self, x: f64) -> f64 {
        match self {
            AnovaKernel::Sobolev1 => 1.0,
            AnovaKernel::Centred {
                base,
                lengthscale,
                rule,
                ..
            } => centring(*base, *lengthscale, rule, x),
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            AnovaKernel::Sobolev1 => sobolev_unchecked(x, y),
            AnovaKernel::Centred {
                base,
                lengthscale,
                grand_mean,
                ..
            } => {
                1.0 + stationary(*base, (x - y).abs() / lengthscale)
                    - self.centring(x)
                    - self.centring(y)
                    + grand_mean
            }
        }
    }

    /// Gram matrix on a uniform-scale sample; `m` is evaluated once per point.
    pub fn gram(&self, sample: &[f64]) -> Result<GramMatrix> {
        for &v in sample {
            check_unit("sample value", v)?;
        }
        Ok(match self {
            AnovaKernel::Sobolev1 => {
                GramMatrix::from_fn(sample.len(), |i, j| sobolev_unchecked(sample[i], sample[j]))
            }
            AnovaKernel::Centred {
                base,
                lengthscale,
                grand_mean,
                ..
            } => {
                let m: Vec<f64> = sample.iter().map(|&x| self.centring(x)).collect();
                GramMatrix::from_fn(sample.len(), |i, j| {
                    1.0 + stationary(*base, (sample[i] - sample[j]).abs() / lengthscale)
                        - m[i]
                        - m[j]
                        + grand_mean
                })
            }
        })
    }
}

fn centring(base: BaseFamily, lengthscale: f64, rule: &GaussLegendre, x: f64) -> f64 {
    let k = |z: f64| stationary(base, (x - z).abs() / lengthscale);
    rule.integrate(k, 0.0, x) + rule.integrate(k, x, 1.0)
}

/// ANOVA gram of `sample` (values on the uniform scale `[0,1]`).
pub fn anovaize_gram(spec: &InputKernelSpec, sample: &[f64]) -> Result<GramMatrix> {
    AnovaKernel::new(spec)?.gram(sample)
}

/// Sample standard deviation (denominator `n − 1`).
pub fn empirical_std(sample: &[f64]) -> f64 {
    let n = sample.len() as f64;
    if sample.len() < 2 {
        return 0.0;
    }
    let mean = sample.iter().sum::<f64>() / n;
    (sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}
