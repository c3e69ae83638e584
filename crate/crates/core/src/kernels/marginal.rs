//! Input marginals and the probability-integral transform onto `[0,1]`.

use std::fmt;
use std::str::FromStr;

use libm::erfc;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Serialized as its display string, e.g. `uniform(-5,5)` or `normal(1,0.1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarginalDistribution {
    Uniform { a: f64, b: f64 },
    Normal { mean: f64, sd: f64 },
}

impl MarginalDistribution {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        Self::Uniform { a, b }.validated()
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        Self::Normal { mean, sd }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let ok = match self {
            Self::Uniform { a, b } => a.is_finite() && b.is_finite() && b > a,
            Self::Normal { mean, sd } => mean.is_finite() && sd.is_finite() && sd > 0.0,
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::InvalidParameter(format!("invalid marginal {self}")))
        }
    }

    pub fn in_support(&self, x: f64) -> bool {
        match *self {
            Self::Uniform { a, b } => (a..=b).contains(&x),
            Self::Normal { .. } => x.is_finite(),
        }
    }

    /// Cumulative distribution function; `None` outside the support.
    pub fn cdf(&self, x: f64) -> Option<f64> {
        if !self.in_support(x) {
            return None;
        }
        Some(match *self {
            Self::Uniform { a, b } => (x - a) / (b - a),
            Self::Normal { mean, sd } => 0.5 * erfc(-(x - mean) / (sd * std::f64::consts::SQRT_2)),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            Self::Normal { mean, sd } => Normal::new(mean, sd)
                .expect("validated marginal")
                .sample(rng),
        }
    }
}

impl fmt::Display for MarginalDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform { a, b } => write!(f, "uniform({a},{b})"),
            Self::Normal { mean, sd } => write!(f, "normal({mean},{sd})"),
        }
    }
}

/// Parses `uniform(a,b)` or `normal(mean,sd)`.
impl FromStr for MarginalDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse marginal `{s}`"));
        let s = s.trim();
        let open = s.find('(').ok_or_else(bad)?;
        let args = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        let params: Vec<f64> = args
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let [p, q] = params[..] else {
            return Err(bad());
        };
        match s[..open].trim() {
            "uniform" => Self::uniform(p, q),
            "normal" => Self::normal(p, q),
            _ => Err(bad()),
        }
    }
}

impl Serialize for MarginalDistribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MarginalDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Maps each column through its marginal CDF; rows are samples.
pub fn quantile_transform(
    raw: &[Vec<f64>],
    marginals: &[MarginalDistribution],
) -> Result<Vec<Vec<f64>>> {
    raw.iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() != marginals.len() {
                return Err(Error::DimensionMismatch {
                    expected: marginals.len(),
                    found: row.len(),
                });
            }
            row.iter()
                .zip(marginals)
                .enumerate()
                .map(|(j, (&v, dist))| {
                    dist.cdf(v).ok_or(Error::OutsideSupport {
                        row: i,
                        col: j,
                        value: v,
                    })
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn medians_map_to_half() {
        let u = MarginalDistribution::uniform(-5.0, 5.0).unwrap();
        let n = MarginalDistribution::normal(1.0, 0.1).unwrap();
        let out = quantile_transform(&[vec![0.0, 1.0]], &[u, n]).unwrap();
        assert_eq!(out[0][0], 0.5);
        assert!((out[0][1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn normal_cdf_reference_value() {
        // Φ(1) = 0.8413447460685429
        let n = MarginalDistribution::normal(15.0, 3.0).unwrap();
        let v = n.cdf(18.0).unwrap();
        assert!((v - 0.841_344_746_068_542_9).abs() < 1e-14, "{v}");
    }

    #[test]
    fn transform_preserves_order() {
        let marginals = [
            MarginalDistribution::uniform(-0.3, 0.3).unwrap(),
            MarginalDistribution::normal(2.5, 0.25).unwrap(),
        ];
        let mut r = rng::stream(11, &[]);
        let raw: Vec<Vec<f64>> = (0..50)
            .map(|_| marginals.iter().map(|m| m.sample(&mut r)).collect())
            .collect();
        let out = quantile_transform(&raw, &marginals).unwrap();
        for j in 0..2 {
            for a in 0..50 {
                for b in 0..50 {
                    if raw[a][j] < raw[b][j] {
                        assert!(out[a][j] < out[b][j]);
                    }
                }
            }
        }
        assert!(out.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn outside_support_reports_position() {
        let u = MarginalDistribution::uniform(0.0, 1.0).unwrap();
        let err = quantile_transform(&[vec![0.5], vec![1.5]], &[u]).unwrap_err();
        assert!(matches!(err, Error::OutsideSupport { row: 1, col: 0, .. }));
    }

    #[test]
    fn parse_and_validate() {
        assert_eq!(
            "uniform(-5, 5)".parse::<MarginalDistribution>().unwrap(),
            MarginalDistribution::Uniform { a: -5.0, b: 5.0 }
        );
        assert_eq!(
            "normal(1,0.1)".parse::<MarginalDistribution>().unwrap(),
            MarginalDistribution::Normal { mean: 1.0, sd: 0.1 }
        );
        assert!("uniform(1,1)".parse::<MarginalDistribution>().is_err());
        assert!("normal(0,-1)".parse::<MarginalDistribution>().is_err());
        assert!("beta(1,2)".parse::<MarginalDistribution>().is_err());
        assert!("uniform(1)".parse::<MarginalDistribution>().is_err());
    }
}
