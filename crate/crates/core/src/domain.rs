//! Deterministic domain, set-valued outputs and Monte-Carlo set geometry.
//!
//! A set-valued output Γ ⊂ 𝒳 is only ever observed through a membership
//! oracle `x ∈ Γ(u)?`. Sampling `m` inner points once and querying every
//! output set on those same points gives an `n × m` [`MembershipMatrix`];
//! all Lebesgue measures needed downstream (symmetric differences, set
//! volumes) are then estimated from bit counts.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Compact hyper-rectangle `∏ [lower_j, upper_j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
    volume: f64,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidDomain(format!(
                "bounds of length {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (j, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidDomain(format!(
                    "side {j} has lower {lo} >= upper {hi}"
                )));
            }
        }
        let volume = lower.iter().zip(&upper).map(|(lo, hi)| hi - lo).product();
        Ok(Self {
            lower,
            upper,
            volume,
        })
    }

    /// The unit cube `[0,1]^d`.
    pub fn unit(d: usize) -> Result<Self> {
        Self::new(vec![0.0; d], vec![1.0; d])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Lebesgue volume λ(𝒳).
    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }
}

/// Draws `m` i.i.d. uniform points on `domain`.
pub fn sample_domain<R: Rng + ?Sized>(domain: &BoxDomain, m: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..m)
        .map(|_| {
            domain
                .lower
                .iter()
                .zip(&domain.upper)
                .map(|(&lo, &hi)| lo + (hi - lo) * rng.random::<f64>())
                .collect()
        })
        .collect()
}

/// Membership predicate of a random set `Γ(u) ⊂ 𝒳`.
///
/// Implementations must be deterministic and total on `𝒳 × 𝒰`.
pub trait RegionOracle: Sync {
    fn domain(&self) -> &BoxDomain;

    fn contains(&self, x: &[f64], u: &[f64]) -> Result<bool>;
}

/// Excursion set `{x : g(x, u) <= 0}` of a closure constraint.
pub struct Excursion<G> {
    domain: BoxDomain,
    constraint: G,
}

impl<G> Excursion<G>
where
    G: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    pub fn new(domain: BoxDomain, constraint: G) -> Self {
        Self { domain, constraint }
    }
}

impl<G> RegionOracle for Excursion<G>
where
    G: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    fn contains(&self, x: &[f64], u: &[f64]) -> Result<bool> {
        Ok((self.constraint)(x, u) <= 0.0)
    }
}

/// Dense bit table: bit `(i, k)` is set iff inner point `X^(k)` lies in `Γ^(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    bits: Vec<u64>,
    domain_volume: f64,
}

impl MembershipMatrix {
    pub fn from_rows(rows: &[Vec<bool>], domain_volume: f64) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let words = cols.div_ceil(64);
        let mut bits = vec![0u64; rows.len() * words];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            pack_row(row, &mut bits[i * words..(i + 1) * words]);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            words,
            bits,
            domain_volume,
        })
    }

    /// Number of output sets `n`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of shared inner points `m`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn domain_volume(&self) -> f64 {
        self.domain_volume
    }

    pub fn get(&self, i: usize, k: usize) -> bool {
        assert!(
            i < self.rows && k < self.cols,
            "index ({i}, {k}) out of bounds"
        );
        (self.bits[i * self.words + k / 64] >> (k % 64)) & 1 == 1
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    /// `#{k : bit(i,k) != bit(j,k)}`.
    pub fn sym_diff_count(&self, i: usize, j: usize) -> u64 {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(a, b)| u64::from((a ^ b).count_ones()))
            .sum()
    }

    /// Fraction of inner points in `Γ^(i) Δ Γ^(j)`.
    pub fn sym_diff_fraction(&self, i: usize, j: usize) -> Result<f64> {
        if self.cols == 0 {
            return Err(Error::EmptyInnerSample);
        }
        Ok(self.sym_diff_count(i, j) as f64 / self.cols as f64)
    }

    /// Fraction of inner points in `Γ^(i)`; times λ(𝒳) this estimates λ(Γ^(i)).
    pub fn row_fraction(&self, i: usize) -> Result<f64> {
        if self.cols == 0 {
            return Err(Error::EmptyInnerSample);
        }
        let ones: u64 = self.row(i).iter().map(|w| u64::from(w.count_ones())).sum();
        Ok(ones as f64 / self.cols as f64)
    }

    /// Entrywise AND of two tables on the same inner sample.
    pub fn intersect(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        Ok(Self {
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(a, b)| a & b)
                .collect(),
            ..self.clone()
        })
    }
}

fn pack_row(row: &[bool], out: &mut [u64]) {
    for (k, &b) in row.iter().enumerate() {
        if b {
            out[k / 64] |= 1 << (k % 64);
        }
    }
}

/// Evaluates `oracle` on every (input, inner point) pair: exactly `n·m` calls.
///
/// Rows are evaluated in parallel; the oracle is pure so the result does not
/// depend on the schedule.
pub fn membership_matrix<O: RegionOracle + ?Sized>(
    oracle: &O,
    inputs: &[Vec<f64>],
    points: &[Vec<f64>],
) -> Result<MembershipMatrix> {
    let cols = points.len();
    let words = cols.div_ceil(64);
    let rows: Vec<Vec<u64>> = inputs
        .par_iter()
        .enumerate()
        .map(|(i, u)| {
            let mut packed = vec![0u64; words];
            for (k, x) in points.iter().enumerate() {
                let member = oracle.contains(x, u).map_err(|e| Error::Oracle {
                    row: i,
                    point: k,
                    source: Box::new(e),
                })?;
                if member {
                    packed[k / 64] |= 1 << (k % 64);
                }
            }
            Ok(packed)
        })
        .collect::<Result<_>>()?;
    Ok(MembershipMatrix {
        rows: inputs.len(),
        cols,
        words,
        bits: rows.concat(),
        domain_volume: oracle.domain().volume(),
    })
}

/// Axis-aligned box given by per-axis closed intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl AxisBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self { lower, upper }
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| (hi - lo).max(0.0))
            .product()
    }

    fn intersect(&self, other: &Self) -> Option<Self> {
        let lower: Vec<f64> = self
            .lower
            .iter()
            .zip(&other.lower)
            .map(|(a, b)| a.max(*b))
            .collect();
        let upper: Vec<f64> = self
            .upper
            .iter()
            .zip(&other.upper)
            .map(|(a, b)| a.min(*b))
            .collect();
        if lower.iter().zip(&upper).any(|(lo, hi)| lo >= hi) {
            None
        } else {
            Some(Self { lower, upper })
        }
    }

    fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }
}

/// Finite union of axis-aligned boxes inside a [`BoxDomain`], with exact measure.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticRegion {
    domain: BoxDomain,
    boxes: Vec<AxisBox>,
}

impl AnalyticRegion {
    /// Boxes are clipped to the domain; boxes with empty interior are dropped.
    pub fn new(domain: BoxDomain, boxes: Vec<AxisBox>) -> Result<Self> {
        let whole = AxisBox::new(domain.lower.clone(), domain.upper.clone());
        let mut clipped = Vec::with_capacity(boxes.len());
        for b in boxes {
            if b.lower.len() != domain.dim() || b.upper.len() != domain.dim() {
                return Err(Error::DimensionMismatch {
                    expected: domain.dim(),
                    found: b.lower.len(),
                });
            }
            clipped.extend(b.intersect(&whole));
        }
        Ok(Self {
            domain,
            boxes: clipped,
        })
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn boxes(&self) -> &[AxisBox] {
        &self.boxes
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.boxes.iter().any(|b| b.contains(x))
    }

    /// Exact λ of the union.
    pub fn measure(&self) -> f64 {
        union_measure(&self.boxes)
    }
}

impl RegionOracle for AnalyticRegion {
    fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    fn contains(&self, x: &[f64], _u: &[f64]) -> Result<bool> {
        Ok(self.contains_point(x))
    }
}

/// Inclusion–exclusion over the boxes, pruning branches whose running
/// intersection is already empty.
fn union_measure(boxes: &[AxisBox]) -> f64 {
    fn extend(boxes: &[AxisBox], start: usize, current: &AxisBox, depth: usize) -> f64 {
        let sign = if depth % 2 == 1 { 1.0 } else { -1.0 };
        let mut total = sign * current.volume();
        for (offset, b) in boxes[start..].iter().enumerate() {
            if let Some(next) = current.intersect(b) {
                total += extend(boxes, start + offset + 1, &next, depth + 1);
            }
        }
        total
    }
    boxes
        .iter()
        .enumerate()
        .map(|(i, b)| extend(boxes, i + 1, b, 1))
        .sum()
}

/// Exact λ(a Δ b) = λ(a) + λ(b) − 2 λ(a ∩ b).
pub fn exact_sym_diff_measure(a: &AnalyticRegion, b: &AnalyticRegion) -> Result<f64> {
    if a.domain != b.domain {
        return Err(Error::DomainMismatch);
    }
    let pairwise: Vec<AxisBox> = a
        .boxes
        .iter()
        .flat_map(|p| b.boxes.iter().filter_map(move |q| p.intersect(q)))
        .collect();
    let delta = a.measure() + b.measure() - 2.0 * union_measure(&pairwise);
    Ok(delta.max(0.0))
}
