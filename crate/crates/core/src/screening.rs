//! Permutation independence tests and the screen-then-rank step.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gram::GramMatrix;
use crate::hsic::{hsic_ustat, rank_descending, IndexTable};
use crate::rng;

pub const DEFAULT_PERMUTATIONS: usize = 199;

/// Outcome of one permutation test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationTest {
    pub statistic: f64,
    /// `#{b : T_b >= T_0}`.
    pub exceedances: usize,
    pub permutations: usize,
    pub p_value: f64,
}

/// `Σ_{i<j} (K[π(i)][π(j)] − 1) L[i][j]`, scaled as the U-statistic.
fn permuted_ustat(input: &GramMatrix, output: &GramMatrix, perm: &[usize]) -> f64 {
    let n = input.n();
    let k = input.entries();
    let l = output.entries();
    let mut total = 0.0;
    for i in 0..n - 1 {
        let row = perm[i] * n;
        let mut acc = 0.0;
        for j in i + 1..n {
            acc += (k[row + perm[j]] - 1.0) * l[i * n + j];
        }
        total += acc;
    }
    2.0 * total / (n * (n - 1)) as f64
}

/// Bound on `Σ_{i<j} |K_ij − 1| |L_ij|` under any relabelling of `K`, U-scaled.
fn abs_scale(input: &GramMatrix, output: &GramMatrix) -> f64 {
    let n = input.n();
    let (k, l) = (input.entries(), output.entries());
    let l_max = l.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let k_sum: f64 = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| (k[i * n + j] - 1.0).abs())
        .sum();
    2.0 * k_sum * l_max / (n * (n - 1)) as f64
}

/// Permutation p-value `(1 + #{T_b >= T_0}) / (B + 1)`.
///
/// Permutation `b` is drawn from the stream `(seed, b)`, so the result does not
/// depend on how the `B` statistics are scheduled across threads.
pub fn permutation_pvalue(
    input_gram: &GramMatrix,
    output_gram: &GramMatrix,
    permutations: usize,
    seed: u64,
) -> Result<PermutationTest> {
    if permutations < 19 {
        return Err(Error::TooFewPermutations(permutations));
    }
    let observed = hsic_ustat(input_gram, output_gram)?;
    let n = input_gram.n();
    let identity: Vec<usize> = (0..n).collect();
    let statistic = permuted_ustat(input_gram, output_gram, &identity);
    debug_assert!((statistic - observed).abs() <= 1e-12 * (1.0 + observed.abs()));

    // Permutations only reorder the summands, so ties in exact arithmetic can
    // differ by rounding; those still count as exceedances.
    let tol = 64.0 * f64::EPSILON * abs_scale(input_gram, output_gram);
    let exceedances = (0..permutations)
        .into_par_iter()
        .filter(|&b| {
            let mut perm = identity.clone();
            perm.shuffle(&mut rng::stream(seed, &[b as u64]));
            permuted_ustat(input_gram, output_gram, &perm) >= statistic - tol
        })
        .count();
    Ok(PermutationTest {
        statistic,
        exceedances,
        permutations,
        p_value: (1 + exceedances) as f64 / (permutations + 1) as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Influential,
    Negligible,
}

impl Label {
    pub fn from_p_value(p: f64, alpha: f64) -> Self {
        if p <= alpha {
            Label::Influential
        } else {
            Label::Negligible
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Influential => "influential",
            Label::Negligible => "negligible",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningResult {
    pub p_values: Vec<f64>,
    pub labels: Vec<Label>,
    pub alpha: f64,
    /// Inputs by descending first-order index, negligible ones included.
    pub ranking: Vec<usize>,
}

impl ScreeningResult {
    pub fn influential(&self) -> Vec<usize> {
        self.ranking
            .iter()
            .copied()
            .filter(|&i| self.labels[i] == Label::Influential)
            .collect()
    }
}

pub fn screen_and_rank(
    table: &IndexTable,
    p_values: &[f64],
    alpha: f64,
) -> Result<ScreeningResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::OutOfRange {
            what: "alpha",
            value: alpha,
            range: "(0, 1)".into(),
        });
    }
    if p_values.len() != table.inputs() {
        return Err(Error::DimensionMismatch {
            expected: table.inputs(),
            found: p_values.len(),
        });
    }
    Ok(ScreeningResult {
        p_values: p_values.to_vec(),
        labels: p_values
            .iter()
            .map(|&p| Label::from_p_value(p, alpha))
            .collect(),
        alpha,
        ranking: rank_descending(&table.first_order),
    })
}
