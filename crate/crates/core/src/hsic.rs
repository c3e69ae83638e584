//! HSIC-ANOVA estimation on precomputed grams.
//!
//! With an ANOVA input kernel `K_A`, `HSIC(U_A, Z) = E[(K_A(U_A, U_A') − 1) k_Z(Z, Z')]`,
//! estimated without bias by the U-statistic
//!
//! ```text
//! Ĥ(U_A, Z) = 2 / (n(n−1)) Σ_{i<j} (K_A[i][j] − 1) k_Z[i][j]
//! ```
//!
//! First-order and total-order indices are ratios of such estimates, all
//! taken on the same sample and the same output gram.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::gram::{product_gram, GramMatrix};

/// `Ĥ` for an input subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HsicEstimate {
    pub value: f64,
    pub subset: Vec<usize>,
    pub n: usize,
}

fn check_pair(input: &GramMatrix, output: &GramMatrix) -> Result<usize> {
    let n = input.n();
    if output.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: output.n(),
        });
    }
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    Ok(n)
}

/// The HSIC U-statistic. May be negative.
pub fn hsic_ustat(input_gram: &GramMatrix, output_gram: &GramMatrix) -> Result<f64> {
    let n = check_pair(input_gram, output_gram)?;
    let a = input_gram.entries();
    let b = output_gram.entries();
    let mut total = 0.0;
    for i in 0..n - 1 {
        let row = i * n;
        let mut acc = 0.0;
        for j in i + 1..n {
            acc += (a[row + j] - 1.0) * b[row + j];
        }
        total += acc;
    }
    Ok(2.0 * total / (n * (n - 1)) as f64)
}

/// Mean over pairs of `|K_A − 1|·|k_Z|`: the size an informative `Ĥ` is compared against.
fn pair_scale(input_gram: &GramMatrix, output_gram: &GramMatrix) -> f64 {
    let n = input_gram.n();
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += ((input_gram.get(i, j) - 1.0) * output_gram.get(i, j)).abs();
        }
    }
    2.0 * total / (n * (n - 1)) as f64
}

/// `Ĥ(U_A, Z)` with `K_A` the product of `grams[i]` for `i ∈ subset`.
pub fn hsic_subset(
    grams: &[GramMatrix],
    subset: &[usize],
    output_gram: &GramMatrix,
) -> Result<HsicEstimate> {
    let n = output_gram.n();
    let chosen: Vec<&GramMatrix> = subset
        .iter()
        .map(|&i| {
            grams.get(i).ok_or(Error::DimensionMismatch {
                expected: grams.len(),
                found: i + 1,
            })
        })
        .collect::<Result<_>>()?;
    let k = product_gram(n, &chosen)?;
    Ok(HsicEstimate {
        value: hsic_ustat(&k, output_gram)?,
        subset: subset.to_vec(),
        n,
    })
}

/// First/total-order HSIC-ANOVA indices from one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexTable {
    pub first_order: Vec<f64>,
    pub total_order: Vec<f64>,
    /// `Ĥ(U, Z)`, the common denominator.
    pub hsic_total: f64,
    /// `Ĥ(U_i, Z)`.
    pub hsic_first: Vec<f64>,
    /// `Ĥ(U_{−i}, Z)`.
    pub hsic_complement: Vec<f64>,
}

impl IndexTable {
    pub fn inputs(&self) -> usize {
        self.first_order.len()
    }

    /// Inputs by descending first-order index; ties keep ascending input order.
    pub fn ranking(&self) -> Vec<usize> {
        rank_descending(&self.first_order)
    }

    /// `S_Ti − S_i` per input.
    pub fn interaction_gap(&self) -> Vec<f64> {
        self.total_order
            .iter()
            .zip(&self.first_order)
            .map(|(t, f)| t - f)
            .collect()
    }
}

pub(crate) fn rank_descending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// Indices of every input. `grams[i]` is the ANOVA gram of input `i`.
pub fn indices(grams: &[GramMatrix], output_gram: &GramMatrix) -> Result<IndexTable> {
    let p = grams.len();
    if p == 0 {
        return Err(Error::InvalidParameter(
            "at least one input gram is required".into(),
        ));
    }
    let n = output_gram.n();
    let all: Vec<&GramMatrix> = grams.iter().collect();
    let full = product_gram(n, &all)?;
    let hsic_total = hsic_ustat(&full, output_gram)?;
    let scale = pair_scale(&full, output_gram);
    if !(hsic_total.abs() >= 1e-14 * scale) || scale == 0.0 {
        return Err(Error::NonInformativeOutput(hsic_total));
    }

    let hsic_first: Vec<f64> = grams
        .iter()
        .map(|g| hsic_ustat(g, output_gram))
        .collect::<Result<_>>()?;
    let hsic_complement: Vec<f64> = (0..p)
        .map(|i| {
            let others: Vec<&GramMatrix> = grams
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, g)| g)
                .collect();
            hsic_ustat(&product_gram(n, &others)?, output_gram)
        })
        .collect::<Result<_>>()?;

    Ok(IndexTable {
        first_order: hsic_first.iter().map(|h| h / hsic_total).collect(),
        total_order: hsic_complement
            .iter()
            .map(|h| 1.0 - h / hsic_total)
            .collect(),
        hsic_total,
        hsic_first,
        hsic_complement,
    })
}

/// `|Ĥ(U, Z) − Σ_{A} Σ_{B⊆A} (−1)^{|A|−|B|} Ĥ(U_B, Z)|` over all subsets of at most 4 inputs.
pub fn decomposition_residual(grams: &[GramMatrix], output_gram: &GramMatrix) -> Result<f64> {
    let p = grams.len();
    if p > 4 {
        return Err(Error::EnumerationBudget(p));
    }
    let n = output_gram.n();
    let subsets = 1usize << p;
    let by_mask: Vec<f64> = (0..subsets)
        .map(|mask| {
            let chosen: Vec<&GramMatrix> = (0..p)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| &grams[i])
                .collect();
            hsic_ustat(&product_gram(n, &chosen)?, output_gram)
        })
        .collect::<Result<_>>()?;

    let mut decomposed = 0.0;
    for a in 0..subsets {
        // Iterate every B ⊆ A via the submask trick, including the empty set.
        let mut b = a;
        loop {
            let sign = if (a.count_ones() - b.count_ones()) % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            decomposed += sign * by_mask[b];
            if b == 0 {
                break;
            }
            b = (b - 1) & a;
        }
    }
    Ok((by_mask[subsets - 1] - decomposed).abs())
}

/// Finite joint law of `(U, Z)` with kernels tabulated on the supports.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteJointModel {
    /// `joint[a][b] = P(U = u_a, Z = z_b)`.
    pub joint: Vec<Vec<f64>>,
    pub input_kernel: Vec<Vec<f64>>,
    pub output_kernel: Vec<Vec<f64>>,
}

fn check_kernel(k: &[Vec<f64>], size: usize, name: &str) -> Result<()> {
    if k.len() != size || k.iter().any(|r| r.len() != size) {
        return Err(Error::DimensionMismatch {
            expected: size,
            found: k.len(),
        });
    }
    let symmetric = (0..size).all(|a| (0..a).all(|b| k[a][b] == k[b][a]));
    if !symmetric {
        return Err(Error::InvalidParameter(format!(
            "{name} kernel is not symmetric"
        )));
    }
    Ok(())
}

/// Population HSIC formula used by [`population_hsic_oracle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PopulationFormula {
    /// `E[k k] + E[k]E[k] − 2 E[E[k|U] E[k|Z]]`.
    ThreeTerm,
    /// `E[(K − 1) k]`, valid for ANOVA input kernels only.
    AnovaSimplified,
}

impl DiscreteJointModel {
    pub fn new(
        joint: Vec<Vec<f64>>,
        input_kernel: Vec<Vec<f64>>,
        output_kernel: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let nu = joint.len();
        let nz = joint.first().map_or(0, Vec::len);
        if nu == 0 || nz == 0 || joint.iter().any(|r| r.len() != nz) {
            return Err(Error::InvalidProbabilities(
                "joint table must be a non-empty rectangle".into(),
            ));
        }
        if joint.iter().flatten().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidProbabilities(
                "negative or NaN probability".into(),
            ));
        }
        let total: f64 = joint.iter().flatten().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidProbabilities(format!(
                "probabilities sum to {total}"
            )));
        }
        check_kernel(&input_kernel, nu, "input")?;
        check_kernel(&output_kernel, nz, "output")?;
        Ok(Self {
            joint,
            input_kernel,
            output_kernel,
        })
    }

    pub fn input_marginal(&self) -> Vec<f64> {
        self.joint.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn output_marginal(&self) -> Vec<f64> {
        let nz = self.joint[0].len();
        (0..nz)
            .map(|b| self.joint.iter().map(|r| r[b]).sum())
            .collect()
    }

    /// Largest `|Σ_a' P(a') K(a, a') − 1|` over support points.
    pub fn anova_deviation(&self) -> f64 {
        let pu = self.input_marginal();
        self.input_kernel
            .iter()
            .map(|row| (row.iter().zip(&pu).map(|(k, p)| k * p).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `n` i.i.d. draws as (input support index, output support index).
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<(usize, usize)> {
        let nz = self.joint[0].len();
        let dist =
            WeightedIndex::new(self.joint.iter().flatten()).expect("validated probabilities");
        (0..n)
            .map(|_| {
                let cell = dist.sample(rng);
                (cell / nz, cell % nz)
            })
            .collect()
    }
}

/// ANOVA counterpart of a tabulated kernel w.r.t. discrete weights `p`:
/// `K = 1 + k − m(a) − m(a') + M`.
///
/// Centring terms are accumulated in double-double so the only error left in
/// `Σ_a' p(a') K(a, a') − 1` is the final rounding of each entry.
pub fn discrete_anova_kernel(kernel: &[Vec<f64>], weights: &[f64]) -> Vec<Vec<f64>> {
    let m: Vec<Dd> = kernel
        .iter()
        .map(|row| Dd::sum(row.iter().zip(weights).map(|(&k, &w)| Dd::from(k) * w)))
        .collect();
    let grand = Dd::sum(m.iter().zip(weights).map(|(&v, &w)| v * w));
    let shift = Dd::from(1.0) + grand;
    kernel
        .iter()
        .enumerate()
        .map(|(a, row)| {
            row.iter()
                .enumerate()
                .map(|(b, &k)| (shift + Dd::from(k) - (m[a] + m[b])).to_f64())
                .collect()
        })
        .collect()
}

/// Exact population HSIC by enumeration over the finite joint support.
///
/// Sums run in double-double, so the three-term form does not lose the
/// result to cancellation between its O(1) terms.
pub fn population_hsic_oracle(
    model: &DiscreteJointModel,
    formula: PopulationFormula,
) -> Result<f64> {
    let p = &model.joint;
    let ku = &model.input_kernel;
    let kz = &model.output_kernel;
    let nu = p.len();
    let nz = p[0].len();
    let pairs = || (0..nu).flat_map(|a| (0..nz).map(move |b| (a, b)));
    let weight = |a: usize, b: usize, a2: usize, b2: usize| Dd::from(p[a][b]) * p[a2][b2];

    match formula {
        PopulationFormula::AnovaSimplified => {
            let dev = model.anova_deviation();
            if dev > 1e-10 {
                return Err(Error::NotAnova(dev));
            }
            let total = Dd::sum(pairs().flat_map(|(a, b)| {
                pairs().map(move |(a2, b2)| {
                    weight(a, b, a2, b2) * (Dd::from(ku[a][a2]) - Dd::from(1.0)) * kz[b][b2]
                })
            }));
            Ok(total.to_f64())
        }
        PopulationFormula::ThreeTerm => {
            let pu: Vec<Dd> = p
                .iter()
                .map(|r| Dd::sum(r.iter().map(|&v| Dd::from(v))))
                .collect();
            let pz: Vec<Dd> = (0..nz)
                .map(|b| Dd::sum(p.iter().map(|r| Dd::from(r[b]))))
                .collect();
            let joint_term = Dd::sum(pairs().flat_map(|(a, b)| {
                pairs().map(move |(a2, b2)| weight(a, b, a2, b2) * ku[a][a2] * kz[b][b2])
            }));
            let mean_ku = Dd::sum(
                (0..nu)
                    .flat_map(|a| (0..nu).map(move |a2| (a, a2)))
                    .map(|(a, a2)| pu[a] * pu[a2] * ku[a][a2]),
            );
            let mean_kz = Dd::sum(
                (0..nz)
                    .flat_map(|b| (0..nz).map(move |b2| (b, b2)))
                    .map(|(b, b2)| pz[b] * pz[b2] * kz[b][b2]),
            );
            let cond_u: Vec<Dd> = (0..nu)
                .map(|a| Dd::sum((0..nu).map(|a2| pu[a2] * ku[a][a2])))
                .collect();
            let cond_z: Vec<Dd> = (0..nz)
                .map(|b| Dd::sum((0..nz).map(|b2| pz[b2] * kz[b][b2])))
                .collect();
            let cross = Dd::sum(pairs().map(|(a, b)| cond_u[a] * cond_z[b] * p[a][b]));
            Ok((joint_term + mean_ku * mean_kz - cross * 2.0).to_f64())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn random_gram(n: usize, seed: u64, offset: f64) -> GramMatrix {
        let mut r = rng::stream(seed, &[]);
        let x: Vec<f64> = (0..n).map(|_| r.random()).collect();
        GramMatrix::from_fn(n, |i, j| offset + (-(x[i] - x[j]).powi(2) / 0.1).exp())
    }

    #[test]
    fn single_pair_closed_form() {
        let k = GramMatrix::from_entries(2, vec![1.0, 1.7, 1.7, 1.0]).unwrap();
        let l = GramMatrix::from_entries(2, vec![1.0, 0.4, 0.4, 1.0]).unwrap();
        assert!((hsic_ustat(&k, &l).unwrap() - 0.7 * 0.4).abs() < 1e-15);
    }

    #[test]
    fn constant_output_gives_pair_mean() {
        let k = random_gram(6, 1, 0.5);
        let ones = GramMatrix::ones(6);
        let mut want = 0.0;
        for i in 0..6 {
            for j in i + 1..6 {
                want += k.get(i, j) - 1.0;
            }
        }
        want /= 15.0;
        assert!((hsic_ustat(&k, &ones).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn size_checks() {
        let one = GramMatrix::ones(1);
        assert!(matches!(
            hsic_ustat(&one, &one),
            Err(Error::TooFewSamples(1))
        ));
        assert!(hsic_ustat(&GramMatrix::ones(2), &GramMatrix::ones(3)).is_err());
    }

    #[test]
    fn single_input_indices_are_one() {
        let k = random_gram(30, 2, 0.5);
        let z = random_gram(30, 2, 0.0);
        let t = indices(&[k], &z).unwrap();
        assert!((t.first_order[0] - 1.0).abs() < 1e-15);
        assert_eq!(t.total_order[0], 1.0);
    }

    #[test]
    fn two_input_total_order_unfolds() {
        let k1 = random_gram(30, 3, 0.5);
        let k2 = random_gram(30, 4, 0.5);
        let z = random_gram(30, 3, 0.0);
        let t = indices(&[k1.clone(), k2.clone()], &z).unwrap();
        let h = hsic_ustat(&k1.hadamard(&k2).unwrap(), &z).unwrap();
        let h2 = hsic_ustat(&k2, &z).unwrap();
        assert!((t.total_order[0] - (1.0 - h2 / h)).abs() < 1e-15);
        assert_eq!(t.hsic_total, h);
    }

    #[test]
    fn uninformative_output_rejected() {
        let k = GramMatrix::ones(5);
        let z = random_gram(5, 9, 0.0);
        assert!(matches!(
            indices(&[k], &z),
            Err(Error::NonInformativeOutput(_))
        ));
    }

    #[test]
    fn ranking_ties_by_index() {
        assert_eq!(rank_descending(&[0.2, 0.7, 0.2, 0.9]), vec![3, 1, 0, 2]);
    }

    #[test]
    fn residual_small_cases() {
        let k1 = random_gram(20, 5, 0.5);
        let z = random_gram(20, 6, 0.0);
        assert_eq!(
            decomposition_residual(std::slice::from_ref(&k1), &z).unwrap(),
            0.0
        );
        let five = vec![k1; 5];
        assert!(matches!(
            decomposition_residual(&five, &z),
            Err(Error::EnumerationBudget(5))
        ));
    }

    fn two_point_model(joint: Vec<Vec<f64>>) -> DiscreteJointModel {
        let pu: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
        let ku = discrete_anova_kernel(&[vec![1.0, 0.3], vec![0.3, 1.0]], &pu);
        DiscreteJointModel::new(joint, ku, vec![vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap()
    }

    #[test]
    fn independence_gives_zero() {
        let pu = [0.3, 0.7];
        let pz = [0.6, 0.4];
        let joint = pu
            .iter()
            .map(|a| pz.iter().map(|b| a * b).collect())
            .collect();
        let m = two_point_model(joint);
        for f in [
            PopulationFormula::ThreeTerm,
            PopulationFormula::AnovaSimplified,
        ] {
            assert!(population_hsic_oracle(&m, f).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn identity_coupling_by_hand() {
        // Z = U on two equiprobable points; K is already ANOVA w.r.t. (½, ½):
        // centring k = [[1, .3], [.3, 1]] gives K = [[1.35, .65], [.65, 1.35]].
        let m = two_point_model(vec![vec![0.5, 0.0], vec![0.0, 0.5]]);
        assert!((m.input_kernel[0][0] - 1.35).abs() < 1e-15);
        // E[(K−1) k] = ¼[2·0.35·1 + 2·(−0.35)·0.5] = 0.0875
        let simplified = population_hsic_oracle(&m, PopulationFormula::AnovaSimplified).unwrap();
        let three = population_hsic_oracle(&m, PopulationFormula::ThreeTerm).unwrap();
        assert!((simplified - 0.0875).abs() < 1e-15);
        assert!((three - 0.0875).abs() < 1e-15);
    }

    #[test]
    fn non_anova_kernel_rejected() {
        let m = DiscreteJointModel::new(
            vec![vec![0.5, 0.0], vec![0.0, 0.5]],
            vec![vec![1.0, 0.3], vec![0.3, 1.0]],
            vec![vec![1.0, 0.5], vec![0.5, 1.0]],
        )
        .unwrap();
        assert!(matches!(
            population_hsic_oracle(&m, PopulationFormula::AnovaSimplified),
            Err(Error::NotAnova(_))
        ));
        assert!(population_hsic_oracle(&m, PopulationFormula::ThreeTerm).is_ok());
    }

    #[test]
    fn invalid_tables_rejected() {
        let k = vec![vec![1.0]];
        assert!(DiscreteJointModel::new(vec![vec![0.9]], k.clone(), k.clone()).is_err());
        assert!(DiscreteJointModel::new(
            vec![vec![-0.1, 1.1]],
            k.clone(),
            vec![vec![1.0, 0.0], vec![0.0, 1.0]]
        )
        .is_err());
    }

    #[test]
    fn sampling_follows_joint() {
        let m = two_point_model(vec![vec![0.1, 0.2], vec![0.3, 0.4]]);
        let draws = m.sample(20_000, &mut rng::stream(3, &[]));
        let hits = draws.iter().filter(|d| **d == (1, 1)).count() as f64 / 20_000.0;
        assert!((hits - 0.4).abs() < 0.02);
    }
}
