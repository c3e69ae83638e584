//! Quick self-checks run by `setsa validate`.
//!
//! Each check is small enough to finish in well under a second; the full
//! statistical acceptance runs live in the test suite.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{
    exact_sym_diff_measure, membership_matrix, sample_domain, AnalyticRegion, AxisBox, BoxDomain,
};
use crate::error::Result;
use crate::gram::GramMatrix;
use crate::hsic::{
    decomposition_residual, discrete_anova_kernel, hsic_ustat, population_hsic_oracle,
    DiscreteJointModel, PopulationFormula,
};
use crate::kernels::{AnovaKernel, InputKernelFamily, InputKernelSpec};
use crate::models::{ModelKind, ToyCase};
use crate::rng::{self, StreamRng};
use crate::screening::permutation_pvalue;
use crate::study::{run_study, StudyConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// Random union of up to three boxes in `[0,1]²`.
pub fn random_region(domain: &BoxDomain, rng: &mut StreamRng) -> Result<AnalyticRegion> {
    let count = rng.random_range(1..=3);
    let boxes = (0..count)
        .map(|_| {
            let (lo, hi): (Vec<f64>, Vec<f64>) = (0..domain.dim())
                .map(|d| {
                    let (a, b) = (domain.lower()[d], domain.upper()[d]);
                    let u: f64 = rng.random_range(a..b);
                    let v: f64 = rng.random_range(a..b);
                    (u.min(v), u.max(v))
                })
                .unzip();
            AxisBox::new(lo, hi)
        })
        .collect();
    AnalyticRegion::new(domain.clone(), boxes)
}

/// Trapezoid estimate of `∫₀¹ K(x, y) dy`, split at `y = x` where the kernel has a kink.
pub fn anova_row_integral(kernel: &AnovaKernel, x: f64, panels: usize) -> f64 {
    let trap = |a: f64, b: f64| {
        if b <= a {
            return 0.0;
        }
        let h = (b - a) / panels as f64;
        let inner: f64 = (1..panels).map(|k| kernel.eval(x, a + k as f64 * h)).sum();
        h * (0.5 * kernel.eval(x, a) + inner + 0.5 * kernel.eval(x, b))
    };
    trap(0.0, x) + trap(x, 1.0)
}

fn random_gram(n: usize, rng: &mut StreamRng) -> Result<GramMatrix> {
    let x: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    AnovaKernel::new(&InputKernelSpec::new(InputKernelFamily::AnovaGaussian, 0.3))?.gram(&x)
}

fn set_like_gram(n: usize, rng: &mut StreamRng) -> GramMatrix {
    let z: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    GramMatrix::from_fn(n, |i, j| (-(z[i] - z[j]).abs()).exp())
}

fn geometry(seed: u64) -> Result<Check> {
    let domain = BoxDomain::unit(2)?;
    let m = 4000;
    let mut worst: f64 = 0.0;
    let mut within = 0;
    let trials = 10;
    for t in 0..trials {
        let mut r = rng::stream(seed, &[10, t]);
        let a = random_region(&domain, &mut r)?;
        let b = random_region(&domain, &mut r)?;
        let exact = exact_sym_diff_measure(&a, &b)?;
        let pts = sample_domain(&domain, m, &mut r);
        let rows: Vec<Vec<bool>> = [&a, &b]
            .iter()
            .map(|g| pts.iter().map(|x| g.contains_point(x)).collect())
            .collect();
        let mat = crate::domain::MembershipMatrix::from_rows(&rows, 1.0)?;
        let est = mat.sym_diff_fraction(0, 1)?;
        let se = (exact * (1.0 - exact) / m as f64).sqrt().max(1e-12);
        worst = worst.max((est - exact).abs() / se);
        if (est - exact).abs() <= 4.0 * se {
            within += 1;
        }
    }
    Ok(check(
        "symmetric difference vs exact measure",
        within >= trials - 1,
        format!("{within}/{trials} within 4 SE, worst {worst:.2} SE"),
    ))
}

fn anova_property() -> Result<Check> {
    let mut worst: f64 = 0.0;
    for family in InputKernelFamily::ALL {
        let kernel = AnovaKernel::new(&InputKernelSpec::new(family, 0.3))?;
        for k in 0..=10 {
            let x = k as f64 / 10.0;
            worst = worst.max((anova_row_integral(&kernel, x, 2000) - 1.0).abs());
        }
    }
    Ok(check(
        "ANOVA kernels integrate to one",
        worst < 1e-6,
        format!("max deviation {worst:.2e}"),
    ))
}

fn decomposition(seed: u64) -> Result<Check> {
    let mut worst: f64 = 0.0;
    for t in 0..5 {
        let mut r = rng::stream(seed, &[11, t]);
        let grams = (0..3)
            .map(|_| random_gram(25, &mut r))
            .collect::<Result<Vec<_>>>()?;
        let out = set_like_gram(25, &mut r);
        let refs: Vec<&GramMatrix> = grams.iter().collect();
        let full = hsic_ustat(&crate::gram::product_gram(25, &refs)?, &out)?;
        worst = worst.max(decomposition_residual(&grams, &out)? / full.abs());
    }
    Ok(check(
        "estimator-level ANOVA decomposition",
        worst <= 1e-10,
        format!("max relative residual {worst:.2e}"),
    ))
}

/// Random joint law on `nu × nz` points with an exactly ANOVA input kernel.
///
/// Probabilities are multiples of `2⁻¹⁰` and base-kernel values multiples of
/// `2⁻²⁰`, so every centring sum is exact in `f64` and the tabulated kernel
/// satisfies `Σ_a' P(a') K(a, a') = 1` without rounding. Output kernel is a
/// Laplace kernel on random support points.
pub fn random_anova_joint_model(
    nu: usize,
    nz: usize,
    rng: &mut StreamRng,
) -> Result<DiscreteJointModel> {
    const CELLS: i64 = 1 << 10;
    let raw: Vec<f64> = (0..nu * nz).map(|_| rng.random::<f64>() + 0.02).collect();
    let total: f64 = raw.iter().sum();
    let mut counts: Vec<i64> = raw
        .iter()
        .map(|v| ((v / total * CELLS as f64).floor() as i64).max(1))
        .collect();
    let largest = (0..counts.len()).max_by_key(|&i| counts[i]).unwrap_or(0);
    counts[largest] += CELLS - counts.iter().sum::<i64>();
    let joint: Vec<Vec<f64>> = counts
        .chunks(nz)
        .map(|row| row.iter().map(|&c| c as f64 / CELLS as f64).collect())
        .collect();
    let pu: Vec<f64> = joint.iter().map(|row| row.iter().sum()).collect();

    let quantum = 2f64.powi(20);
    let us: Vec<f64> = (0..nu).map(|_| rng.random()).collect();
    let zs: Vec<f64> = (0..nz).map(|_| rng.random()).collect();
    let theta = rng.random_range(0.1..0.5);
    let base: Vec<Vec<f64>> = us
        .iter()
        .map(|a| {
            us.iter()
                .map(|b| {
                    ((-(a - b).powi(2) / (2.0 * theta * theta)).exp() * quantum).round() / quantum
                })
                .collect()
        })
        .collect();
    let kz: Vec<Vec<f64>> = zs
        .iter()
        .map(|a| zs.iter().map(|b| (-(a - b).abs() / theta).exp()).collect())
        .collect();
    DiscreteJointModel::new(joint, discrete_anova_kernel(&base, &pu), kz)
}

fn population(seed: u64) -> Result<Check> {
    let mut worst: f64 = 0.0;
    for t in 0..5 {
        let mut r = rng::stream(seed, &[12, t]);
        let (nu, nz) = (r.random_range(2..=4), r.random_range(2..=4));
        let model = random_anova_joint_model(nu, nz, &mut r)?;
        let three = population_hsic_oracle(&model, PopulationFormula::ThreeTerm)?;
        let simple = population_hsic_oracle(&model, PopulationFormula::AnovaSimplified)?;
        worst = worst.max((three - simple).abs() / three.abs().max(1e-300));
    }
    Ok(check(
        "population formulas agree",
        worst <= 1e-12,
        format!("max relative gap {worst:.2e}"),
    ))
}

fn pvalue_lattice(seed: u64) -> Result<Check> {
    let mut r = rng::stream(seed, &[13]);
    let k = random_gram(30, &mut r)?;
    let l = set_like_gram(30, &mut r);
    let b = 99;
    let a = permutation_pvalue(&k, &l, b, seed)?;
    let again = permutation_pvalue(&k, &l, b, seed)?;
    let scaled = a.p_value * (b + 1) as f64;
    let ok = a == again
        && (scaled - scaled.round()).abs() < 1e-9
        && (1.0..=(b + 1) as f64).contains(&scaled);
    Ok(check(
        "permutation p-value lattice",
        ok,
        format!("p = {}", a.p_value),
    ))
}

fn toy_dummy(seed: u64) -> Result<Check> {
    let toy = ToyCase::new();
    let mut r = rng::stream(seed, &[14]);
    let pts = sample_domain(crate::domain::RegionOracle::domain(&toy), 200, &mut r);
    let a = vec![vec![1.0, -2.0, -4.0]];
    let b = vec![vec![1.0, -2.0, 4.5]];
    let same = membership_matrix(&toy, &a, &pts)? == membership_matrix(&toy, &b, &pts)?;
    Ok(check("toy membership ignores U3", same, String::new()))
}

fn determinism(seed: u64) -> Result<Check> {
    let mut config = StudyConfig::new(ModelKind::Toy, 30, 30);
    config.replicates = 2;
    config.permutations = 19;
    config.master_seed = seed;
    let a = run_study(&config)?;
    let b = run_study(&config)?;
    let calls_ok = a.replicates.iter().all(|r| r.oracle_calls == 30 * 30);
    Ok(check(
        "study determinism and n*m budget",
        a == b && calls_ok,
        format!("config hash {}", &a.config_hash[..12]),
    ))
}

/// Runs every check; errors abort, failed checks are reported.
pub fn run_suite(seed: u64) -> Result<Vec<Check>> {
    Ok(vec![
        geometry(seed)?,
        anova_property()?,
        decomposition(seed)?,
        population(seed)?,
        pvalue_lattice(seed)?,
        toy_dummy(seed)?,
        determinism(seed)?,
    ])
}
