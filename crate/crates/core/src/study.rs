//! Replicated sensitivity studies driven by a declarative config.
//!
//! Each replicate runs: fresh input sample → quantile transform → input and
//! output grams → indices → permutation p-values → labels. Replicate `r`
//! draws its inputs from stream `(seed, r, 0)`, its inner points from
//! `(seed, r, 1)` and the permutations for input `i` from `(seed, r, 2, i, b)`,
//! so results are independent of thread count and adding replicates never
//! changes earlier ones.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::sample_domain;
use crate::error::{Error, Result};
use crate::gram::GramMatrix;
use crate::hsic::indices;
use crate::kernels::{
    bandwidth_heuristic, empirical_std, quantile_transform, set_kernel_gram, AnovaKernel,
    InputKernelFamily, InputKernelSpec, MarginalDistribution, OutputKernelSpec,
};
use crate::models::{ModelKind, OscillatorSettings, SetModel};
use crate::riskbench::{self, Estimator};
use crate::rng;
use crate::screening::{permutation_pvalue, screen_and_rank, Label, DEFAULT_PERMUTATIONS};

/// Lengthscale of the transformed input kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LengthscaleRule {
    /// Sample standard deviation of the uniform-scale input column.
    EmpiricalStd,
    Fixed(f64),
}

/// Bandwidth `σ²` of the set kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandwidthRule {
    /// Mean estimated measure of the pairwise symmetric differences.
    Heuristic,
    Fixed(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NumberOrName {
    Number(f64),
    Name(String),
}

macro_rules! rule_serde {
    ($ty:ident, $name:literal, $named:ident) => {
        impl Serialize for $ty {
            fn serialize<S: serde::Serializer>(
                &self,
                s: S,
            ) -> std::result::Result<S::Ok, S::Error> {
                match self {
                    $ty::$named => s.serialize_str($name),
                    $ty::Fixed(v) => s.serialize_f64(*v),
                }
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: serde::Deserializer<'de>>(
                d: D,
            ) -> std::result::Result<Self, D::Error> {
                match NumberOrName::deserialize(d)? {
                    NumberOrName::Number(v) if v > 0.0 && v.is_finite() => Ok($ty::Fixed(v)),
                    NumberOrName::Number(v) => {
                        Err(serde::de::Error::custom(format!("{v} must be positive")))
                    }
                    NumberOrName::Name(s) if s == $name => Ok($ty::$named),
                    NumberOrName::Name(s) => Err(serde::de::Error::custom(format!(
                        "expected `{}` or a positive number, got `{s}`",
                        $name
                    ))),
                }
            }
        }
    };
}

rule_serde!(LengthscaleRule, "std", EmpiricalStd);
rule_serde!(BandwidthRule, "heuristic", Heuristic);

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

/// Settings of the `risk` benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RiskConfig {
    pub n_ref: usize,
    pub m_ref: usize,
    /// Sizes with `n = m`.
    pub grid: Vec<usize>,
    pub replicates: usize,
    pub estimators: Vec<Estimator>,
    pub budget_cap: u64,
}

impl Default for RiskConfig {
    fn default() -> Self {
        Self {
            n_ref: 1000,
            m_ref: 1000,
            grid: riskbench::default_grid(1000)
                .into_iter()
                .map(|(n, _)| n)
                .collect(),
            replicates: 100,
            estimators: vec![Estimator::Shared],
            budget_cap: riskbench::DEFAULT_BUDGET_CAP,
        }
    }
}

fn default_alpha() -> f64 {
    0.05
}
fn default_permutations() -> usize {
    DEFAULT_PERMUTATIONS
}
fn default_replicates() -> usize {
    20
}
fn default_nodes() -> usize {
    InputKernelSpec::DEFAULT_NODES
}
fn default_kernel() -> InputKernelFamily {
    InputKernelFamily::Sobolev1
}
fn default_lengthscale() -> LengthscaleRule {
    LengthscaleRule::EmpiricalStd
}
fn default_bandwidth() -> BandwidthRule {
    BandwidthRule::Heuristic
}

/// Full description of a study. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub model: ModelKind,
    /// Overrides the model's default input marginals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marginals: Option<Vec<MarginalDistribution>>,
    pub n: usize,
    pub m: usize,
    #[serde(default = "default_kernel")]
    pub input_kernel: InputKernelFamily,
    #[serde(default = "default_lengthscale")]
    pub lengthscale: LengthscaleRule,
    #[serde(default = "default_nodes")]
    pub quadrature_nodes: usize,
    #[serde(default = "default_bandwidth")]
    pub bandwidth: BandwidthRule,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_permutations")]
    pub permutations: usize,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub oscillator: OscillatorSettings,
    #[serde(default)]
    pub output: OutputSettings,
    #[serde(default)]
    pub risk: RiskConfig,
}

impl StudyConfig {
    /// Config with defaults for everything but the model and sizes.
    pub fn new(model: ModelKind, n: usize, m: usize) -> Self {
        Self {
            model,
            marginals: None,
            n,
            m,
            input_kernel: default_kernel(),
            lengthscale: default_lengthscale(),
            quadrature_nodes: default_nodes(),
            bandwidth: default_bandwidth(),
            alpha: default_alpha(),
            permutations: default_permutations(),
            replicates: default_replicates(),
            master_seed: 0,
            oscillator: OscillatorSettings::default(),
            output: OutputSettings::default(),
            risk: RiskConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n < 2 {
            return fail(format!("n = {} must be at least 2", self.n));
        }
        if self.m < 1 {
            return fail("m must be at least 1".into());
        }
        if self.replicates < 1 {
            return fail("replicates must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail(format!("alpha = {} must lie in (0, 1)", self.alpha));
        }
        if self.permutations < 19 {
            return fail(format!(
                "permutations = {} must be at least 19",
                self.permutations
            ));
        }
        if self.quadrature_nodes < 8 {
            return fail(format!(
                "quadrature_nodes = {} must be at least 8",
                self.quadrature_nodes
            ));
        }
        if let Some(m) = &self.marginals {
            let expected = self.model.build(self.oscillator).marginals().len();
            if m.len() != expected {
                return fail(format!(
                    "{} marginals given, model `{}` has {expected} inputs",
                    m.len(),
                    self.model
                ));
            }
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Results of one completed replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub first_order: Vec<f64>,
    pub total_order: Vec<f64>,
    pub p_values: Vec<f64>,
    pub labels: Vec<Label>,
    pub ranking: Vec<usize>,
    pub hsic_total: f64,
    /// `σ²` per output component.
    pub bandwidths: Vec<f64>,
    /// Input kernel lengthscales actually used.
    pub lengthscales: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ReplicateOutcome {
    Completed(ReplicateResult),
    Failed { diagnostic: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub oracle_calls: u64,
    pub outcome: ReplicateOutcome,
}

impl ReplicateRecord {
    pub fn result(&self) -> Option<&ReplicateResult> {
        match &self.outcome {
            ReplicateOutcome::Completed(r) => Some(r),
            ReplicateOutcome::Failed { .. } => None,
        }
    }
}

/// Five-number summary (linear interpolation between order statistics).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        Some(Self {
            min: v[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputAggregate {
    pub input: usize,
    pub name: String,
    /// Fraction of completed replicates with `p > alpha`.
    pub acceptance_rate: Option<f64>,
    pub first_order: Option<Quartiles>,
    pub total_order: Option<Quartiles>,
    pub p_value: Option<Quartiles>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub software_version: String,
    pub config_hash: String,
    pub master_seed: u64,
    /// Name of the model actually run.
    pub model: String,
    pub config: StudyConfig,
    pub input_names: Vec<String>,
    /// `false` for product output kernels such as `k_set ⊗ k_set`.
    pub output_kernel_characteristic: bool,
    pub failed_replicates: usize,
    pub replicates: Vec<ReplicateRecord>,
    pub aggregates: Vec<InputAggregate>,
}

impl StudyReport {
    pub fn completed(&self) -> impl Iterator<Item = &ReplicateResult> {
        self.replicates.iter().filter_map(ReplicateRecord::result)
    }

    /// Median first-order index per input over completed replicates.
    pub fn median_first_order(&self) -> Vec<Option<f64>> {
        self.aggregates
            .iter()
            .map(|a| a.first_order.map(|q| q.median))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn is_replicate_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::DegenerateBandwidth | Error::NonInformativeOutput(_)
    )
}

fn columns(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let p = rows.first().map_or(0, Vec::len);
    (0..p)
        .map(|j| rows.iter().map(|r| r[j]).collect())
        .collect()
}

/// Output gram from a model's membership tables: product of per-component set grams.
fn output_gram(
    config: &StudyConfig,
    model: &dyn SetModel,
    components: &[crate::domain::MembershipMatrix],
) -> Result<(GramMatrix, Vec<f64>)> {
    let n = components[0].rows();
    let mut gram = GramMatrix::ones(n);
    let mut bandwidths = Vec::with_capacity(components.len());
    for matrix in components {
        let sigma2 = match config.bandwidth {
            BandwidthRule::Heuristic => bandwidth_heuristic(matrix)?.require()?,
            BandwidthRule::Fixed(v) => v,
        };
        let spec = OutputKernelSpec::new(sigma2, model.domain().volume())?;
        gram = gram.hadamard(&set_kernel_gram(matrix, &spec)?)?;
        bandwidths.push(sigma2);
    }
    Ok((gram, bandwidths))
}

fn analyse_replicate(
    config: &StudyConfig,
    model: &dyn SetModel,
    marginals: &[MarginalDistribution],
    r: usize,
) -> Result<ReplicateRecord> {
    let seed = config.master_seed;
    let r64 = r as u64;
    let mut input_rng = rng::stream(seed, &[r64, 0]);
    let raw: Vec<Vec<f64>> = (0..config.n)
        .map(|_| marginals.iter().map(|d| d.sample(&mut input_rng)).collect())
        .collect();
    let points = sample_domain(model.domain(), config.m, &mut rng::stream(seed, &[r64, 1]));
    let memberships = model.memberships(&raw, &points)?;
    let oracle_calls = memberships.oracle_calls;

    let attempt = || -> Result<ReplicateResult> {
        let (out_gram, bandwidths) = output_gram(config, model, &memberships.components)?;
        let uniform = columns(&quantile_transform(&raw, marginals)?);
        let mut lengthscales = Vec::with_capacity(uniform.len());
        let grams: Vec<GramMatrix> = uniform
            .iter()
            .map(|col| {
                let lengthscale = match config.lengthscale {
                    LengthscaleRule::EmpiricalStd => empirical_std(col),
                    LengthscaleRule::Fixed(v) => v,
                };
                lengthscales.push(lengthscale);
                let spec = InputKernelSpec {
                    family: config.input_kernel,
                    lengthscale,
                    quadrature_nodes: config.quadrature_nodes,
                };
                AnovaKernel::new(&spec)?.gram(col)
            })
            .collect::<Result<_>>()?;
        let table = indices(&grams, &out_gram)?;
        let p_values: Vec<f64> = grams
            .par_iter()
            .enumerate()
            .map(|(i, g)| {
                let stream_seed = rng::derive_seed(seed, &[r64, 2, i as u64]);
                permutation_pvalue(g, &out_gram, config.permutations, stream_seed)
                    .map(|t| t.p_value)
            })
            .collect::<Result<_>>()?;
        let screening = screen_and_rank(&table, &p_values, config.alpha)?;
        Ok(ReplicateResult {
            first_order: table.first_order,
            total_order: table.total_order,
            p_values,
            labels: screening.labels,
            ranking: screening.ranking,
            hsic_total: table.hsic_total,
            bandwidths,
            lengthscales: if config.input_kernel == InputKernelFamily::Sobolev1 {
                Vec::new()
            } else {
                lengthscales
            },
        })
    };

    let outcome = match attempt() {
        Ok(result) => ReplicateOutcome::Completed(result),
        Err(e) if is_replicate_failure(&e) => ReplicateOutcome::Failed {
            diagnostic: e.to_string(),
        },
        Err(e) => return Err(e),
    };
    Ok(ReplicateRecord {
        replicate: r,
        oracle_calls,
        outcome,
    })
}

fn aggregate(names: &[String], records: &[ReplicateRecord], alpha: f64) -> Vec<InputAggregate> {
    let done: Vec<&ReplicateResult> = records.iter().filter_map(ReplicateRecord::result).collect();
    names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let pick = |f: fn(&ReplicateResult) -> &Vec<f64>| {
                done.iter().map(|r| f(r)[i]).collect::<Vec<f64>>()
            };
            let p = pick(|r| &r.p_values);
            InputAggregate {
                input: i,
                name: name.clone(),
                acceptance_rate: (!p.is_empty())
                    .then(|| p.iter().filter(|&&v| v > alpha).count() as f64 / p.len() as f64),
                first_order: Quartiles::of(&pick(|r| &r.first_order)),
                total_order: Quartiles::of(&pick(|r| &r.total_order)),
                p_value: Quartiles::of(&p),
            }
        })
        .collect()
}

/// Runs the configured study on the built-in model it names.
pub fn run_study(config: &StudyConfig) -> Result<StudyReport> {
    config.validate()?;
    let model = config.model.build(config.oscillator);
    run_study_with(config, model.as_ref())
}

/// Runs a study on any [`SetModel`]; `config.model` is only echoed in the report.
pub fn run_study_with(config: &StudyConfig, model: &dyn SetModel) -> Result<StudyReport> {
    config.validate()?;
    let marginals = config
        .marginals
        .clone()
        .unwrap_or_else(|| model.marginals());
    let names = model.input_names();
    if marginals.len() != names.len() {
        return Err(Error::Config(format!(
            "{} marginals for {} inputs",
            marginals.len(),
            names.len()
        )));
    }
    let mut records: Vec<ReplicateRecord> = (0..config.replicates)
        .into_par_iter()
        .map(|r| analyse_replicate(config, model, &marginals, r))
        .collect::<Result<_>>()?;
    records.sort_by_key(|r| r.replicate);
    Ok(StudyReport {
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config.hash(),
        master_seed: config.master_seed,
        model: model.name().to_string(),
        config: config.clone(),
        aggregates: aggregate(&names, &records, config.alpha),
        failed_replicates: records.iter().filter(|r| r.result().is_none()).count(),
        input_names: names,
        output_kernel_characteristic: model.output_kernel_characteristic(),
        replicates: records,
    })
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// One row per (replicate, input).
pub fn write_csv<W: std::io::Write>(report: &StudyReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "replicate",
        "input",
        "first_order",
        "total_order",
        "p_value",
        "label",
    ])?;
    for rec in &report.replicates {
        for (i, name) in report.input_names.iter().enumerate() {
            let row = match rec.result() {
                Some(r) => [
                    rec.replicate.to_string(),
                    name.clone(),
                    format_float(r.first_order[i]),
                    format_float(r.total_order[i]),
                    format_float(r.p_values[i]),
                    r.labels[i].as_str().to_string(),
                ],
                None => [
                    rec.replicate.to_string(),
                    name.clone(),
                    String::new(),
                    String::new(),
                    String::new(),
                    "failed".to_string(),
                ],
            };
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFiles {
    pub csv: PathBuf,
    pub json: PathBuf,
}

/// Writes `results.csv` and `report.json` into `dir`, creating it if needed.
pub fn write_outputs(report: &StudyReport, dir: &Path) -> Result<OutputFiles> {
    fs::create_dir_all(dir)?;
    let files = OutputFiles {
        csv: dir.join("results.csv"),
        json: dir.join("report.json"),
    };
    write_csv(report, fs::File::create(&files.csv)?)?;
    fs::write(&files.json, report.to_json()?)?;
    Ok(files)
}

/// Human-readable acceptance rates and index quartiles.
pub fn summary_table(report: &StudyReport) -> String {
    let mut s = String::new();
    let done = report.replicates.len() - report.failed_replicates;
    let _ = writeln!(
        s,
        "model {}  n={} m={}  kernel {}  replicates {} ({} failed)  alpha {}  B={}",
        report.model,
        report.config.n,
        report.config.m,
        report.config.input_kernel,
        report.replicates.len(),
        report.failed_replicates,
        report.config.alpha,
        report.config.permutations,
    );
    if !report.output_kernel_characteristic {
        let _ = writeln!(s, "note: product output kernel, may not be characteristic");
    }
    let _ = writeln!(
        s,
        "{:<6} {:>8} {:>10} {:>10} {:>10} {:>10}",
        "input", "accept%", "S_i q1", "S_i med", "S_i q3", "S_Ti med"
    );
    let fmt = |q: Option<Quartiles>, f: fn(Quartiles) -> f64| {
        q.map_or("-".to_string(), |q| format!("{:.4}", f(q)))
    };
    for a in &report.aggregates {
        let _ = writeln!(
            s,
            "{:<6} {:>8} {:>10} {:>10} {:>10} {:>10}",
            a.name,
            a.acceptance_rate
                .map_or("-".to_string(), |r| format!("{:.0}", 100.0 * r)),
            fmt(a.first_order, |q| q.q1),
            fmt(a.first_order, |q| q.median),
            fmt(a.first_order, |q| q.q3),
            fmt(a.total_order, |q| q.median),
        );
    }
    if done > 0 {
        let medians: Vec<f64> = report
            .median_first_order()
            .into_iter()
            .map(|m| m.unwrap_or(f64::NAN))
            .collect();
        let order = crate::hsic::rank_descending(&medians);
        let names: Vec<&str> = order
            .iter()
            .map(|&i| report.input_names[i].as_str())
            .collect();
        let _ = writeln!(
            s,
            "ranking by median first-order index: {}",
            names.join(" > ")
        );
    }
    s
}
