//! Seeded experiment driver: configs, per-trial records, aggregation and
//! report files.
//!
//! Every trial draws from its own stream seeded by
//! `derive_seed(master, [arm, m, s, trial])`, and trials are collected in a
//! fixed order, so the worker count never changes a report.

mod emit;
mod studies;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::DecayFit;
use crate::error::{Error, Result};
use crate::sampling::SamplingPattern;
use crate::solver::{SolverConfig, TraceRow};
use crate::transforms::{NormTag, Wavelet};

pub use emit::{emit_report, svg_log_comparison, svg_success_curves, OutputFormat};
pub use studies::{
    build_operators, run, run_certificate, run_coherence, run_eit_demo, run_phase, run_recover,
    run_replacement_check, run_sample, Operators,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyTag {
    Phase,
    Recover,
    Coherence,
    EitDemo,
    Certificate,
    Sample,
    ReplacementCheck,
}

impl StudyTag {
    pub fn name(self) -> &'static str {
        match self {
            StudyTag::Phase => "phase",
            StudyTag::Recover => "recover",
            StudyTag::Coherence => "coherence",
            StudyTag::EitDemo => "eit_demo",
            StudyTag::Certificate => "certificate",
            StudyTag::Sample => "sample",
            StudyTag::ReplacementCheck => "replacement_check",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementKind {
    Fourier,
    Identity,
    /// The perturbed Fourier frame of [`crate::transforms::build_cgo_like`].
    Cgo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SparsifierKind {
    Dirac,
    Haar,
    Db2,
    Db3,
    Db4,
}

impl SparsifierKind {
    fn wavelet(self) -> Option<Wavelet> {
        match self {
            SparsifierKind::Dirac => None,
            SparsifierKind::Haar => Some(Wavelet::Haar),
            SparsifierKind::Db2 => Some(Wavelet::Db2),
            SparsifierKind::Db3 => Some(Wavelet::Db3),
            SparsifierKind::Db4 => Some(Wavelet::Db4),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingKind {
    Uniform,
    VariableDensity,
    Bernoulli,
}

impl SamplingKind {
    pub fn name(self) -> &'static str {
        match self {
            SamplingKind::Uniform => "uniform",
            SamplingKind::VariableDensity => "variable_density",
            SamplingKind::Bernoulli => "bernoulli",
        }
    }

    fn id(self) -> u64 {
        match self {
            SamplingKind::Uniform => 1,
            SamplingKind::VariableDensity => 2,
            SamplingKind::Bernoulli => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Geometry {
    /// Grid points per axis.
    pub grid_n: usize,
    pub dim: usize,
    pub measurement: MeasurementKind,
    pub sparsifier: SparsifierKind,
    /// Wavelet levels; `None` means as many as the grid allows.
    pub levels: Option<usize>,
    /// Frequency ordering of the Fourier rows.
    pub norm: NormTag,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            grid_n: 256,
            dim: 1,
            measurement: MeasurementKind::Fourier,
            sparsifier: SparsifierKind::Dirac,
            levels: None,
            norm: NormTag::Euclidean,
        }
    }
}

/// Universal constants the theory leaves unspecified. All default to 1
/// except `c1`, which defaults to the fitted envelope `max_l sqrt(l) w_l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Constants {
    pub c: f64,
    pub c_prime: f64,
    pub c_second: f64,
    pub c1: Option<f64>,
    /// Probability parameter `omega` in the error bound.
    pub omega: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            c: 1.0,
            c_prime: 1.0,
            c_second: 1.0,
            c1: None,
            omega: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CgoSettings {
    /// `None` means `84 sqrt(N)` with `N` the number of measurement rows.
    pub lambda: Option<f64>,
    pub decay_b: f64,
    pub terms: usize,
    pub seed: u64,
}

impl Default for CgoSettings {
    fn default() -> Self {
        CgoSettings {
            lambda: None,
            decay_b: 1.0,
            terms: 6,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertificateSettings {
    pub theta: f64,
    /// `None` means `64 l`.
    pub max_total_resamples: Option<usize>,
}

impl Default for CertificateSettings {
    fn default() -> Self {
        CertificateSettings {
            theta: 0.5,
            max_total_resamples: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoherenceSettings {
    pub alphas: Vec<f64>,
    /// Truncation `N` for `M~`; `None` means a quarter of the rows.
    pub balancing_n: Option<usize>,
    /// `M` for `M~`; `None` falls back to `support_limit`, then an eighth of
    /// the coefficients.
    pub m: Option<usize>,
    /// `None` means all coefficients.
    pub j_max: Option<usize>,
}

impl Default for CoherenceSettings {
    fn default() -> Self {
        CoherenceSettings {
            alphas: vec![0.25, 0.5, 1.0],
            balancing_n: None,
            m: None,
            j_max: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSettings {
    /// Length of the log-scheme / virtual-frame comparison.
    pub log_count: usize,
}

impl Default for SampleSettings {
    fn default() -> Self {
        SampleSettings { log_count: 200 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub study: StudyTag,
    pub geometry: Geometry,
    pub sparsity: Vec<usize>,
    pub budgets: Vec<usize>,
    /// Supports are drawn from the first `support_limit` coefficients.
    pub support_limit: Option<usize>,
    pub schemes: Vec<SamplingKind>,
    pub trials: usize,
    pub seed: u64,
    /// Noise level `epsilon` (in the scheme's data norm).
    pub noise: f64,
    /// Relative l2 error at or below which a trial counts as a recovery.
    pub success_threshold: f64,
    pub solver: SolverConfig,
    pub constants: Constants,
    pub cgo: CgoSettings,
    pub certificate: CertificateSettings,
    pub coherence: CoherenceSettings,
    pub sample: SampleSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            study: StudyTag::Phase,
            geometry: Geometry::default(),
            sparsity: vec![5],
            budgets: vec![60],
            support_limit: None,
            schemes: vec![SamplingKind::Uniform],
            trials: 20,
            seed: 0,
            noise: 0.0,
            success_threshold: 1e-4,
            solver: SolverConfig::default(),
            constants: Constants::default(),
            cgo: CgoSettings::default(),
            certificate: CertificateSettings::default(),
            coherence: CoherenceSettings::default(),
            sample: SampleSettings::default(),
        }
    }
}

fn config_error(pointer: &str, message: impl Into<String>) -> Error {
    Error::Config {
        pointer: pointer.to_string(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// Parses JSON; schema violations carry a JSON pointer to the field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let pointer = json_pointer(e.path());
            config_error(&pointer, e.inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        if g.grid_n < 2 || g.dim == 0 {
            return Err(config_error("/geometry/grid_n", "grid_n >= 2 and dim >= 1 required"));
        }
        if g.sparsifier != SparsifierKind::Dirac && !g.grid_n.is_power_of_two() {
            return Err(config_error("/geometry/grid_n", "wavelets need a power-of-two grid"));
        }
        if self.trials == 0 {
            return Err(config_error("/trials", "trials must be at least 1"));
        }
        if self.sparsity.is_empty() {
            return Err(config_error("/sparsity", "sparsity grid is empty"));
        }
        if self.budgets.is_empty() || self.budgets.contains(&0) {
            return Err(config_error("/budgets", "budgets must be nonempty and positive"));
        }
        if self.schemes.is_empty() {
            return Err(config_error("/schemes", "at least one sampling scheme is required"));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(config_error("/noise", "noise must be finite and nonnegative"));
        }
        if !(self.success_threshold > 0.0) {
            return Err(config_error("/success_threshold", "must be positive"));
        }
        if self.support_limit == Some(0) {
            return Err(config_error("/support_limit", "must be positive"));
        }
        if !(self.certificate.theta > 0.0 && self.certificate.theta <= 1.0) {
            return Err(config_error("/certificate/theta", "theta must lie in (0, 1]"));
        }
        if self.coherence.alphas.iter().any(|&a| !(a > 0.0 && a <= 1.0)) {
            return Err(config_error("/coherence/alphas", "every alpha must lie in (0, 1]"));
        }
        self.solver
            .validate()
            .map_err(|e| config_error("/solver", e.to_string()))
    }
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Sampling arm, e.g. `uniform` or `cgo:variable_density`.
    pub arm: String,
    pub m: usize,
    pub s: usize,
    pub trial: usize,
    pub seed: u64,
    /// Relative l2 error; `None` when the trial produced no estimate.
    pub error: Option<f64>,
    pub success: bool,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub arm: String,
    pub m: usize,
    pub s: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub median_error: Option<f64>,
    /// Normal-approximation 95% half-width of the success rate.
    pub half_width: f64,
}

/// Groups trials by `(arm, s, m)` in sorted order.
pub fn aggregate(trials: &[TrialRecord]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(String, usize, usize), Vec<&TrialRecord>> = BTreeMap::new();
    for t in trials {
        groups.entry((t.arm.clone(), t.s, t.m)).or_default().push(t);
    }
    groups
        .into_iter()
        .map(|((arm, s, m), rows)| {
            let n = rows.len();
            let successes = rows.iter().filter(|r| r.success).count();
            let rate = successes as f64 / n as f64;
            let mut errs: Vec<f64> = rows.iter().filter_map(|r| r.error).collect();
            errs.sort_by(f64::total_cmp);
            AggregateRow {
                arm,
                m,
                s,
                trials: n,
                successes,
                success_rate: rate,
                median_error: median(&errs),
                half_width: 1.96 * (rate * (1.0 - rate) / n as f64).sqrt(),
            }
        })
        .collect()
}

fn median(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some(0.5 * (sorted[n / 2 - 1] + sorted[n / 2])),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TildeMRow {
    pub alpha: f64,
    pub value: usize,
    pub settled: bool,
    /// `C1^2 k1 N / alpha^2`.
    pub bound: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSnapshot {
    pub mu: Option<f64>,
    pub kappa1: Option<f64>,
    pub kappa2: Option<f64>,
    pub weight_norm: Option<f64>,
    pub fit: Option<DecayFit>,
    /// Whether the fit supports a decay claim (slope below -0.1).
    pub decay_detected: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tilde_m: Vec<TildeMRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub trial: usize,
    pub delta: Vec<usize>,
    pub found: bool,
    pub all_satisfied: bool,
    pub values: Option<[f64; 6]>,
    pub thresholds: Option<[f64; 6]>,
    pub resamples: Vec<usize>,
}

/// Log-scheme frequencies next to the virtual-frame frequencies, row by row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogComparison {
    pub n: usize,
    pub c1: f64,
    pub log_scheme: Vec<i64>,
    pub virtual_frame: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// The fully resolved config; enough to replay the run.
    pub config: ExperimentConfig,
    pub trials: Vec<TrialRecord>,
    pub aggregates: Vec<AggregateRow>,
    pub diagnostics: DiagnosticsSnapshot,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub certificates: Vec<CertificateRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub patterns: Vec<SamplingPattern>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_comparison: Option<LogComparison>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceRow>,
    /// Study-specific scalars (operator bounds, minimum ratios, ...).
    #[serde(default)]
    pub extras: BTreeMap<String, f64>,
}

impl ExperimentReport {
    pub fn new(config: ExperimentConfig) -> Self {
        ExperimentReport {
            config,
            trials: Vec::new(),
            aggregates: Vec::new(),
            diagnostics: DiagnosticsSnapshot::default(),
            certificates: Vec::new(),
            patterns: Vec::new(),
            log_comparison: None,
            trace: Vec::new(),
            extras: BTreeMap::new(),
        }
    }

    pub fn set_trials(&mut self, trials: Vec<TrialRecord>) {
        self.aggregates = aggregate(&trials);
        self.trials = trials;
    }

    pub fn success_rate(&self, arm: &str) -> Option<f64> {
        let rows: Vec<&TrialRecord> = self.trials.iter().filter(|t| t.arm == arm).collect();
        if rows.is_empty() {
            return None;
        }
        Some(rows.iter().filter(|t| t.success).count() as f64 / rows.len() as f64)
    }

    pub fn overall_success_rate(&self) -> Option<f64> {
        if self.trials.is_empty() {
            return None;
        }
        Some(self.trials.iter().filter(|t| t.success).count() as f64 / self.trials.len() as f64)
    }

    pub fn all_converged(&self) -> bool {
        self.trials.iter().all(|t| t.converged)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(arm: &str, m: usize, err: f64, ok: bool) -> TrialRecord {
        TrialRecord {
            arm: arm.into(),
            m,
            s: 2,
            trial: 0,
            seed: 0,
            error: Some(err),
            success: ok,
            iterations: 10,
            converged: true,
        }
    }

    #[test]
    fn aggregate_groups_and_medians() {
        let t = vec![
            rec("uniform", 8, 0.3, false),
            rec("uniform", 8, 0.1, true),
            rec("uniform", 4, 0.5, false),
            rec("uniform", 8, 0.2, true),
        ];
        let a = aggregate(&t);
        assert_eq!(a.len(), 2);
        assert_eq!(a[0].m, 4);
        assert_eq!(a[1].successes, 2);
        assert_eq!(a[1].median_error, Some(0.2));
        assert!((a[1].success_rate - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_aggregate() {
        assert!(aggregate(&[]).is_empty());
    }

    #[test]
    fn config_defaults_and_pointer_errors() {
        let c = ExperimentConfig::from_json(r#"{"study": "phase"}"#).unwrap();
        assert_eq!(c.geometry.grid_n, 256);
        match ExperimentConfig::from_json(r#"{"geometry": {"grid_n": "x"}}"#) {
            Err(Error::Config { pointer, .. }) => assert_eq!(pointer, "/geometry/grid_n"),
            other => panic!("{other:?}"),
        }
        match ExperimentConfig::from_json(r#"{"schemes": ["uniform", "nope"]}"#) {
            Err(Error::Config { pointer, .. }) => assert_eq!(pointer, "/schemes/1"),
            other => panic!("{other:?}"),
        }
        match ExperimentConfig::from_json(r#"{"trials": 0}"#) {
            Err(Error::Config { pointer, .. }) => assert_eq!(pointer, "/trials"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            ExperimentConfig::from_json(r#"{"bogus": 1}"#),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn config_round_trip() {
        let c = ExperimentConfig {
            support_limit: Some(32),
            schemes: vec![SamplingKind::Uniform, SamplingKind::VariableDensity],
            ..ExperimentConfig::default()
        };
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&s).unwrap(), c);
    }
}
