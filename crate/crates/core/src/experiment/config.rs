use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::descent::{DEFAULT_ENUMERATION_CAP, MAX_FLIP_ORDER};
use crate::effective::Regularizer;
use crate::embedding::{ClusterOptions, EmbeddingConfig};
use crate::quantum::{ControlProblem, SpinConvention, MAX_SITES};

use super::ExperimentError;

/// Everything a run needs. Parsed from TOML; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output: PathBuf,
    #[serde(default)]
    pub problem: ProblemBlock,
    pub sweep: SweepBlock,
    #[serde(default)]
    pub analysis: AnalysisBlock,
    #[serde(default)]
    pub limits: Limits,
}

/// Problem fields shared by every grid point. Duration and bang count come
/// from the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemBlock {
    pub sites: usize,
    pub coupling: f64,
    pub z_field: f64,
    pub field_max: f64,
    pub initial_field: f64,
    pub target_field: f64,
    pub spin_convention: SpinConvention,
}

impl Default for ProblemBlock {
    fn default() -> Self {
        let p = ControlProblem::new(6, 1.0, 1);
        ProblemBlock {
            sites: p.sites,
            coupling: p.coupling,
            z_field: p.z_field,
            field_max: p.field_max,
            initial_field: p.initial_field,
            target_field: p.target_field,
            spin_convention: p.spin_convention,
        }
    }
}

impl ProblemBlock {
    pub fn problem(&self, duration: f64, bangs: usize) -> ControlProblem {
        ControlProblem {
            sites: self.sites,
            coupling: self.coupling,
            z_field: self.z_field,
            field_max: self.field_max,
            initial_field: self.initial_field,
            target_field: self.target_field,
            duration,
            bangs,
            spin_convention: self.spin_convention,
        }
    }
}

/// Durations as an explicit list or an inclusive range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Durations {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Durations {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Durations::List(v) => v.clone(),
            Durations::Range { start, stop, step } => {
                if !(*step > 0.0 && stop >= start) {
                    return Vec::new();
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                // snap to 1e-9 so accumulated steps print cleanly
                (0..count)
                    .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub durations: Durations,
    pub bangs: Vec<usize>,
    #[serde(default = "default_flips")]
    pub flips: Vec<usize>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_flips() -> Vec<usize> {
    vec![1, 2]
}

fn default_samples() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisBlock {
    /// q, f and best fidelity per grid point.
    pub order_parameters: bool,
    /// Keep records within this fraction of the best fidelity for q and f.
    pub fidelity_filter: Option<f64>,
    pub hamming: Option<HammingOptions>,
    pub dos: Option<DosOptions>,
    pub couplings: bool,
    pub fits: Option<FitOptions>,
    pub embedding: Option<EmbeddingOptions>,
    pub complexity: Option<ComplexityOptions>,
}

impl AnalysisBlock {
    /// Some analysis needs the full `2^N_T` table.
    pub fn needs_enumeration(&self) -> bool {
        self.dos.is_some() || self.couplings || self.fits.is_some() || self.complexity.is_some()
    }

    pub fn needs_samples(&self) -> bool {
        self.order_parameters || self.hamming.is_some() || self.embedding.is_some()
    }

    pub fn is_empty(&self) -> bool {
        !self.needs_enumeration() && !self.needs_samples()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HammingOptions {
    pub bins: usize,
}

impl Default for HammingOptions {
    fn default() -> Self {
        HammingOptions { bins: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DosOptions {
    pub bins: usize,
    /// Flip orders of the excitations around the global optimum.
    pub excitation_orders: Vec<usize>,
}

impl Default for DosOptions {
    fn default() -> Self {
        DosOptions {
            bins: 100,
            excitation_orders: vec![1, 2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    pub orders: Vec<usize>,
    pub regularizers: Vec<Regularizer>,
    /// Size of the low-cost manifold, best first.
    pub records: usize,
    pub lambda_points: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            orders: vec![1, 2],
            regularizers: vec![Regularizer::Ridge, Regularizer::Lasso],
            records: 2048,
            lambda_points: 17,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingOptions {
    pub tsne: EmbeddingConfig,
    pub cluster: ClusterOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComplexityOptions {
    pub runs: usize,
}

impl Default for ComplexityOptions {
    fn default() -> Self {
        ComplexityOptions { runs: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Limits {
    /// Largest N_T for which full enumeration is allowed.
    pub enumeration_cap: usize,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            workers: 0,
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates, reporting every violation at once.
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| ExperimentError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, ExperimentError> {
        toml::to_string(self).map_err(|e| ExperimentError::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let mut errs = Vec::new();
        let p = &self.problem;
        if !(2..=MAX_SITES).contains(&p.sites) {
            errs.push(format!(
                "problem.sites must be in 2..={MAX_SITES}, got {}",
                p.sites
            ));
        }
        for (name, v) in [
            ("coupling", p.coupling),
            ("z_field", p.z_field),
            ("field_max", p.field_max),
            ("initial_field", p.initial_field),
            ("target_field", p.target_field),
        ] {
            if !v.is_finite() {
                errs.push(format!("problem.{name} must be finite"));
            }
        }
        if !(p.field_max > 0.0) {
            errs.push(format!(
                "problem.field_max must be positive, got {}",
                p.field_max
            ));
        } else if p.initial_field.abs() > p.field_max || p.target_field.abs() > p.field_max {
            errs.push("problem.initial_field and target_field must lie within ±field_max".into());
        }

        let s = &self.sweep;
        let durations = s.durations.values();
        if durations.is_empty() {
            errs.push("sweep.durations is empty or an invalid range".into());
        }
        if durations.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            errs.push("sweep.durations must be positive and finite".into());
        }
        if s.bangs.is_empty() {
            errs.push("sweep.bangs is empty".into());
        }
        if s.bangs.contains(&0) {
            errs.push("sweep.bangs must be at least 1".into());
        }
        if self.analysis.needs_samples() || self.analysis.complexity.is_some() {
            if s.flips.is_empty() {
                errs.push("sweep.flips is empty".into());
            }
            if s.flips.contains(&0) {
                errs.push("sweep.flips must be at least 1".into());
            }
            if let Some(&k) = s.flips.iter().find(|&&k| k > MAX_FLIP_ORDER) {
                errs.push(format!(
                    "sweep.flips entry {k} exceeds the supported maximum of {MAX_FLIP_ORDER}"
                ));
            }
            if s.samples == 0 {
                errs.push("sweep.samples must be at least 1".into());
            }
        }

        let a = &self.analysis;
        if let Some(f) = a.fidelity_filter {
            if !(f > 0.0 && f <= 1.0) {
                errs.push(format!(
                    "analysis.fidelity_filter must be in (0, 1], got {f}"
                ));
            }
        }
        if let Some(h) = &a.hamming {
            if h.bins == 0 {
                errs.push("analysis.hamming.bins must be at least 1".into());
            }
        }
        if let Some(d) = &a.dos {
            if d.bins == 0 {
                errs.push("analysis.dos.bins must be at least 1".into());
            }
        }
        if let Some(f) = &a.fits {
            if f.orders.is_empty() || f.orders.iter().any(|o| !(1..=3).contains(o)) {
                errs.push("analysis.fits.orders must be a non-empty subset of {1, 2, 3}".into());
            }
            if f.regularizers.is_empty() {
                errs.push("analysis.fits.regularizers is empty".into());
            }
            if f.lambda_points == 0 {
                errs.push("analysis.fits.lambda_points must be at least 1".into());
            }
        }
        if let Some(e) = &a.embedding {
            let t = &e.tsne;
            if !(t.perplexity > 1.0 && (t.perplexity as usize) < s.samples.saturating_sub(1)) {
                errs.push(format!(
                    "analysis.embedding.tsne.perplexity must lie in (1, samples - 1), got {}",
                    t.perplexity
                ));
            }
            if !(t.learning_rate > 0.0) {
                errs.push("analysis.embedding.tsne.learning_rate must be positive".into());
            }
            if t.exaggeration < 1.0 {
                errs.push("analysis.embedding.tsne.exaggeration must be at least 1".into());
            }
            if let Some(c) = e.cluster.cutoff {
                if !(c > 0.0) {
                    errs.push("analysis.embedding.cluster.cutoff must be positive".into());
                }
            }
        }
        if let Some(c) = &a.complexity {
            if c.runs == 0 {
                errs.push("analysis.complexity.runs must be at least 1".into());
            }
        }
        if a.needs_enumeration() {
            let cap = self.limits.enumeration_cap.min(62);
            if let Some(&n) = s.bangs.iter().find(|&&n| n > cap) {
                errs.push(format!(
                    "N_T = {n} exceeds the enumeration cap {cap} required by dos/couplings/fits/complexity"
                ));
            }
        }

        if errs.is_empty() {
            Ok(())
        } else {
            Err(ExperimentError::Invalid(errs))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 1
output = "out"

[sweep]
durations = [0.5, 3.0]
bangs = [10]

[analysis]
order_parameters = true
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.problem.coupling, 1.0);
        assert_eq!(c.problem.z_field, 1.0);
        assert_eq!(c.problem.field_max, 4.0);
        assert_eq!(c.problem.initial_field, -2.0);
        assert_eq!(c.problem.target_field, 2.0);
        assert_eq!(c.sweep.flips, vec![1, 2]);
        assert_eq!(c.sweep.samples, 200);
        assert_eq!(c.limits.enumeration_cap, 24);
    }

    #[test]
    fn round_trip_is_identity() {
        let text = r#"
seed = 9
output = "runs/x"

[problem]
sites = 4
spin_convention = "spin_half"

[sweep]
durations = { start = 0.1, stop = 0.5, step = 0.1 }
bangs = [8, 10]
flips = [2]
samples = 30

[analysis]
order_parameters = true
fidelity_filter = 0.95
couplings = true
hamming = { bins = 20 }
dos = { bins = 40, excitation_orders = [2] }
fits = { orders = [1, 2], regularizers = ["ridge"], records = 100, lambda_points = 5 }
complexity = { runs = 50 }

[analysis.embedding.tsne]
perplexity = 10.0
iterations = 100

[analysis.embedding.cluster]
centers = { count = 2 }
"#;
        let a = ExperimentConfig::parse(text).unwrap();
        let b = ExperimentConfig::parse(&a.to_toml().unwrap()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sweep.durations.values(), vec![0.1, 0.2, 0.3, 0.4, 0.5]);
    }

    #[test]
    fn collects_every_violation() {
        let text = r#"
seed = 1
output = "out"
[problem]
sites = 20
[sweep]
durations = [-1.0]
bangs = [0, 30]
flips = [0]
[analysis]
order_parameters = true
couplings = true
"#;
        let Err(ExperimentError::Invalid(errs)) = ExperimentConfig::parse(text) else {
            panic!("expected validation errors");
        };
        assert!(errs.len() >= 5, "{errs:?}");
        assert!(errs.iter().any(|e| e.contains("enumeration cap")));
        assert!(errs.iter().any(|e| e.contains("flips")));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("bangs = [10]", "bangs = [10]\nbogus = 3");
        assert!(matches!(
            ExperimentConfig::parse(&text),
            Err(ExperimentError::Parse(_))
        ));
    }
}
