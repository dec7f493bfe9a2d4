//! JSON experiment configuration. Every field is optional; omitted fields
//! take the defaults of the reference experiment.

use std::path::{Path, PathBuf};

use hedopt::moea::{MoeadParams, MopsoParams, Nsga3Params, VariationParams};
use hedopt::{Algorithm, Bounds, CompartmentState, ModelParams, PolicySpec, ReferencePoint, RunConfig, Scenario, TriggerProblem};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub optimization: OptimizationConfig,
    pub indicators: IndicatorConfig,
    /// Output directory, used unless `--out` is given.
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            optimization: OptimizationConfig::default(),
            indicators: IndicatorConfig::default(),
            output: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub initial: CompartmentState,
    pub params: ModelParams,
    pub t_max: f64,
    pub dt: f64,
    /// Policies active in every simulation regardless of the triggers.
    pub static_policies: Vec<PolicySpec>,
    /// Shape of the social distancing policy; its trigger is a decision variable.
    pub social_distancing: PolicySpec,
    /// Shape of the lockdown policy; its trigger is a decision variable.
    pub lockdown: PolicySpec,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let base = Scenario::default();
        Self {
            initial: base.initial,
            params: base.params,
            t_max: base.t_max,
            dt: base.dt,
            static_policies: Vec::new(),
            social_distancing: PolicySpec::social_distancing(),
            lockdown: PolicySpec::lockdown(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizationConfig {
    pub algorithms: Vec<Algorithm>,
    pub population_size: usize,
    pub max_evaluations: usize,
    pub runs: usize,
    pub bounds: Bounds,
    /// Base seed; per-run seeds are derived from it.
    pub seed: u64,
    pub variation: VariationParams,
    pub nsga3: Nsga3Params,
    pub moead: MoeadParams,
    pub mopso: MopsoParams,
    /// Evaluate offspring within a run in parallel. Off by default.
    pub parallel_evaluations: bool,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        let run = RunConfig::default();
        Self {
            algorithms: Algorithm::ALL.to_vec(),
            population_size: run.population_size,
            max_evaluations: run.max_evaluations,
            runs: 36,
            bounds: Bounds::default(),
            seed: 1,
            variation: run.variation,
            nsga3: run.nsga3,
            moead: run.moead,
            mopso: run.mopso,
            parallel_evaluations: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndicatorConfig {
    /// Hypervolume reference point (the bounds of the combined front).
    pub reference_point: ReferencePoint,
    pub alpha: f64,
    /// Reference front for IGD and spread. Defaults to the campaign's
    /// combined front.
    pub reference_front: Option<PathBuf>,
}

impl Default for IndicatorConfig {
    fn default() -> Self {
        Self {
            reference_point: ReferencePoint::default(),
            alpha: 0.01,
            reference_front: None,
        }
    }
}

impl ExperimentConfig {
    /// Scenario with only the static policies.
    pub fn base_scenario(&self) -> Scenario {
        let s = &self.scenario;
        Scenario {
            initial: s.initial,
            params: s.params,
            policies: s.static_policies.clone(),
            t_max: s.t_max,
            dt: s.dt,
        }
    }

    pub fn problem(&self) -> Result<TriggerProblem> {
        Ok(TriggerProblem::new(
            self.base_scenario(),
            self.scenario.social_distancing,
            self.scenario.lockdown,
            self.optimization.bounds,
        )?)
    }

    pub fn run_config(&self, algorithm: Algorithm, seed: u64) -> RunConfig {
        let o = &self.optimization;
        RunConfig {
            algorithm,
            population_size: o.population_size,
            max_evaluations: o.max_evaluations,
            seed,
            variation: o.variation,
            nsga3: o.nsga3,
            moead: o.moead,
            mopso: o.mopso,
            parallel_evaluations: o.parallel_evaluations,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(CliError::Validation(m));
        self.base_scenario().validate()?;
        self.scenario.social_distancing.validate()?;
        self.scenario.lockdown.validate()?;
        let o = &self.optimization;
        let b = o.bounds;
        if !(b.lower.is_finite() && b.upper.is_finite() && b.lower < b.upper) {
            return invalid(format!(
                "invalid optimization.bounds: lower ({}) must be < upper ({})",
                b.lower, b.upper
            ));
        }
        if o.runs < 1 {
            return invalid("invalid optimization.runs: must be >= 1".into());
        }
        if o.algorithms.is_empty() {
            return invalid("invalid optimization.algorithms: list is empty".into());
        }
        for (k, a) in o.algorithms.iter().enumerate() {
            if o.algorithms[..k].contains(a) {
                return invalid(format!("invalid optimization.algorithms: {a} listed twice"));
            }
        }
        self.run_config(Algorithm::Nsga2, 0).validate()?;
        let r = self.indicators.reference_point;
        if !(r.r1.is_finite() && r.r2.is_finite() && r.r1 > 0.0 && r.r2 > 0.0) {
            return invalid(format!(
                "invalid indicators.reference_point: ({}, {}) must be finite and positive",
                r.r1, r.r2
            ));
        }
        let alpha = self.indicators.alpha;
        if !(alpha > 0.0 && alpha < 1.0) {
            return invalid(format!("invalid indicators.alpha: {alpha} is outside (0, 1)"));
        }
        Ok(())
    }
}

/// Parses and validates a configuration. Parse errors carry the JSON path of
/// the offending field and the line and column.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path.is_empty() || path == "." {
            CliError::Validation(format!("config parse error: {inner}"))
        } else {
            CliError::Validation(format!("config parse error at {path}: {inner}"))
        }
    })?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text).map_err(|e| match e {
        CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        assert_eq!(parse_config("{}").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn defaults_match_reference_experiment() {
        let c = ExperimentConfig::default();
        assert_eq!(c.optimization.population_size, 100);
        assert_eq!(c.optimization.max_evaluations, 4000);
        assert_eq!(c.optimization.runs, 36);
        assert_eq!(c.optimization.algorithms.len(), 4);
        assert_eq!((c.optimization.bounds.lower, c.optimization.bounds.upper), (0.0, 100.0));
        assert_eq!(c.scenario.params.pandemic.c_r, 10.0);
        assert_eq!(c.scenario.initial.s, 0.98);
        assert_eq!(c.indicators.reference_point, ReferencePoint::new(0.4223, 0.5752));
    }

    #[test]
    fn probability_out_of_range_names_field() {
        let err = parse_config(r#"{"scenario": {"params": {"pandemic": {"t_p": 1.5}}}}"#).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("t_p") && msg.contains("[0, 1]"), "{msg}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn unknown_and_mistyped_fields_are_located() {
        let msg = parse_config(r#"{"optimization": {"runz": 3}}"#).unwrap_err().to_string();
        assert!(msg.contains("runz") && msg.contains("line 1"), "{msg}");
        let msg = parse_config("{\n  \"optimization\": {\"runs\": \"many\"}\n}").unwrap_err().to_string();
        assert!(msg.contains("optimization.runs") && msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn invariants_are_checked() {
        for (text, needle) in [
            (r#"{"optimization": {"runs": 0}}"#, "runs"),
            (r#"{"optimization": {"bounds": {"lower": 5, "upper": 5}}}"#, "bounds"),
            (r#"{"optimization": {"algorithms": ["nsga2", "nsga2"]}}"#, "twice"),
            (r#"{"optimization": {"algorithms": ["spea2"]}}"#, "spea2"),
            (r#"{"indicators": {"alpha": 0}}"#, "alpha"),
        ] {
            let msg = parse_config(text).unwrap_err().to_string();
            assert!(msg.contains(needle), "{text}: {msg}");
        }
    }

    #[test]
    fn round_trip() {
        let mut c = ExperimentConfig::default();
        c.optimization.runs = 3;
        c.optimization.algorithms = vec![Algorithm::Mopso, Algorithm::Nsga2];
        c.scenario.params.pandemic.c_r = 7.5;
        c.indicators.reference_front = Some(PathBuf::from("ref.csv"));
        let text = serde_json::to_string_pretty(&c).unwrap();
        assert_eq!(parse_config(&text).unwrap(), c);
        let default_text = serde_json::to_string(&ExperimentConfig::default()).unwrap();
        assert_eq!(parse_config(&default_text).unwrap(), ExperimentConfig::default());
    }
}
