//! Run configuration: subcommand defaults, then the JSON file, then flags.

use std::path::{Path, PathBuf};

use adiacycle_core::experiments::{default_tf_grid, default_v_grid, RunSettings, SimulationConfig, VScanConfig};
use adiacycle_core::observables::BERRY_SAMPLES;
use adiacycle_core::{InitialCondition, ModelKind, ModelParams, RawFourLevelParams, SweepSpec};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

/// Environment variable that overrides the output directory.
pub const OUT_DIR_ENV: &str = "ADIACYCLE_OUT";

pub const DEFAULT_OUT_DIR: &str = "out";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSettings {
    /// Protocol durations (ns) of the fidelity curve.
    pub tf_values: Vec<f64>,
    /// Duration (ns) of the uncorrected population traces.
    pub trace_t_f: f64,
    pub v_grid: Vec<f64>,
    pub n_peaks: usize,
    pub berry_samples: usize,
    /// Upper bound on rows of a trajectory CSV; longer runs are decimated.
    pub max_rows: usize,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            tf_values: default_tf_grid(),
            trace_t_f: 5000.0,
            v_grid: default_v_grid(),
            n_peaks: 20,
            berry_samples: BERRY_SAMPLES,
            max_rows: 20_001,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Subcommand the configuration was resolved for.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelParams>,
    /// Alternative to `model`: couplings derived from four-level parameters.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_four_level: Option<RawFourLevelParams>,
    pub sweep: SweepSpec,
    pub run: RunSettings,
    pub experiment: ExperimentSettings,
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// Built-in defaults of a subcommand.
    pub fn defaults_for(command: &str) -> Self {
        let mut config = RunConfig {
            command: Some(command.to_string()),
            model: Some(ModelParams::PAPER),
            raw_four_level: None,
            sweep: SweepSpec::default(),
            run: RunSettings::default(),
            experiment: ExperimentSettings::default(),
            output_dir: PathBuf::from(DEFAULT_OUT_DIR),
        };
        match command {
            "cycles" | "fig4" => config.run.n_cycles = 3,
            "fig5" => config.run.initial = InitialCondition::Eigenstate(ModelKind::ThreeLevel.level_1()),
            "fig6" => config.sweep.k = 1,
            "berry" => {
                config.sweep.k = 1;
                config.run.model = ModelKind::Effective;
            }
            _ => {}
        }
        config
    }

    /// Defaults of `command` overlaid with the JSON document `text`.
    pub fn from_json(command: &str, text: &str) -> Result<Self, CliError> {
        let file: Value = serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
        let Value::Object(file_map) = &file else {
            return Err(CliError::Config("configuration must be a JSON object".into()));
        };
        if let Some(Value::String(c)) = file_map.get("command") {
            if c != command {
                return Err(CliError::Config(format!("configuration was resolved for '{c}', not '{command}'")));
            }
        }
        let mut base = serde_json::to_value(Self::defaults_for(command)).expect("defaults serialize");
        if file_map.contains_key("raw_four_level") && !file_map.contains_key("model") {
            base.as_object_mut().unwrap().remove("model");
        }
        merge(&mut base, file);
        let config: RunConfig =
            serde_json::from_value(base).map_err(|e| CliError::Config(format!("configuration: {e}")))?;
        Ok(config)
    }

    pub fn load(command: &str, path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
        Self::from_json(command, &text)
    }

    /// Model parameters, derived from the raw block when one is given.
    pub fn params(&self) -> Result<ModelParams, CliError> {
        match (&self.model, &self.raw_four_level) {
            (Some(_), Some(_)) => Err(CliError::Config("give either 'model' or 'raw_four_level', not both".into())),
            (Some(p), None) => Ok(*p),
            (None, Some(raw)) => ModelParams::from_raw(raw).map_err(CliError::from),
            (None, None) => Ok(ModelParams::PAPER),
        }
    }

    pub fn simulation(&self) -> Result<SimulationConfig, CliError> {
        let config = SimulationConfig { params: self.params()?, sweep: self.sweep, run: self.run };
        config.validate()?;
        Ok(config)
    }

    pub fn v_scan(&self) -> Result<VScanConfig, CliError> {
        Ok(VScanConfig {
            base: self.simulation()?,
            v_grid: self.experiment.v_grid.clone(),
            n_peaks: self.experiment.n_peaks,
            berry_samples: self.experiment.berry_samples,
        })
    }

    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }
}

/// Recursive object merge. Tagged objects (with a `kind` key) and
/// non-objects replace the base value outright.
fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (key, value) in o {
                let tagged = value.as_object().is_some_and(|m| m.contains_key("kind"));
                match b.get_mut(&key) {
                    Some(slot) if !tagged => merge(slot, value),
                    _ => {
                        b.insert(key, value);
                    }
                }
            }
        }
        (slot, value) => *slot = value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use adiacycle_core::SweepProfile;

    #[test]
    fn subcommand_defaults() {
        assert_eq!(RunConfig::defaults_for("fig4").run.n_cycles, 3);
        let berry = RunConfig::defaults_for("berry");
        assert_eq!(berry.run.model, ModelKind::Effective);
        assert_eq!(berry.sweep.k, 1);
    }

    #[test]
    fn partial_blocks_merge_onto_defaults() {
        let c = RunConfig::from_json("propagate", r#"{"sweep": {"k": 2}, "run": {"n_cycles": 2}}"#).unwrap();
        assert_eq!(c.sweep.k, 2);
        assert_eq!(c.sweep.t_f, 50.0);
        assert_eq!(c.run.n_cycles, 2);
        assert_eq!(c.params().unwrap(), ModelParams::PAPER);
    }

    #[test]
    fn tagged_profile_replaces_default() {
        let c = RunConfig::from_json("propagate", r#"{"sweep": {"profile": {"kind": "arctan", "a": 10, "b": 20, "c": 18.6}}}"#)
            .unwrap();
        assert_eq!(c.sweep.profile, SweepProfile::paper_arctan());
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in [r#"{"sweeps": {}}"#, r#"{"sweep": {"kk": 1}}"#, r#"{"run": {"cd": true}}"#, r#"{"model": {"eps_X": 1}}"#] {
            assert!(matches!(RunConfig::from_json("propagate", text), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn raw_block_replaces_model() {
        let text = r#"{"raw_four_level": {"delta_c": 30, "Delta_so": 5, "Omega_c": 4, "Omega_p": 0.2, "alpha": 0.6, "beta": 0.3}}"#;
        let c = RunConfig::from_json("propagate", text).unwrap();
        assert!(c.model.is_none());
        assert!((c.params().unwrap().eps_s - 0.3f64.powi(2) * 16.0 / 140.0).abs() < 1e-15);
        let both = r#"{"model": {"eps_S": 0, "eps_T": -4, "omega_1S": 0.1, "omega_ST": 0, "omega_1T_abs": 0.04},
                       "raw_four_level": {"delta_c": 30, "Delta_so": 5, "Omega_c": 4, "Omega_p": 0.2, "alpha": 0.6, "beta": 0.3}}"#;
        assert!(RunConfig::from_json("propagate", both).unwrap().params().is_err());
    }

    #[test]
    fn command_mismatch_rejected() {
        assert!(RunConfig::from_json("fig4", r#"{"command": "fig6"}"#).is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = RunConfig::from_json("fig6", r#"{"sweep": {"v": -2.5}}"#).unwrap();
        let again = RunConfig::from_json("fig6", &c.to_pretty_json()).unwrap();
        assert_eq!(c, again);
    }
}
