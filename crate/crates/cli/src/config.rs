//! Run configuration: a single JSON document (plus flag overrides) that
//! pins every knob of a run, echoed verbatim into the report so results can
//! be reproduced from the report alone.

use iann_core::blackbox::FunctionSpec;
use iann_core::iann::{Activation, MlpSpec, TrainOptions};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Structure {
    FirstLevel,
    Ovh,
    Dash,
}

impl Structure {
    pub fn parse(name: &str) -> Option<Structure> {
        match name {
            "first-level" => Some(Structure::FirstLevel),
            "ovh" => Some(Structure::Ovh),
            "dash" => Some(Structure::Dash),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub hidden: Vec<usize>,
    pub activation: String,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        let spec = MlpSpec::default();
        Self {
            hidden: spec.hidden,
            activation: "tanh".into(),
        }
    }
}

impl NetworkConfig {
    pub fn to_spec(&self) -> Result<MlpSpec, String> {
        let activation = match self.activation.as_str() {
            "tanh" => Activation::Tanh,
            "relu" => Activation::Relu,
            "softplus" => Activation::Softplus,
            other => return Err(format!("unknown activation `{other}`")),
        };
        let spec = MlpSpec {
            hidden: self.hidden.clone(),
            activation,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub max_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub validation_fraction: f64,
    pub patience: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let o = TrainOptions::default();
        Self {
            max_epochs: o.max_epochs,
            batch_size: o.batch_size,
            learning_rate: o.learning_rate,
            beta1: o.beta1,
            beta2: o.beta2,
            epsilon: o.epsilon,
            validation_fraction: o.validation_fraction,
            patience: o.patience,
        }
    }
}

impl OptimizerConfig {
    pub fn to_options(&self, seed: u64, threads: usize) -> TrainOptions {
        TrainOptions {
            max_epochs: self.max_epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            validation_fraction: self.validation_fraction,
            patience: self.patience,
            seed,
            threads,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotConfig {
    pub res: usize,
    pub contours: usize,
    pub size_px: u32,
    pub colormap: String,
}

impl Default for PlotConfig {
    fn default() -> Self {
        Self {
            res: 101,
            contours: 15,
            size_px: 640,
            colormap: "cubehelix".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub function: Option<FunctionSpec>,
    pub structure: Structure,
    /// 1-based input to single out (first-level only); absent runs the full
    /// per-input sweep.
    pub singled_out: Option<usize>,
    /// 1-based input whose group must lead the hierarchy (dash only).
    pub must_lead: Option<usize>,
    /// Master seed; every stage draws from named substreams of it.
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub n_slices: usize,
    pub n_line: usize,
    pub n_probe: usize,
    pub ratio_tol: f64,
    pub boundary_fraction: f64,
    /// Candidate designs for the maximin search over the training design.
    pub design_candidates: usize,
    /// Pre-computed input ordering (1-based), skipping the ordering stage.
    pub ordering: Option<Vec<usize>>,
    pub network: NetworkConfig,
    pub optimizer: OptimizerConfig,
    pub plot: PlotConfig,
    pub out_dir: String,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            function: None,
            structure: Structure::Ovh,
            singled_out: None,
            must_lead: None,
            seed: 0,
            n_train: 20_000,
            n_test: 100_000,
            n_slices: 200,
            n_line: 20,
            n_probe: 500,
            ratio_tol: 5e-4,
            boundary_fraction: 0.1,
            design_candidates: 10,
            ordering: None,
            network: NetworkConfig::default(),
            optimizer: OptimizerConfig::default(),
            plot: PlotConfig::default(),
            out_dir: "out".into(),
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.function.is_none() {
            return Err("no function given: set `function` in the config or pass --builtin / --expr".into());
        }
        if self.n_train < 2 || self.n_test < 100 || self.n_slices < 2 || self.n_line < 2 {
            return Err("sample counts too small (n_train >= 2, n_test >= 100, n_slices >= 2, n_line >= 2)".into());
        }
        if !(0.0..=0.5).contains(&self.boundary_fraction) {
            return Err(format!(
                "boundary_fraction must be in [0, 0.5], got {}",
                self.boundary_fraction
            ));
        }
        if self.ratio_tol <= 0.0 {
            return Err("ratio_tol must be positive".into());
        }
        if self.must_lead.is_some() && self.structure == Structure::Ovh {
            return Err("must_lead applies to the dash structure (or first-level), not ovh".into());
        }
        if self.singled_out.is_some() && self.structure != Structure::FirstLevel {
            return Err("singled_out applies to the first-level structure only".into());
        }
        if self.must_lead == Some(0) || self.singled_out == Some(0) {
            return Err("input indices are 1-based".into());
        }
        self.network.to_spec()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_once_a_function_is_set() {
        let mut cfg = RunConfig::default();
        assert!(cfg.validate().is_err(), "missing function must be rejected");
        cfg.function = Some(FunctionSpec::Builtin {
            builtin: "quad5".into(),
        });
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"n_trian": 5}"#).unwrap_err();
        assert!(err.to_string().contains("n_trian"));
    }

    #[test]
    fn structure_consistency_checks() {
        let mut cfg = RunConfig {
            function: Some(FunctionSpec::Builtin {
                builtin: "quad5".into(),
            }),
            ..RunConfig::default()
        };
        cfg.must_lead = Some(2);
        assert!(cfg.validate().is_err(), "must_lead with ovh is inconsistent");
        cfg.structure = Structure::Dash;
        cfg.validate().unwrap();
        cfg.singled_out = Some(1);
        assert!(cfg.validate().is_err(), "singled_out needs first-level");
    }
}
