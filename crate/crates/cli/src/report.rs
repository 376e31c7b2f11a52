//! The run report: one self-describing JSON document per run, embedding the
//! fully resolved configuration, every diagnostic the pipeline produced, and
//! the artifact list. Runs with the same config and seed produce identical
//! reports except for the `timestamp` field.

use crate::config::RunConfig;
use iann_core::decompose::{GroupingResult, LevelDiagnostics, OrderingResult, PairError};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct Report {
    /// Seconds since the Unix epoch; the one field excluded from
    /// reproducibility comparisons.
    pub timestamp: u64,
    pub tool: ToolInfo,
    pub command: String,
    pub config: RunConfig,
    pub function: FunctionInfo,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ordering: Option<OrderingReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grouping: Option<GroupingReport>,
    /// Group hierarchies re-ordered under a lead-input constraint, one per
    /// requested lead input.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub constrained_orderings: Vec<ConstrainedOrdering>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_level_sweep: Option<Vec<SweepEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linear_baseline_r2: Option<f64>,
    pub notes: Vec<String>,
    pub artifacts: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl Default for ToolInfo {
    fn default() -> Self {
        Self {
            name: "iann",
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct FunctionInfo {
    pub name: String,
    pub dimension: usize,
    pub domain: Vec<(f64, f64)>,
    pub gradient_mode: String,
}

#[derive(Debug, Serialize)]
pub struct CandidateError {
    /// 1-based input (or group) index.
    pub candidate: usize,
    pub error: f64,
}

#[derive(Debug, Serialize)]
pub struct LevelReport {
    pub level: usize,
    /// Empty when the level was forced by a lead constraint.
    pub candidates: Vec<CandidateError>,
    pub chosen: usize,
}

fn levels_to_report(levels: &[LevelDiagnostics]) -> Vec<LevelReport> {
    levels
        .iter()
        .map(|l| LevelReport {
            level: l.level,
            candidates: l
                .candidates
                .iter()
                .map(|&(c, e)| CandidateError {
                    candidate: c + 1,
                    error: e,
                })
                .collect(),
            chosen: l.chosen + 1,
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct OrderingReport {
    /// 1-based permutation `j_1..j_d`.
    pub permutation: Vec<usize>,
    pub levels: Vec<LevelReport>,
}

impl From<&OrderingResult> for OrderingReport {
    fn from(o: &OrderingResult) -> Self {
        Self {
            permutation: o.permutation.iter().map(|j| j + 1).collect(),
            levels: levels_to_report(&o.levels),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct PairErrorReport {
    /// 1-based input pair.
    pub inputs: (usize, usize),
    pub error: f64,
}

#[derive(Debug, Serialize)]
pub struct GroupingReport {
    pub p: usize,
    /// Canonical groups, 1-based inputs.
    pub groups: Vec<Vec<usize>>,
    /// Unit-norm coefficient estimates aligned with `groups`.
    pub beta: Vec<Vec<f64>>,
    /// Groups in hierarchy order.
    pub ordered_groups: Vec<Vec<usize>>,
    pub levels: Vec<LevelReport>,
    pub pair_errors: Vec<PairErrorReport>,
    /// 1-based near-inert inputs.
    pub negligible: Vec<usize>,
    pub warnings: Vec<String>,
}

impl From<&GroupingResult> for GroupingReport {
    fn from(g: &GroupingResult) -> Self {
        let one = |v: &[usize]| v.iter().map(|x| x + 1).collect::<Vec<_>>();
        Self {
            p: g.p(),
            groups: g.groups.iter().map(|grp| one(grp)).collect(),
            beta: g.beta.clone(),
            ordered_groups: g.ordered_groups().iter().map(|grp| one(grp)).collect(),
            levels: levels_to_report(&g.levels),
            pair_errors: g
                .pair_errors
                .iter()
                .map(|PairError { inputs, error }| PairErrorReport {
                    inputs: (inputs.0 + 1, inputs.1 + 1),
                    error: *error,
                })
                .collect(),
            negligible: one(&g.negligible),
            warnings: g.warnings.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ConstrainedOrdering {
    /// 1-based lead input.
    pub must_lead: usize,
    pub ordered_groups: Vec<Vec<usize>>,
    pub levels: Vec<LevelReport>,
}

#[derive(Debug, Serialize)]
pub struct SweepEntry {
    /// 1-based singled-out input.
    pub input: usize,
    pub test_r2: f64,
}

#[derive(Debug, Serialize)]
pub struct FitReport {
    pub structure: String,
    pub test_r2: f64,
    pub train_mse: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val_mse: Option<f64>,
    pub epochs_run: usize,
    pub early_stopped: bool,
    pub n_parameters: usize,
    /// Trained combination weights (dash), aligned with the canonical
    /// groups.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trained_beta: Option<Vec<Vec<f64>>>,
}

impl Report {
    pub fn new(command: &str, config: RunConfig, function: FunctionInfo) -> Self {
        Self {
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            tool: ToolInfo::default(),
            command: command.into(),
            config,
            function,
            ordering: None,
            grouping: None,
            constrained_orderings: Vec::new(),
            first_level_sweep: None,
            fit: None,
            linear_baseline_r2: None,
            notes: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
