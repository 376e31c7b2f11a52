//! Pipeline orchestration shared by the subcommands: order -> group -> fit
//! -> plot -> eval, all randomness flowing from one master seed through
//! named substreams.

use crate::config::{RunConfig, Structure};
use crate::report::{
    FitReport, FunctionInfo, GroupingReport, OrderingReport, Report, SweepEntry,
};
use iann_core::blackbox::{BlackBox, FunctionSpec, GradientMode};
use iann_core::decompose::{
    dash_groups, dash_ordering_constrained, ovh_ordering, GroupingResult, GroupingSettings,
    OrderingResult, ProjectionSettings,
};
use iann_core::iann::{
    dataset_from_design, fit_first_level_all, linear_baseline_r2, model_from_json, model_to_json,
    test_r2, train, Dataset, IannModel, ModelStructure, TrainOptions,
};
use iann_core::numerics::RngStream;
use iann_core::sampling::training_design;
use iann_core::viz::{export_ice_artifact, export_level_artifacts, Colormap, HeatmapOptions};
use std::fmt;
use std::path::Path;

/// Error carrying the process exit code: 2 config, 3 numeric/runtime, 4
/// training divergence.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}

pub fn config_error(message: impl Into<String>) -> CliError {
    CliError {
        code: 2,
        message: message.into(),
    }
}

pub fn numeric_error(message: impl fmt::Display) -> CliError {
    CliError {
        code: 3,
        message: message.to_string(),
    }
}

fn train_error(e: iann_core::iann::IannError) -> CliError {
    let code = match &e {
        iann_core::iann::IannError::Divergence { .. } => 4,
        _ => 3,
    };
    CliError {
        code,
        message: e.to_string(),
    }
}

// Substream labels hanging off the master seed.
const SUB_ORDERING: u64 = 0;
const SUB_GROUPING: u64 = 1;
const SUB_DESIGN: u64 = 2;
const SUB_INIT: u64 = 4;
const SUB_TEST: u64 = 5;
const SUB_ICE: u64 = 6;
const SUB_BASELINE: u64 = 7;

pub struct Pipeline {
    pub cfg: RunConfig,
    pub f: BlackBox,
    pub rng: RngStream,
    pub threads: usize,
}

impl Pipeline {
    pub fn new(cfg: RunConfig) -> Result<Self, CliError> {
        cfg.validate().map_err(config_error)?;
        let spec = cfg.function.as_ref().expect("validated");
        let f = spec.build().map_err(|e| config_error(e.to_string()))?;
        if let Some(j) = cfg.singled_out.or(cfg.must_lead) {
            if j > f.dim() {
                return Err(config_error(format!(
                    "input x{j} out of range for a {}-input function",
                    f.dim()
                )));
            }
        }
        let rng = RngStream::new(cfg.seed);
        let threads = cfg.threads.unwrap_or(1).max(1);
        Ok(Self {
            cfg,
            f,
            rng,
            threads,
        })
    }

    pub fn function_info(&self) -> FunctionInfo {
        let name = match self.cfg.function.as_ref().expect("validated") {
            FunctionSpec::Builtin { builtin } => builtin.clone(),
            FunctionSpec::Expression { expression, .. } => expression.clone(),
        };
        FunctionInfo {
            name,
            dimension: self.f.dim(),
            domain: self.f.domain().intervals.clone(),
            gradient_mode: match self.f.gradient_mode() {
                GradientMode::Analytic => "analytic".into(),
                GradientMode::FiniteDifference { rel_step } => {
                    format!("central finite differences (relative step {rel_step})")
                }
            },
        }
    }

    fn projection_settings(&self) -> ProjectionSettings {
        ProjectionSettings {
            n_slices: self.cfg.n_slices,
            n_line: self.cfg.n_line,
        }
    }

    fn grouping_settings(&self) -> GroupingSettings {
        GroupingSettings {
            n_probe: self.cfg.n_probe,
            ratio_tol: self.cfg.ratio_tol,
            projection: self.projection_settings(),
            ..GroupingSettings::default()
        }
    }

    pub fn compute_ordering(&self) -> Result<OrderingResult, CliError> {
        if let Some(order) = &self.cfg.ordering {
            let d = self.f.dim();
            let mut sorted: Vec<usize> = order.clone();
            sorted.sort_unstable();
            if sorted != (1..=d).collect::<Vec<_>>() {
                return Err(config_error(format!(
                    "`ordering` must be a permutation of 1..={d}"
                )));
            }
            return Ok(OrderingResult {
                permutation: order.iter().map(|j| j - 1).collect(),
                levels: Vec::new(),
            });
        }
        ovh_ordering(
            &self.f,
            self.projection_settings(),
            &self.rng.substream(SUB_ORDERING),
        )
        .map_err(numeric_error)
    }

    pub fn compute_grouping(&self) -> Result<GroupingResult, CliError> {
        let grouping = dash_groups(
            &self.f,
            self.grouping_settings(),
            &self.rng.substream(SUB_GROUPING),
        )
        .map_err(numeric_error)?;
        match self.cfg.must_lead {
            Some(j) => dash_ordering_constrained(
                &self.f,
                &grouping,
                j - 1,
                self.projection_settings(),
                &self.rng.substream(SUB_GROUPING),
            )
            .map_err(numeric_error),
            None => Ok(grouping),
        }
    }

    pub fn constrained_ordering(
        &self,
        grouping: &GroupingResult,
        must_lead: usize,
    ) -> Result<GroupingResult, CliError> {
        dash_ordering_constrained(
            &self.f,
            grouping,
            must_lead - 1,
            self.projection_settings(),
            &self.rng.substream(SUB_GROUPING),
        )
        .map_err(numeric_error)
    }

    pub fn build_dataset(&self) -> Result<Dataset, CliError> {
        let design = training_design(
            self.cfg.n_train,
            self.f.dim(),
            self.cfg.boundary_fraction,
            self.cfg.design_candidates,
            &self.rng.substream(SUB_DESIGN),
        )
        .map_err(numeric_error)?;
        dataset_from_design(&self.f, &design).map_err(numeric_error)
    }

    pub fn train_options(&self) -> TrainOptions {
        self.cfg.optimizer.to_options(self.cfg.seed, self.threads)
    }

    /// Fits the configured structure. Returns the trained model plus report
    /// fragments; for the first-level sweep the best model is returned.
    pub fn fit(
        &self,
        ordering: Option<&OrderingResult>,
        grouping: Option<&GroupingResult>,
        report: &mut Report,
    ) -> Result<IannModel, CliError> {
        let spec = self
            .cfg
            .network
            .to_spec()
            .map_err(config_error)?;
        let data = self.build_dataset()?;
        let opts = self.train_options();
        let model = match self.cfg.structure {
            Structure::FirstLevel => {
                if let Some(j) = self.cfg.singled_out {
                    let mut model = IannModel::first_level(
                        self.f.domain().clone(),
                        j - 1,
                        &spec,
                        &self.rng.substream(SUB_INIT),
                    );
                    train(&mut model, &data, &opts).map_err(train_error)?;
                    let r2 = test_r2(&model, &self.f, self.cfg.n_test, &self.rng.substream(SUB_TEST))
                        .map_err(numeric_error)?;
                    report.first_level_sweep = Some(vec![SweepEntry {
                        input: j,
                        test_r2: r2,
                    }]);
                    self.record_fit(report, &model, r2);
                    model
                } else {
                    let fits = fit_first_level_all(
                        &self.f,
                        &data,
                        &spec,
                        &opts,
                        self.cfg.n_test,
                        &self.rng.substream(SUB_INIT),
                    )
                    .map_err(train_error)?;
                    report.first_level_sweep = Some(
                        fits.iter()
                            .map(|fit| SweepEntry {
                                input: fit.singled_out + 1,
                                test_r2: fit.test_r2,
                            })
                            .collect(),
                    );
                    let best = fits
                        .into_iter()
                        .max_by(|a, b| a.test_r2.partial_cmp(&b.test_r2).expect("finite r2"))
                        .expect("at least one input");
                    report.notes.push(format!(
                        "first-level sweep: singling out x{} gives the highest test r2 ({:.4}); model.json holds that fit",
                        best.singled_out + 1,
                        best.test_r2
                    ));
                    self.record_fit(report, &best.model, best.test_r2);
                    best.model
                }
            }
            Structure::Ovh => {
                let ordering = ordering.expect("ovh fit needs an ordering");
                let mut model = IannModel::ovh(
                    self.f.domain().clone(),
                    ordering.permutation.clone(),
                    &spec,
                    &self.rng.substream(SUB_INIT),
                );
                train(&mut model, &data, &opts).map_err(train_error)?;
                let r2 = test_r2(&model, &self.f, self.cfg.n_test, &self.rng.substream(SUB_TEST))
                    .map_err(numeric_error)?;
                self.record_fit(report, &model, r2);
                model
            }
            Structure::Dash => {
                let grouping = grouping.expect("dash fit needs a grouping");
                if grouping.p() < 2 {
                    return Err(numeric_error(
                        "grouping found a single linear combination: the function is one-dimensional \
                         after projection; fit `first-level` on it instead",
                    ));
                }
                if grouping.is_trivial() {
                    report.notes.push(
                        "grouping is trivial (every group is one input, p = d): the dash structure \
                         degenerates to ovh; consider --structure ovh"
                            .into(),
                    );
                }
                let mut model = IannModel::dash(
                    self.f.domain().clone(),
                    grouping.groups.clone(),
                    grouping.beta.clone(),
                    grouping.order.clone(),
                    &spec,
                    &self.rng.substream(SUB_INIT),
                );
                train(&mut model, &data, &opts).map_err(train_error)?;
                let r2 = test_r2(&model, &self.f, self.cfg.n_test, &self.rng.substream(SUB_TEST))
                    .map_err(numeric_error)?;
                self.record_fit(report, &model, r2);
                model
            }
        };
        Ok(model)
    }

    fn record_fit(&self, report: &mut Report, model: &IannModel, r2: f64) {
        let meta = model.meta.as_ref();
        report.fit = Some(FitReport {
            structure: match self.cfg.structure {
                Structure::FirstLevel => "first-level".into(),
                Structure::Ovh => "ovh".into(),
                Structure::Dash => "dash".into(),
            },
            test_r2: r2,
            train_mse: meta.map(|m| m.final_train_mse).unwrap_or(f64::NAN),
            val_mse: meta.and_then(|m| m.final_val_mse),
            epochs_run: meta.map(|m| m.epochs_run).unwrap_or(0),
            early_stopped: meta.map(|m| m.early_stopped).unwrap_or(false),
            n_parameters: model.n_params(),
            trained_beta: match &model.structure {
                ModelStructure::Dash { beta, .. } => Some(beta.clone()),
                _ => None,
            },
        });
    }

    pub fn linear_baseline(&self) -> Result<f64, CliError> {
        linear_baseline_r2(
            &self.f,
            self.cfg.n_train,
            self.cfg.n_test,
            &self.rng.substream(SUB_BASELINE),
        )
        .map_err(numeric_error)
    }

    pub fn heatmap_options(&self) -> Result<HeatmapOptions, CliError> {
        let colormap = Colormap::parse(&self.cfg.plot.colormap)
            .ok_or_else(|| config_error(format!("unknown colormap `{}`", self.cfg.plot.colormap)))?;
        Ok(HeatmapOptions {
            contours: self.cfg.plot.contours,
            colormap,
            size_px: self.cfg.plot.size_px,
        })
    }

    /// Level plots plus an ICE bundle for the level-1 axis when it is an
    /// original input.
    pub fn export_plots(
        &self,
        dir: &Path,
        model: &IannModel,
        report: &mut Report,
    ) -> Result<(), CliError> {
        let opts = self.heatmap_options()?;
        let surfaces = export_level_artifacts(dir, model, self.cfg.plot.res, &opts)
            .map_err(numeric_error)?;
        for s in &surfaces {
            report.artifacts.push(format!("level_{}.json", s.level));
            report.artifacts.push(format!("level_{}.svg", s.level));
        }
        let lead_input = match &model.structure {
            ModelStructure::FirstLevel { singled_out, .. } => Some(*singled_out),
            ModelStructure::Ovh { order, .. } => Some(order[0]),
            ModelStructure::Dash { .. } => None,
        };
        if let Some(j) = lead_input {
            export_ice_artifact(dir, &self.f, j, 30, self.cfg.plot.res, &self.rng.substream(SUB_ICE))
                .map_err(numeric_error)?;
            report.artifacts.push(format!("ice_{}.json", j + 1));
        }
        Ok(())
    }
}

pub fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| numeric_error(format!("cannot create {}: {e}", dir.display())))
}

pub fn write_text(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| numeric_error(format!("cannot write {}: {e}", path.display())))
}

pub fn load_model(path: &Path) -> Result<IannModel, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    model_from_json(&text).map_err(|e| config_error(e.to_string()))
}

pub fn save_model(path: &Path, model: &IannModel) -> Result<(), CliError> {
    write_text(path, &model_to_json(model))
}

/// order: diagnostics only, no training.
pub fn run_order(cfg: RunConfig, out_dir: &Path) -> Result<Report, CliError> {
    let pipe = Pipeline::new(cfg)?;
    let mut report = Report::new("order", pipe.cfg.clone(), pipe.function_info());
    if pipe.f.dim() >= 3 {
        let ordering = pipe.compute_ordering()?;
        report.ordering = Some(OrderingReport::from(&ordering));
    } else {
        report
            .notes
            .push("2-input function: the first level plot is already exact; nothing to order".into());
    }
    if pipe.cfg.structure == Structure::Dash {
        let grouping = pipe.compute_grouping()?;
        report.grouping = Some(GroupingReport::from(&grouping));
    }
    ensure_out_dir(out_dir)?;
    write_text(&out_dir.join("report.json"), &report.to_json())?;
    report.artifacts.push("report.json".into());
    Ok(report)
}

/// fit: ordering/grouping (unless supplied), architecture build, training,
/// test r-squared, artifacts.
pub fn run_fit(cfg: RunConfig, out_dir: &Path) -> Result<Report, CliError> {
    let pipe = Pipeline::new(cfg)?;
    let mut report = Report::new("fit", pipe.cfg.clone(), pipe.function_info());

    let ordering = match pipe.cfg.structure {
        Structure::Ovh => Some(pipe.compute_ordering()?),
        Structure::FirstLevel if pipe.f.dim() >= 3 => {
            // The ordering is cheap and tells the user which input the
            // gradient projection itself would single out.
            Some(pipe.compute_ordering()?)
        }
        _ => None,
    };
    if let Some(o) = &ordering {
        report.ordering = Some(OrderingReport::from(o));
    }
    let grouping = match pipe.cfg.structure {
        Structure::Dash => Some(pipe.compute_grouping()?),
        _ => None,
    };
    if let Some(g) = &grouping {
        report.grouping = Some(GroupingReport::from(g));
    }

    let model = pipe.fit(ordering.as_ref(), grouping.as_ref(), &mut report)?;
    ensure_out_dir(out_dir)?;
    save_model(&out_dir.join("model.json"), &model)?;
    report.artifacts.push("model.json".into());
    write_text(&out_dir.join("report.json"), &report.to_json())?;
    report.artifacts.push("report.json".into());
    Ok(report)
}

/// plot: level artifacts from a saved model; no function evaluations.
pub fn run_plot(
    model_path: &Path,
    out_dir: &Path,
    res: usize,
    contours: usize,
    size_px: u32,
    colormap: &str,
) -> Result<Vec<String>, CliError> {
    let model = load_model(model_path)?;
    let colormap =
        Colormap::parse(colormap).ok_or_else(|| config_error(format!("unknown colormap `{colormap}`")))?;
    let opts = HeatmapOptions {
        contours,
        colormap,
        size_px,
    };
    ensure_out_dir(out_dir)?;
    let surfaces =
        export_level_artifacts(out_dir, &model, res, &opts).map_err(numeric_error)?;
    Ok(surfaces
        .iter()
        .flat_map(|s| {
            vec![
                format!("level_{}.json", s.level),
                format!("level_{}.svg", s.level),
            ]
        })
        .collect())
}

/// eval: raw-coordinate points CSV -> prediction + latent columns; rows
/// outside the domain are flagged, never clamped.
pub fn run_eval(model_path: &Path, points_path: &Path) -> Result<String, CliError> {
    let model = load_model(model_path)?;
    let text = std::fs::read_to_string(points_path)
        .map_err(|e| config_error(format!("cannot read {}: {e}", points_path.display())))?;
    let d = model.dim();
    let mut out = String::from("f_hat");
    for k in 1..=model.n_latents() {
        out.push_str(&format!(",h_{k}"));
    }
    out.push_str(",error\n");
    for (line_no, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let values: Result<Vec<f64>, _> = fields.iter().map(|t| t.parse::<f64>()).collect();
        let values = match values {
            Ok(v) => v,
            Err(_) if line_no == 0 => continue, // header row
            Err(e) => {
                return Err(config_error(format!(
                    "{}:{}: cannot parse point: {e}",
                    points_path.display(),
                    line_no + 1
                )))
            }
        };
        if values.len() != d {
            return Err(config_error(format!(
                "{}:{}: expected {d} coordinates, got {}",
                points_path.display(),
                line_no + 1,
                values.len()
            )));
        }
        match model.domain.check(&values) {
            Ok(()) => {
                let u = model.domain.normalize(&values);
                let (f_hat, latents) = model.forward(&u);
                out.push_str(&format!("{f_hat:.17e}"));
                for h in latents {
                    out.push_str(&format!(",{h:.17e}"));
                }
                out.push_str(",\n");
            }
            Err(e) => {
                // Keep the row, flag the reason, emit no prediction.
                for _ in 0..=model.n_latents() {
                    out.push(',');
                }
                out.push_str(&format!("{e}\n"));
            }
        }
    }
    Ok(out)
}
