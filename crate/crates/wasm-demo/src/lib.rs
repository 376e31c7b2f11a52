//! Browser demo: a thin wasm-bindgen wrapper over the core pipeline,
//! exposing three interactive operations to a static page:
//!
//! 1. ICE/PD curves for a chosen input, rendered to SVG;
//! 2. the ordering + grouping diagnostics as JSON (no training);
//! 3. a small first-level fit with its level-1 heatmap and test accuracy.
//!
//! Everything runs single-threaded in the page at reduced sample sizes; the
//! CLI is the full-scale path.

use iann_core::blackbox::{BlackBox, FunctionSpec};
use iann_core::decompose::{dash_groups, ovh_ordering, GroupingSettings, ProjectionSettings};
use iann_core::iann::{
    dataset_from_design, test_r2, train, Activation, IannModel, MlpSpec, TrainOptions,
};
use iann_core::numerics::RngStream;
use iann_core::sampling::training_design;
use iann_core::viz::{ice_pd, level_surface, render_curves_svg, render_heatmap_svg, HeatmapOptions};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn build_function(function_json: &str) -> Result<BlackBox, String> {
    let spec: FunctionSpec = serde_json::from_str(function_json)
        .map_err(|e| format!("function spec is not valid JSON: {e}"))?;
    spec.build().map_err(|e| e.to_string())
}

/// ICE curves plus the PD mean for one input (1-based), as an SVG document.
pub fn ice_plot_svg(
    function_json: &str,
    input: usize,
    n_curves: usize,
    seed: u64,
) -> Result<String, String> {
    let f = build_function(function_json)?;
    if input == 0 || input > f.dim() {
        return Err(format!("input must be in 1..={}", f.dim()));
    }
    let n_curves = n_curves.clamp(1, 200);
    let bundle = ice_pd(&f, input - 1, n_curves, 61, &RngStream::new(seed))
        .map_err(|e| e.to_string())?;
    Ok(render_curves_svg(
        &bundle.x_grid,
        &bundle.curves,
        Some(&bundle.pd),
        &format!("x{input}"),
        &format!("ICE curves for x{input} (mean = PD)"),
        720,
    ))
}

#[derive(Serialize)]
struct AnalysisOut {
    dimension: usize,
    ordering: Option<OrderingOut>,
    grouping: GroupingOut,
}

#[derive(Serialize)]
struct OrderingOut {
    permutation: Vec<usize>,
    levels: Vec<LevelOut>,
}

#[derive(Serialize)]
struct LevelOut {
    level: usize,
    candidates: Vec<(usize, f64)>,
    chosen: usize,
}

#[derive(Serialize)]
struct GroupingOut {
    p: usize,
    groups: Vec<Vec<usize>>,
    beta: Vec<Vec<f64>>,
    ordered_groups: Vec<Vec<usize>>,
    trivial: bool,
    warnings: Vec<String>,
}

/// Gradient-projection ordering and disjoint-group analysis, as JSON.
pub fn analyze_json(function_json: &str, seed: u64) -> Result<String, String> {
    let f = build_function(function_json)?;
    let rng = RngStream::new(seed);
    // Browser-scale sampling keeps this interactive.
    let settings = ProjectionSettings {
        n_slices: 100,
        n_line: 15,
    };
    let ordering = if f.dim() >= 3 {
        let o = ovh_ordering(&f, settings, &rng.substream(0)).map_err(|e| e.to_string())?;
        Some(OrderingOut {
            permutation: o.permutation.iter().map(|j| j + 1).collect(),
            levels: o
                .levels
                .iter()
                .map(|l| LevelOut {
                    level: l.level,
                    candidates: l.candidates.iter().map(|&(j, e)| (j + 1, e)).collect(),
                    chosen: l.chosen + 1,
                })
                .collect(),
        })
    } else {
        None
    };
    let grouping = dash_groups(
        &f,
        GroupingSettings {
            n_probe: 300,
            projection: settings,
            ..GroupingSettings::default()
        },
        &rng.substream(1),
    )
    .map_err(|e| e.to_string())?;
    let out = AnalysisOut {
        dimension: f.dim(),
        ordering,
        grouping: GroupingOut {
            p: grouping.p(),
            groups: grouping
                .groups
                .iter()
                .map(|g| g.iter().map(|j| j + 1).collect())
                .collect(),
            beta: grouping.beta.clone(),
            ordered_groups: grouping
                .ordered_groups()
                .iter()
                .map(|g| g.iter().map(|j| j + 1).collect())
                .collect(),
            trivial: grouping.is_trivial(),
            warnings: grouping.warnings.clone(),
        },
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct FitOut {
    singled_out: usize,
    test_r2: f64,
    epochs_run: usize,
    svg: String,
}

/// Trains a reduced first-level model singling out `input` (1-based) and
/// returns the level-1 heatmap plus its test accuracy, as JSON.
pub fn train_first_level_json(
    function_json: &str,
    input: usize,
    n_train: usize,
    epochs: usize,
    seed: u64,
) -> Result<String, String> {
    let f = build_function(function_json)?;
    if input == 0 || input > f.dim() {
        return Err(format!("input must be in 1..={}", f.dim()));
    }
    let n_train = n_train.clamp(256, 8000);
    let epochs = epochs.clamp(1, 400);
    let rng = RngStream::new(seed);
    let design = training_design(n_train, f.dim(), 0.1, 5, &rng.substream(2))
        .map_err(|e| e.to_string())?;
    let data = dataset_from_design(&f, &design).map_err(|e| e.to_string())?;
    let spec = MlpSpec {
        hidden: vec![24, 24],
        activation: Activation::Tanh,
    };
    let mut model = IannModel::first_level(f.domain().clone(), input - 1, &spec, &rng.substream(4));
    let opts = TrainOptions {
        max_epochs: epochs,
        batch_size: 128,
        seed,
        ..TrainOptions::default()
    };
    let meta = train(&mut model, &data, &opts).map_err(|e| e.to_string())?;
    let r2 = test_r2(&model, &f, 5000, &rng.substream(5)).map_err(|e| e.to_string())?;
    let surface = level_surface(&model, 1, 61).map_err(|e| e.to_string())?;
    let svg = render_heatmap_svg(&surface, &HeatmapOptions::default());
    let out = FitOut {
        singled_out: input,
        test_r2: r2,
        epochs_run: meta.epochs_run,
        svg,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

// wasm-bindgen surface; the page calls these.

#[wasm_bindgen]
pub fn ice_plot(function_json: &str, input: usize, n_curves: usize, seed: u64) -> Result<String, JsError> {
    ice_plot_svg(function_json, input, n_curves, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn analyze(function_json: &str, seed: u64) -> Result<String, JsError> {
    analyze_json(function_json, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn train_first_level(
    function_json: &str,
    input: usize,
    n_train: usize,
    epochs: usize,
    seed: u64,
) -> Result<String, JsError> {
    train_first_level_json(function_json, input, n_train, epochs, seed).map_err(|e| JsError::new(&e))
}
