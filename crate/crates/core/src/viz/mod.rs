//! Level visualization artifacts: surface grids of each level subnetwork
//! over its two bottleneck inputs, rendered heatmaps, and ICE/PD baseline
//! curves for side-by-side comparison.

mod colormap;
mod heatmap;

pub use colormap::Colormap;
pub use heatmap::{
    contour_levels, marching_squares, render_curves_svg, render_heatmap_svg, HeatmapOptions,
    Segment,
};

use crate::blackbox::{BlackBox, BlackBoxError};
use crate::iann::{IannError, IannModel, LatentStats, ModelStructure};
use crate::numerics::RngStream;
use crate::sampling::{grid_1d, lhd_maximin, SamplingError};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VizError {
    #[error("level {level} out of range 1..={max}")]
    Level { level: usize, max: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("model has no recorded latent ranges; train it first")]
    Untrained,
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Iann(#[from] IannError),
    #[error(transparent)]
    BlackBox(#[from] BlackBoxError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}

/// Rectangular evaluation grid of one level subnetwork over its two
/// bottleneck inputs. Axis 1 is the level's own axis (raw units for an
/// original input, combination units otherwise); axis 2 is the latent
/// feeding the level, clipped to its empirical range over the training
/// design so the plot never shows extrapolated latent values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSurface {
    pub level: usize,
    pub axis1_label: String,
    pub axis1: Vec<f64>,
    pub axis2_label: String,
    pub axis2: Vec<f64>,
    /// `values[iy][ix]` is the level output at `(axis1[ix], axis2[iy])`.
    pub values: Vec<Vec<f64>>,
    /// Combination coefficients `(input, weight)` when axis 1 is a linear
    /// combination, 1-based inputs in the serialized form.
    pub beta_caption: Option<Vec<(usize, f64)>>,
    /// Empirical axis-2 range over the training design.
    pub axis2_bounds: LatentStats,
}

impl LevelSurface {
    pub fn beta_caption_text(&self) -> Option<String> {
        let caption = self.beta_caption.as_ref()?;
        let mut text = format!("v{} = ", self.level);
        for (k, (input, weight)) in caption.iter().enumerate() {
            if k > 0 {
                text.push_str(if *weight >= 0.0 { " + " } else { " - " });
            } else if *weight < 0.0 {
                text.push('-');
            }
            text.push_str(&format!("{:.3}*x{}", weight.abs(), input));
        }
        Some(text)
    }
}

/// ICE curves for one input plus their pointwise mean (the PD curve).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IceBundle {
    /// 1-based input index in the serialized form.
    pub input: usize,
    pub x_grid: Vec<f64>,
    /// One curve per fixed setting of the other inputs.
    pub curves: Vec<Vec<f64>>,
    /// Pointwise mean of `curves`.
    pub pd: Vec<f64>,
}

/// Evaluates level `level` (1-based) of a trained model on a `res x res`
/// grid: axis 1 spans the full axis interval, axis 2 the [p1, p99] band of
/// the feeding latent over the training design.
pub fn level_surface(model: &IannModel, level: usize, res: usize) -> Result<LevelSurface, VizError> {
    let levels = model.levels();
    if level == 0 || level > levels {
        return Err(VizError::Level { level, max: levels });
    }
    if res < 2 {
        return Err(VizError::Parameter(format!("resolution must be >= 2, got {res}")));
    }
    if model.axis2_stats.len() != levels {
        return Err(VizError::Untrained);
    }

    let bounds = model.axis2_stats[level - 1];
    if !(bounds.p99 > bounds.p01) {
        return Err(VizError::Parameter(format!(
            "level {level} latent range is degenerate: [{}, {}]",
            bounds.p01, bounds.p99
        )));
    }
    let axis2_net = grid_1d(res, (bounds.p01, bounds.p99))?;

    // Axis 1: the level net consumes unit-scale inputs for original
    // variables; display uses raw units.
    let (axis1_net, axis1_display): (Vec<f64>, Vec<f64>) = match &model.structure {
        ModelStructure::FirstLevel { .. } | ModelStructure::Ovh { .. } => {
            let unit = grid_1d(res, (0.0, 1.0))?;
            let (lo, hi) = model.axis1_interval(level);
            let display = unit.iter().map(|u| lo + u * (hi - lo)).collect();
            (unit, display)
        }
        ModelStructure::Dash { .. } => {
            let (lo, hi) = model.axis1_interval(level);
            let grid = grid_1d(res, (lo, hi))?;
            (grid.clone(), grid)
        }
    };

    // Axis 2 display: the innermost identity axis of a per-input hierarchy
    // shows raw units; trained latents are already in their normalized
    // range.
    let axis2_display: Vec<f64> = match (&model.structure, model.axis2_is_identity(level)) {
        (ModelStructure::Ovh { order, .. }, true) => {
            let (lo, hi) = model.domain.intervals[order[levels]];
            axis2_net.iter().map(|u| lo + u * (hi - lo)).collect()
        }
        _ => axis2_net.clone(),
    };

    let values: Vec<Vec<f64>> = axis2_net
        .iter()
        .map(|&h| {
            axis1_net
                .iter()
                .map(|&a| model.level_value(level, a, h))
                .collect()
        })
        .collect();

    let beta_caption = match &model.structure {
        ModelStructure::Dash {
            groups,
            beta,
            order,
            ..
        } => {
            let g = order[level - 1];
            Some(
                groups[g]
                    .iter()
                    .zip(&beta[g])
                    .map(|(&j, &w)| (j + 1, w))
                    .collect(),
            )
        }
        _ => None,
    };

    Ok(LevelSurface {
        level,
        axis1_label: model.axis1_label(level),
        axis1: axis1_display,
        axis2_label: model.axis2_label(level),
        axis2: axis2_display,
        values,
        beta_caption,
        axis2_bounds: bounds,
    })
}

/// ICE curves for input `j` (0-based): the other inputs are fixed at
/// `n_curves` space-filling draws, and `f` is swept over `res` evenly spaced
/// points of the input's interval. The PD curve is the exact pointwise mean.
pub fn ice_pd(
    f: &BlackBox,
    j: usize,
    n_curves: usize,
    res: usize,
    rng: &RngStream,
) -> Result<IceBundle, VizError> {
    let d = f.dim();
    if j >= d {
        return Err(VizError::Parameter(format!(
            "input index {} out of range 1..={d}",
            j + 1
        )));
    }
    if n_curves == 0 {
        return Err(VizError::Parameter("need at least one curve".into()));
    }
    let x_grid = grid_1d(res, f.domain().intervals[j])?;

    // Fixed settings of the other inputs, in unit coordinates.
    let slices: Vec<Vec<f64>> = if n_curves >= 2 {
        let design = lhd_maximin(n_curves, d, 10, &rng.substream(0))?;
        design.iter().map(|p| p.to_vec()).collect()
    } else {
        let mut draw = rng.substream(0);
        vec![(0..d).map(|_| draw.next_f64()).collect()]
    };

    let mut curves = Vec::with_capacity(n_curves);
    for slice in &slices {
        let mut raw = f.domain().denormalize(slice);
        let mut curve = Vec::with_capacity(res);
        for &x in &x_grid {
            raw[j] = x;
            curve.push(f.evaluate(&raw)?);
        }
        curves.push(curve);
    }
    let pd: Vec<f64> = (0..res)
        .map(|m| curves.iter().map(|c| c[m]).sum::<f64>() / n_curves as f64)
        .collect();
    Ok(IceBundle {
        input: j + 1,
        x_grid,
        curves,
        pd,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), VizError> {
    std::fs::write(path, contents).map_err(|source| VizError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes `level_<i>.json` and `level_<i>.svg` for every level of a trained
/// model; returns the surfaces in level order.
pub fn export_level_artifacts(
    dir: &Path,
    model: &IannModel,
    res: usize,
    opts: &HeatmapOptions,
) -> Result<Vec<LevelSurface>, VizError> {
    let mut surfaces = Vec::with_capacity(model.levels());
    for level in 1..=model.levels() {
        let surface = level_surface(model, level, res)?;
        let json = serde_json::to_string(&surface).expect("surface serializes");
        write_file(&dir.join(format!("level_{level}.json")), &json)?;
        write_file(
            &dir.join(format!("level_{level}.svg")),
            &render_heatmap_svg(&surface, opts),
        )?;
        surfaces.push(surface);
    }
    Ok(surfaces)
}

/// Writes `ice_<j>.json` for one input (`j` 0-based).
pub fn export_ice_artifact(
    dir: &Path,
    f: &BlackBox,
    j: usize,
    n_curves: usize,
    res: usize,
    rng: &RngStream,
) -> Result<IceBundle, VizError> {
    let bundle = ice_pd(f, j, n_curves, res, rng)?;
    let json = serde_json::to_string(&bundle).expect("bundle serializes");
    write_file(&dir.join(format!("ice_{}.json", j + 1)), &json)?;
    Ok(bundle)
}

#[cfg(test)]
mod tests;
