//! Joint end-to-end training of all hierarchy levels under squared error
//! loss, with Adam, optional validation-based early stopping, and exact
//! post-training normalization of the latent ranges.
//!
//! Determinism: every random choice flows from `TrainOptions::seed` through
//! named substreams, and batch gradients accumulate over fixed-size sample
//! chunks that are reduced in chunk order, so the result is bit-identical
//! for any worker count.

use super::model::{IannModel, LatentStats, ModelGrads, ModelWorkspace, TrainMeta};
use super::IannError;
use crate::numerics::RngStream;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainOptions {
    pub max_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub validation_fraction: f64,
    /// Epochs without validation improvement before stopping; the best
    /// weights seen are restored.
    pub patience: usize,
    pub seed: u64,
    /// Worker hint for batch processing; results do not depend on it.
    pub threads: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            max_epochs: 3000,
            batch_size: 256,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            validation_fraction: 0.1,
            patience: 100,
            seed: 0,
            threads: 1,
        }
    }
}

/// Training data in unit-cube coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub n: usize,
    pub d: usize,
    /// Row-major `n x d`.
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
}

impl Dataset {
    pub fn new(n: usize, d: usize, inputs: Vec<f64>, targets: Vec<f64>) -> Result<Self, IannError> {
        if n == 0 || inputs.len() != n * d || targets.len() != n {
            return Err(IannError::Shape(format!(
                "dataset needs n*d inputs and n targets, got {} and {} for n={n}, d={d}",
                inputs.len(),
                targets.len()
            )));
        }
        if inputs.iter().chain(targets.iter()).any(|v| !v.is_finite()) {
            return Err(IannError::Shape("dataset contains non-finite values".into()));
        }
        Ok(Self {
            n,
            d,
            inputs,
            targets,
        })
    }
}

/// Evaluates the function over a unit-cube design to produce training data.
pub fn dataset_from_design(
    f: &crate::blackbox::BlackBox,
    design: &crate::sampling::Design,
) -> Result<Dataset, IannError> {
    let mut targets = Vec::with_capacity(design.n);
    let mut inputs = Vec::with_capacity(design.n * design.d);
    for u in design.iter() {
        targets.push(f.evaluate_unit(u)?);
        inputs.extend_from_slice(u);
    }
    Dataset::new(design.n, design.d, inputs, targets)
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    fn new(n_params: usize) -> Self {
        Self {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    fn step(&mut self, model: &mut IannModel, grads: &mut ModelGrads, opts: &TrainOptions) {
        self.t += 1;
        let bc1 = 1.0 - opts.beta1.powi(self.t as i32);
        let bc2 = 1.0 - opts.beta2.powi(self.t as i32);
        let mut idx = 0;
        let (m, v) = (&mut self.m, &mut self.v);
        // Collect gradients in canonical order, then walk parameters in the
        // same order.
        let mut flat = Vec::with_capacity(m.len());
        grads.for_each(|g| flat.push(*g));
        model.for_each_param(|p| {
            let g = flat[idx];
            m[idx] = opts.beta1 * m[idx] + (1.0 - opts.beta1) * g;
            v[idx] = opts.beta2 * v[idx] + (1.0 - opts.beta2) * g * g;
            let m_hat = m[idx] / bc1;
            let v_hat = v[idx] / bc2;
            *p -= opts.learning_rate * m_hat / (v_hat.sqrt() + opts.epsilon);
            idx += 1;
        });
        debug_assert_eq!(idx, flat.len());
    }
}

/// Fixed sample-chunk size for gradient accumulation; chunk sums are folded
/// in order, which pins the floating-point result independent of workers.
const GRAD_CHUNK: usize = 64;

/// Squared-error sum and gradient accumulation for one shuffled batch.
fn batch_pass(
    model: &IannModel,
    data: &Dataset,
    order: &[usize],
    scaled_targets: &[f64],
    ws: &mut ModelWorkspace,
    gather: &mut Vec<f64>,
    d_out: &mut Vec<f64>,
    grads: &mut ModelGrads,
    chunk_grads: &mut ModelGrads,
) -> f64 {
    let d = data.d;
    let batch = order.len();
    grads.reset();
    let mut sq_err = 0.0;
    let inv = 1.0 / batch as f64;
    let mut start = 0;
    while start < batch {
        let b = GRAD_CHUNK.min(batch - start);
        let idx = &order[start..start + b];
        gather.resize(b * d, 0.0);
        d_out.resize(b, 0.0);
        for (r, &i) in idx.iter().enumerate() {
            gather[r * d..(r + 1) * d].copy_from_slice(&data.inputs[i * d..(i + 1) * d]);
        }
        let preds = ws.forward(model, gather, b);
        for (r, &i) in idx.iter().enumerate() {
            let e = preds[r] - scaled_targets[i];
            sq_err += e * e;
            d_out[r] = 2.0 * e * inv;
        }
        chunk_grads.reset();
        ws.backward(model, gather, d_out, b, chunk_grads);
        grads.accumulate(chunk_grads);
        start += b;
    }
    sq_err
}

fn mse_over(
    model: &IannModel,
    data: &Dataset,
    indices: std::ops::Range<usize>,
    scaled_targets: &[f64],
    ws: &mut ModelWorkspace,
) -> f64 {
    let d = data.d;
    let n = indices.len();
    if n == 0 {
        return 0.0;
    }
    let mut sq = 0.0;
    let mut start = indices.start;
    while start < indices.end {
        let b = 512.min(indices.end - start);
        let preds = ws.forward(model, &data.inputs[start * d..(start + b) * d], b);
        for (r, pred) in preds.iter().enumerate() {
            let e = pred - scaled_targets[start + r];
            sq += e * e;
        }
        start += b;
    }
    sq / n as f64
}

/// Snapshot of all trainable parameters.
fn snapshot(model: &mut IannModel) -> Vec<f64> {
    let mut out = Vec::with_capacity(model.n_params());
    model.for_each_param(|p| out.push(*p));
    out
}

fn restore(model: &mut IannModel, saved: &[f64]) {
    let mut idx = 0;
    model.for_each_param(|p| {
        *p = saved[idx];
        idx += 1;
    });
}

/// Trains `model` in place; the loss covers all levels jointly (one squared
/// error on the final prediction, backpropagated through the whole chain).
///
/// Targets are standardized internally for conditioning and the affine map is
/// folded back into the output layer afterwards, so predictions stay in raw
/// target units. With `max_epochs == 0` the model is returned untouched.
pub fn train(
    model: &mut IannModel,
    data: &Dataset,
    opts: &TrainOptions,
) -> Result<TrainMeta, IannError> {
    if data.d != model.dim() {
        return Err(IannError::Shape(format!(
            "dataset dimension {} does not match model dimension {}",
            data.d,
            model.dim()
        )));
    }
    let mut meta = TrainMeta {
        seed: opts.seed,
        epochs_run: 0,
        early_stopped: false,
        final_train_mse: f64::NAN,
        final_val_mse: None,
        loss_history: Vec::new(),
    };
    if opts.max_epochs == 0 {
        model.meta = Some(meta.clone());
        return Ok(meta);
    }
    if opts.batch_size == 0 {
        return Err(IannError::Shape("batch size must be at least 1".into()));
    }
    let n_val = ((opts.validation_fraction * data.n as f64).round() as usize).min(data.n / 2);
    let n_train = data.n - n_val;
    if n_train < opts.batch_size.min(data.n) || n_train == 0 {
        return Err(IannError::Shape(format!(
            "training split too small: {n_train} samples for batch size {}",
            opts.batch_size
        )));
    }

    // Standardize targets over the training split.
    let mean = data.targets[..n_train].iter().sum::<f64>() / n_train as f64;
    let var = data.targets[..n_train]
        .iter()
        .map(|t| (t - mean) * (t - mean))
        .sum::<f64>()
        / n_train as f64;
    let sigma = if var > 0.0 { var.sqrt() } else { 1.0 };
    let scaled: Vec<f64> = data.targets.iter().map(|t| (t - mean) / sigma).collect();

    let mut shuffle_rng = RngStream::new(opts.seed).substream(1);
    let mut ws = ModelWorkspace::default();
    let mut grads = ModelGrads::zeros_like(model);
    let mut chunk_grads = ModelGrads::zeros_like(model);
    let mut adam = Adam::new(model.n_params());
    let mut gather = Vec::new();
    let mut d_out = Vec::new();
    let mut order: Vec<usize> = (0..n_train).collect();

    let mut best_val = f64::INFINITY;
    let mut best_params: Option<Vec<f64>> = None;
    let mut stall = 0usize;

    for epoch in 0..opts.max_epochs {
        shuffle_rng.shuffle(&mut order);
        let mut train_sq = 0.0;
        let mut start = 0;
        while start < n_train {
            let b = opts.batch_size.min(n_train - start);
            train_sq += batch_pass(
                model,
                data,
                &order[start..start + b],
                &scaled,
                &mut ws,
                &mut gather,
                &mut d_out,
                &mut grads,
                &mut chunk_grads,
            );
            adam.step(model, &mut grads, opts);
            start += b;
        }
        let train_mse = train_sq / n_train as f64 * sigma * sigma;
        let val_mse = (n_val > 0)
            .then(|| mse_over(model, data, n_train..data.n, &scaled, &mut ws) * sigma * sigma);
        meta.loss_history.push((train_mse, val_mse));
        meta.epochs_run = epoch + 1;
        if !train_mse.is_finite() || val_mse.is_some_and(|v| !v.is_finite()) {
            return Err(IannError::Divergence { epoch: epoch + 1 });
        }
        if let Some(v) = val_mse {
            if v < best_val {
                best_val = v;
                best_params = Some(snapshot(model));
                stall = 0;
            } else {
                stall += 1;
                if stall >= opts.patience {
                    meta.early_stopped = true;
                    break;
                }
            }
        }
    }
    if let Some(saved) = &best_params {
        restore(model, saved);
    }
    meta.final_train_mse = mse_over(model, data, 0..n_train, &scaled, &mut ws) * sigma * sigma;
    meta.final_val_mse =
        (n_val > 0).then(|| mse_over(model, data, n_train..data.n, &scaled, &mut ws) * sigma * sigma);

    // Fold the target standardization into the output layer.
    model.rescale_prediction(sigma, mean);
    normalize_latents(model, data);
    model.meta = Some(meta.clone());
    Ok(meta)
}

/// Rescales every trained latent so its range over the training design is
/// [-1, 1] (the consuming net is compensated exactly), then records the
/// empirical range statistics of every level axis.
fn normalize_latents(model: &mut IannModel, data: &Dataset) {
    let levels = model.levels();
    let n_latents = model.n_latents();
    for k in 1..=n_latents {
        let values = latent_values(model, data, k);
        let (min, max) = min_max(&values);
        if max > min {
            let a = 2.0 / (max - min);
            let b = -(min + max) / (max - min);
            model.rescale_latent(k, a, b);
        }
    }
    // Empirical stats per level axis, after normalization.
    let mut stats = Vec::with_capacity(levels);
    for level in 1..=levels {
        let values = if level <= n_latents {
            latent_values(model, data, level)
        } else {
            axis_values(model, data, level)
        };
        stats.push(stats_of(values));
    }
    model.axis2_stats = stats;
}

/// Values of trained latent `k` over the whole design.
fn latent_values(model: &IannModel, data: &Dataset, k: usize) -> Vec<f64> {
    let mut ws = ModelWorkspace::default();
    let mut out = Vec::with_capacity(data.n);
    let d = data.d;
    let mut start = 0;
    while start < data.n {
        let b = 512.min(data.n - start);
        ws.forward(model, &data.inputs[start * d..(start + b) * d], b);
        out.extend_from_slice(ws.latents(model)[k - 1]);
        start += b;
    }
    out
}

/// Values of the identity axis feeding level `level` (the innermost axis).
fn axis_values(model: &IannModel, data: &Dataset, level: usize) -> Vec<f64> {
    use super::model::ModelStructure;
    debug_assert_eq!(level, model.levels());
    let d = data.d;
    (0..data.n)
        .map(|r| {
            let u = &data.inputs[r * d..(r + 1) * d];
            match &model.structure {
                ModelStructure::FirstLevel { .. } => unreachable!("first level has a trained latent"),
                ModelStructure::Ovh { order, .. } => u[order[level]],
                ModelStructure::Dash {
                    groups,
                    beta,
                    order,
                    ..
                } => {
                    let g = order[level];
                    groups[g].iter().zip(&beta[g]).map(|(&j, &w)| u[j] * w).sum()
                }
            }
        })
        .collect()
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}

fn stats_of(mut values: Vec<f64>) -> LatentStats {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite latent values"));
    let n = values.len();
    let q = |frac: f64| values[((n - 1) as f64 * frac).round() as usize];
    LatentStats {
        min: values[0],
        max: values[n - 1],
        p01: q(0.01),
        p99: q(0.99),
    }
}
