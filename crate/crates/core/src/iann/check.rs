//! Finite-difference oracle for the reverse-mode gradients.
//!
//! The oracle only ever calls the forward pass, so it stays independent of
//! the backpropagation code it validates. Used by the unit tests and the
//! acceptance suite.

use super::model::{IannModel, ModelGrads, ModelWorkspace};

/// Mean squared error of the model on a small batch.
fn loss(model: &IannModel, inputs: &[f64], targets: &[f64], batch: usize) -> f64 {
    let mut ws = ModelWorkspace::default();
    let preds = ws.forward(model, inputs, batch);
    preds
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / batch as f64
}

/// Compares the analytic loss gradient against central finite differences
/// (step 1e-6) on every parameter; returns the largest relative error, with
/// the denominator floored at 1e-4 so near-zero gradients are compared at a
/// matching absolute scale.
pub fn max_gradient_error(model: &IannModel, inputs: &[f64], targets: &[f64]) -> f64 {
    let d = model.dim();
    let batch = targets.len();
    assert_eq!(inputs.len(), batch * d);

    let mut ws = ModelWorkspace::default();
    let mut grads = ModelGrads::zeros_like(model);
    let preds = ws.forward(model, inputs, batch).to_vec();
    let d_out: Vec<f64> = preds
        .iter()
        .zip(targets)
        .map(|(p, t)| 2.0 * (p - t) / batch as f64)
        .collect();
    ws.backward(model, inputs, &d_out, batch, &mut grads);
    let mut analytic = Vec::new();
    grads.for_each(|g| analytic.push(*g));

    const H: f64 = 1e-6;
    let mut probe = model.clone();
    let n = analytic.len();
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let mut original = 0.0;
        let mut idx = 0;
        probe.for_each_param(|p| {
            if idx == k {
                original = *p;
                *p = original + H;
            }
            idx += 1;
        });
        let up = loss(&probe, inputs, targets, batch);
        idx = 0;
        probe.for_each_param(|p| {
            if idx == k {
                *p = original - H;
            }
            idx += 1;
        });
        let down = loss(&probe, inputs, targets, batch);
        idx = 0;
        probe.for_each_param(|p| {
            if idx == k {
                *p = original;
            }
            idx += 1;
        });
        let fd = (up - down) / (2.0 * H);
        let denom = analytic[k].abs().max(fd.abs()).max(1e-4);
        worst = worst.max((analytic[k] - fd).abs() / denom);
    }
    worst
}
