//! Model quality measures: test r-squared on a fresh uniform sample, the
//! per-candidate first-level sweep, and an ordinary-least-squares baseline.

use super::model::IannModel;
use super::net::MlpSpec;
use super::train::{train, Dataset, TrainOptions};
use super::IannError;
use crate::blackbox::BlackBox;
use crate::numerics::{symmetric_eigh, Matrix, RngStream};
use crate::sampling::lhd_maximin;

/// r-squared of the model against the true function on `n_test` uniform
/// random domain points: `1 - SS_res / SS_tot`.
pub fn test_r2(
    model: &IannModel,
    f: &BlackBox,
    n_test: usize,
    rng: &RngStream,
) -> Result<f64, IannError> {
    if n_test < 100 {
        return Err(IannError::Shape(format!(
            "test r-squared needs at least 100 points, got {n_test}"
        )));
    }
    let d = f.dim();
    let mut draw = rng.substream(0);
    let mut us = vec![0.0; n_test * d];
    for v in us.iter_mut() {
        *v = draw.next_f64();
    }
    let mut targets = Vec::with_capacity(n_test);
    for r in 0..n_test {
        targets.push(f.evaluate_unit(&us[r * d..(r + 1) * d])?);
    }
    let preds = model.predict(&us, n_test);
    r_squared(&targets, &preds)
}

pub fn r_squared(targets: &[f64], preds: &[f64]) -> Result<f64, IannError> {
    let n = targets.len() as f64;
    let mean = targets.iter().sum::<f64>() / n;
    let ss_tot: f64 = targets.iter().map(|t| (t - mean) * (t - mean)).sum();
    if ss_tot == 0.0 {
        return Err(IannError::Degenerate(
            "test targets have zero variance".into(),
        ));
    }
    let ss_res: f64 = targets
        .iter()
        .zip(preds)
        .map(|(t, p)| (t - p) * (t - p))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

#[derive(Debug)]
pub struct FirstLevelFit {
    pub singled_out: usize,
    pub model: IannModel,
    pub test_r2: f64,
}

/// Fits the first-level architecture once per candidate input on the same
/// data, scoring every fit on the same test sample so the values mirror a
/// per-input accuracy table.
pub fn fit_first_level_all(
    f: &BlackBox,
    data: &Dataset,
    spec: &MlpSpec,
    opts: &TrainOptions,
    n_test: usize,
    rng: &RngStream,
) -> Result<Vec<FirstLevelFit>, IannError> {
    let d = f.dim();
    let mut fits = Vec::with_capacity(d);
    for j in 0..d {
        let mut model = IannModel::first_level(
            f.domain().clone(),
            j,
            spec,
            &rng.substream(10 + j as u64),
        );
        let mut o = *opts;
        o.seed = RngStream::new(opts.seed).substream(j as u64).next_u64();
        train(&mut model, data, &o)?;
        let r2 = test_r2(&model, f, n_test, &rng.substream(999))?;
        fits.push(FirstLevelFit {
            singled_out: j,
            model,
            test_r2: r2,
        });
    }
    Ok(fits)
}

/// Ordinary least squares on unit-cube inputs (with intercept), scored on a
/// fresh uniform test sample. Singular normal equations fall back to the
/// pseudo-inverse.
pub fn linear_baseline_r2(
    f: &BlackBox,
    n_train: usize,
    n_test: usize,
    rng: &RngStream,
) -> Result<f64, IannError> {
    let d = f.dim();
    let design = lhd_maximin(n_train, d, 10, &rng.substream(0))?;
    let cols = d + 1;
    let mut xtx = Matrix::zeros(cols, cols);
    let mut xty = vec![0.0; cols];
    let mut row = vec![0.0; cols];
    for u in design.iter() {
        let y = f.evaluate_unit(u)?;
        row[0] = 1.0;
        row[1..].copy_from_slice(u);
        for i in 0..cols {
            xty[i] += row[i] * y;
            for j in i..cols {
                xtx.data[i * cols + j] += row[i] * row[j];
            }
        }
    }
    for i in 0..cols {
        for j in 0..i {
            xtx.data[i * cols + j] = xtx.data[j * cols + i];
        }
    }
    let (vals, vecs) = symmetric_eigh(&xtx, 1e-9)?;
    let cutoff = vals[0].max(0.0) * 1e-12;
    // w = V diag(1/lambda) V^T X^T y, dropping near-null directions.
    let mut w = vec![0.0; cols];
    for k in 0..cols {
        if vals[k] <= cutoff {
            continue;
        }
        let mut proj = 0.0;
        for i in 0..cols {
            proj += vecs.get(i, k) * xty[i];
        }
        let scale = proj / vals[k];
        for (i, wi) in w.iter_mut().enumerate() {
            *wi += scale * vecs.get(i, k);
        }
    }

    let mut draw = rng.substream(1);
    let mut targets = Vec::with_capacity(n_test);
    let mut preds = Vec::with_capacity(n_test);
    let mut u = vec![0.0; d];
    for _ in 0..n_test {
        for v in u.iter_mut() {
            *v = draw.next_f64();
        }
        targets.push(f.evaluate_unit(&u)?);
        let mut p = w[0];
        for (k, &uv) in u.iter().enumerate() {
            p += w[k + 1] * uv;
        }
        preds.push(p);
    }
    r_squared(&targets, &preds)
}
