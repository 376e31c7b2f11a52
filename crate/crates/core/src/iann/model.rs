//! The three bottleneck architectures and their batched passes.
//!
//! Every hierarchy level is a two-input scalar subnetwork `g_i(axis_i, h_i)`
//! whose output is the previous level's latent `h_{i-1}` (level 1 outputs the
//! prediction itself). The level axis enters by identity, never through a
//! trainable weight, so each bottleneck carries exactly the pair the level
//! plot displays. The innermost latent is the last axis itself.
//!
//! - first-level: `f = g(x_j, h(x_others))` with a free-form `h` net;
//! - per-input chain: axes are the ordered original inputs;
//! - grouped chain: axes are disjoint linear combinations `v_i`, produced by
//!   a bias-free masked linear layer whose weights live only on each group's
//!   support.

use super::net::{Mlp, MlpGrads, MlpSpec, NetWorkspace};
use crate::blackbox::Domain;
use crate::numerics::RngStream;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub enum ModelStructure {
    FirstLevel {
        singled_out: usize,
        h_net: Mlp,
        g_net: Mlp,
    },
    Ovh {
        order: Vec<usize>,
        level_nets: Vec<Mlp>,
    },
    Dash {
        /// Canonical groups (ascending smallest member), 0-based inputs.
        groups: Vec<Vec<usize>>,
        /// Trainable combination weights aligned with `groups`; entry `k`
        /// multiplies the group's `k`-th member. Inputs outside a group's
        /// support have no weight at all.
        beta: Vec<Vec<f64>>,
        /// Hierarchy order as indices into `groups`.
        order: Vec<usize>,
        level_nets: Vec<Mlp>,
    },
}

/// Range statistics of one level's second axis over the training design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatentStats {
    pub min: f64,
    pub max: f64,
    pub p01: f64,
    pub p99: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub seed: u64,
    pub epochs_run: usize,
    pub early_stopped: bool,
    pub final_train_mse: f64,
    pub final_val_mse: Option<f64>,
    /// Per-epoch `(train MSE, validation MSE)` in raw target units.
    pub loss_history: Vec<(f64, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IannModel {
    pub domain: Domain,
    pub structure: ModelStructure,
    /// Per level, statistics of the level's second axis (the latent feeding
    /// it, or the final identity axis at the innermost level). Filled by
    /// training.
    pub axis2_stats: Vec<LatentStats>,
    pub meta: Option<TrainMeta>,
}

impl IannModel {
    pub fn first_level(
        domain: Domain,
        singled_out: usize,
        spec: &MlpSpec,
        rng: &RngStream,
    ) -> Self {
        let d = domain.dim();
        assert!(singled_out < d);
        let mut init = rng.substream(0);
        let h_net = Mlp::build(d - 1, spec, &mut init);
        let g_net = Mlp::build(2, spec, &mut init);
        Self {
            domain,
            structure: ModelStructure::FirstLevel {
                singled_out,
                h_net,
                g_net,
            },
            axis2_stats: Vec::new(),
            meta: None,
        }
    }

    pub fn ovh(domain: Domain, order: Vec<usize>, spec: &MlpSpec, rng: &RngStream) -> Self {
        let d = domain.dim();
        assert_eq!(order.len(), d, "order must be a permutation of the inputs");
        assert!(d >= 3, "the chain needs at least 3 inputs");
        let mut init = rng.substream(0);
        let level_nets = (0..d - 1).map(|_| Mlp::build(2, spec, &mut init)).collect();
        Self {
            domain,
            structure: ModelStructure::Ovh { order, level_nets },
            axis2_stats: Vec::new(),
            meta: None,
        }
    }

    pub fn dash(
        domain: Domain,
        groups: Vec<Vec<usize>>,
        beta: Vec<Vec<f64>>,
        order: Vec<usize>,
        spec: &MlpSpec,
        rng: &RngStream,
    ) -> Self {
        let p = groups.len();
        assert!(p >= 2, "grouped chain needs at least 2 groups");
        assert_eq!(beta.len(), p);
        assert_eq!(order.len(), p);
        let mut init = rng.substream(0);
        let level_nets = (0..p - 1).map(|_| Mlp::build(2, spec, &mut init)).collect();
        Self {
            domain,
            structure: ModelStructure::Dash {
                groups,
                beta,
                order,
                level_nets,
            },
            axis2_stats: Vec::new(),
            meta: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Number of hierarchy levels (= number of level plots).
    pub fn levels(&self) -> usize {
        match &self.structure {
            ModelStructure::FirstLevel { .. } => 1,
            ModelStructure::Ovh { level_nets, .. } | ModelStructure::Dash { level_nets, .. } => {
                level_nets.len()
            }
        }
    }

    /// Number of trained latent values [`IannModel::forward`] returns.
    pub fn n_latents(&self) -> usize {
        match &self.structure {
            ModelStructure::FirstLevel { .. } => 1,
            _ => self.levels() - 1,
        }
    }

    /// Number of hierarchy axes (`d` for the per-input chain, `p` for
    /// groups, 2 for the first-level architecture).
    fn n_axes(&self) -> usize {
        match &self.structure {
            ModelStructure::FirstLevel { .. } => 2,
            ModelStructure::Ovh { order, .. } => order.len(),
            ModelStructure::Dash { order, .. } => order.len(),
        }
    }

    /// Axis values `a_1..a_{L+1}` for a unit-cube point: the ordered inputs
    /// themselves, or the group combination values.
    fn axes_into(&self, u: &[f64], out: &mut [f64]) {
        match &self.structure {
            ModelStructure::FirstLevel { singled_out, .. } => {
                out[0] = u[*singled_out];
                out[1] = 0.0;
            }
            ModelStructure::Ovh { order, .. } => {
                for (slot, &j) in out.iter_mut().zip(order) {
                    *slot = u[j];
                }
            }
            ModelStructure::Dash {
                groups,
                beta,
                order,
                ..
            } => {
                for (slot, &g) in out.iter_mut().zip(order) {
                    *slot = groups[g]
                        .iter()
                        .zip(&beta[g])
                        .map(|(&j, &w)| u[j] * w)
                        .sum();
                }
            }
        }
    }

    /// Prediction plus the trained latent values `h_1..`, outermost first.
    pub fn forward(&self, u: &[f64]) -> (f64, Vec<f64>) {
        debug_assert_eq!(u.len(), self.dim());
        match &self.structure {
            ModelStructure::FirstLevel {
                singled_out,
                h_net,
                g_net,
            } => {
                let rest: Vec<f64> = u
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != *singled_out)
                    .map(|(_, &v)| v)
                    .collect();
                let h = h_net.forward_one(&rest);
                let f = g_net.forward_one(&[u[*singled_out], h]);
                (f, vec![h])
            }
            ModelStructure::Ovh { level_nets, .. } | ModelStructure::Dash { level_nets, .. } => {
                let mut axes = vec![0.0; self.n_axes()];
                self.axes_into(u, &mut axes);
                let levels = level_nets.len();
                let mut h = axes[levels]; // innermost identity latent
                let mut latents = vec![0.0; levels - 1];
                for i in (1..=levels).rev() {
                    h = level_nets[i - 1].forward_one(&[axes[i - 1], h]);
                    if i >= 2 {
                        latents[i - 2] = h;
                    }
                }
                (h, latents)
            }
        }
    }

    /// Batched predictions for `n` unit-cube points (row-major `n x d`).
    pub fn predict(&self, us: &[f64], n: usize) -> Vec<f64> {
        let mut ws = ModelWorkspace::default();
        let mut out = Vec::with_capacity(n);
        let d = self.dim();
        const CHUNK: usize = 512;
        let mut start = 0;
        while start < n {
            let b = CHUNK.min(n - start);
            let preds = ws.forward(self, &us[start * d..(start + b) * d], b);
            out.extend_from_slice(preds);
            start += b;
        }
        out
    }

    /// The interval spanned by level `level`'s first axis (1-based level):
    /// the raw input interval, or the attainable combination range.
    pub fn axis1_interval(&self, level: usize) -> (f64, f64) {
        match &self.structure {
            ModelStructure::FirstLevel { singled_out, .. } => {
                self.domain.intervals[*singled_out]
            }
            ModelStructure::Ovh { order, .. } => self.domain.intervals[order[level - 1]],
            ModelStructure::Dash {
                groups,
                beta,
                order,
                ..
            } => {
                let g = order[level - 1];
                combination_range(&beta[g], groups[g].len())
            }
        }
    }

    /// Labels for plots and reports, 1-based input names.
    pub fn axis1_label(&self, level: usize) -> String {
        match &self.structure {
            ModelStructure::FirstLevel { singled_out, .. } => format!("x{}", singled_out + 1),
            ModelStructure::Ovh { order, .. } => format!("x{}", order[level - 1] + 1),
            ModelStructure::Dash { order, .. } => format!("v{level} (group {})", order[level - 1] + 1),
        }
    }

    pub fn axis2_label(&self, level: usize) -> String {
        let levels = self.levels();
        if level < levels {
            return format!("h{level}");
        }
        match &self.structure {
            ModelStructure::FirstLevel { .. } => "h1".into(),
            ModelStructure::Ovh { order, .. } => format!("x{}", order[levels] + 1),
            ModelStructure::Dash { order, .. } => {
                format!("v{} (group {})", levels + 1, order[levels] + 1)
            }
        }
    }

    /// Whether level `level`'s second axis is a raw model quantity (the
    /// innermost identity axis) rather than a trained latent.
    pub fn axis2_is_identity(&self, level: usize) -> bool {
        !matches!(self.structure, ModelStructure::FirstLevel { .. }) && level == self.levels()
    }

    /// Evaluates level net `level` (1-based) at `(axis1, axis2)` directly.
    pub fn level_value(&self, level: usize, axis1: f64, axis2: f64) -> f64 {
        match &self.structure {
            ModelStructure::FirstLevel { g_net, .. } => g_net.forward_one(&[axis1, axis2]),
            ModelStructure::Ovh { level_nets, .. } | ModelStructure::Dash { level_nets, .. } => {
                level_nets[level - 1].forward_one(&[axis1, axis2])
            }
        }
    }

    /// Group combination values in hierarchy order (grouped models only).
    pub fn combination_values(&self, u: &[f64]) -> Option<Vec<f64>> {
        match &self.structure {
            ModelStructure::Dash { .. } => {
                let mut axes = vec![0.0; self.n_axes()];
                self.axes_into(u, &mut axes);
                Some(axes)
            }
            _ => None,
        }
    }

    pub fn n_params(&self) -> usize {
        match &self.structure {
            ModelStructure::FirstLevel { h_net, g_net, .. } => h_net.n_params() + g_net.n_params(),
            ModelStructure::Ovh { level_nets, .. } => {
                level_nets.iter().map(Mlp::n_params).sum()
            }
            ModelStructure::Dash {
                beta, level_nets, ..
            } => {
                beta.iter().map(Vec::len).sum::<usize>()
                    + level_nets.iter().map(Mlp::n_params).sum::<usize>()
            }
        }
    }

    /// Visits every trainable parameter in canonical order (combination
    /// weights first, then nets, layer by layer, weights before biases).
    pub fn for_each_param(&mut self, mut f: impl FnMut(&mut f64)) {
        match &mut self.structure {
            ModelStructure::FirstLevel { h_net, g_net, .. } => {
                for net in [h_net, g_net] {
                    for layer in &mut net.layers {
                        layer.w.iter_mut().for_each(&mut f);
                        layer.b.iter_mut().for_each(&mut f);
                    }
                }
            }
            ModelStructure::Ovh { level_nets, .. } => {
                for net in level_nets {
                    for layer in &mut net.layers {
                        layer.w.iter_mut().for_each(&mut f);
                        layer.b.iter_mut().for_each(&mut f);
                    }
                }
            }
            ModelStructure::Dash {
                beta, level_nets, ..
            } => {
                for b in beta {
                    b.iter_mut().for_each(&mut f);
                }
                for net in level_nets {
                    for layer in &mut net.layers {
                        layer.w.iter_mut().for_each(&mut f);
                        layer.b.iter_mut().for_each(&mut f);
                    }
                }
            }
        }
    }

    /// Rescales the prediction `f' = a * f + b` exactly (output layer fold).
    pub(crate) fn rescale_prediction(&mut self, a: f64, b: f64) {
        match &mut self.structure {
            ModelStructure::FirstLevel { g_net, .. } => g_net.rescale_output(a, b),
            ModelStructure::Ovh { level_nets, .. } | ModelStructure::Dash { level_nets, .. } => {
                level_nets[0].rescale_output(a, b)
            }
        }
    }

    /// Affinely rescales trained latent `k` (1-based) to `h' = a * h + b`,
    /// compensating the consuming net exactly.
    pub(crate) fn rescale_latent(&mut self, k: usize, a: f64, b: f64) {
        match &mut self.structure {
            ModelStructure::FirstLevel { h_net, g_net, .. } => {
                assert_eq!(k, 1);
                h_net.rescale_output(a, b);
                g_net.compensate_input(1, a, b);
            }
            ModelStructure::Ovh { level_nets, .. } | ModelStructure::Dash { level_nets, .. } => {
                assert!(k >= 1 && k < level_nets.len());
                level_nets[k].rescale_output(a, b);
                level_nets[k - 1].compensate_input(1, a, b);
            }
        }
    }
}

/// Attainable interval of a combination `sum(beta_k * u_k)` over the unit
/// cube.
pub fn combination_range(beta: &[f64], len: usize) -> (f64, f64) {
    debug_assert_eq!(beta.len(), len);
    let lo: f64 = beta.iter().map(|&b| b.min(0.0)).sum();
    let hi: f64 = beta.iter().map(|&b| b.max(0.0)).sum();
    (lo, hi)
}

/// Gradient buffers for every trainable parameter of a model.
#[derive(Debug, Clone)]
pub struct ModelGrads {
    pub nets: Vec<MlpGrads>,
    pub beta: Vec<Vec<f64>>,
}

impl ModelGrads {
    pub fn zeros_like(model: &IannModel) -> Self {
        match &model.structure {
            ModelStructure::FirstLevel { h_net, g_net, .. } => Self {
                nets: vec![MlpGrads::zeros_like(h_net), MlpGrads::zeros_like(g_net)],
                beta: Vec::new(),
            },
            ModelStructure::Ovh { level_nets, .. } => Self {
                nets: level_nets.iter().map(MlpGrads::zeros_like).collect(),
                beta: Vec::new(),
            },
            ModelStructure::Dash {
                beta, level_nets, ..
            } => Self {
                nets: level_nets.iter().map(MlpGrads::zeros_like).collect(),
                beta: beta.iter().map(|b| vec![0.0; b.len()]).collect(),
            },
        }
    }

    pub fn reset(&mut self) {
        self.nets.iter_mut().for_each(MlpGrads::reset);
        for b in &mut self.beta {
            b.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    /// Visits every gradient in the same canonical order as
    /// [`IannModel::for_each_param`].
    pub fn for_each(&mut self, mut f: impl FnMut(&mut f64)) {
        for b in &mut self.beta {
            b.iter_mut().for_each(&mut f);
        }
        for net in &mut self.nets {
            for (w, b) in &mut net.layers {
                w.iter_mut().for_each(&mut f);
                b.iter_mut().for_each(&mut f);
            }
        }
    }

    /// Adds `other`, used for the deterministic chunked reduction.
    pub fn accumulate(&mut self, other: &ModelGrads) {
        for (a, b) in self.beta.iter_mut().zip(&other.beta) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (na, nb) in self.nets.iter_mut().zip(&other.nets) {
            for ((wa, ba), (wb, bb)) in na.layers.iter_mut().zip(&nb.layers) {
                for (x, y) in wa.iter_mut().zip(wb) {
                    *x += y;
                }
                for (x, y) in ba.iter_mut().zip(bb) {
                    *x += y;
                }
            }
        }
    }
}

/// Scratch buffers for batched model passes.
#[derive(Debug, Default)]
pub struct ModelWorkspace {
    net_ws: Vec<NetWorkspace>,
    /// Axis values, `batch x (levels + 1)` row-major by axis:
    /// `axes[a * batch + r]`.
    axes: Vec<f64>,
    /// Latent values per level, `levels + 1` buffers of `batch`.
    h: Vec<Vec<f64>>,
    dh: Vec<f64>,
    pair: Vec<f64>,
    rest: Vec<f64>,
}

impl ModelWorkspace {
    /// Batched forward; returns the predictions for the chunk. Latents stay
    /// in the workspace for [`ModelWorkspace::latents`].
    pub fn forward<'a>(&'a mut self, model: &IannModel, inputs: &[f64], batch: usize) -> &'a [f64] {
        let d = model.dim();
        debug_assert_eq!(inputs.len(), batch * d);
        match &model.structure {
            ModelStructure::FirstLevel {
                singled_out,
                h_net,
                g_net,
            } => {
                self.net_ws.resize_with(2, NetWorkspace::default);
                self.rest.resize(batch * (d - 1), 0.0);
                for r in 0..batch {
                    let row = &inputs[r * d..(r + 1) * d];
                    let dst = &mut self.rest[r * (d - 1)..(r + 1) * (d - 1)];
                    let mut c = 0;
                    for (j, &v) in row.iter().enumerate() {
                        if j != *singled_out {
                            dst[c] = v;
                            c += 1;
                        }
                    }
                }
                let (h_ws, g_ws) = {
                    let (a, b) = self.net_ws.split_at_mut(1);
                    (&mut a[0], &mut b[0])
                };
                h_ws.forward(h_net, &self.rest, batch);
                self.pair.resize(batch * 2, 0.0);
                for r in 0..batch {
                    self.pair[r * 2] = inputs[r * d + singled_out];
                    self.pair[r * 2 + 1] = h_ws.outputs()[r];
                }
                g_ws.forward(g_net, &self.pair, batch);
                self.h.resize(1, Vec::new());
                self.h[0].resize(batch, 0.0);
                self.h[0].copy_from_slice(&h_ws.outputs()[..batch]);
                &g_ws.outputs()[..batch]
            }
            ModelStructure::Ovh { level_nets, .. } | ModelStructure::Dash { level_nets, .. } => {
                let levels = level_nets.len();
                let n_axes = levels + 1;
                self.net_ws.resize_with(levels, NetWorkspace::default);
                self.axes.resize(batch * n_axes, 0.0);
                let mut axis_row = vec![0.0; n_axes];
                for r in 0..batch {
                    model.axes_into(&inputs[r * d..(r + 1) * d], &mut axis_row);
                    for (a, &v) in axis_row.iter().enumerate() {
                        self.axes[a * batch + r] = v;
                    }
                }
                self.h.resize(n_axes, Vec::new());
                for buf in &mut self.h {
                    buf.resize(batch, 0.0);
                }
                // h[levels] is the innermost identity axis.
                let (head, tail) = self.h.split_at_mut(levels);
                tail[0].copy_from_slice(&self.axes[levels * batch..(levels + 1) * batch]);
                self.pair.resize(batch * 2, 0.0);
                for i in (1..=levels).rev() {
                    let h_next: &[f64] = if i == levels {
                        &tail[0]
                    } else {
                        // Already computed by the deeper level.
                        &head[i]
                    };
                    for r in 0..batch {
                        self.pair[r * 2] = self.axes[(i - 1) * batch + r];
                        self.pair[r * 2 + 1] = h_next[r];
                    }
                    self.net_ws[i - 1].forward(&level_nets[i - 1], &self.pair, batch);
                    let out = &self.net_ws[i - 1].outputs()[..batch];
                    head[i - 1].copy_from_slice(out);
                }
                // h[0] holds the predictions.
                &self.h[0]
            }
        }
    }

    /// Trained latent values of the last forward call, one slice per latent.
    pub fn latents(&self, model: &IannModel) -> Vec<&[f64]> {
        match &model.structure {
            ModelStructure::FirstLevel { .. } => vec![self.h[0].as_slice()],
            _ => (1..model.levels()).map(|i| self.h[i].as_slice()).collect(),
        }
    }

    /// Batched reverse pass accumulating into `grads`; `d_out` is the loss
    /// gradient w.r.t. the predictions. Must follow a matching `forward`.
    pub fn backward(
        &mut self,
        model: &IannModel,
        inputs: &[f64],
        d_out: &[f64],
        batch: usize,
        grads: &mut ModelGrads,
    ) {
        let d = model.dim();
        match &model.structure {
            ModelStructure::FirstLevel {
                singled_out,
                h_net,
                g_net,
            } => {
                let (h_ws, g_ws) = {
                    let (a, b) = self.net_ws.split_at_mut(1);
                    (&mut a[0], &mut b[0])
                };
                g_ws.backward(g_net, d_out, batch, &mut grads.nets[1]);
                self.dh.resize(batch, 0.0);
                for r in 0..batch {
                    self.dh[r] = g_ws.input_grads()[r * 2 + 1];
                }
                h_ws.backward(h_net, &self.dh, batch, &mut grads.nets[0]);
                let _ = (inputs, singled_out);
            }
            ModelStructure::Ovh { level_nets, .. } => {
                let levels = level_nets.len();
                self.dh.resize(batch, 0.0);
                self.dh.copy_from_slice(&d_out[..batch]);
                for i in 1..=levels {
                    let ws = &mut self.net_ws[i - 1];
                    ws.backward(&level_nets[i - 1], &self.dh, batch, &mut grads.nets[i - 1]);
                    for r in 0..batch {
                        self.dh[r] = ws.input_grads()[r * 2 + 1];
                    }
                }
            }
            ModelStructure::Dash {
                groups,
                order,
                level_nets,
                ..
            } => {
                let levels = level_nets.len();
                self.dh.resize(batch, 0.0);
                self.dh.copy_from_slice(&d_out[..batch]);
                // d_axis[a * batch + r]: gradient w.r.t. each combination
                // value.
                let mut d_axes = vec![0.0; (levels + 1) * batch];
                for i in 1..=levels {
                    let ws = &mut self.net_ws[i - 1];
                    ws.backward(&level_nets[i - 1], &self.dh, batch, &mut grads.nets[i - 1]);
                    for r in 0..batch {
                        d_axes[(i - 1) * batch + r] = ws.input_grads()[r * 2];
                        self.dh[r] = ws.input_grads()[r * 2 + 1];
                    }
                }
                // The innermost identity latent is the last axis.
                d_axes[levels * batch..(levels + 1) * batch].copy_from_slice(&self.dh[..batch]);
                for (pos, &g) in order.iter().enumerate() {
                    let gb = &mut grads.beta[g];
                    for r in 0..batch {
                        let dv = d_axes[pos * batch + r];
                        if dv == 0.0 {
                            continue;
                        }
                        let row = &inputs[r * d..(r + 1) * d];
                        for (slot, &j) in gb.iter_mut().zip(&groups[g]) {
                            *slot += dv * row[j];
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iann::net::Activation;

    fn tiny_spec() -> MlpSpec {
        MlpSpec {
            hidden: vec![5, 4],
            activation: Activation::Tanh,
        }
    }

    #[test]
    fn ovh_d3_has_one_latent() {
        let model = IannModel::ovh(
            Domain::unit(3),
            vec![2, 0, 1],
            &tiny_spec(),
            &RngStream::new(5),
        );
        let (f, latents) = model.forward(&[0.2, 0.8, 0.5]);
        assert_eq!(latents.len(), 1);
        assert!(f.is_finite());
        // Structural check: f = net0(x_j1, net1(x_j2, x_j3)).
        match &model.structure {
            ModelStructure::Ovh { order, level_nets } => {
                assert_eq!(order, &vec![2, 0, 1]);
                // Axes are (u3, u1, u2); the inner net couples the last two.
                let h1 = level_nets[1].forward_one(&[0.2, 0.8]);
                let want = level_nets[0].forward_one(&[0.5, h1]);
                assert!((f - want).abs() < 1e-14);
                assert!((latents[0] - h1).abs() < 1e-14);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn all_zero_weights_output_bias() {
        let mut model = IannModel::ovh(
            Domain::unit(4),
            vec![0, 1, 2, 3],
            &tiny_spec(),
            &RngStream::new(2),
        );
        if let ModelStructure::Ovh { level_nets, .. } = &mut model.structure {
            for net in level_nets.iter_mut() {
                for layer in &mut net.layers {
                    layer.w.iter_mut().for_each(|w| *w = 0.0);
                    layer.b.iter_mut().for_each(|b| *b = 0.0);
                }
            }
            level_nets[0].layers.last_mut().unwrap().b[0] = 3.5;
            level_nets[1].layers.last_mut().unwrap().b[0] = -1.25;
            level_nets[2].layers.last_mut().unwrap().b[0] = 0.5;
        }
        let (f, latents) = model.forward(&[0.1, 0.9, 0.4, 0.6]);
        assert_eq!(f, 3.5);
        assert_eq!(latents, vec![-1.25, 0.5]);
    }

    #[test]
    fn batched_forward_matches_single() {
        let model = IannModel::dash(
            Domain::unit(5),
            vec![vec![0, 2], vec![1, 4], vec![3]],
            vec![vec![0.6, -0.8], vec![0.5, 0.5], vec![1.0]],
            vec![2, 0, 1],
            &tiny_spec(),
            &RngStream::new(9),
        );
        let mut rng = RngStream::new(1);
        let batch = 17;
        let inputs: Vec<f64> = (0..batch * 5).map(|_| rng.next_f64()).collect();
        let mut ws = ModelWorkspace::default();
        let preds = ws.forward(&model, &inputs, batch).to_vec();
        let latents = ws.latents(&model).iter().map(|s| s.to_vec()).collect::<Vec<_>>();
        for r in 0..batch {
            let (f, lat) = model.forward(&inputs[r * 5..(r + 1) * 5]);
            assert!((preds[r] - f).abs() < 1e-14);
            for (k, &l) in lat.iter().enumerate() {
                assert!((latents[k][r] - l).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn bottleneck_carries_everything_but_the_axis() {
        // Two inputs with equal latent values must produce equal predictions
        // for any fixed level-1 axis value.
        let model = IannModel::first_level(Domain::unit(4), 1, &tiny_spec(), &RngStream::new(33));
        let u_a = [0.3, 0.5, 0.2, 0.9];
        let (_, lat_a) = model.forward(&u_a);
        // Construct a different point with the same latent by keeping the
        // h-net inputs and varying only the singled-out coordinate.
        let u_b = [0.3, 0.11, 0.2, 0.9];
        let (_, lat_b) = model.forward(&u_b);
        assert!((lat_a[0] - lat_b[0]).abs() < 1e-15, "same h-net inputs");
        if let ModelStructure::FirstLevel { g_net, .. } = &model.structure {
            let fa = g_net.forward_one(&[0.77, lat_a[0]]);
            let fb = g_net.forward_one(&[0.77, lat_b[0]]);
            assert!((fa - fb).abs() < 1e-12);
        }
    }

    #[test]
    fn combination_range_covers_signs() {
        assert_eq!(combination_range(&[1.0, -1.5, 0.7], 3), (-1.5, 1.7));
        assert_eq!(combination_range(&[0.5], 1), (0.0, 0.5));
    }
}
