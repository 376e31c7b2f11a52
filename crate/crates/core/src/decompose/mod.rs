//! Hierarchical input ordering and disjoint linear-combination grouping.
//!
//! A function of the form `g(x_j, h(x_others))` has the property that, with
//! the other inputs held fixed, its gradient with respect to those other
//! inputs stays colinear as `x_j` sweeps its range. The ordering algorithm
//! scores every candidate input by how far its stacked gradient samples are
//! from colinear (the projection error onto their top principal direction)
//! and singles out the best input per hierarchy level, greedily.
//!
//! Grouping generalizes the same colinearity statistic: inputs whose partial
//! derivatives keep a constant ratio everywhere act only through one linear
//! combination and can be merged into a single hierarchy axis.
//!
//! All gradients here are taken in unit-cube coordinates.

use crate::blackbox::{BlackBox, BlackBoxError};
use crate::numerics::{symmetric_eigh, top_principal_direction, Matrix, NumericsError, RngStream};
use crate::sampling::{grid_1d, lhd_maximin, Design, SamplingError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecomposeError {
    #[error("structural error: {0}")]
    Structural(String),
    #[error(transparent)]
    BlackBox(#[from] BlackBoxError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}

/// Sampling sizes for the gradient projection algorithm: `n_slices` fixed
/// settings of the not-yet-singled-out inputs, `n_line` sweep points of the
/// singled-out block per slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSettings {
    pub n_slices: usize,
    pub n_line: usize,
}

impl Default for ProjectionSettings {
    fn default() -> Self {
        Self {
            n_slices: 200,
            n_line: 20,
        }
    }
}

/// Maximin candidates for the small internal designs drawn here.
const DESIGN_CANDIDATES: usize = 10;

/// Per-slice record of the stacked gradient matrix and its projection error.
#[derive(Debug, Clone)]
pub struct SliceDiagnostics {
    /// Stacked gradient rows for this slice (`n_line` x remaining inputs).
    pub gradients: Matrix,
    /// Top principal direction; `None` when every gradient in the slice is
    /// zero.
    pub direction: Option<Vec<f64>>,
    /// Sum of squared residuals after projecting each row onto the direction.
    pub error: f64,
    /// Mean squared row norm.
    pub normalizer: f64,
}

/// All slices plus the aggregate projection error for one candidate input.
#[derive(Debug, Clone)]
pub struct ProjectionDiagnostics {
    pub candidate: usize,
    pub slices: Vec<SliceDiagnostics>,
    /// Mean over slices of `error / normalizer`; zero-gradient slices
    /// contribute zero.
    pub error: f64,
}

/// Candidate errors and the greedy choice at one hierarchy level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelDiagnostics {
    /// 1-based level number.
    pub level: usize,
    /// `(candidate, projection error)` pairs; candidates are 0-based input
    /// indices (or group indices in a grouping hierarchy). Empty when the
    /// level's choice was forced by a constraint.
    pub candidates: Vec<(usize, f64)>,
    pub chosen: usize,
}

/// Greedy input ordering with the per-level candidate errors retained.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderingResult {
    /// Permutation `j_1..j_d` of `0..d`.
    pub permutation: Vec<usize>,
    pub levels: Vec<LevelDiagnostics>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairError {
    pub inputs: (usize, usize),
    pub error: f64,
}

/// Disjoint input groups with their combination coefficients and hierarchy
/// order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupingResult {
    /// Groups in canonical order (ascending smallest member); each group
    /// sorted ascending. 0-based input indices.
    pub groups: Vec<Vec<usize>>,
    /// Unit-norm coefficients per group, first non-negligible entry positive,
    /// aligned with `groups`.
    pub beta: Vec<Vec<f64>>,
    /// Hierarchy order as indices into `groups`.
    pub order: Vec<usize>,
    pub levels: Vec<LevelDiagnostics>,
    /// Colinearity error for every input pair over the probe gradients.
    pub pair_errors: Vec<PairError>,
    /// Inputs with negligible gradient mass, attached after the pairwise
    /// merge.
    pub negligible: Vec<usize>,
    pub warnings: Vec<String>,
}

impl GroupingResult {
    pub fn p(&self) -> usize {
        self.groups.len()
    }

    /// Groups in hierarchy order.
    pub fn ordered_groups(&self) -> Vec<Vec<usize>> {
        self.order.iter().map(|&g| self.groups[g].clone()).collect()
    }

    /// True when every group is one input, i.e. the grouping collapses to the
    /// plain per-input hierarchy.
    pub fn is_trivial(&self) -> bool {
        self.groups.iter().all(|g| g.len() == 1)
    }
}

/// Settings for [`dash_groups`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupingSettings {
    /// Interior probe points for the colinearity statistics.
    pub n_probe: usize,
    /// A merge is accepted while the merged block's relative projection
    /// error (share of gradient mass its top principal direction misses)
    /// stays at or below this.
    pub ratio_tol: f64,
    /// Inputs whose share of the total mean squared gradient falls below
    /// this are flagged as near-inert in the diagnostics; their group
    /// placement carries little signal.
    pub negligible_share: f64,
    pub projection: ProjectionSettings,
}

impl Default for GroupingSettings {
    fn default() -> Self {
        Self {
            n_probe: 500,
            ratio_tol: 5e-4,
            negligible_share: 1e-3,
            projection: ProjectionSettings::default(),
        }
    }
}

/// Projection error and normalizer of a stacked gradient matrix.
fn stacked_projection(rows: Matrix) -> Result<SliceDiagnostics, DecomposeError> {
    let n = rows.rows;
    let normalizer = rows.data.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if rows.data.iter().all(|&v| v == 0.0) {
        return Ok(SliceDiagnostics {
            gradients: rows,
            direction: None,
            error: 0.0,
            normalizer: 0.0,
        });
    }
    let z = top_principal_direction(&rows)?;
    let mut error = 0.0;
    for m in 0..n {
        let row = rows.row(m);
        let proj: f64 = row.iter().zip(&z).map(|(a, b)| a * b).sum();
        error += row
            .iter()
            .zip(&z)
            .map(|(a, b)| {
                let r = a - proj * b;
                r * r
            })
            .sum::<f64>();
    }
    Ok(SliceDiagnostics {
        gradients: rows,
        direction: Some(z),
        error,
        normalizer,
    })
}

/// Gradient projection error for singling out input `j` after the inputs in
/// `active` were singled out at earlier levels.
///
/// Draws its own slice and sweep designs from `rng`; [`ovh_ordering`] draws
/// one design pair up front and shares it across levels instead.
pub fn projection_error(
    f: &BlackBox,
    active: &[usize],
    j: usize,
    settings: ProjectionSettings,
    rng: &RngStream,
) -> Result<ProjectionDiagnostics, DecomposeError> {
    let d = f.dim();
    let slices = lhd_maximin(settings.n_slices, d, DESIGN_CANDIDATES, &rng.substream(0))?;
    let lines = lhd_maximin(settings.n_line, d, DESIGN_CANDIDATES, &rng.substream(1))?;
    projection_error_with_designs(f, active, j, &slices, &lines)
}

fn projection_error_with_designs(
    f: &BlackBox,
    active: &[usize],
    j: usize,
    slices: &Design,
    lines: &Design,
) -> Result<ProjectionDiagnostics, DecomposeError> {
    let d = f.dim();
    assert!(!active.contains(&j), "candidate must not already be active");
    let mut varying = active.to_vec();
    varying.push(j);
    let remaining: Vec<usize> = (0..d).filter(|k| !varying.contains(k)).collect();
    if remaining.is_empty() {
        return Err(DecomposeError::Structural(
            "no remaining inputs to project onto".into(),
        ));
    }
    // Level 1 sweeps the candidate over an even grid; deeper levels vary the
    // whole singled-out block via the shared design projected onto it.
    let level1_grid = if active.is_empty() {
        Some(grid_1d(lines.n, (0.0, 1.0))?)
    } else {
        None
    };

    let mut point = vec![0.0; d];
    let mut diags = Vec::with_capacity(slices.n);
    let mut total = 0.0;
    for l in 0..slices.n {
        let slice = slices.point(l);
        for &k in &remaining {
            point[k] = slice[k];
        }
        let mut rows = Matrix::zeros(lines.n, remaining.len());
        for m in 0..lines.n {
            match &level1_grid {
                Some(grid) => point[j] = grid[m],
                None => {
                    let line = lines.point(m);
                    for &k in &varying {
                        point[k] = line[k];
                    }
                }
            }
            let grad = f.gradient_unit_subset(&point, &remaining)?;
            rows.data[m * remaining.len()..(m + 1) * remaining.len()]
                .copy_from_slice(&grad.partials);
        }
        let diag = stacked_projection(rows)?;
        if diag.normalizer > 0.0 {
            total += diag.error / diag.normalizer;
        }
        diags.push(diag);
    }
    Ok(ProjectionDiagnostics {
        candidate: j,
        slices: diags,
        error: total / slices.n as f64,
    })
}

/// Greedy hierarchical ordering of all inputs: at each level the remaining
/// input with the smallest projection error is singled out, ties going to the
/// lowest index.
pub fn ovh_ordering(
    f: &BlackBox,
    settings: ProjectionSettings,
    rng: &RngStream,
) -> Result<OrderingResult, DecomposeError> {
    let d = f.dim();
    if d < 3 {
        return Err(DecomposeError::Structural(format!(
            "ordering needs at least 3 inputs, got {d}; a 2-input function is already one exact surface"
        )));
    }
    let slices = lhd_maximin(settings.n_slices, d, DESIGN_CANDIDATES, &rng.substream(0))?;
    let lines = lhd_maximin(settings.n_line, d, DESIGN_CANDIDATES, &rng.substream(1))?;

    let mut chosen: Vec<usize> = Vec::with_capacity(d);
    let mut levels = Vec::with_capacity(d - 1);
    for level in 1..d {
        let mut candidates = Vec::new();
        let mut best: Option<(usize, f64)> = None;
        for j in (0..d).filter(|j| !chosen.contains(j)) {
            let diag = projection_error_with_designs(f, &chosen, j, &slices, &lines)?;
            candidates.push((j, diag.error));
            if best.is_none_or(|(_, e)| diag.error < e) {
                best = Some((j, diag.error));
            }
        }
        let (pick, _) = best.expect("at least two candidates per level");
        levels.push(LevelDiagnostics {
            level,
            candidates,
            chosen: pick,
        });
        chosen.push(pick);
    }
    let last = (0..d).find(|j| !chosen.contains(j)).expect("one input left");
    chosen.push(last);
    Ok(OrderingResult {
        permutation: chosen,
        levels,
    })
}

/// Full unit-cube gradient rows at every probe point.
fn probe_gradients(f: &BlackBox, n_probe: usize, rng: &RngStream) -> Result<Matrix, DecomposeError> {
    let d = f.dim();
    let all: Vec<usize> = (0..d).collect();
    let probes = lhd_maximin(n_probe, d, DESIGN_CANDIDATES, rng)?;
    let mut rows = Matrix::zeros(n_probe, d);
    for (i, u) in probes.iter().enumerate() {
        let grad = f.gradient_unit_subset(u, &all)?;
        rows.data[i * d..(i + 1) * d].copy_from_slice(&grad.partials);
    }
    Ok(rows)
}

/// Relative projection error of the gradient block over `members`, computed
/// from the probe Gram matrix: `(trace - lambda_max) / trace`, the share of
/// gradient mass the top principal direction fails to capture.
fn block_rel_error(gram: &Matrix, members: &[usize]) -> Result<f64, DecomposeError> {
    let m = members.len();
    let mut sub = Matrix::zeros(m, m);
    for (a, &i) in members.iter().enumerate() {
        for (b, &k) in members.iter().enumerate() {
            sub.set(a, b, gram.get(i, k));
        }
    }
    let trace: f64 = (0..m).map(|i| sub.get(i, i)).sum();
    if trace <= 0.0 {
        return Ok(0.0);
    }
    let (vals, _) = symmetric_eigh(&sub, 1e-9)?;
    Ok(((trace - vals[0]) / trace).max(0.0))
}

/// Finds the disjoint linear-combination groups, their coefficients, and the
/// group hierarchy order.
///
/// Inputs that act only through one linear combination have gradient blocks
/// of rank one, so groups are built by greedy agglomeration: starting from
/// singletons, repeatedly merge the two groups whose combined gradient block
/// has the smallest relative projection error, while that error stays within
/// `ratio_tol`. For a pair of inputs the statistic is exactly the
/// constant-gradient-ratio test; mass weighting makes near-inert inputs (an
/// identically zero gradient being the extreme case) fold into the dominant
/// compatible group with a near-zero coefficient and a warning.
pub fn dash_groups(
    f: &BlackBox,
    settings: GroupingSettings,
    rng: &RngStream,
) -> Result<GroupingResult, DecomposeError> {
    let d = f.dim();
    let grads = probe_gradients(f, settings.n_probe, &rng.substream(0))?;
    let gram = grads.gram();
    let total_msq: f64 = (0..d).map(|i| gram.get(i, i)).sum::<f64>() / settings.n_probe as f64;

    let mut warnings = Vec::new();
    if total_msq == 0.0 {
        warnings.push("function gradient is identically zero over the probe design".into());
        return Ok(GroupingResult {
            groups: (0..d).map(|j| vec![j]).collect(),
            beta: vec![vec![0.0]; d],
            order: (0..d).collect(),
            levels: Vec::new(),
            pair_errors: Vec::new(),
            negligible: (0..d).collect(),
            warnings,
        });
    }

    let share = |j: usize| gram.get(j, j) / settings.n_probe as f64 / total_msq;
    let negligible: Vec<usize> = (0..d)
        .filter(|&j| share(j) <= settings.negligible_share)
        .collect();
    for &j in &negligible {
        warnings.push(if gram.get(j, j) == 0.0 {
            format!(
                "input x{} has identically zero gradient; it joins a group with coefficient 0",
                j + 1
            )
        } else {
            format!(
                "input x{} is near-inert (gradient share {:.2e}); its group placement carries little signal",
                j + 1,
                share(j)
            )
        });
    }

    // Pairwise colinearity error from the Gram matrix, kept for the report:
    // for a 2-column block the residual share is lambda_2 / trace.
    let mut pair_errors = Vec::new();
    for i in 0..d {
        for k in (i + 1)..d {
            let (a, b, c) = (gram.get(i, i), gram.get(i, k), gram.get(k, k));
            let tr = a + c;
            let error = if tr <= 0.0 {
                0.0
            } else {
                let lam_max = 0.5 * (a + c) + (0.25 * (a - c) * (a - c) + b * b).sqrt();
                ((tr - lam_max) / tr).max(0.0)
            };
            pair_errors.push(PairError {
                inputs: (i, k),
                error,
            });
        }
    }

    let mut groups: Vec<Vec<usize>> = (0..d).map(|j| vec![j]).collect();
    while groups.len() > 1 {
        let mut best: Option<(usize, usize, f64)> = None;
        for gi in 0..groups.len() {
            for gj in (gi + 1)..groups.len() {
                let mut merged = groups[gi].clone();
                merged.extend_from_slice(&groups[gj]);
                let rel = block_rel_error(&gram, &merged)?;
                if best.is_none_or(|(_, _, b)| rel < b) {
                    best = Some((gi, gj, rel));
                }
            }
        }
        let (gi, gj, rel) = best.expect("at least one candidate merge");
        if rel > settings.ratio_tol {
            break;
        }
        let absorbed = groups.remove(gj);
        groups[gi].extend(absorbed);
        groups[gi].sort_unstable();
        groups.sort_by_key(|g| g[0]);
    }
    groups.sort_by_key(|g| g[0]);

    // Coefficients: top principal direction of each group's gradient block.
    let mut beta = Vec::with_capacity(groups.len());
    for group in &groups {
        if group.len() == 1 {
            beta.push(vec![1.0]);
            continue;
        }
        let mut block = Matrix::zeros(settings.n_probe, group.len());
        for m in 0..settings.n_probe {
            for (c, &j) in group.iter().enumerate() {
                block.set(m, c, grads.get(m, j));
            }
        }
        if block.data.iter().all(|&v| v == 0.0) {
            beta.push(vec![0.0; group.len()]);
            continue;
        }
        beta.push(top_principal_direction(&block)?);
    }

    let (order, levels) = order_groups(f, &groups, &beta, None, settings.projection, rng)?;
    Ok(GroupingResult {
        groups,
        beta,
        order,
        levels,
        pair_errors,
        negligible,
        warnings,
    })
}

/// Re-orders an existing grouping so the group containing `must_lead` comes
/// first; the remaining groups follow the standard greedy criterion. When the
/// lead group is already first the grouping is returned unchanged.
pub fn dash_ordering_constrained(
    f: &BlackBox,
    grouping: &GroupingResult,
    must_lead: usize,
    settings: ProjectionSettings,
    rng: &RngStream,
) -> Result<GroupingResult, DecomposeError> {
    let lead = grouping
        .groups
        .iter()
        .position(|g| g.contains(&must_lead))
        .ok_or_else(|| {
            DecomposeError::Structural(format!(
                "input x{} is not part of the grouping",
                must_lead + 1
            ))
        })?;
    if grouping.order.first() == Some(&lead) {
        return Ok(grouping.clone());
    }
    let (order, levels) = order_groups(
        f,
        &grouping.groups,
        &grouping.beta,
        Some(lead),
        settings,
        rng,
    )?;
    Ok(GroupingResult {
        order,
        levels,
        ..grouping.clone()
    })
}

/// Greedy hierarchy order over groups: the gradient projection algorithm run
/// on the reduced function of combination values. The partial derivative
/// w.r.t. a combination value is the coefficient-weighted sum of the member
/// partials; slices fix the blocks of the not-yet-chosen groups and the sweep
/// varies the blocks of the chosen-plus-candidate groups. With all-singleton
/// groups this reduces exactly to [`ovh_ordering`]'s scoring.
fn order_groups(
    f: &BlackBox,
    groups: &[Vec<usize>],
    beta: &[Vec<f64>],
    forced_first: Option<usize>,
    settings: ProjectionSettings,
    rng: &RngStream,
) -> Result<(Vec<usize>, Vec<LevelDiagnostics>), DecomposeError> {
    let p = groups.len();
    if p == 1 {
        return Ok((vec![0], Vec::new()));
    }
    let d = f.dim();
    let slices = lhd_maximin(settings.n_slices, d, DESIGN_CANDIDATES, &rng.substream(1))?;
    let lines = lhd_maximin(settings.n_line, d, DESIGN_CANDIDATES, &rng.substream(2))?;
    let level1_grid = grid_1d(settings.n_line, (0.0, 1.0))?;

    let mut chosen: Vec<usize> = Vec::new();
    let mut levels = Vec::new();
    for level in 1..p {
        if level == 1 {
            if let Some(lead) = forced_first {
                chosen.push(lead);
                levels.push(LevelDiagnostics {
                    level,
                    candidates: Vec::new(),
                    chosen: lead,
                });
                continue;
            }
        }
        let mut candidates = Vec::new();
        let mut best: Option<(usize, f64)> = None;
        for c in (0..p).filter(|c| !chosen.contains(c)) {
            let e =
                group_projection_error(f, groups, beta, &chosen, c, &slices, &lines, &level1_grid)?;
            candidates.push((c, e));
            if best.is_none_or(|(_, be)| e < be) {
                best = Some((c, e));
            }
        }
        let (pick, _) = best.expect("at least two group candidates");
        levels.push(LevelDiagnostics {
            level,
            candidates,
            chosen: pick,
        });
        chosen.push(pick);
    }
    let last = (0..p).find(|c| !chosen.contains(c)).expect("one group left");
    chosen.push(last);
    Ok((chosen, levels))
}

#[allow(clippy::too_many_arguments)]
fn group_projection_error(
    f: &BlackBox,
    groups: &[Vec<usize>],
    beta: &[Vec<f64>],
    active: &[usize],
    candidate: usize,
    slices: &Design,
    lines: &Design,
    level1_grid: &[f64],
) -> Result<f64, DecomposeError> {
    let d = f.dim();
    let remaining_groups: Vec<usize> = (0..groups.len())
        .filter(|g| *g != candidate && !active.contains(g))
        .collect();
    if remaining_groups.is_empty() {
        return Err(DecomposeError::Structural(
            "no remaining groups to project onto".into(),
        ));
    }
    let varying_coords: Vec<usize> = active
        .iter()
        .chain(std::iter::once(&candidate))
        .flat_map(|&g| groups[g].iter().copied())
        .collect();
    let remaining_coords: Vec<usize> = remaining_groups
        .iter()
        .flat_map(|&g| groups[g].iter().copied())
        .collect();
    // A single-input candidate at level 1 sweeps the even grid, matching the
    // per-input algorithm when every group is a singleton.
    let single_sweep = active.is_empty() && groups[candidate].len() == 1;

    let mut point = vec![0.0; d];
    let mut total = 0.0;
    for l in 0..slices.n {
        let slice = slices.point(l);
        for &k in &remaining_coords {
            point[k] = slice[k];
        }
        let mut rows = Matrix::zeros(lines.n, remaining_groups.len());
        for m in 0..lines.n {
            if single_sweep {
                point[groups[candidate][0]] = level1_grid[m];
            } else {
                let line = lines.point(m);
                for &k in &varying_coords {
                    point[k] = line[k];
                }
            }
            let grad = f.gradient_unit_subset(&point, &remaining_coords)?;
            let mut offset = 0;
            for (slot, &g) in remaining_groups.iter().enumerate() {
                let len = groups[g].len();
                let v: f64 = grad.partials[offset..offset + len]
                    .iter()
                    .zip(&beta[g])
                    .map(|(a, b)| a * b)
                    .sum();
                rows.set(m, slot, v);
                offset += len;
            }
        }
        let diag = stacked_projection(rows)?;
        if diag.normalizer > 0.0 {
            total += diag.error / diag.normalizer;
        }
    }
    Ok(total / slices.n as f64)
}
