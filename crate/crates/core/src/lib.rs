//! Decomposes a differentiable black-box function into hierarchical
//! bottleneck-network structures, trains them from scratch, and emits
//! per-level visualization surfaces plus diagnostic reports.
//!
//! Pipeline: pick a function ([`blackbox`]), determine the hierarchical input
//! ordering or disjoint linear-combination groups ([`decompose`]), fit the
//! bottleneck network ([`iann`]), then render level surfaces, heatmaps, and
//! ICE/PD baselines ([`viz`]).

pub mod blackbox;
pub mod decompose;
pub mod iann;
pub mod numerics;
pub mod sampling;
pub mod viz;
