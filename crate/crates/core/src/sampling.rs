//! Space-filling designs on the unit cube: maximin Latin hypercube designs
//! for the gradient-projection stage and a boundary-augmented variant for
//! generating training data, so fitted surfaces stay accurate out to the
//! domain faces.

use crate::numerics::RngStream;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

/// A point set in `[0,1]^d`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub n: usize,
    pub d: usize,
    points: Vec<f64>,
}

impl Design {
    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.d)
    }

    /// Squared Euclidean distance between the closest pair of points.
    pub fn min_squared_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.n {
            let pi = self.point(i);
            for j in (i + 1)..self.n {
                let pj = self.point(j);
                let mut dist = 0.0;
                for k in 0..self.d {
                    let diff = pi[k] - pj[k];
                    dist += diff * diff;
                }
                if dist < best {
                    best = dist;
                }
            }
        }
        best
    }

    /// CSV dump with header `x1..xd`, one row per point.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for j in 0..self.d {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("x{}", j + 1));
        }
        out.push('\n');
        for p in self.iter() {
            for (j, v) in p.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(&format!("{v:.17e}"));
            }
            out.push('\n');
        }
        out
    }
}

/// One random Latin hypercube: each column is a shuffled assignment of the
/// `n` strata `[k/n, (k+1)/n)` with uniform jitter inside each stratum.
fn random_lhd(n: usize, d: usize, rng: &mut RngStream) -> Design {
    let mut points = vec![0.0; n * d];
    let mut strata: Vec<usize> = (0..n).collect();
    for j in 0..d {
        for (k, s) in strata.iter_mut().enumerate() {
            *s = k;
        }
        rng.shuffle(&mut strata);
        for (i, &s) in strata.iter().enumerate() {
            points[i * d + j] = (s as f64 + rng.next_f64()) / n as f64;
        }
    }
    Design { n, d, points }
}

/// Best-of-candidates maximin Latin hypercube design.
///
/// Generates `n_candidates` independent random LHDs (candidate `c` drawn from
/// `rng.substream(c)`, so candidates could be evaluated in parallel) and
/// keeps the one with the largest minimum pairwise distance, ties broken by
/// the lowest candidate index.
pub fn lhd_maximin(
    n: usize,
    d: usize,
    n_candidates: usize,
    rng: &RngStream,
) -> Result<Design, SamplingError> {
    if n < 2 {
        return Err(SamplingError::Parameter(format!("need n >= 2, got {n}")));
    }
    if d < 1 {
        return Err(SamplingError::Parameter("need d >= 1".into()));
    }
    if n_candidates < 1 {
        return Err(SamplingError::Parameter("need n_candidates >= 1".into()));
    }
    let mut best: Option<(f64, Design)> = None;
    for c in 0..n_candidates {
        let mut sub = rng.substream(c as u64);
        let cand = random_lhd(n, d, &mut sub);
        let dist = cand.min_squared_distance();
        if best.as_ref().is_none_or(|(b, _)| dist > *b) {
            best = Some((dist, cand));
        }
    }
    Ok(best.expect("n_candidates >= 1").1)
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn grid_1d(n: usize, interval: (f64, f64)) -> Result<Vec<f64>, SamplingError> {
    let (lo, hi) = interval;
    if n < 2 {
        return Err(SamplingError::Parameter(format!("need n >= 2, got {n}")));
    }
    if !(lo < hi) {
        return Err(SamplingError::Parameter(format!(
            "need lo < hi, got [{lo}, {hi}]"
        )));
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| if i == n - 1 { hi } else { lo + i as f64 * step })
        .collect())
}

/// Training design: a maximin LHD over the cube plus a fraction of points
/// projected onto randomly chosen faces (one coordinate snapped to 0 or 1).
/// Plain LHDs undersample the faces, which degrades the fitted surfaces near
/// the domain edges.
///
/// Substream layout: interior points come from `rng.substream(0)`, boundary
/// points from `rng.substream(1)`; with `boundary_fraction = 0` the result is
/// bit-identical to `lhd_maximin(n, d, n_candidates, rng.substream(0))`.
pub fn training_design(
    n: usize,
    d: usize,
    boundary_fraction: f64,
    n_candidates: usize,
    rng: &RngStream,
) -> Result<Design, SamplingError> {
    if !(0.0..=0.5).contains(&boundary_fraction) {
        return Err(SamplingError::Parameter(format!(
            "boundary_fraction must be in [0, 0.5], got {boundary_fraction}"
        )));
    }
    let n_boundary = (boundary_fraction * n as f64).round() as usize;
    let n_interior = n - n_boundary;
    let interior = lhd_maximin(n_interior, d, n_candidates, &rng.substream(0))?;
    if n_boundary == 0 {
        return Ok(interior);
    }
    let mut boundary_rng = rng.substream(1);
    let mut boundary = random_lhd(n_boundary, d, &mut boundary_rng);
    for i in 0..n_boundary {
        let coord = boundary_rng.next_below(d as u64) as usize;
        let side = boundary_rng.next_below(2) as f64;
        boundary.points[i * d + coord] = side;
    }
    let mut points = interior.points;
    points.extend_from_slice(&boundary.points);
    Ok(Design { n, d, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Sorting a column and flooring by 1/n must yield exactly 0..n-1.
    fn assert_stratified(design: &Design, n: usize) {
        for j in 0..design.d {
            let mut col: Vec<f64> = design.iter().map(|p| p[j]).collect();
            col.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (k, v) in col.iter().enumerate() {
                assert_eq!(
                    (v * n as f64).floor() as usize,
                    k,
                    "column {j} breaks stratification at rank {k} (value {v})"
                );
            }
        }
    }

    #[test]
    fn lhd_two_points_one_dim() {
        let design = lhd_maximin(2, 1, 1, &RngStream::new(1)).unwrap();
        let mut vals: Vec<f64> = design.iter().map(|p| p[0]).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((0.0..0.5).contains(&vals[0]));
        assert!((0.5..1.0).contains(&vals[1]));
    }

    #[test]
    fn lhd_columns_stratified() {
        for &(n, d) in &[(10usize, 3usize), (100, 8), (1000, 4)] {
            let design = lhd_maximin(n, d, 3, &RngStream::new(n as u64)).unwrap();
            assert_stratified(&design, n);
        }
    }

    #[test]
    fn maximin_beats_median_random_lhd() {
        let (n, d) = (40, 3);
        let best = lhd_maximin(n, d, 100, &RngStream::new(11)).unwrap();
        let mut singles: Vec<f64> = (0..50)
            .map(|k| {
                lhd_maximin(n, d, 1, &RngStream::new(1000 + k))
                    .unwrap()
                    .min_squared_distance()
            })
            .collect();
        singles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = singles[singles.len() / 2];
        assert!(
            best.min_squared_distance() >= median,
            "best-of-100 {} below median {}",
            best.min_squared_distance(),
            median
        );
    }

    #[test]
    fn maximin_includes_singleton_candidate() {
        // The candidate set includes the single random LHD with the same
        // substream, so the maximin result can never be worse.
        let rng = RngStream::new(77);
        let single = lhd_maximin(10, 3, 1, &rng).unwrap();
        let best = lhd_maximin(10, 3, 50, &rng).unwrap();
        assert!(best.min_squared_distance() >= single.min_squared_distance());
    }

    #[test]
    fn lhd_rejects_tiny_n() {
        assert!(lhd_maximin(1, 2, 1, &RngStream::new(0)).is_err());
    }

    #[test]
    fn grid_endpoints_and_spacing() {
        assert_eq!(grid_1d(3, (0.0, 1.0)).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(grid_1d(2, (-1.0, 1.0)).unwrap(), vec![-1.0, 1.0]);
        let g = grid_1d(5, (0.0, std::f64::consts::PI)).unwrap();
        for w in g.windows(2) {
            assert!((w[1] - w[0] - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        }
        assert!(grid_1d(1, (0.0, 1.0)).is_err());
        assert!(grid_1d(4, (1.0, 1.0)).is_err());
    }

    #[test]
    fn training_design_zero_fraction_matches_plain_lhd() {
        let rng = RngStream::new(3);
        let td = training_design(50, 4, 0.0, 10, &rng).unwrap();
        let plain = lhd_maximin(50, 4, 10, &rng.substream(0)).unwrap();
        assert_eq!(td, plain);
    }

    #[test]
    fn training_design_boundary_count_exact() {
        let td = training_design(100, 3, 0.2, 5, &RngStream::new(8)).unwrap();
        let on_boundary = td
            .iter()
            .filter(|p| p.iter().any(|&v| v == 0.0 || v == 1.0))
            .count();
        assert_eq!(on_boundary, 20);
    }

    #[test]
    fn training_design_interior_still_stratified() {
        let td = training_design(1000, 4, 0.2, 2, &RngStream::new(21)).unwrap();
        let interior = Design {
            n: 800,
            d: 4,
            points: td.points[..800 * 4].to_vec(),
        };
        assert_stratified(&interior, 800);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let design = lhd_maximin(4, 2, 1, &RngStream::new(2)).unwrap();
        let csv = design.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("x1,x2"));
        assert_eq!(lines.count(), 4);
    }
}
