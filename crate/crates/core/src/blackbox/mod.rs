//! The function under study: built-in benchmarks and parsed math
//! expressions, with analytic or finite-difference gradients and min-max
//! normalization between raw and unit-cube coordinates.
//!
//! Everything downstream (ordering, grouping, model fitting, plotting grids)
//! works in unit-cube coordinates; raw coordinates appear only at the
//! evaluation boundary and on plot axis labels.

mod builtins;
mod expr;

pub use builtins::Builtin;
pub use expr::{parse_expression, ExprNode, ParseError};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlackBoxError {
    #[error("invalid domain: {0}")]
    Domain(String),
    #[error("coordinate x{} = {value} outside [{lo}, {hi}]", index + 1)]
    OutOfDomain {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("evaluation produced a non-finite value at {point:?}")]
    NonFinite { point: Vec<f64> },
    #[error("dimension mismatch: function has {expected} inputs, point has {got}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unknown builtin function `{0}`")]
    UnknownBuiltin(String),
}

/// Cartesian input box: one closed interval per input, raw units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub intervals: Vec<(f64, f64)>,
}

impl Domain {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self, BlackBoxError> {
        if intervals.len() < 2 {
            return Err(BlackBoxError::Domain(format!(
                "need at least 2 inputs, got {}",
                intervals.len()
            )));
        }
        for (j, &(lo, hi)) in intervals.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(BlackBoxError::Domain(format!(
                    "interval for x{} must satisfy lo < hi, got [{lo}, {hi}]",
                    j + 1
                )));
            }
        }
        Ok(Self { intervals })
    }

    pub fn unit(d: usize) -> Self {
        Self {
            intervals: vec![(0.0, 1.0); d],
        }
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.intervals)
                .all(|(&v, &(lo, hi))| v >= lo && v <= hi)
    }

    pub fn check(&self, x: &[f64]) -> Result<(), BlackBoxError> {
        if x.len() != self.dim() {
            return Err(BlackBoxError::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        for (j, (&v, &(lo, hi))) in x.iter().zip(&self.intervals).enumerate() {
            if !(v >= lo && v <= hi) {
                return Err(BlackBoxError::OutOfDomain {
                    index: j,
                    value: v,
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }

    /// Min-max normalization of a raw point into `[0,1]^d`.
    pub fn normalize(&self, x_raw: &[f64]) -> Vec<f64> {
        x_raw
            .iter()
            .zip(&self.intervals)
            .map(|(&v, &(lo, hi))| (v - lo) / (hi - lo))
            .collect()
    }

    /// Inverse of [`Domain::normalize`].
    pub fn denormalize(&self, x_unit: &[f64]) -> Vec<f64> {
        x_unit
            .iter()
            .zip(&self.intervals)
            .map(|(&u, &(lo, hi))| lo + u * (hi - lo))
            .collect()
    }

    #[inline]
    pub fn width(&self, j: usize) -> f64 {
        let (lo, hi) = self.intervals[j];
        hi - lo
    }
}

/// How gradients are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GradientMode {
    Analytic,
    /// Central differences with per-coordinate step `rel_step * (hi - lo)`.
    FiniteDifference { rel_step: f64 },
}

pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Gradient sample; `boundary_shifted` flags coordinates where the central
/// stencil had to fall back to a one-sided one at the domain boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub partials: Vec<f64>,
    pub boundary_shifted: bool,
}

#[derive(Debug, Clone)]
enum Kind {
    Builtin(Builtin),
    Expression(ExprNode),
    Custom {
        eval: fn(&[f64]) -> f64,
        grad: fn(&[f64]) -> Vec<f64>,
    },
}

/// A scalar function of `d` inputs on a rectangular domain, evaluatable and
/// differentiable everywhere inside it.
#[derive(Debug, Clone)]
pub struct BlackBox {
    domain: Domain,
    kind: Kind,
    gradient_mode: GradientMode,
}

impl BlackBox {
    pub fn builtin(b: Builtin) -> Self {
        Self {
            domain: b.domain(),
            kind: Kind::Builtin(b),
            gradient_mode: GradientMode::Analytic,
        }
    }

    pub fn from_expression(text: &str, domain: Domain) -> Result<Self, BlackBoxError> {
        let node = parse_expression(text, domain.dim())?;
        Ok(Self {
            domain,
            kind: Kind::Expression(node),
            gradient_mode: GradientMode::FiniteDifference {
                rel_step: DEFAULT_FD_STEP,
            },
        })
    }

    /// Function given directly as evaluation and gradient routines; used for
    /// oracle functions in tests and benchmarks.
    pub fn from_parts(domain: Domain, eval: fn(&[f64]) -> f64, grad: fn(&[f64]) -> Vec<f64>) -> Self {
        Self {
            domain,
            kind: Kind::Custom { eval, grad },
            gradient_mode: GradientMode::Analytic,
        }
    }

    pub fn with_gradient_mode(mut self, mode: GradientMode) -> Self {
        self.gradient_mode = mode;
        self
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn gradient_mode(&self) -> GradientMode {
        self.gradient_mode
    }

    /// Evaluate at a raw-coordinate point inside the domain.
    pub fn evaluate(&self, x_raw: &[f64]) -> Result<f64, BlackBoxError> {
        self.domain.check(x_raw)?;
        self.evaluate_unchecked(x_raw)
    }

    fn evaluate_unchecked(&self, x_raw: &[f64]) -> Result<f64, BlackBoxError> {
        let value = match &self.kind {
            Kind::Builtin(b) => b.evaluate(x_raw),
            Kind::Expression(node) => node.evaluate(x_raw),
            Kind::Custom { eval, .. } => eval(x_raw),
        };
        if !value.is_finite() {
            return Err(BlackBoxError::NonFinite {
                point: x_raw.to_vec(),
            });
        }
        Ok(value)
    }

    /// Evaluate at a unit-cube point.
    pub fn evaluate_unit(&self, u: &[f64]) -> Result<f64, BlackBoxError> {
        self.evaluate(&self.domain.denormalize(u))
    }

    /// Full gradient in raw coordinates.
    pub fn gradient(&self, x_raw: &[f64]) -> Result<Gradient, BlackBoxError> {
        let all: Vec<usize> = (0..self.dim()).collect();
        self.gradient_subset(x_raw, &all)
    }

    /// Partial derivatives w.r.t. the selected coordinates (raw units),
    /// returned in the order of `indices`.
    pub fn gradient_subset(
        &self,
        x_raw: &[f64],
        indices: &[usize],
    ) -> Result<Gradient, BlackBoxError> {
        self.domain.check(x_raw)?;
        match (&self.kind, self.gradient_mode) {
            (Kind::Builtin(b), GradientMode::Analytic) => {
                let full = b.gradient(x_raw);
                Ok(Gradient {
                    partials: indices.iter().map(|&j| full[j]).collect(),
                    boundary_shifted: false,
                })
            }
            (Kind::Custom { grad, .. }, GradientMode::Analytic) => {
                let full = grad(x_raw);
                Ok(Gradient {
                    partials: indices.iter().map(|&j| full[j]).collect(),
                    boundary_shifted: false,
                })
            }
            (_, GradientMode::FiniteDifference { rel_step }) => {
                self.fd_gradient(x_raw, indices, rel_step)
            }
            (Kind::Expression(_), GradientMode::Analytic) => {
                // Expressions carry no symbolic derivative; fall back to FD.
                self.fd_gradient(x_raw, indices, DEFAULT_FD_STEP)
            }
        }
    }

    /// Gradient w.r.t. unit-cube coordinates at a unit-cube point: raw
    /// partials scaled by the interval widths.
    pub fn gradient_unit_subset(
        &self,
        u: &[f64],
        indices: &[usize],
    ) -> Result<Gradient, BlackBoxError> {
        let raw = self.domain.denormalize(u);
        let mut g = self.gradient_subset(&raw, indices)?;
        for (slot, &j) in g.partials.iter_mut().zip(indices) {
            *slot *= self.domain.width(j);
        }
        Ok(g)
    }

    fn fd_gradient(
        &self,
        x_raw: &[f64],
        indices: &[usize],
        rel_step: f64,
    ) -> Result<Gradient, BlackBoxError> {
        let mut partials = Vec::with_capacity(indices.len());
        let mut shifted = false;
        let mut point = x_raw.to_vec();
        for &j in indices {
            let (lo, hi) = self.domain.intervals[j];
            let h = rel_step * (hi - lo);
            let x = x_raw[j];
            let derivative = if x + h <= hi && x - h >= lo {
                point[j] = x + h;
                let fp = self.evaluate_unchecked(&point)?;
                point[j] = x - h;
                let fm = self.evaluate_unchecked(&point)?;
                (fp - fm) / (2.0 * h)
            } else {
                // One-sided second-order stencil shifted into the domain.
                shifted = true;
                let dir = if x + h > hi { -1.0 } else { 1.0 };
                let f0 = self.evaluate_unchecked(x_raw)?;
                point[j] = x + dir * h;
                let f1 = self.evaluate_unchecked(&point)?;
                point[j] = x + 2.0 * dir * h;
                let f2 = self.evaluate_unchecked(&point)?;
                dir * (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h)
            };
            point[j] = x;
            partials.push(derivative);
        }
        Ok(Gradient {
            partials,
            boundary_shifted: shifted,
        })
    }
}

/// Function description as it appears in run configs: either a builtin name
/// or an expression with an explicit domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    Builtin {
        builtin: String,
    },
    Expression {
        expression: String,
        domain: Vec<(f64, f64)>,
    },
}

impl FunctionSpec {
    pub fn build(&self) -> Result<BlackBox, BlackBoxError> {
        match self {
            FunctionSpec::Builtin { builtin } => {
                let b = Builtin::parse(builtin)
                    .ok_or_else(|| BlackBoxError::UnknownBuiltin(builtin.clone()))?;
                Ok(BlackBox::builtin(b))
            }
            FunctionSpec::Expression { expression, domain } => {
                BlackBox::from_expression(expression, Domain::new(domain.clone())?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    #[test]
    fn normalize_round_trips() {
        let b = BlackBox::builtin(Builtin::Borehole);
        let dom = b.domain();
        // Paper-stated range for the first borehole input.
        assert_eq!(dom.intervals[0], (0.05, 0.15));
        let u = dom.normalize(&[0.10, 25050.0, 89335.0, 1050.0, 89.55, 760.0, 1400.0, 10950.0]);
        assert!((u[0] - 0.5).abs() < 1e-12);
        let mut rng = RngStream::new(4);
        for _ in 0..200 {
            let unit: Vec<f64> = (0..dom.dim()).map(|_| rng.next_f64()).collect();
            let raw = dom.denormalize(&unit);
            let back = dom.normalize(&raw);
            for (a, b) in unit.iter().zip(&back) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let lo: Vec<f64> = dom.intervals.iter().map(|&(lo, _)| lo).collect();
        let hi: Vec<f64> = dom.intervals.iter().map(|&(_, hi)| hi).collect();
        assert_eq!(dom.denormalize(&vec![0.0; 8]), lo);
        assert_eq!(dom.denormalize(&vec![1.0; 8]), hi);
    }

    #[test]
    fn evaluate_checks_domain() {
        let b = BlackBox::builtin(Builtin::Quad5);
        assert!(matches!(
            b.evaluate(&[0.5, 0.5, 0.5, 0.5, 1.5]),
            Err(BlackBoxError::OutOfDomain { index: 4, .. })
        ));
        assert!(matches!(
            b.evaluate(&[0.5, 0.5]),
            Err(BlackBoxError::Dimension { .. })
        ));
    }

    #[test]
    fn product_gradient_by_fd() {
        let b = BlackBox::from_expression("x1*x2", Domain::new(vec![(0.0, 4.0), (0.0, 4.0)]).unwrap())
            .unwrap();
        let g = b.gradient(&[2.0, 3.0]).unwrap();
        assert!((g.partials[0] - 3.0).abs() < 1e-9);
        assert!((g.partials[1] - 2.0).abs() < 1e-9);
        assert!(!g.boundary_shifted);
    }

    #[test]
    fn fd_shifts_one_sided_at_boundary() {
        let b = BlackBox::from_expression("x1^2+x2", Domain::new(vec![(0.0, 1.0), (0.0, 1.0)]).unwrap())
            .unwrap();
        let g = b.gradient(&[0.0, 0.5]).unwrap();
        assert!(g.boundary_shifted);
        assert!(g.partials[0].abs() < 1e-7, "d(x^2)/dx at 0");
        assert!((g.partials[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn nonfinite_evaluation_is_an_error() {
        let b = BlackBox::from_expression("log(x1)", Domain::new(vec![(-1.0, 1.0), (0.0, 1.0)]).unwrap())
            .unwrap();
        assert!(matches!(
            b.evaluate(&[-0.5, 0.5]),
            Err(BlackBoxError::NonFinite { .. })
        ));
    }

    #[test]
    fn function_spec_round_trip() {
        let spec: FunctionSpec = serde_json::from_str(r#"{"builtin": "borehole"}"#).unwrap();
        assert_eq!(spec.build().unwrap().dim(), 8);
        let spec: FunctionSpec =
            serde_json::from_str(r#"{"expression": "x1+x2", "domain": [[0,1],[0,2]]}"#).unwrap();
        assert_eq!(spec.build().unwrap().dim(), 2);
        assert!(FunctionSpec::Builtin {
            builtin: "nope".into()
        }
        .build()
        .is_err());
    }
}
