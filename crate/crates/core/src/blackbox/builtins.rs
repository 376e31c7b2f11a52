//! Built-in benchmark functions with analytic gradients.

use super::Domain;
use std::f64::consts::PI;

/// Registry of built-in functions. `Linear(d)` is the d-input sum, mainly
/// useful as a sanity oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    /// `x1 * sin(2*pi/x2 * x3 + x4)`: amplitude, wavelength, position, phase.
    Harmonic,
    /// `(5*x1 + x2 + x3 + x4 + x5 - 4.5)^2` on the unit cube.
    Quad5,
    /// Product of a bump-plus-linear factor and a squared linear factor,
    /// built from three disjoint linear combinations of nine inputs.
    Dash9,
    /// Water flow rate between two aquifers through a borehole; the classic
    /// eight-input surrogate-modeling benchmark.
    Borehole,
    /// `x1 + ... + xd` on the unit cube.
    Linear(usize),
}

impl Builtin {
    /// Parses names like `harmonic`, `quad5`, `dash9`, `borehole`,
    /// `linear-7`.
    pub fn parse(name: &str) -> Option<Builtin> {
        match name {
            "harmonic" => Some(Builtin::Harmonic),
            "quad5" => Some(Builtin::Quad5),
            "dash9" => Some(Builtin::Dash9),
            "borehole" => Some(Builtin::Borehole),
            _ => {
                let d: usize = name.strip_prefix("linear-")?.parse().ok()?;
                (d >= 2).then_some(Builtin::Linear(d))
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            Builtin::Harmonic => "harmonic".into(),
            Builtin::Quad5 => "quad5".into(),
            Builtin::Dash9 => "dash9".into(),
            Builtin::Borehole => "borehole".into(),
            Builtin::Linear(d) => format!("linear-{d}"),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Builtin::Harmonic => 4,
            Builtin::Quad5 => 5,
            Builtin::Dash9 => 9,
            Builtin::Borehole => 8,
            Builtin::Linear(d) => *d,
        }
    }

    pub fn domain(&self) -> Domain {
        let intervals = match self {
            Builtin::Harmonic => vec![(0.5, 2.0), (0.5, 2.0), (0.0, 1.0), (0.0, PI)],
            Builtin::Quad5 => vec![(0.0, 1.0); 5],
            Builtin::Dash9 => vec![(0.0, 1.0); 9],
            Builtin::Borehole => vec![
                (0.05, 0.15),
                (100.0, 50_000.0),
                (63_070.0, 115_600.0),
                (990.0, 1110.0),
                (63.1, 116.0),
                (700.0, 820.0),
                (1120.0, 1680.0),
                (9855.0, 12_045.0),
            ],
            Builtin::Linear(d) => vec![(0.0, 1.0); *d],
        };
        Domain::new(intervals).expect("builtin domains are valid")
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match self {
            Builtin::Harmonic => x[0] * (2.0 * PI / x[1] * x[2] + x[3]).sin(),
            Builtin::Quad5 => {
                let s = 5.0 * x[0] + x[1] + x[2] + x[3] + x[4] - 4.5;
                s * s
            }
            Builtin::Dash9 => {
                let (h, _, vm) = dash9_parts(x);
                h * vm * vm
            }
            Builtin::Borehole => {
                let (num, den, _, _) = borehole_parts(x);
                num / den
            }
            Builtin::Linear(_) => x.iter().sum(),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Builtin::Harmonic => {
                let theta = 2.0 * PI / x[1] * x[2] + x[3];
                let (s, c) = theta.sin_cos();
                vec![
                    s,
                    x[0] * c * (-2.0 * PI * x[2] / (x[1] * x[1])),
                    x[0] * c * (2.0 * PI / x[1]),
                    x[0] * c,
                ]
            }
            Builtin::Quad5 => {
                let s = 5.0 * x[0] + x[1] + x[2] + x[3] + x[4] - 4.5;
                vec![10.0 * s, 2.0 * s, 2.0 * s, 2.0 * s, 2.0 * s]
            }
            Builtin::Dash9 => {
                let (h, w, vm) = dash9_parts(x);
                let bump = 7.0 * (-4.0 * w * w).exp();
                let dh_dw = -8.0 * w * bump;
                let outer = vm * vm;
                let inner = 2.0 * vm * h;
                vec![
                    outer * dh_dw * 1.5,
                    outer * dh_dw,
                    outer * dh_dw * -2.0,
                    outer * 2.0,
                    outer * -1.5,
                    outer * 0.7,
                    inner,
                    inner * -1.5,
                    inner * 0.7,
                ]
            }
            Builtin::Borehole => {
                let (num, den, l, k) = borehole_parts(x);
                let f = num / den;
                let s5 = x[2] / x[4];
                // f = 2*pi*x3*(x4-x6) / den with den = l*(1 + x3/x5) + k*x3.
                let dden = [
                    -(1.0 + s5) / x[0] - 2.0 * k * x[2] / x[0],
                    (1.0 + s5) / x[1],
                    l / x[4] + k,
                    0.0,
                    -l * x[2] / (x[4] * x[4]),
                    0.0,
                    k * x[2] / x[6],
                    -k * x[2] / x[7],
                ];
                let mut g = vec![0.0; 8];
                for j in 0..8 {
                    g[j] = -f / den * dden[j];
                }
                // Direct numerator contributions.
                g[2] += f / x[2];
                g[3] += 2.0 * PI * x[2] / den;
                g[5] -= 2.0 * PI * x[2] / den;
                g
            }
            Builtin::Linear(d) => vec![1.0; *d],
        }
    }
}

/// (h factor, inner combination w, shifted outer combination v - 0.3).
fn dash9_parts(x: &[f64]) -> (f64, f64, f64) {
    let w = 1.5 * x[0] + x[1] - 2.0 * x[2];
    let h = 7.0 * (-4.0 * w * w).exp() + 2.0 * x[3] - 1.5 * x[4] + 0.7 * x[5] - 1.5;
    let v = x[6] - 1.5 * x[7] + 0.7 * x[8];
    (h, w, v - 0.3)
}

/// (numerator, denominator, log ratio, conductance term coefficient).
fn borehole_parts(x: &[f64]) -> (f64, f64, f64, f64) {
    let l = (x[1] / x[0]).ln();
    let k = 2.0 * x[6] / (x[0] * x[0] * x[7]);
    let den = l * (1.0 + x[2] / x[4]) + k * x[2];
    let num = 2.0 * PI * x[2] * (x[3] - x[5]);
    (num, den, l, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blackbox::{BlackBox, GradientMode};
    use crate::numerics::RngStream;
    use crate::sampling::lhd_maximin;

    #[test]
    fn parse_names() {
        assert_eq!(Builtin::parse("borehole"), Some(Builtin::Borehole));
        assert_eq!(Builtin::parse("linear-7"), Some(Builtin::Linear(7)));
        assert_eq!(Builtin::parse("linear-1"), None);
        assert_eq!(Builtin::parse("nope"), None);
    }

    #[test]
    fn harmonic_known_value() {
        // sin(2*pi/1 * 0.25 + 0) = sin(pi/2) = 1.
        let v = Builtin::Harmonic.evaluate(&[1.0, 1.0, 0.25, 0.0]);
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quad5_known_value() {
        assert_eq!(Builtin::Quad5.evaluate(&[0.0; 5]), 20.25);
    }

    #[test]
    fn quad5_gradient_formula() {
        let x = [0.3, 0.1, 0.9, 0.5, 0.2];
        let s = 5.0 * x[0] + x[1] + x[2] + x[3] + x[4] - 4.5;
        let g = Builtin::Quad5.gradient(&x);
        let want = [10.0 * s, 2.0 * s, 2.0 * s, 2.0 * s, 2.0 * s];
        for (a, b) in g.iter().zip(&want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn borehole_midpoint_against_independent_oracle() {
        let x = [0.1f64, 25_050.0, 89_335.0, 1050.0, 89.55, 760.0, 1400.0, 10_950.0];
        // Second implementation, factored the way the formula is usually
        // written: 2*pi*Tu*(Hu-Hl) / [ln(r/rw)*(1 + 2*L*Tu/(ln(r/rw)*rw^2*Kw)
        // + Tu/Tl)].
        let (rw, r, tu, hu, tl, hl, length, kw) =
            (x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7]);
        let lnr = (r / rw).ln();
        let oracle = 2.0 * PI * tu * (hu - hl)
            / (lnr * (1.0 + 2.0 * length * tu / (lnr * rw * rw * kw) + tu / tl));
        let v = Builtin::Borehole.evaluate(&x);
        assert!((v - oracle).abs() <= 1e-10 * oracle.abs());
        assert!((v - 70.872_912_636_818_94).abs() < 1e-9);
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        for b in [
            Builtin::Harmonic,
            Builtin::Quad5,
            Builtin::Dash9,
            Builtin::Borehole,
            Builtin::Linear(6),
        ] {
            let analytic = BlackBox::builtin(b);
            let fd = BlackBox::builtin(b)
                .with_gradient_mode(GradientMode::FiniteDifference { rel_step: 1e-6 });
            let d = analytic.dim();
            let design = lhd_maximin(1000, d, 1, &RngStream::new(99)).unwrap();
            let mut worst: f64 = 0.0;
            for u in design.iter() {
                let raw = analytic.domain().denormalize(u);
                let ga = analytic.gradient(&raw).unwrap().partials;
                let gf = fd.gradient(&raw).unwrap().partials;
                let scale = ga
                    .iter()
                    .fold(0.0f64, |m, v| m.max(v.abs()))
                    .max(1e-9);
                for (a, f) in ga.iter().zip(&gf) {
                    worst = worst.max((a - f).abs() / scale);
                }
            }
            assert!(worst <= 1e-5, "{}: max rel error {worst}", b.name());
        }
    }

    #[test]
    fn parsed_expressions_match_builtins() {
        let cases = [
            (Builtin::Harmonic, "x1*sin(2*pi/x2*x3+x4)"),
            (Builtin::Quad5, "(5*x1+x2+x3+x4+x5-4.5)^2"),
            (
                Builtin::Dash9,
                "(7*exp(-4*(1.5*x1+x2-2*x3)^2)+2*x4-1.5*x5+0.7*x6-1.5)*(x7-1.5*x8+0.7*x9-0.3)^2",
            ),
        ];
        for (b, text) in cases {
            let builtin = BlackBox::builtin(b);
            let parsed = BlackBox::from_expression(text, b.domain()).unwrap();
            let design = lhd_maximin(1000, b.dim(), 1, &RngStream::new(5)).unwrap();
            for u in design.iter() {
                let raw = builtin.domain().denormalize(u);
                let a = builtin.evaluate(&raw).unwrap();
                let e = parsed.evaluate(&raw).unwrap();
                assert!(
                    (a - e).abs() <= 1e-10 * (1.0 + a.abs()),
                    "{}: {a} vs {e}",
                    b.name()
                );
            }
        }
    }

    #[test]
    fn harmonic_fd_close_to_analytic() {
        let analytic = BlackBox::builtin(Builtin::Harmonic);
        let fd = BlackBox::builtin(Builtin::Harmonic)
            .with_gradient_mode(GradientMode::FiniteDifference {
                rel_step: super::super::DEFAULT_FD_STEP,
            });
        let design = lhd_maximin(100, 4, 1, &RngStream::new(31)).unwrap();
        let mut worst: f64 = 0.0;
        for u in design.iter() {
            let raw = analytic.domain().denormalize(u);
            let ga = analytic.gradient(&raw).unwrap().partials;
            let gf = fd.gradient(&raw).unwrap().partials;
            let scale = ga.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
            for (a, f) in ga.iter().zip(&gf) {
                worst = worst.max((a - f).abs() / scale);
            }
        }
        assert!(worst <= 1e-6, "max rel error {worst}");
    }
}
