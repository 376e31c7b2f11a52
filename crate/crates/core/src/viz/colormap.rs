//! Embedded colormaps. The default is a cubehelix ramp (Green 2011, Bull.
//! Astr. Soc. India 39, 289): monotonically increasing perceived brightness
//! with a controlled hue rotation, generated as a fixed 256-entry RGB table.

use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Colormap {
    Cubehelix,
    Gray,
}

impl Colormap {
    pub fn parse(name: &str) -> Option<Colormap> {
        match name {
            "cubehelix" => Some(Colormap::Cubehelix),
            "gray" | "grey" => Some(Colormap::Gray),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Colormap::Cubehelix => "cubehelix",
            Colormap::Gray => "gray",
        }
    }

    /// Color for `t` in `[0, 1]`.
    pub fn color(&self, t: f64) -> [u8; 3] {
        let t = t.clamp(0.0, 1.0);
        let idx = (t * 255.0).round() as usize;
        match self {
            Colormap::Cubehelix => cubehelix_lut()[idx],
            Colormap::Gray => {
                let v = (t * 255.0).round() as u8;
                [v, v, v]
            }
        }
    }
}

fn cubehelix_lut() -> &'static [[u8; 3]; 256] {
    static LUT: OnceLock<[[u8; 3]; 256]> = OnceLock::new();
    LUT.get_or_init(|| {
        let (start, rotations, hue, gamma) = (0.5, -1.5, 1.2, 1.0);
        let mut lut = [[0u8; 3]; 256];
        for (i, entry) in lut.iter_mut().enumerate() {
            let t = i as f64 / 255.0;
            let angle = std::f64::consts::TAU * (start / 3.0 + rotations * t);
            let fract = t.powf(gamma);
            let amp = hue * fract * (1.0 - fract) / 2.0;
            let (sin, cos) = angle.sin_cos();
            let channels = [
                fract + amp * (-0.14861 * cos + 1.78277 * sin),
                fract + amp * (-0.29227 * cos - 0.90649 * sin),
                fract + amp * (1.97294 * cos),
            ];
            for (c, &v) in entry.iter_mut().zip(&channels) {
                *c = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
            }
        }
        lut
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubehelix_brightness_increases() {
        let lum = |c: [u8; 3]| 0.299 * c[0] as f64 + 0.587 * c[1] as f64 + 0.114 * c[2] as f64;
        let map = Colormap::Cubehelix;
        assert_eq!(map.color(0.0), [0, 0, 0]);
        assert_eq!(map.color(1.0), [255, 255, 255]);
        let mut prev = -1.0;
        for i in 0..=64 {
            let l = lum(map.color(i as f64 / 64.0));
            assert!(l >= prev - 1.0, "brightness must be monotone (step {i})");
            prev = l;
        }
    }
}
