use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::RobotConfig;
use crate::decision::HeightMap;
use crate::error::{Error, Result};
use crate::physics::CameraModel;

/// Quadratic map from pixel row to Cartesian height: `a p^2 + b p + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub residual_rms: f64,
    pub pixel_min: f64,
    pub pixel_max: f64,
}

impl Calibration {
    pub fn height(&self, row: f64) -> f64 {
        (self.a * row + self.b) * row + self.c
    }

    /// True when the derivative keeps one sign over the calibrated rows.
    pub fn is_monotone(&self) -> bool {
        let d0 = 2.0 * self.a * self.pixel_min + self.b;
        let d1 = 2.0 * self.a * self.pixel_max + self.b;
        d0 * d1 > 0.0
    }
}

impl HeightMap for Calibration {
    fn height_m(&self, row_px: f64) -> f64 {
        self.height(row_px)
    }
}

/// Least-squares quadratic fit.
///
/// Rows are centered and scaled before solving by QR, then the coefficients
/// are mapped back to raw pixel units.
pub fn fit_calibration(pairs: &[(f64, f64)]) -> Result<Calibration> {
    if pairs.iter().any(|(p, y)| !p.is_finite() || !y.is_finite()) {
        return Err(Error::invalid("calibration pairs must be finite"));
    }
    let mut distinct: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::RankDeficient {
            distinct: distinct.len(),
        });
    }

    let n = pairs.len();
    let mean = pairs.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let scale = pairs
        .iter()
        .map(|p| (p.0 - mean).abs())
        .fold(0.0, f64::max);
    let design = DMatrix::from_fn(n, 3, |r, c| {
        let u = (pairs[r].0 - mean) / scale;
        u.powi(2 - c as i32)
    });
    let rhs = DVector::from_iterator(n, pairs.iter().map(|p| p.1));
    let qr = design.clone().qr();
    let qtb = qr.q().transpose() * &rhs;
    let coef = qr
        .r()
        .solve_upper_triangular(&qtb)
        .ok_or(Error::RankDeficient {
            distinct: distinct.len(),
        })?;
    let (a_u, b_u, c_u) = (coef[0], coef[1], coef[2]);

    // y = a_u ((p - m)/s)^2 + b_u (p - m)/s + c_u
    let s2 = scale * scale;
    let a = a_u / s2;
    let b = b_u / scale - 2.0 * a_u * mean / s2;
    let c = a_u * mean * mean / s2 - b_u * mean / scale + c_u;

    let residual = &design * &coef - &rhs;
    let residual_rms = (residual.norm_squared() / n as f64).sqrt();
    Ok(Calibration {
        a,
        b,
        c,
        residual_rms,
        pixel_min: distinct[0],
        pixel_max: *distinct.last().expect("non-empty"),
    })
}

/// Measurement plan for a simulated calibration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationNoise {
    pub positions: usize,
    pub repeats: usize,
    /// Standard deviation of the height reading (m).
    pub sigma: f64,
    pub seed: u64,
}

impl Default for CalibrationNoise {
    fn default() -> Self {
        Self {
            positions: 8,
            repeats: 10,
            sigma: 0.002,
            seed: 0,
        }
    }
}

/// (pixel row, measured height) pairs: the gripper visits `positions`
/// heights evenly spread over its range, each read `repeats` times.
pub fn synthesize_calibration_pairs(
    camera: &CameraModel,
    robot: &RobotConfig,
    noise: &CalibrationNoise,
) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let normal = Normal::new(0.0, noise.sigma.max(0.0)).expect("finite sigma");
    let lo = robot.y_start - robot.range / 2.0;
    let hi = robot.y_start + robot.range / 2.0;
    let mut pairs = Vec::with_capacity(noise.positions * noise.repeats);
    for k in 0..noise.positions {
        let frac = if noise.positions > 1 {
            k as f64 / (noise.positions - 1) as f64
        } else {
            0.5
        };
        let height = lo + frac * (hi - lo);
        let row = camera.height_to_row(height);
        for _ in 0..noise.repeats {
            pairs.push((row, height + normal.sample(&mut rng)));
        }
    }
    pairs
}
