//! Built-in sample paths on uniform grids.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rough_path::Perturbation;

/// `steps + 1` equally spaced times on `[0, horizon]`.
pub fn uniform_times(steps: usize, horizon: f64) -> Vec<f64> {
    (0..=steps).map(|k| horizon * k as f64 / steps as f64).collect()
}

/// Path generators with their parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    /// `x_t = start + velocity · t`.
    Linear { velocity: Vec<f64>, #[serde(default)] start: Option<Vec<f64>> },
    /// `x_t = (t, t², …, t^d)`.
    Monomial { d: usize },
    /// Piecewise linear with `teeth` up and down strokes of height `amplitude`
    /// in every coordinate, the coordinates out of phase.
    Zigzag { d: usize, teeth: usize, amplitude: f64 },
    /// `x^i_t = Σ_k (a_{ik} sin(2πkt) + b_{ik} cos(2πkt) − b_{ik}) / k²`,
    /// Gaussian coefficients drawn from `seed`.
    SmoothRandom { d: usize, modes: usize, seed: u64 },
}

impl Generator {
    pub fn d(&self) -> usize {
        match self {
            Generator::Linear { velocity, .. } => velocity.len(),
            Generator::Monomial { d } | Generator::Zigzag { d, .. } | Generator::SmoothRandom { d, .. } => *d,
        }
    }

    /// Sample at the given times.
    pub fn sample(&self, times: &[f64]) -> Result<Vec<Vec<f64>>> {
        let d = self.d();
        if d == 0 {
            return Err(Error::InvalidParameter("generator with d = 0".into()));
        }
        Ok(match self {
            Generator::Linear { velocity, start } => {
                let x0 = start.clone().unwrap_or_else(|| vec![0.0; d]);
                if x0.len() != d {
                    return Err(Error::DimensionMismatch(format!("start of length {} for d={d}", x0.len())));
                }
                times.iter().map(|&t| x0.iter().zip(velocity).map(|(a, v)| a + v * t).collect()).collect()
            }
            Generator::Monomial { .. } => {
                times.iter().map(|&t| (1..=d as i32).map(|k| t.powi(k)).collect()).collect()
            }
            Generator::Zigzag { teeth, amplitude, .. } => {
                if *teeth == 0 {
                    return Err(Error::InvalidParameter("zigzag needs at least one tooth".into()));
                }
                let (t0, t1) = (times[0], times[times.len() - 1]);
                times
                    .iter()
                    .map(|&t| {
                        let u = (t - t0) / (t1 - t0) * *teeth as f64;
                        (0..d).map(|i| amplitude * triangle(u + i as f64 / (2.0 * d as f64))).collect()
                    })
                    .collect()
            }
            Generator::SmoothRandom { modes, seed, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let coeffs: Vec<Vec<(f64, f64)>> = (0..d)
                    .map(|_| (0..*modes).map(|_| (normal(&mut rng), normal(&mut rng))).collect())
                    .collect();
                times
                    .iter()
                    .map(|&t| {
                        coeffs
                            .iter()
                            .map(|c| {
                                c.iter()
                                    .enumerate()
                                    .map(|(k, (a, b))| {
                                        let w = std::f64::consts::TAU * (k + 1) as f64 * t;
                                        (a * w.sin() + b * (w.cos() - 1.0)) / ((k + 1) * (k + 1)) as f64
                                    })
                                    .sum()
                            })
                            .collect()
                    })
                    .collect()
            }
        })
    }
}

/// Triangle wave with period 1 and range `[0, 1]`, starting at 0.
fn triangle(u: f64) -> f64 {
    let f = u - u.floor();
    if f < 0.5 {
        2.0 * f
    } else {
        2.0 - 2.0 * f
    }
}

/// Box–Muller standard normal.
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Itô-type corrections `c_{ii}(t) = −scale·(t − t₀)/2` on every `[•_i]_i`.
pub fn ito_corrections(d: usize, times: &[f64], scale: f64) -> Vec<Perturbation> {
    (1..=d as u32)
        .map(|i| Perturbation { i, j: i, values: times.iter().map(|t| -scale * (t - times[0]) / 2.0).collect() })
        .collect()
}
