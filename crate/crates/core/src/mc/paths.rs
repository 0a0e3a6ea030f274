use rand::Rng;
use rand_distr::StandardNormal;

use super::estimate::{map_paths, path_rng, McConfig};
use crate::error::{Error, Result};
use crate::market::{Flavor, MarketModel};

/// Which drift the simulated price follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Measure {
    /// Drift `mu` (times `x` in the geometric case).
    #[default]
    Statistical,
    /// Drift `r x`, the minimal martingale measure.
    Pricing,
}

/// Paths stored row-major: `values[p * (steps + 1) + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub paths: usize,
}

impl PathBatch {
    pub fn path(&self, p: usize) -> &[f64] {
        let n = self.times.len();
        &self.values[p * n..(p + 1) * n]
    }

    pub fn terminal(&self) -> Vec<f64> {
        (0..self.paths).map(|p| *self.path(p).last().unwrap()).collect()
    }
}

/// One exact transition of length `dt` driven by the standard normal `z`.
pub fn step_exact(model: &MarketModel, measure: Measure, x: f64, dt: f64, z: f64) -> f64 {
    let s = model.sigma;
    match (model.flavor, measure) {
        (Flavor::Geometric, m) => {
            let drift = if m == Measure::Statistical { model.mu } else { model.rate };
            x * ((drift - 0.5 * s * s) * dt + s * dt.sqrt() * z).exp()
        }
        (Flavor::Arithmetic, Measure::Statistical) => x + model.mu * dt + s * dt.sqrt() * z,
        (Flavor::Arithmetic, Measure::Pricing) => {
            let r = model.rate;
            if r.abs() * dt < 1e-10 {
                x + s * dt.sqrt() * z
            } else {
                let g = (r * dt).exp();
                x * g + s * ((g * g - 1.0) / (2.0 * r)).sqrt() * z
            }
        }
    }
}

/// Simulates `config.paths` paths on a uniform grid over `[t0, horizon]`.
/// With antithetic sampling, paths `2i` and `2i + 1` use opposite normals.
pub fn simulate_paths(
    model: &MarketModel,
    measure: Measure,
    t0: f64,
    x0: f64,
    horizon: f64,
    config: &McConfig,
) -> Result<PathBatch> {
    config.validate()?;
    if !(horizon > t0) {
        return Err(Error::InvalidInput(format!("horizon {horizon} must exceed start {t0}")));
    }
    if model.flavor == Flavor::Geometric && !(x0 > 0.0) {
        return Err(Error::InvalidInput("geometric paths need a positive start".into()));
    }
    let steps = config.steps;
    let dt = (horizon - t0) / steps as f64;
    let times: Vec<f64> = (0..=steps).map(|k| t0 + dt * k as f64).collect();
    let chunks = if config.antithetic { config.paths / 2 } else { config.paths };
    let rows = map_paths(chunks, |i| {
        let mut rng = path_rng(config.seed, i as u64);
        let copies = if config.antithetic { 2 } else { 1 };
        let mut out = vec![0.0; copies * (steps + 1)];
        out[0] = x0;
        if copies == 2 {
            out[steps + 1] = x0;
        }
        for k in 0..steps {
            let z: f64 = rng.sample(StandardNormal);
            out[k + 1] = step_exact(model, measure, out[k], dt, z);
            if copies == 2 {
                let b = steps + 1;
                out[b + k + 1] = step_exact(model, measure, out[b + k], dt, -z);
            }
        }
        out
    });
    Ok(PathBatch { times, values: rows.concat(), paths: config.paths })
}
