use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::pairwise_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub paths: usize,
    pub steps: usize,
    pub seed: u64,
    pub antithetic: bool,
}

impl McConfig {
    pub fn new(paths: usize, steps: usize, seed: u64) -> Result<Self> {
        let c = Self { paths, steps, seed, antithetic: false };
        c.validate()?;
        Ok(c)
    }

    pub fn antithetic(mut self, on: bool) -> Self {
        self.antithetic = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths < 100 {
            return Err(Error::InvalidInput(format!("need at least 100 paths, got {}", self.paths)));
        }
        if self.steps == 0 {
            return Err(Error::InvalidInput("need at least one time step".into()));
        }
        if self.antithetic && self.paths % 2 != 0 {
            return Err(Error::InvalidInput("antithetic sampling needs an even path count".into()));
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> String {
        format!("paths={};steps={};seed={};antithetic={}", self.paths, self.steps, self.seed, self.antithetic)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    /// Number of independent samples (antithetic pairs count once).
    pub n: usize,
    pub fingerprint: String,
}

/// Sample mean and standard error with pairwise (order-fixed) summation.
pub fn estimate(samples: &[f64], fingerprint: &str) -> Result<McEstimate> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 samples, got {n}")));
    }
    let mean = pairwise_sum(samples) / n as f64;
    let sq: Vec<f64> = samples.iter().map(|s| (s - mean) * (s - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    Ok(McEstimate { mean, stderr: (var / n as f64).sqrt(), n, fingerprint: fingerprint.to_string() })
}

/// Generator for one path: the seed picks the key, the path index picks
/// the stream, so draws do not depend on which worker runs the path.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Evaluates `f` on every index in parallel and returns results in index
/// order.
pub fn map_paths<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}
