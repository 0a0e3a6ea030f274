use crate::error::{Error, Result};
use crate::market::{Flavor, MarketModel};

/// Far-field truncation in standard deviations of the terminal law.
pub const TRUNCATION_SDS: f64 = 8.0;

/// Space–time grid. Space nodes are uniform in the solver coordinate, which
/// is ln x for log grids and x otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    coords: Vec<f64>,
    nodes: Vec<f64>,
    log_space: bool,
    times: Vec<f64>,
}

fn uniform(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / (n - 1) as f64;
    let mut v: Vec<f64> = (0..n).map(|j| lo + h * j as f64).collect();
    v[n - 1] = hi;
    v
}

impl Grid1D {
    fn validate(space_nodes: usize, time_steps: usize) -> Result<()> {
        if space_nodes < 16 {
            return Err(Error::DegenerateGrid(format!("need at least 16 space nodes, got {space_nodes}")));
        }
        if time_steps < 8 {
            return Err(Error::DegenerateGrid(format!("need at least 8 time steps, got {time_steps}")));
        }
        Ok(())
    }

    fn build(coords: Vec<f64>, log_space: bool, maturity: f64, time_steps: usize) -> Result<Self> {
        if !(maturity > 0.0 && maturity.is_finite()) {
            return Err(Error::DegenerateGrid(format!("maturity must be positive, got {maturity}")));
        }
        if coords.windows(2).any(|w| w[1] <= w[0]) || coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::DegenerateGrid("space nodes must be finite and strictly increasing".into()));
        }
        let nodes = if log_space { coords.iter().map(|y| y.exp()).collect() } else { coords.clone() };
        Ok(Self { coords, nodes, log_space, times: uniform(0.0, maturity, time_steps + 1) })
    }

    /// Uniform grid in ln x over `[ln lo, ln hi]`.
    pub fn log_uniform(lo: f64, hi: f64, space_nodes: usize, maturity: f64, time_steps: usize) -> Result<Self> {
        Self::validate(space_nodes, time_steps)?;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::DegenerateGrid(format!("log grid needs 0 < lo < hi, got [{lo}, {hi}]")));
        }
        Self::build(uniform(lo.ln(), hi.ln(), space_nodes), true, maturity, time_steps)
    }

    pub fn linear_uniform(lo: f64, hi: f64, space_nodes: usize, maturity: f64, time_steps: usize) -> Result<Self> {
        Self::validate(space_nodes, time_steps)?;
        if hi <= lo {
            return Err(Error::DegenerateGrid(format!("need lo < hi, got [{lo}, {hi}]")));
        }
        Self::build(uniform(lo, hi, space_nodes), false, maturity, time_steps)
    }

    /// Grid centred on `center` (in price units) with a node exactly at the
    /// centre, spanning ±`half_width` in the solver coordinate.
    fn centred(center_coord: f64, half_width: f64, log_space: bool, space_nodes: usize, maturity: f64, time_steps: usize) -> Result<Self> {
        Self::validate(space_nodes, time_steps)?;
        let h = 2.0 * half_width / (space_nodes - 1) as f64;
        let jc = space_nodes / 2;
        let coords: Vec<f64> = (0..space_nodes)
            .map(|j| {
                if j == jc {
                    center_coord
                } else {
                    center_coord + h * (j as f64 - jc as f64)
                }
            })
            .collect();
        Self::build(coords, log_space, maturity, time_steps)
    }

    /// Model-adapted grid: log-space for geometric models, linear for
    /// arithmetic ones, truncated at ±8 standard deviations of the terminal
    /// law at volatility `sigma_max`, with the spot on a node.
    pub fn for_model(model: &MarketModel, sigma_max: f64, maturity: f64, space_nodes: usize, time_steps: usize) -> Result<Self> {
        let sd = sigma_max * maturity.max(0.0).sqrt();
        match model.flavor {
            Flavor::Geometric => {
                let half = (TRUNCATION_SDS * sd).max(0.5);
                Self::centred(model.spot.ln(), half, true, space_nodes, maturity, time_steps)
            }
            Flavor::Arithmetic => {
                let half = (TRUNCATION_SDS * sd).max(0.5 * model.spot.abs().max(1.0));
                Self::centred(model.spot, half, false, space_nodes, maturity, time_steps)
            }
        }
    }

    /// Replaces the time nodes by t_k = T(1 − (1 − k/N)^power), which
    /// concentrates steps near maturity for power > 1.
    pub fn with_time_clustering(mut self, power: f64) -> Result<Self> {
        if !(power >= 1.0 && power.is_finite()) {
            return Err(Error::DegenerateGrid(format!("clustering power must be ≥ 1, got {power}")));
        }
        self.times = clustered_times(self.maturity(), self.time_steps(), power);
        Ok(self)
    }

    pub fn with_times(mut self, times: Vec<f64>) -> Result<Self> {
        if times.len() < 9 || times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::DegenerateGrid("time nodes must start at 0, increase, and number at least 9".into()));
        }
        self.times = times;
        Ok(self)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn is_log_space(&self) -> bool {
        self.log_space
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn time_steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn maturity(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Uniform spacing of the solver coordinate.
    pub fn spacing(&self) -> f64 {
        (self.coords[self.coords.len() - 1] - self.coords[0]) / (self.coords.len() - 1) as f64
    }

    pub fn coord_of(&self, x: f64) -> f64 {
        if self.log_space {
            x.ln()
        } else {
            x
        }
    }

    /// Index of the cell containing coordinate `y` and the position inside
    /// it, clamped to the grid. The flag reports whether clamping happened.
    pub fn locate(&self, y: f64) -> (usize, f64, bool) {
        let n = self.coords.len();
        let (lo, hi) = (self.coords[0], self.coords[n - 1]);
        if !(y >= lo) {
            return (0, 0.0, true);
        }
        if y >= hi {
            return (n - 2, 1.0, y > hi);
        }
        let h = self.spacing();
        let mut j = (((y - lo) / h) as usize).min(n - 2);
        // Correct for rounding of the uniform-index guess.
        while j > 0 && self.coords[j] > y {
            j -= 1;
        }
        while j + 2 < n && self.coords[j + 1] <= y {
            j += 1;
        }
        let w = (y - self.coords[j]) / (self.coords[j + 1] - self.coords[j]);
        (j, w, false)
    }
}

pub fn clustered_times(maturity: f64, steps: usize, power: f64) -> Vec<f64> {
    let mut t: Vec<f64> = (0..=steps)
        .map(|k| maturity * (1.0 - (1.0 - k as f64 / steps as f64).powf(power)))
        .collect();
    t[steps] = maturity;
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_grid_contains_spot_as_node() {
        let m = MarketModel::geometric(100.0, 0.0, 0.2, 0.0).unwrap();
        for n in [16, 17, 400, 401] {
            let g = Grid1D::for_model(&m, 0.2, 1.0, n, 8).unwrap();
            assert!(g.nodes().iter().any(|&x| (x - 100.0).abs() < 1e-12));
            let y = g.coords();
            let width = y[n - 1] - y[0];
            assert!(width <= 3.2 + 1e-12 && width > 3.2 * (1.0 - 2.0 / n as f64));
        }
    }

    #[test]
    fn rejects_small_grids() {
        assert!(Grid1D::linear_uniform(0.0, 1.0, 15, 1.0, 8).is_err());
        assert!(Grid1D::linear_uniform(0.0, 1.0, 16, 1.0, 7).is_err());
    }

    #[test]
    fn clustering_and_location() {
        let t = clustered_times(1.0, 10, 2.0);
        assert_eq!(t[0], 0.0);
        assert_eq!(t[10], 1.0);
        assert!(t[10] - t[9] < t[1] - t[0]);
        let g = Grid1D::linear_uniform(0.0, 10.0, 21, 1.0, 8).unwrap();
        let (j, w, c) = g.locate(3.25);
        assert_eq!((j, c), (6, false));
        assert!((w - 0.5).abs() < 1e-12);
        assert!(g.locate(-1.0).2 && g.locate(11.0).2 && !g.locate(10.0).2);
    }
}
