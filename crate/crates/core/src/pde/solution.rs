use std::io::Write;

use super::grid::Grid1D;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Linear,
    Constrained,
    Barenblatt,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeInfo {
    pub kind: SolverKind,
    pub theta: f64,
}

/// Value surface on a space–time grid, with the price gradient.
#[derive(Debug, Clone)]
pub struct PdeSolution {
    pub grid: Grid1D,
    /// `values[i][j]` = v(t_i, x_j).
    pub values: Vec<Vec<f64>>,
    /// `delta[i][j]` = Dv(t_i, x_j) in price units.
    pub delta: Vec<Vec<f64>>,
    /// Nodes where the constraint projection raised the value.
    pub active: Vec<Vec<bool>>,
    pub scheme: SchemeInfo,
}

/// Price gradient of a slice: central differences in the solver coordinate,
/// one-sided at the edges, mapped to price units.
pub fn slice_delta(grid: &Grid1D, v: &[f64]) -> Vec<f64> {
    let y = grid.coords();
    let x = grid.nodes();
    let n = v.len();
    let mut d = vec![0.0; n];
    for j in 0..n {
        let dv_dy = if j == 0 {
            (v[1] - v[0]) / (y[1] - y[0])
        } else if j == n - 1 {
            (v[n - 1] - v[n - 2]) / (y[n - 1] - y[n - 2])
        } else {
            (v[j + 1] - v[j - 1]) / (y[j + 1] - y[j - 1])
        };
        d[j] = if grid.is_log_space() { dv_dy / x[j] } else { dv_dy };
    }
    d
}

/// Second price derivative of a slice at interior nodes; edge values copy
/// their neighbours.
pub fn slice_gamma(grid: &Grid1D, v: &[f64]) -> Vec<f64> {
    let x = grid.nodes();
    let h = grid.spacing();
    let n = v.len();
    let mut g = vec![0.0; n];
    for j in 1..n - 1 {
        let vyy = (v[j + 1] - 2.0 * v[j] + v[j - 1]) / (h * h);
        g[j] = if grid.is_log_space() {
            let vy = (v[j + 1] - v[j - 1]) / (2.0 * h);
            (vyy - vy) / (x[j] * x[j])
        } else {
            vyy
        };
    }
    g[0] = g[1];
    g[n - 1] = g[n - 2];
    g
}

impl PdeSolution {
    pub fn new(grid: Grid1D, values: Vec<Vec<f64>>, active: Vec<Vec<bool>>, scheme: SchemeInfo) -> Self {
        let delta = values.iter().map(|v| slice_delta(&grid, v)).collect();
        Self { grid, values, delta, active, scheme }
    }

    pub fn initial(&self) -> &[f64] {
        &self.values[0]
    }

    pub fn terminal(&self) -> &[f64] {
        self.values.last().unwrap()
    }

    /// v(t_i, x) by cubic Hermite interpolation in the solver coordinate,
    /// using the stored gradient as node slopes. Clamped outside the grid.
    pub fn value_at(&self, i: usize, x: f64) -> f64 {
        let g = &self.grid;
        let (j, w, _) = g.locate(g.coord_of(x));
        let v = &self.values[i];
        let d = &self.delta[i];
        let y = g.coords();
        let h = y[j + 1] - y[j];
        let slope = |k: usize| if g.is_log_space() { d[k] * g.nodes()[k] } else { d[k] };
        let (w2, w3) = (w * w, w * w * w);
        let h00 = 2.0 * w3 - 3.0 * w2 + 1.0;
        let h10 = w3 - 2.0 * w2 + w;
        let h01 = -2.0 * w3 + 3.0 * w2;
        let h11 = w3 - w2;
        h00 * v[j] + h10 * h * slope(j) + h01 * v[j + 1] + h11 * h * slope(j + 1)
    }

    /// Value at t = 0.
    pub fn price_at(&self, x: f64) -> f64 {
        self.value_at(0, x)
    }

    /// Dv(t_i, x) by linear interpolation, plus whether x was outside the
    /// grid and the edge value was used.
    pub fn delta_at(&self, i: usize, x: f64) -> (f64, bool) {
        let g = &self.grid;
        let (j, w, clamped) = g.locate(g.coord_of(x));
        let d = &self.delta[i];
        (d[j] + w * (d[j + 1] - d[j]), clamped)
    }

    /// Index of the last time node not after `t`.
    pub fn time_index(&self, t: f64) -> usize {
        let times = self.grid.times();
        times.partition_point(|&s| s <= t * (1.0 + 1e-12) + 1e-15).saturating_sub(1).min(times.len() - 1)
    }

    /// Writes `t,x,value,delta,constraint_active` rows for the selected time
    /// indices (all when `None`).
    pub fn write_csv<W: Write>(&self, out: &mut W, time_indices: Option<&[usize]>) -> Result<()> {
        writeln!(out, "t,x,value,delta,constraint_active")?;
        let all: Vec<usize> = (0..self.values.len()).collect();
        for &i in time_indices.unwrap_or(&all) {
            let t = self.grid.times()[i];
            for j in 0..self.grid.len() {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    crate::io::fmt_f64(t),
                    crate::io::fmt_f64(self.grid.nodes()[j]),
                    crate::io::fmt_f64(self.values[i][j]),
                    crate::io::fmt_f64(self.delta[i][j]),
                    u8::from(self.active[i][j])
                )?;
            }
        }
        Ok(())
    }
}
