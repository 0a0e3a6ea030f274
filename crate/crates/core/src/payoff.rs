//! Terminal claims g(x).

use crate::error::{Error, Result};

/// A payoff given by linear interpolation of tabulated values, extended as a
/// constant outside the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    grid: Vec<f64>,
    values: Vec<f64>,
    lower: f64,
}

impl Tabulated {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let lower = values.iter().copied().fold(f64::INFINITY, f64::min);
        Self::with_lower_bound(grid, values, lower)
    }

    pub fn with_lower_bound(grid: Vec<f64>, values: Vec<f64>, lower: f64) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::DegenerateGrid(format!(
                "tabulated payoff needs at least 2 matching nodes, got {} and {}",
                grid.len(),
                values.len()
            )));
        }
        if grid.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("tabulated payoff must be finite".into()));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("tabulated grid must be strictly increasing".into()));
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        if !lower.is_finite() || lower > min {
            return Err(Error::InvalidInput(format!("lower bound {lower} exceeds the minimum value {min}")));
        }
        Ok(Self { grid, values, lower })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.grid.len();
        if x <= self.grid[0] {
            return self.values[0];
        }
        if x >= self.grid[n - 1] {
            return self.values[n - 1];
        }
        let i = self.grid.partition_point(|&g| g <= x) - 1;
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let w = (x - x0) / (x1 - x0);
        self.values[i] + w * (self.values[i + 1] - self.values[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payoff {
    Call { strike: f64 },
    Put { strike: f64 },
    /// 1_{x ≥ strike}, closed at the strike.
    Digital { strike: f64 },
    /// g(x) = x.
    Linear,
    Tabulated(Tabulated),
}

impl Payoff {
    pub fn call(strike: f64) -> Self {
        Payoff::Call { strike }
    }

    pub fn put(strike: f64) -> Self {
        Payoff::Put { strike }
    }

    pub fn digital(strike: f64) -> Self {
        Payoff::Digital { strike }
    }

    pub fn tabulated(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Ok(Payoff::Tabulated(Tabulated::new(grid, values)?))
    }

    /// `width * ln(1 + exp((x - strike) / width))` tabulated on `nodes`
    /// uniform points of `[lo, hi]`; a smooth stand-in for a call.
    pub fn softplus_call(strike: f64, width: f64, lo: f64, hi: f64, nodes: usize) -> Result<Self> {
        if !(width > 0.0) || !(hi > lo) || nodes < 2 {
            return Err(Error::InvalidInput(format!("bad softplus table: width {width}, [{lo}, {hi}], {nodes} nodes")));
        }
        let grid: Vec<f64> = (0..nodes).map(|i| lo + (hi - lo) * i as f64 / (nodes - 1) as f64).collect();
        let values = grid
            .iter()
            .map(|x| {
                let u = (x - strike) / width;
                width * (u.max(0.0) + (-u.abs()).exp().ln_1p())
            })
            .collect();
        Payoff::tabulated(grid, values)
    }

    /// The constant claim g ≡ c.
    pub fn constant(c: f64) -> Self {
        Payoff::Tabulated(Tabulated { grid: vec![0.0, 1.0], values: vec![c, c], lower: c })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Payoff::Call { strike } => (x - strike).max(0.0),
            Payoff::Put { strike } => (strike - x).max(0.0),
            Payoff::Digital { strike } => {
                if x >= *strike {
                    1.0
                } else {
                    0.0
                }
            }
            Payoff::Linear => x,
            Payoff::Tabulated(t) => t.eval(x),
        }
    }

    /// Lower bound of g. For `Linear` this is the bound on the positive
    /// half-line, where geometric prices live.
    pub fn lower_bound(&self) -> f64 {
        match self {
            Payoff::Tabulated(t) => t.lower,
            _ => 0.0,
        }
    }

    /// Points where g is not differentiable (kinks and jumps).
    pub fn kinks(&self) -> Vec<f64> {
        match self {
            Payoff::Call { strike } | Payoff::Put { strike } | Payoff::Digital { strike } => vec![*strike],
            Payoff::Linear => Vec::new(),
            Payoff::Tabulated(t) => t.grid.clone(),
        }
    }

    /// lim g(x + s u)/u as u → ∞ for direction s = ±1.
    pub fn growth_rate(&self, direction: f64) -> f64 {
        match self {
            Payoff::Call { .. } if direction > 0.0 => 1.0,
            Payoff::Put { .. } if direction < 0.0 => 1.0,
            Payoff::Linear => direction.signum(),
            _ => 0.0,
        }
    }

    /// Whether g grows like x as x → ∞ (it is bounded otherwise).
    pub fn grows_linearly_at_infinity(&self) -> bool {
        matches!(self, Payoff::Call { .. } | Payoff::Linear)
    }

    /// Far-field value of the discounted claim at time-to-maturity `tau`,
    /// used as a Dirichlet boundary condition.
    pub fn asymptotic_value(&self, x: f64, r: f64, tau: f64) -> f64 {
        let df = (-r * tau).exp();
        match self {
            Payoff::Call { strike } => (x - strike * df).max(0.0),
            Payoff::Put { strike } => (strike * df - x).max(0.0),
            Payoff::Digital { strike } => {
                if x >= *strike {
                    df
                } else {
                    0.0
                }
            }
            Payoff::Linear => x,
            Payoff::Tabulated(t) => df * t.eval(x),
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        match self {
            Payoff::Tabulated(t) => t.values.iter().all(|&v| v == 0.0),
            _ => false,
        }
    }
}
