use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    Observed(f64),
    /// Both errors vanish: the scheme is exact on this problem.
    Exact,
    /// The coarser error is zero but the finer one is not.
    Undefined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub space_nodes: usize,
    pub time_steps: usize,
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub levels: Vec<Level>,
    /// Observed order for each consecutive pair of levels with an error.
    pub orders: Vec<Order>,
    pub reference: f64,
    /// Set when the error did not decrease along the sequence.
    pub non_monotone: bool,
}

/// Observed orders log₂(e_h / e_{h/2}) over a doubling sequence of grids.
/// Errors are measured against `reference` when given, else against the
/// finest level (which then carries no order of its own).
pub fn estimate_convergence_order<F>(mut solve: F, levels: &[(usize, usize)], reference: Option<f64>) -> Result<ConvergenceReport>
where
    F: FnMut(usize, usize) -> Result<f64>,
{
    if levels.len() < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 grids, got {}", levels.len())));
    }
    let mut values = Vec::with_capacity(levels.len());
    for &(j, n) in levels {
        values.push(solve(j, n)?);
    }
    let (reference, measured) = match reference {
        Some(r) => (r, levels.len()),
        None => (*values.last().unwrap(), levels.len() - 1),
    };
    // Differences at round-off level count as zero error.
    let noise = 64.0 * f64::EPSILON * (1.0 + reference.abs());
    let out: Vec<Level> = levels
        .iter()
        .zip(&values)
        .map(|(&(j, n), &v)| {
            let e = (v - reference).abs();
            Level { space_nodes: j, time_steps: n, value: v, error: if e <= noise { 0.0 } else { e } }
        })
        .collect();
    let mut orders = Vec::new();
    let mut non_monotone = false;
    for w in out[..measured].windows(2) {
        let (e0, e1) = (w[0].error, w[1].error);
        orders.push(if e0 == 0.0 && e1 == 0.0 {
            Order::Exact
        } else if e0 == 0.0 || e1 == 0.0 {
            Order::Undefined
        } else {
            Order::Observed((e0 / e1).log2())
        });
        if e1 > e0 {
            non_monotone = true;
        }
    }
    Ok(ConvergenceReport { levels: out, orders, reference, non_monotone })
}
