//! Convex constraint sets K, their support functions, and face-lifting.

use crate::error::{Error, Result};
use crate::payoff::{Payoff, Tabulated};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    NonNegative,
    NonPositive,
    Free,
}

/// A closed convex set containing the origin.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintSet {
    FullSpace { dim: usize },
    /// Product of intervals `[lo_i, hi_i]`; bounds may be infinite.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Cone { signs: Vec<Sign> },
    /// Coordinates with `zeroed[i]` are pinned to 0, the others are free.
    Subspace { zeroed: Vec<bool> },
}

/// Result of a membership test. `witness` is a unit direction ζ with
/// δ_K(ζ) − ζ′η < 0 when the point is outside.
#[derive(Debug, Clone, PartialEq)]
pub struct Membership {
    pub inside: bool,
    pub witness: Option<Vec<f64>>,
    pub margin: f64,
}

impl ConstraintSet {
    pub fn full_space(dim: usize) -> Self {
        ConstraintSet::FullSpace { dim }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self::boxed(vec![lo], vec![hi]).expect("interval must contain 0")
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidInput("box bounds must have equal, nonzero length".into()));
        }
        for (l, h) in lo.iter().zip(&hi) {
            if l.is_nan() || h.is_nan() || *l > 0.0 || *h < 0.0 {
                return Err(Error::InvalidInput(format!("box [{l}, {h}] must contain 0")));
            }
        }
        Ok(ConstraintSet::Box { lo, hi })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConstraintSet::FullSpace { dim } => *dim,
            ConstraintSet::Box { lo, .. } => lo.len(),
            ConstraintSet::Cone { signs } => signs.len(),
            ConstraintSet::Subspace { zeroed } => zeroed.len(),
        }
    }

    /// δ_K(ζ) = sup_{η∈K} η′ζ. Every variant is a product set, so the
    /// support function is a sum of one-dimensional terms.
    pub fn support(&self, zeta: &[f64]) -> f64 {
        debug_assert_eq!(zeta.len(), self.dim());
        let mut total = 0.0;
        for (i, &z) in zeta.iter().enumerate() {
            let term = self.support_coord(i, z);
            if term == f64::INFINITY {
                return f64::INFINITY;
            }
            total += term;
        }
        total
    }

    fn support_coord(&self, i: usize, z: f64) -> f64 {
        if z == 0.0 {
            return 0.0;
        }
        match self {
            ConstraintSet::FullSpace { .. } => f64::INFINITY,
            ConstraintSet::Box { lo, hi } => {
                if z > 0.0 {
                    if hi[i] == f64::INFINITY {
                        f64::INFINITY
                    } else {
                        z * hi[i]
                    }
                } else if lo[i] == f64::NEG_INFINITY {
                    f64::INFINITY
                } else {
                    z * lo[i]
                }
            }
            ConstraintSet::Cone { signs } => match (signs[i], z > 0.0) {
                (Sign::NonNegative, false) | (Sign::NonPositive, true) => 0.0,
                _ => f64::INFINITY,
            },
            ConstraintSet::Subspace { zeroed } => {
                if zeroed[i] {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// One-dimensional support value δ_K(u) for d = 1.
    pub fn support_1d(&self, u: f64) -> f64 {
        self.support_coord(0, u)
    }

    fn coord_contains(&self, i: usize, e: f64) -> bool {
        match self {
            ConstraintSet::FullSpace { .. } => true,
            ConstraintSet::Box { lo, hi } => lo[i] <= e && e <= hi[i],
            ConstraintSet::Cone { signs } => match signs[i] {
                Sign::NonNegative => e >= 0.0,
                Sign::NonPositive => e <= 0.0,
                Sign::Free => true,
            },
            ConstraintSet::Subspace { zeroed } => !zeroed[i] || e == 0.0,
        }
    }

    /// Membership by the separation criterion inf_{|ζ|=1} δ_K(ζ) − ζ′η ≥ 0,
    /// evaluated over `domain_directions` and cross-checked against the
    /// variant's geometry.
    pub fn contains(&self, eta: &[f64]) -> Membership {
        let d = self.dim();
        assert_eq!(eta.len(), d, "dimension mismatch");
        let geometric = (0..d).all(|i| self.coord_contains(i, eta[i]));
        let mut best: Option<(Vec<f64>, f64)> = None;
        for zeta in domain_directions(self, 8) {
            let delta = self.support(&zeta);
            if delta == f64::INFINITY {
                continue;
            }
            let margin = delta - zeta.iter().zip(eta).map(|(z, e)| z * e).sum::<f64>();
            if best.as_ref().map_or(true, |(_, m)| margin < *m) {
                best = Some((zeta, margin));
            }
        }
        let (witness, margin) = best.unwrap_or((vec![0.0; d], 0.0));
        let by_support = margin >= 0.0;
        debug_assert_eq!(geometric, by_support, "membership criteria disagree at {eta:?}");
        if geometric {
            Membership { inside: true, witness: None, margin }
        } else {
            Membership { inside: false, witness: Some(witness), margin }
        }
    }
}

/// Unit directions on the sphere in d ≤ 2, always including ±eᵢ; directions
/// with finite δ_K come first. In d = 2 the count is rounded up to a
/// multiple of 4 so that the axes are part of the uniform fan.
pub fn domain_directions(k: &ConstraintSet, count: usize) -> Vec<Vec<f64>> {
    let d = k.dim();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    if d == 2 {
        let n = count.max(4).div_ceil(4) * 4;
        for j in 0..n {
            let a = std::f64::consts::TAU * j as f64 / n as f64;
            let (s, c) = a.sin_cos();
            // Snap the axes so that ±eᵢ are exact.
            let snap = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
            dirs.push(vec![snap(c), snap(s)]);
        }
    } else {
        for i in 0..d {
            for s in [1.0, -1.0] {
                let mut e = vec![0.0; d];
                e[i] = s;
                dirs.push(e);
            }
        }
    }
    dirs.sort_by_key(|z| k.support(z).is_infinite());
    dirs
}

/// Range of ζ in the proportion face-lift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProportionRange {
    /// ζ ∈ K.
    #[default]
    ConstraintSet,
    /// ζ ∈ dom(δ_K).
    SupportDomain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Amount,
    Proportion(ProportionRange),
    ConcaveEnvelope,
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> (f64, f64) {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if (b - a).abs() <= 1e-13 * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximizes `f` over `[a, b]` (both finite): uniform scan, golden-section
/// refinement around the best scan point, plus the supplied candidates.
fn max_on_segment<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, candidates: &[f64]) -> f64 {
    const SCAN: usize = 64;
    let mut best = f(a).max(f(b));
    let mut best_i = 0;
    let h = (b - a) / SCAN as f64;
    for i in 0..=SCAN {
        let v = f(a + h * i as f64);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    if h > 0.0 {
        let lo = a + h * best_i.saturating_sub(1) as f64;
        let hi = (a + h * (best_i + 1) as f64).min(b);
        best = best.max(golden_max(f, lo, hi).1);
    }
    for &c in candidates {
        if c >= a && c <= b {
            best = best.max(f(c));
        }
    }
    best
}

/// sup_{u ∈ [0, limit]} f(u) for a one-sided search direction. When the
/// range is unbounded the bracket doubles from `start`; the search stops
/// once the running max has not grown over 3 successive doublings past
/// `settle`, and reports divergence if it has grown over 3 successive
/// doublings while `divergent` holds.
fn sup_one_sided<F: Fn(f64) -> f64>(f: &F, limit: f64, start: f64, settle: f64, divergent: bool, candidates: &[f64]) -> f64 {
    if limit <= 0.0 {
        return f(0.0);
    }
    if limit.is_finite() {
        return max_on_segment(f, 0.0, limit, candidates);
    }
    let mut b = start;
    let mut best = max_on_segment(f, 0.0, b, candidates);
    let mut growing = 0;
    let mut flat = 0;
    for _ in 0..200 {
        let next = 2.0 * b;
        let v = max_on_segment(f, b, next, candidates);
        let tol = 1e-12 * (1.0 + best.abs());
        if v > best + tol {
            growing += 1;
            flat = 0;
        } else {
            flat += 1;
            growing = 0;
        }
        best = best.max(v);
        b = next;
        if divergent && growing >= 3 && b > settle {
            return f64::INFINITY;
        }
        if !divergent && flat >= 3 && b > settle {
            return best;
        }
        if !b.is_finite() || best == f64::INFINITY {
            break;
        }
    }
    if divergent {
        f64::INFINITY
    } else {
        best
    }
}

fn require_scalar(k: &ConstraintSet) -> Result<()> {
    if k.dim() != 1 {
        return Err(Error::InvalidInput(format!(
            "face-lifts act on one-dimensional constraints, got dimension {}",
            k.dim()
        )));
    }
    Ok(())
}

/// ĝ(x) = sup_ζ g(x+ζ) − δ_K(ζ). Returns +∞ when the supremum diverges,
/// which happens exactly when g outgrows δ_K along an unbounded direction of
/// dom(δ_K).
pub fn facelift_amount(g: &Payoff, k: &ConstraintSet, x: f64) -> Result<f64> {
    require_scalar(k)?;
    let kinks = g.kinks();
    let reach = kinks.iter().map(|c| (c - x).abs()).fold(0.0, f64::max);
    let settle = 2.0 * reach + 1.0;
    let mut best = g.eval(x);
    for s in [1.0f64, -1.0] {
        let slope = k.support_1d(s);
        if slope == f64::INFINITY {
            continue;
        }
        let f = |u: f64| g.eval(x + s * u) - slope * u;
        let candidates: Vec<f64> = kinks.iter().map(|c| s * (c - x)).filter(|&u| u >= 0.0).collect();
        let divergent = g.growth_rate(s) > slope;
        let v = sup_one_sided(&f, f64::INFINITY, 1.0, settle, divergent, &candidates);
        if v == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        best = best.max(v);
    }
    Ok(best)
}

fn proportion_limits(k: &ConstraintSet, range: ProportionRange) -> (f64, f64) {
    let (lo, hi) = match k {
        ConstraintSet::Box { lo, hi } => (lo[0], hi[0]),
        ConstraintSet::FullSpace { .. } => (f64::NEG_INFINITY, f64::INFINITY),
        ConstraintSet::Cone { signs } => match signs[0] {
            Sign::NonNegative => (0.0, f64::INFINITY),
            Sign::NonPositive => (f64::NEG_INFINITY, 0.0),
            Sign::Free => (f64::NEG_INFINITY, f64::INFINITY),
        },
        ConstraintSet::Subspace { zeroed } => {
            if zeroed[0] {
                (0.0, 0.0)
            } else {
                (f64::NEG_INFINITY, f64::INFINITY)
            }
        }
    };
    // Directions where δ_K is infinite carry zero weight e^{−δ}.
    let up = if k.support_1d(1.0).is_finite() { f64::INFINITY } else { 0.0 };
    let down = if k.support_1d(-1.0).is_finite() { f64::INFINITY } else { 0.0 };
    match range {
        ProportionRange::ConstraintSet => (lo.max(-down), hi.min(up)),
        ProportionRange::SupportDomain => (-down, up),
    }
}

/// ǧ(x) = sup_ζ e^{−δ_K(ζ)} g(x e^ζ) with ζ ranging over K or dom(δ_K).
pub fn facelift_proportion(g: &Payoff, k: &ConstraintSet, x: f64, range: ProportionRange) -> Result<f64> {
    require_scalar(k)?;
    if x <= 0.0 {
        return Err(Error::InvalidInput(format!("proportion face-lift needs x > 0, got {x}")));
    }
    let (lo, hi) = proportion_limits(k, range);
    let kinks: Vec<f64> = g.kinks().into_iter().filter(|&c| c > 0.0).map(|c| (c / x).ln()).collect();
    let reach = kinks.iter().map(|c| c.abs()).fold(0.0, f64::max);
    let settle = 2.0 * reach + 1.0;
    let mut best = g.eval(x);
    for (s, limit) in [(1.0f64, hi), (-1.0f64, -lo)] {
        let slope = k.support_1d(s);
        if limit <= 0.0 || slope == f64::INFINITY {
            continue;
        }
        let f = |u: f64| {
            let v = g.eval(x * (s * u).exp());
            if v == 0.0 {
                0.0
            } else {
                (-slope * u).exp() * v
            }
        };
        let candidates: Vec<f64> = kinks.iter().map(|c| s * c).filter(|&u| u >= 0.0).collect();
        // g(xe^u) grows like e^u for linearly growing payoffs.
        let divergent = s > 0.0 && g.grows_linearly_at_infinity() && slope < 1.0;
        let v = sup_one_sided(&f, limit, 1.0, settle, divergent, &candidates);
        if v == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        best = best.max(v);
    }
    Ok(best)
}

/// A payoff transformed on a tabulation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceliftedPayoff {
    pub base: Payoff,
    pub transform: Transform,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl FaceliftedPayoff {
    /// Tabulates the transform of `g` on `grid`. Fails if any value is
    /// infinite, since a tabulation cannot hold +∞.
    pub fn tabulate(g: &Payoff, k: &ConstraintSet, transform: Transform, grid: &[f64]) -> Result<Self> {
        let values = match transform {
            Transform::Amount => grid.iter().map(|&x| facelift_amount(g, k, x)).collect::<Result<Vec<_>>>()?,
            Transform::Proportion(range) => grid
                .iter()
                .map(|&x| facelift_proportion(g, k, x, range))
                .collect::<Result<Vec<_>>>()?,
            Transform::ConcaveEnvelope => return concave_envelope(g, grid),
        };
        if let Some(x) = grid.iter().zip(&values).find(|(_, v)| !v.is_finite()).map(|(x, _)| *x) {
            return Err(Error::Range(format!("face-lift is infinite at x={x}")));
        }
        Ok(Self { base: g.clone(), transform, grid: grid.to_vec(), values })
    }

    /// The tabulation as a payoff (linear interpolation, constant extension).
    pub fn as_payoff(&self) -> Result<Payoff> {
        let lower = self.values.iter().copied().fold(f64::INFINITY, f64::min).min(self.base.lower_bound());
        Ok(Payoff::Tabulated(Tabulated::with_lower_bound(self.grid.clone(), self.values.clone(), lower)?))
    }
}

/// Smallest concave majorant of g on the grid: the upper convex hull of the
/// points (x_j, g(x_j)), evaluated back at the nodes.
pub fn concave_envelope(g: &Payoff, grid: &[f64]) -> Result<FaceliftedPayoff> {
    if grid.len() < 2 {
        return Err(Error::DegenerateGrid(format!("concave envelope needs 2 nodes, got {}", grid.len())));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::DegenerateGrid("grid must be strictly increasing".into()));
    }
    let ys: Vec<f64> = grid.iter().map(|&x| g.eval(x)).collect();
    let values = upper_hull(grid, &ys);
    Ok(FaceliftedPayoff {
        base: g.clone(),
        transform: Transform::ConcaveEnvelope,
        grid: grid.to_vec(),
        values,
    })
}

/// Upper hull of the points (xs, ys) evaluated at xs (monotone chain).
pub fn upper_hull(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let mut hull: Vec<usize> = Vec::with_capacity(xs.len());
    for i in 0..xs.len() {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // Drop b if it lies on or below the chord from a to i.
            let cross = (xs[b] - xs[a]) * (ys[i] - ys[a]) - (ys[b] - ys[a]) * (xs[i] - xs[a]);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let mut out = vec![0.0; xs.len()];
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        for j in a..=b {
            let t = (xs[j] - xs[a]) / (xs[b] - xs[a]);
            out[j] = ys[a] + t * (ys[b] - ys[a]);
        }
    }
    if hull.len() == 1 {
        out[0] = ys[0];
    }
    // Hull vertices keep their exact values.
    for &h in &hull {
        out[h] = ys[h];
    }
    out
}

/// Exact amount face-lift of the piecewise-linear interpolant of `values`
/// on `nodes`, in place. Two sweeps enforce lo ≤ Dv ≤ hi. Returns which
/// nodes were raised.
pub fn facelift_amount_grid(nodes: &[f64], values: &mut [f64], k: &ConstraintSet) -> Vec<bool> {
    let n = values.len();
    let original = values.to_vec();
    let up = k.support_1d(1.0);
    let down = k.support_1d(-1.0);
    if up.is_finite() {
        for j in (0..n - 1).rev() {
            let cand = values[j + 1] - up * (nodes[j + 1] - nodes[j]);
            if cand > values[j] {
                values[j] = cand;
            }
        }
    }
    if down.is_finite() {
        for j in 1..n {
            let cand = values[j - 1] - down * (nodes[j] - nodes[j - 1]);
            if cand > values[j] {
                values[j] = cand;
            }
        }
    }
    original
        .iter()
        .zip(values.iter())
        .map(|(a, b)| *b > *a + 1e-14 * (1.0 + a.abs()))
        .collect()
}

/// Proportion face-lift over dom(δ_K) for nonnegative values tabulated on
/// log-price nodes: the amount sweep applied to ln v. Zero values stay
/// unconstrained from below.
pub fn facelift_proportion_grid(log_nodes: &[f64], values: &mut [f64], k: &ConstraintSet) -> Vec<bool> {
    let n = values.len();
    let original = values.to_vec();
    let up = k.support_1d(1.0);
    let down = k.support_1d(-1.0);
    let mut logs: Vec<f64> = values.iter().map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY }).collect();
    if up.is_finite() {
        for j in (0..n - 1).rev() {
            let cand = logs[j + 1] - up * (log_nodes[j + 1] - log_nodes[j]);
            if cand > logs[j] {
                logs[j] = cand;
            }
        }
    }
    if down.is_finite() {
        for j in 1..n {
            let cand = logs[j - 1] - down * (log_nodes[j] - log_nodes[j - 1]);
            if cand > logs[j] {
                logs[j] = cand;
            }
        }
    }
    for (v, l) in values.iter_mut().zip(&logs) {
        let lifted = l.exp();
        if lifted > *v {
            *v = lifted;
        }
    }
    original
        .iter()
        .zip(values.iter())
        .map(|(a, b)| *b > *a + 1e-14 * (1.0 + a.abs()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_examples() {
        let k = ConstraintSet::interval(-1.0, 2.0);
        assert_eq!(k.support(&[-3.0]), 3.0);
        assert_eq!(k.support(&[0.5]), 1.0);
        let sub = ConstraintSet::Subspace { zeroed: vec![false, true] };
        assert_eq!(sub.support(&[0.0, 5.0]), 0.0);
        assert_eq!(sub.support(&[1.0, 0.0]), f64::INFINITY);
        for k in [
            ConstraintSet::full_space(2),
            ConstraintSet::boxed(vec![0.0, -1.0], vec![1.0, 0.0]).unwrap(),
            ConstraintSet::Cone { signs: vec![Sign::NonNegative, Sign::Free] },
            sub,
        ] {
            assert_eq!(k.support(&[0.0, 0.0]), 0.0);
        }
        let half_line = ConstraintSet::interval(0.0, f64::INFINITY);
        assert_eq!(half_line.support(&[1.0]), f64::INFINITY);
        assert_eq!(half_line.support(&[-1.0]), 0.0);
    }

    #[test]
    fn membership_examples() {
        let unit = ConstraintSet::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert!(unit.contains(&[0.5, 0.5]).inside);
        let m = unit.contains(&[2.0, 0.0]);
        assert!(!m.inside);
        assert_eq!(m.witness.unwrap(), vec![1.0, 0.0]);
        assert!((m.margin + 1.0).abs() < 1e-15);
        let cone = ConstraintSet::Cone { signs: vec![Sign::NonNegative, Sign::NonNegative] };
        let m = cone.contains(&[-1.0, 1.0]);
        assert!(!m.inside);
        assert_eq!(m.witness.unwrap(), vec![-1.0, 0.0]);
    }

    #[test]
    fn direction_sets() {
        let k1 = ConstraintSet::interval(-1.0, 1.0);
        assert_eq!(domain_directions(&k1, 2), vec![vec![1.0], vec![-1.0]]);
        let k2 = ConstraintSet::boxed(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let d4 = domain_directions(&k2, 4);
        assert_eq!(d4.len(), 4);
        for e in [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]] {
            assert!(d4.contains(&e.to_vec()));
        }
        let d8 = domain_directions(&k2, 8);
        assert_eq!(d8.len(), 8);
        let diagonals = d8.iter().filter(|z| z[0] != 0.0 && z[1] != 0.0).count();
        assert_eq!(diagonals, 4);
        // Finite directions first.
        let cone = ConstraintSet::Cone { signs: vec![Sign::NonNegative, Sign::Free] };
        let d = domain_directions(&cone, 4);
        assert!(cone.support(&d[0]).is_finite());
        assert!(cone.support(&d[3]).is_infinite());
    }

    #[test]
    fn digital_facelift_values() {
        let g = Payoff::digital(100.0);
        let k = ConstraintSet::interval(0.0, 0.1);
        assert!((facelift_amount(&g, &k, 95.0).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(facelift_amount(&g, &k, 80.0).unwrap(), 0.0);
        assert_eq!(facelift_amount(&g, &k, 101.0).unwrap(), 1.0);
        let free = ConstraintSet::full_space(1);
        assert_eq!(facelift_amount(&g, &free, 99.0).unwrap(), 0.0);
    }

    #[test]
    fn call_facelift_diverges_when_bound_is_too_small() {
        let g = Payoff::call(100.0);
        assert_eq!(facelift_amount(&g, &ConstraintSet::interval(0.0, 0.5), 90.0).unwrap(), f64::INFINITY);
        // With M = 1 the supremum is approached but stays finite.
        let v = facelift_amount(&g, &ConstraintSet::interval(0.0, 1.0), 90.0).unwrap();
        assert_eq!(v, 0.0);
        let v = facelift_amount(&g, &ConstraintSet::interval(-1.0, 1.0), 110.0).unwrap();
        assert!((v - 10.0).abs() < 1e-12);
    }

    #[test]
    fn proportion_examples() {
        let k = ConstraintSet::interval(0.0, 1.0);
        for x in [1.0, 50.0, 123.0] {
            let v = facelift_proportion(&Payoff::Linear, &k, x, ProportionRange::ConstraintSet).unwrap();
            assert!((v - x).abs() < 1e-12 * x);
        }
        let g = Payoff::digital(100.0);
        let r = ProportionRange::ConstraintSet;
        assert_eq!(facelift_proportion(&g, &k, 120.0, r).unwrap(), 1.0);
        assert!((facelift_proportion(&g, &k, 60.0, r).unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(facelift_proportion(&g, &k, 30.0, r).unwrap(), 0.0);
        // Over the support domain the lift reaches further down.
        let v = facelift_proportion(&g, &k, 30.0, ProportionRange::SupportDomain).unwrap();
        assert!((v - 0.3).abs() < 1e-12);
        let zero = ConstraintSet::interval(0.0, 0.0);
        assert_eq!(facelift_proportion(&g, &zero, 99.0, r).unwrap(), 0.0);
    }

    #[test]
    fn envelope_of_call_is_chord() {
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 * 10.0).collect();
        let env = concave_envelope(&Payoff::call(100.0), &grid).unwrap();
        for (x, v) in env.grid.iter().zip(&env.values) {
            let chord = x * 900.0 / 1000.0;
            assert!((v - chord).abs() < 1e-9);
        }
        assert!(concave_envelope(&Payoff::Linear, &[1.0]).is_err());
    }

    #[test]
    fn grid_sweep_matches_pointwise_facelift() {
        let g = Payoff::digital(100.0);
        let k = ConstraintSet::interval(0.0, 0.1);
        let nodes: Vec<f64> = (0..=200).map(|i| 50.0 + i as f64 * 0.5).collect();
        let mut vals: Vec<f64> = nodes.iter().map(|&x| g.eval(x)).collect();
        facelift_amount_grid(&nodes, &mut vals, &k);
        for (x, v) in nodes.iter().zip(&vals) {
            assert!((v - facelift_amount(&g, &k, *x).unwrap()).abs() < 1e-12, "x={x}");
        }
    }
}
