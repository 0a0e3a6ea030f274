use rand::Rng;
use rand_distr::StandardNormal;

use super::estimate::{estimate, map_paths, path_rng, McConfig};
use crate::error::{Error, Result};
use crate::payoff::Payoff;
use crate::pde::{slice_gamma, solve_diffusion, Grid1D, PdeSolution, Scheme, Terminal, TRUNCATION_SDS};

/// Smallest second derivative of the hedging instrument accepted as a divisor.
const MIN_GAMMA: f64 = 1e-8;

/// Local volatility `a(x) = x (base + skew * reference / (x + reference))`
/// for `x >= 0`, zero below. Lipschitz with constant `base + skew`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalVol {
    pub base: f64,
    pub skew: f64,
    pub reference: f64,
}

impl LocalVol {
    pub fn new(base: f64, skew: f64, reference: f64) -> Result<Self> {
        if !(base > 0.0) || !(skew >= 0.0) || !(reference > 0.0) {
            return Err(Error::InvalidInput(format!(
                "local vol needs base > 0, skew >= 0, reference > 0 (got {base}, {skew}, {reference})"
            )));
        }
        Ok(Self { base, skew, reference })
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            x * (self.base + self.skew * self.reference / (x + self.reference))
        }
    }

    /// Upper bound on `a(x) / x`.
    pub fn max_rate(&self) -> f64 {
        self.base + self.skew
    }
}

/// Value functions of `F` (maturity `t1`) and `G` (maturity `t2`) under the
/// local-vol model at zero rate, solved once and reused across `n`.
#[derive(Debug, Clone)]
pub struct GammaHedgeSetup {
    pub vol: LocalVol,
    pub spot: f64,
    pub f: Payoff,
    pub g: Payoff,
    pub t1: f64,
    pub t2: f64,
    f_sol: PdeSolution,
    g_sol: PdeSolution,
    f_gamma: Vec<Vec<f64>>,
    g_gamma: Vec<Vec<f64>>,
    steps_to_t1: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaResult {
    pub rebalances: usize,
    pub rms_error: f64,
    pub rms_stderr: f64,
    pub mean_error: f64,
    pub max_abs_error: f64,
}

impl GammaHedgeSetup {
    /// `time_steps` PDE steps cover `[0, t1]`; the `g` solve continues at
    /// the same step size to `t2`. Rebalance counts must divide `time_steps`.
    pub fn prepare(
        vol: LocalVol,
        spot: f64,
        f: Payoff,
        t1: f64,
        g: Payoff,
        t2: f64,
        space_nodes: usize,
        time_steps: usize,
    ) -> Result<Self> {
        if !(spot > 0.0) || !(t1 > 0.0) || !(t2 > t1) {
            return Err(Error::InvalidInput(format!("need spot > 0 and 0 < t1 < t2 (got {spot}, {t1}, {t2})")));
        }
        let hi = spot * (TRUNCATION_SDS * vol.max_rate() * t2.sqrt()).exp();
        let dt = t1 / time_steps as f64;
        let f_grid = Grid1D::linear_uniform(0.0, hi, space_nodes, t1, time_steps)?;
        let tail = ((t2 - t1) / dt).ceil().max(1.0) as usize;
        let mut g_times: Vec<f64> = (0..=time_steps).map(|k| dt * k as f64).collect();
        g_times[time_steps] = t1;
        let dt_tail = (t2 - t1) / tail as f64;
        g_times.extend((1..=tail).map(|k| t1 + dt_tail * k as f64));
        g_times[time_steps + tail] = t2;
        let g_grid = Grid1D::linear_uniform(0.0, hi, space_nodes, t2, time_steps + tail)?.with_times(g_times)?;
        let a = |x: f64| vol.eval(x);
        let f_sol = solve_diffusion(&a, 0.0, &Terminal::Payoff(f.clone()), &f_grid, Scheme::CrankNicolson)?;
        let g_sol = solve_diffusion(&a, 0.0, &Terminal::Payoff(g.clone()), &g_grid, Scheme::CrankNicolson)?;
        let f_gamma = f_sol.values.iter().map(|v| slice_gamma(&f_sol.grid, v)).collect();
        let g_gamma = g_sol.values[..=time_steps].iter().map(|v| slice_gamma(&g_sol.grid, v)).collect();
        Ok(Self { vol, spot, f, g, t1, t2, f_sol, g_sol, f_gamma, g_gamma, steps_to_t1: time_steps })
    }

    fn lookup(&self, k: usize, x: f64) -> Result<Hedge> {
        let grid = &self.f_sol.grid;
        let (j, w, _) = grid.locate(x);
        let lerp = |v: &[f64]| v[j] + w * (v[j + 1] - v[j]);
        let g_xx = lerp(&self.g_gamma[k]);
        if !(g_xx.abs() >= MIN_GAMMA) {
            return Err(Error::Conditioning { value: g_xx, x });
        }
        let alpha = lerp(&self.f_gamma[k]) / g_xx;
        let f_x = self.f_sol.delta_at(k, x).0;
        let g_x = self.g_sol.delta_at(k, x).0;
        Ok(Hedge { phi: f_x - alpha * g_x, alpha, g: self.g_sol.value_at(k, x) })
    }

    /// Delta–gamma hedge of `F` with the asset and `G`, rebalanced at
    /// `t_i = i t1 / n`, along Euler paths with `config.steps` steps on
    /// `[0, t1]`. Paths share their normals across `n` at a fixed seed.
    pub fn run(&self, n: usize, config: &McConfig) -> Result<GammaResult> {
        config.validate()?;
        if n == 0 || self.steps_to_t1 % n != 0 || config.steps % n != 0 {
            return Err(Error::InvalidInput(format!(
                "rebalance count {n} must divide both the PDE steps {} and the Euler steps {}",
                self.steps_to_t1, config.steps
            )));
        }
        let m = config.steps;
        let sub = m / n;
        let pde_stride = self.steps_to_t1 / n;
        let dt = self.t1 / m as f64;
        let sq = dt.sqrt();
        let v0 = self.f_sol.price_at(self.spot);
        let errs: Vec<Result<f64>> = map_paths(config.paths, |p| {
            let mut rng = path_rng(config.seed, p as u64);
            let mut s = self.spot;
            let mut v = v0;
            for i in 0..n {
                let h = self.lookup(i * pde_stride, s)?;
                let s0 = s;
                for _ in 0..sub {
                    let z: f64 = rng.sample(StandardNormal);
                    s = (s + self.vol.eval(s) * sq * z).max(0.0);
                }
                let g1 = self.g_sol.value_at((i + 1) * pde_stride, s);
                v += h.phi * (s - s0) + h.alpha * (g1 - h.g);
            }
            Ok(v - self.f.eval(s))
        });
        let errs: Vec<f64> = errs.into_iter().collect::<Result<_>>()?;
        let sq_err: Vec<f64> = errs.iter().map(|e| e * e).collect();
        let ms = estimate(&sq_err, &config.fingerprint())?;
        let rms = ms.mean.sqrt();
        let rms_stderr = if rms > 0.0 { ms.stderr / (2.0 * rms) } else { 0.0 };
        Ok(GammaResult {
            rebalances: n,
            rms_error: rms,
            rms_stderr,
            mean_error: estimate(&errs, "")?.mean,
            max_abs_error: errs.iter().fold(0.0f64, |a, e| a.max(e.abs())),
        })
    }
}

struct Hedge {
    phi: f64,
    alpha: f64,
    g: f64,
}

/// One-shot form of [`GammaHedgeSetup::run`].
#[allow(clippy::too_many_arguments)]
pub fn gamma_hedge_experiment(
    vol: LocalVol,
    spot: f64,
    f: &Payoff,
    t1: f64,
    g: &Payoff,
    t2: f64,
    n: usize,
    config: &McConfig,
) -> Result<GammaResult> {
    let setup = GammaHedgeSetup::prepare(vol, spot, f.clone(), t1, g.clone(), t2, 1201, config.steps)?;
    setup.run(n, config)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}
