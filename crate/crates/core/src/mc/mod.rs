//! Monte Carlo engine: path generation, hedging simulation and the discrete
//! delta–gamma hedging experiment.

mod estimate;
mod gamma;
mod hedge;
mod paths;

pub use estimate::{estimate, map_paths, path_rng, McConfig, McEstimate};
pub use gamma::{gamma_hedge_experiment, log_log_slope, GammaHedgeSetup, GammaResult, LocalVol};
pub use hedge::{hedge_simulation, ClosedFormDelta, DeltaSource, HedgeConfig, HedgeReport, RebalanceGrid, ZeroDelta};
pub use paths::{simulate_paths, step_exact, Measure, PathBatch};
