//! Quantile-hedging and expected-shortfall prices in complete benchmark
//! models, and simulated dual lower bounds for constrained super-hedging.

mod dual;
mod law;
mod loss;
mod quantile;
mod shortfall;
mod verify;

pub use dual::{dual_lower_bound, DualBound, DualControl};
pub use law::TerminalLaw;
pub use loss::LossFunction;
pub use quantile::{dual_objective_w, quantile_price, success_ratio_price, QuantileProblem, QuantileSolution, SuccessRatioSolution};
pub use shortfall::{shortfall_optimal_ratio, shortfall_price_quadratic, ShortfallPrice, ShortfallSolution};
pub use verify::{verify_quantile_hedge, verify_shortfall_hedge, DeltaMethod, HedgeVerification};
