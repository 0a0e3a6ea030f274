//! Pricing and hedging of European claims under convex portfolio
//! constraints and relaxed (quantile, expected-shortfall) criteria.

pub mod analytic;
pub mod constraints;
pub mod error;
pub mod io;
pub mod liquidation;
pub mod market;
pub mod mc;
pub mod numerics;
pub mod payoff;
pub mod pde;
pub mod riskprice;

pub use error::{Error, Result};
