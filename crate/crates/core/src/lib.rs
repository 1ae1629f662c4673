//! Basket credit derivatives under static factor copulas: pricing, the drift
//! of delta-hedged positions, break-even correlations, replication-consistent
//! spread dynamics and hedging backtests.

pub mod backtest;
pub mod config;
pub mod copula;
pub mod drift;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod normal;
pub mod parallel;
pub mod pricer;
pub mod quadrature;
pub mod roots;

pub use error::{Error, Result};
