//! Resummation engine for truncated power series.
//!
//! Extrapolates small-variable expansions to finite and infinite argument
//! with self-similar factor approximants and self-similar Borel summation,
//! with built-in brute-force oracles for every quantitative target.

pub mod borel;
pub mod difflog;
pub mod factor;
pub mod numerics;
pub mod ode;
pub mod oracles;
pub mod series;

pub use factor::{build, AsymptoticForm, DiagnosticsReport, FactorApproximant};
pub use numerics::{Complex, Prec, Real, DEFAULT_DIGITS};
pub use series::PowerSeries;
