//! Numerical kernels: extended-precision scalars, gamma function, polynomial
//! root finding, structured linear solves and weighted half-line quadrature.

pub mod gamma;
pub mod linalg;
pub mod prec;
pub mod quad;
pub mod roots;

pub use gamma::gamma;
pub use linalg::{solve_dense, solve_dense_complex, solve_hankel, LinearSolution};
pub use prec::{Complex, Prec, Real, DEFAULT_DIGITS};
pub use quad::{integrate_halfline, integrate_halfline_raw, QuadOptions, QuadResult};
pub use roots::{polynomial_roots, polynomial_roots_with_init};

use thiserror::Error;

#[derive(Error, Debug, Clone)]
pub enum NumericsError {
    #[error("gamma pole at nonpositive integer argument {0}")]
    GammaPole(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("root refinement stalled; worst relative residual {residual}")]
    RootNonConvergence { residual: String },
    #[error("singular linear system: effective rank {rank} of {size}")]
    SingularSystem { rank: usize, size: usize },
    #[error("quadrature tail failed to decrease (last tail estimate {tail})")]
    QuadratureDivergence { tail: String },
    #[error("integrand singular or undefined at t = {t}: {detail}")]
    QuadratureSingularity { t: String, detail: String },
    #[error("quadrature did not reach the requested tolerance (error estimate {estimate})")]
    QuadratureNoConvergence { estimate: String },
}
