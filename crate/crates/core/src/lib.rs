//! Wiener chaos expansion (WCE) solver for the stochastic generalized
//! Kuramoto-Sivashinsky equation
//!
//! ```text
//! u_t = -u u_x - kappa u_xx - eta u_xxx - nu u_xxxx + sigma(x) dW/dt
//! ```
//!
//! driven by a single Brownian motion. The random solution is expanded over
//! Wick polynomials of the Gaussian coordinates of the driving path, which
//! turns the SPDE into a deterministic coupled system for the chaos
//! coefficients (the propagator). The propagator is marched with second-order
//! central differences and an AB2/AM3 predictor-corrector.
//!
//! Reference solutions live in [`oracle`]: the closed-form Langevin solution
//! for the linearized problem and a change-of-variables solver that maps the
//! constant-`sigma` nonlinear problem onto a deterministic one.
//!
//! Module map:
//! - [`chaos`]: multi-indices, Hermite/Wick polynomials, product coefficients
//! - [`noise`]: cosine time basis and truncated Brownian paths
//! - [`problem`]: grids, boundary conditions, builtin experiments, config files
//! - [`propagator`]: coefficient fields, right-hand sides, boundary data
//! - [`stepper`]: stencils and the predictor-corrector time march
//! - [`oracle`]: reference solutions
//! - [`analysis`]: reconstruction, moments and error metrics
//! - [`runner`]: experiment orchestration and CSV/JSON artifacts

pub mod analysis;
pub mod chaos;
pub mod error;
pub mod noise;
pub mod oracle;
pub mod problem;
pub mod propagator;
pub mod quadrature;
pub mod runner;
pub mod scalar;
pub mod stepper;

pub use error::{Error, Result};
pub use scalar::Scalar;
