//! Phase-twisted Euler partial products and the tools around them: local
//! factors and their logarithms, the Hardy space `H2(R)` of a small disc, a
//! greedy approximation engine, zero counting and surveys, and Monte Carlo
//! measurements on the infinite torus.
//!
//! ```
//! use eulerprod::{EulerFactorSpec, PhaseAssignment, Complex64};
//!
//! let spec = EulerFactorSpec::zeta();
//! let primes = eulerprod::primes::primes_up_to(1000);
//! let mut phases = PhaseAssignment::new(0.0);
//! for &p in &primes {
//!     phases.set(p, 0.0);
//! }
//! let z = eulerprod::product::partial_product(&spec, Complex64::new(2.0, 0.0), &primes, &phases).unwrap();
//! assert!((z.re - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-3);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod approximator;
pub mod config;
pub mod error;
pub mod exact;
pub mod expansion;
pub mod factor;
pub mod hardy;
pub mod par;
pub mod primes;
pub mod product;
pub mod quadrature;
pub mod torus;

pub use num_complex::Complex64;

pub use approximator::{approximate, refine_sequence, Approximation, ApproximationProblem, RefineOptions, Target};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use factor::{DirichletCharacter, EulerFactorSpec};
pub use hardy::H2Element;
pub use product::{PhaseAssignment, ProductEvaluator};
