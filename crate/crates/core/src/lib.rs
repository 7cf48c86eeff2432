//! Simulation library for hybrid analog/digital mmWave MIMO receivers.
//!
//! The crate models six receiver front-ends (phase-shifter and switch based),
//! their power consumption, open-loop compressive channel estimation with
//! architecture-aware training sequences, and hybrid combiner design.
//!
//! Module map:
//!
//! - [`channel`]: array responses, angular dictionaries, clustered channels.
//! - [`architectures`]: feasibility sets of the analog combiners and the power model.
//! - [`training`]: training sequences, sensing matrices, coherence metrics.
//! - [`estimation`]: OMP, least squares and exhaustive beam-scan estimators.
//! - [`combining`]: unconstrained, SOMP-based and antenna-selection combiners.
//! - [`harness`]: seeded Monte Carlo experiments emitting CSV/JSON tables.

pub mod architectures;
pub mod channel;
pub mod combining;
pub mod config;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod linalg;
pub mod random;
pub mod training;

pub use error::{Error, Result};

/// Double precision complex scalar used throughout the crate.
pub type C64 = num_complex::Complex<f64>;
/// Dense complex matrix (column-major storage).
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
