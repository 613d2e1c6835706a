//! Continuous-time LOCC dynamics on bipartite quantum systems.
//!
//! * [`operator`] and [`state`]: dense operator algebra, partial trace and
//!   transpose, negativity.
//! * [`potential`]: cosine-mode decomposition of lattice pair potentials into
//!   local operators, decoherence kernel and least-decoherence rates.
//! * [`gkls`]: monitoring and feedback master equations as superoperators,
//!   deterministic propagation, structural GKLS checks.
//! * [`stochastic`]: stochastic master equation, measurement-plus-feedback
//!   trajectories, noisy-potential Schrödinger equation, ensembles.

pub mod error;
pub mod gkls;
pub mod operator;
pub mod potential;
pub mod state;
pub mod stochastic;

pub use error::{Error, Result};
pub use operator::{BipartiteSpace, Operator, Side, C64};
pub use state::DensityMatrix;
