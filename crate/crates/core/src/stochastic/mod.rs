//! Stochastic unravelings and trajectory ensembles.

mod ensemble;
mod noise;
mod sme;
mod sse;

pub use ensemble::{
    run_ensemble, trajectory_rng, trajectory_seed, EnsembleConfig, EnsemblePoint, TrajectoryEnsemble,
};
pub use noise::{sample_noise_increments, NoiseModel};
pub use sme::{
    feedback_trajectory_step, sme_step, FeedbackLoop, MonitoredSystem, SignalRecord, SmeStep,
    SME_POSITIVITY_FLOOR,
};
pub use sse::{sse_stratonovich_step, NoisyPotentialSse, SseState, NORM_DRIFT_BUDGET};

use crate::error::{Error, Result};
use crate::operator::Operator;

/// Per-trajectory random stream.
pub type TrajectoryRng = rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Euler-Maruyama on the Itô master equation as written.
    ItoEuler,
    /// First-order Itô step in Kraus form, `ρ ↦ MρM†/Tr(MρM†)`; same drift
    /// and diffusion as Euler-Maruyama but positivity-preserving.
    ItoKraus,
    /// Heun predictor-corrector for Stratonovich noise.
    StratonovichHeun,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeConfig {
    pub dt: f64,
    pub scheme: Scheme,
    /// Renormalize the trace (or norm) after every step.
    pub renormalize: bool,
}

impl SchemeConfig {
    pub fn new(dt: f64, scheme: Scheme) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        Ok(Self { dt, scheme, renormalize: true })
    }

    pub fn with_renormalize(mut self, renormalize: bool) -> Self {
        self.renormalize = renormalize;
        self
    }
}

/// A stochastic evolution whose trajectories can be averaged.
pub trait Unraveling: Sync {
    type State: Clone + Send + Sync;

    fn step(&self, state: &mut Self::State, time: f64, config: &SchemeConfig, rng: &mut TrajectoryRng) -> Result<()>;

    /// Density-matrix contribution of one trajectory.
    fn density(&self, state: &Self::State) -> Operator;
}
