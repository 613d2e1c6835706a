//! Schrödinger evolution under local white-noise potentials (Stratonovich).

use nalgebra::DVector;
use rand::Rng;

use super::noise::NoiseModel;
use super::{Scheme, SchemeConfig, TrajectoryRng, Unraveling};
use crate::error::{Error, Result};
use crate::operator::{c, BipartiteSpace, Operator, C64};

/// Accumulated norm drift allowed per unit time (with a one-time-unit floor).
pub const NORM_DRIFT_BUDGET: f64 = 1e-3;

/// `dψ/dt = −i(H + ξ_A(x̂_A, t) + ξ_B(x̂_B, t))ψ`, with `ξ_A`, `ξ_B`
/// independent white noises that are diagonal in the position basis of
/// each party and have spatial covariances given by the two noise models.
#[derive(Clone, Debug)]
pub struct NoisyPotentialSse {
    h: nalgebra::DMatrix<C64>,
    space: BipartiteSpace,
    noise_a: NoiseModel,
    noise_b: NoiseModel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SseState {
    pub psi: DVector<C64>,
    /// Sum of the per-step changes `|Δ‖ψ‖²|`, measured before renormalization.
    pub norm_drift: f64,
}

impl SseState {
    pub fn new(psi: &[C64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        Ok(Self { psi: DVector::from_iterator(psi.len(), psi.iter().map(|z| z / norm)), norm_drift: 0.0 })
    }

    pub fn norm(&self) -> f64 {
        self.psi.norm()
    }
}

impl NoisyPotentialSse {
    /// `h_total` is the full Hamiltonian `H_A + H_B + V` on `space`; the
    /// noise models act on Alice's and Bob's site indices respectively.
    pub fn new(h_total: &Operator, space: BipartiteSpace, noise_a: NoiseModel, noise_b: NoiseModel) -> Result<Self> {
        h_total.ensure_hermitian("Hamiltonian")?;
        if h_total.dim() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: h_total.dim() });
        }
        if noise_a.dim() != space.dim_a() {
            return Err(Error::DimensionMismatch { expected: space.dim_a(), found: noise_a.dim() });
        }
        if noise_b.dim() != space.dim_b() {
            return Err(Error::DimensionMismatch { expected: space.dim_b(), found: noise_b.dim() });
        }
        Ok(Self { h: h_total.matrix().clone(), space, noise_a, noise_b })
    }

    pub fn space(&self) -> BipartiteSpace {
        self.space
    }

    /// One Heun (predictor-corrector) step with the noise held fixed across
    /// both stages, which converges to the Stratonovich solution.
    pub fn step<R: Rng + ?Sized>(
        &self,
        state: &mut SseState,
        time: f64,
        config: &SchemeConfig,
        rng: &mut R,
    ) -> Result<()> {
        if config.scheme != Scheme::StratonovichHeun {
            return Err(Error::InvalidArgument("noise potentials are integrated with the Stratonovich-Heun scheme".into()));
        }
        let dt = config.dt;
        let (da, db) = (self.space.dim_a(), self.space.dim_b());
        let mut xi_a = vec![0.0; da];
        let mut xi_b = vec![0.0; db];
        self.noise_a.sample_into(dt, rng, &mut xi_a);
        self.noise_b.sample_into(dt, rng, &mut xi_b);
        let potential: Vec<f64> = (0..da).flat_map(|a| { let xa = xi_a[a]; xi_b.iter().map(move |b| xa + b) }).collect();

        let rhs = |psi: &DVector<C64>| -> DVector<C64> {
            let mut out = &self.h * psi;
            for (i, v) in potential.iter().enumerate() {
                out[i] += psi[i] * *v;
            }
            out * c(0.0, -1.0)
        };
        let before = state.psi.norm_squared();
        let f0 = rhs(&state.psi);
        let predictor = &state.psi + &f0 * c(dt, 0.0);
        let f1 = rhs(&predictor);
        state.psi += (f0 + f1) * c(0.5 * dt, 0.0);

        let norm_sqr = state.psi.norm_squared();
        state.norm_drift += (norm_sqr - before).abs();
        let elapsed = time + dt;
        let rate = state.norm_drift / elapsed.max(1.0);
        if rate > NORM_DRIFT_BUDGET {
            return Err(Error::NormDrift { time: elapsed, rate, dt });
        }
        if config.renormalize {
            state.psi /= c(norm_sqr.sqrt(), 0.0);
        }
        Ok(())
    }
}

/// One Heun step; see [`NoisyPotentialSse`].
pub fn sse_stratonovich_step<R: Rng + ?Sized>(
    state: &mut SseState,
    system: &NoisyPotentialSse,
    time: f64,
    config: &SchemeConfig,
    rng: &mut R,
) -> Result<()> {
    system.step(state, time, config, rng)
}

impl Unraveling for NoisyPotentialSse {
    type State = SseState;

    fn step(&self, state: &mut SseState, time: f64, config: &SchemeConfig, rng: &mut TrajectoryRng) -> Result<()> {
        NoisyPotentialSse::step(self, state, time, config, rng)
    }

    fn density(&self, state: &SseState) -> Operator {
        Operator::projector(state.psi.as_slice())
    }
}
