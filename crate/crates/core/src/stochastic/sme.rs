//! Monitored-system trajectories and measurement-based feedback.

use nalgebra::DMatrix;
use rand::Rng;

use super::noise::NoiseModel;
use super::{Scheme, SchemeConfig, TrajectoryRng, Unraveling};
use crate::error::{Error, Result};
use crate::gkls::{invert_rate_matrix, MonitoringSpec};
use crate::operator::{c, expm, Operator, C64};

/// Minimum eigenvalue tolerated after an Euler-Maruyama step.
pub const SME_POSITIVITY_FLOOR: f64 = -1e-4;

/// Measurement signals `a_ν = ⟨A_ν⟩ + w_ν` of one step.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalRecord {
    pub signals: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SmeStep {
    pub state: Operator,
    pub record: SignalRecord,
    /// `|Tr ρ − 1|` before renormalization.
    pub trace_drift: f64,
}

/// A system under continuous monitoring of `A_ν` with precision `γ`: the
/// signal noise has covariance `γ⁻¹ δ(t − s)` and the conditional state
/// follows the Itô stochastic master equation
///
/// ```text
/// dρ = −i[H,ρ]dt − (1/8) Σ γ_{νμ}[A_ν,[A_μ,ρ]]dt + ½ Σ γ_{νμ}{A_ν − ⟨A_ν⟩, ρ} w_μ dt.
/// ```
#[derive(Clone, Debug)]
pub struct MonitoredSystem {
    h: DMatrix<C64>,
    observables: Vec<DMatrix<C64>>,
    gamma: DMatrix<f64>,
    noise: NoiseModel,
    /// `−iH − (1/8) Σ γ_{νμ} A_ν A_μ`
    kraus_drift: DMatrix<C64>,
    dim: usize,
}

impl MonitoredSystem {
    pub fn new(h: &Operator, spec: &MonitoringSpec) -> Result<Self> {
        h.ensure_hermitian("Hamiltonian")?;
        let d = h.dim();
        for obs in spec.observables() {
            if obs.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: obs.dim() });
            }
        }
        let noise = NoiseModel::new(invert_rate_matrix(spec.gamma())?)?;
        let observables: Vec<DMatrix<C64>> = spec.observables().iter().map(|o| o.matrix().clone()).collect();
        let gamma = spec.gamma().clone();
        let mut kraus_drift = h.matrix() * c(0.0, -1.0);
        for (nu, a) in observables.iter().enumerate() {
            for (mu, b) in observables.iter().enumerate() {
                let w = gamma[(nu, mu)];
                if w != 0.0 {
                    kraus_drift -= a * b * c(w / 8.0, 0.0);
                }
            }
        }
        Ok(Self { h: h.matrix().clone(), observables, gamma, noise, kraus_drift, dim: d })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn observable_count(&self) -> usize {
        self.observables.len()
    }

    /// One step of the monitored evolution.
    pub fn step<R: Rng + ?Sized>(
        &self,
        rho: &Operator,
        time: f64,
        config: &SchemeConfig,
        rng: &mut R,
    ) -> Result<SmeStep> {
        let dt = config.dt;
        let rho = rho.matrix();
        let n = self.observables.len();
        let means: Vec<f64> = self.observables.iter().map(|a| trace_product(a, rho)).collect();
        let mut w = vec![0.0; n];
        self.noise.sample_into(dt, rng, &mut w);
        let signals: Vec<f64> = means.iter().zip(&w).map(|(m, w)| m + w).collect();

        let next = match config.scheme {
            Scheme::ItoEuler => {
                let mut next = rho + self.deterministic_rhs(rho) * c(dt, 0.0);
                for (nu, a) in self.observables.iter().enumerate() {
                    let y: f64 = (0..n).map(|mu| self.gamma[(nu, mu)] * w[mu]).sum::<f64>() * dt;
                    if y != 0.0 {
                        let anti = a * rho + rho * a - rho * c(2.0 * means[nu], 0.0);
                        next += anti * c(0.5 * y, 0.0);
                    }
                }
                next
            }
            Scheme::ItoKraus => {
                let mut m = DMatrix::<C64>::identity(self.dim, self.dim) + &self.kraus_drift * c(dt, 0.0);
                for (nu, a) in self.observables.iter().enumerate() {
                    let y: f64 = (0..n).map(|mu| self.gamma[(nu, mu)] * signals[mu]).sum::<f64>() * dt;
                    m += a * c(0.5 * y, 0.0);
                }
                &m * rho * m.adjoint()
            }
            Scheme::StratonovichHeun => {
                return Err(Error::InvalidArgument(
                    "the stochastic master equation is integrated in the Itô convention".into(),
                ))
            }
        };
        let (state, trace_drift) = finish_state(next, config.renormalize || config.scheme == Scheme::ItoKraus);
        if config.scheme == Scheme::ItoEuler {
            let min_eigenvalue = state.hermitian_eigenvalues()?[0];
            if min_eigenvalue < SME_POSITIVITY_FLOOR {
                return Err(Error::PositivityViolation { time: time + dt, min_eigenvalue, dt });
            }
        }
        Ok(SmeStep { state, record: SignalRecord { signals }, trace_drift })
    }

    /// `−i[H,ρ] − (1/8) Σ γ_{νμ}[A_ν,[A_μ,ρ]]`.
    fn deterministic_rhs(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = (&self.h * rho - rho * &self.h) * c(0.0, -1.0);
        for (nu, a) in self.observables.iter().enumerate() {
            for (mu, b) in self.observables.iter().enumerate() {
                let w = self.gamma[(nu, mu)];
                if w != 0.0 {
                    let inner = b * rho - rho * b;
                    out -= (a * &inner - &inner * a) * c(w / 8.0, 0.0);
                }
            }
        }
        out
    }
}

fn trace_product(a: &DMatrix<C64>, rho: &DMatrix<C64>) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            acc += (a[(i, k)] * rho[(k, i)]).re;
        }
    }
    acc
}

/// Re-Hermitizes and optionally renormalizes; returns the trace drift.
fn finish_state(m: DMatrix<C64>, renormalize: bool) -> (Operator, f64) {
    let herm = (&m + m.adjoint()) * c(0.5, 0.0);
    let trace = herm.trace().re;
    let drift = (trace - 1.0).abs();
    let out = if renormalize && drift > crate::gkls::TRACE_DRIFT_TOL {
        herm * c(1.0 / trace, 0.0)
    } else {
        herm
    };
    (Operator::new(out).expect("square"), drift)
}

/// Monitoring followed by a feedback Hamiltonian `Σ_j a_j(t) F_j` driven by
/// the signals of the same step (measurement first, then the unitary
/// `exp(−i Σ_j a_j F_j dt)`).
#[derive(Clone, Debug)]
pub struct FeedbackLoop {
    monitor: MonitoredSystem,
    feedback: Vec<DMatrix<C64>>,
}

impl FeedbackLoop {
    pub fn new(monitor: MonitoredSystem, feedback: Vec<Operator>) -> Result<Self> {
        if feedback.len() != monitor.observable_count() {
            return Err(Error::LengthMismatch { left: monitor.observable_count(), right: feedback.len() });
        }
        for f in &feedback {
            if f.dim() != monitor.dim() {
                return Err(Error::DimensionMismatch { expected: monitor.dim(), found: f.dim() });
            }
            f.ensure_hermitian("feedback observable")?;
        }
        Ok(Self { monitor, feedback: feedback.into_iter().map(Operator::into_matrix).collect() })
    }

    /// Alice monitors `a_list`; Bob applies `Σ_ν a_ν(t) B_ν`.
    pub fn one_way(h: &Operator, a_list: &[Operator], b_list: &[Operator], gamma_a: &DMatrix<f64>) -> Result<Self> {
        if a_list.len() != b_list.len() {
            return Err(Error::LengthMismatch { left: a_list.len(), right: b_list.len() });
        }
        let monitor = MonitoredSystem::new(h, &MonitoringSpec::new(a_list.to_vec(), gamma_a.clone())?)?;
        Self::new(monitor, b_list.to_vec())
    }

    /// Both parties monitor their own observables and drive the other's:
    /// Bob applies `Σ_ν a_ν B_ν`, Alice applies `Σ_ν b_ν A_ν`.
    pub fn symmetric(
        h: &Operator,
        a_list: &[Operator],
        b_list: &[Operator],
        gamma_a: &DMatrix<f64>,
        gamma_b: &DMatrix<f64>,
    ) -> Result<Self> {
        let n = a_list.len();
        if b_list.len() != n {
            return Err(Error::LengthMismatch { left: n, right: b_list.len() });
        }
        if gamma_a.shape() != (n, n) || gamma_b.shape() != (n, n) {
            return Err(Error::InvalidRateMatrix(format!("expected {n}x{n} precision matrices")));
        }
        let mut gamma = DMatrix::<f64>::zeros(2 * n, 2 * n);
        gamma.view_mut((0, 0), (n, n)).copy_from(gamma_a);
        gamma.view_mut((n, n), (n, n)).copy_from(gamma_b);
        let observables: Vec<Operator> = a_list.iter().chain(b_list).cloned().collect();
        let feedback: Vec<Operator> = b_list.iter().chain(a_list).cloned().collect();
        let monitor = MonitoredSystem::new(h, &MonitoringSpec::new(observables, gamma)?)?;
        Self::new(monitor, feedback)
    }

    pub fn dim(&self) -> usize {
        self.monitor.dim()
    }

    pub fn step<R: Rng + ?Sized>(
        &self,
        rho: &Operator,
        time: f64,
        config: &SchemeConfig,
        rng: &mut R,
    ) -> Result<SmeStep> {
        let measured = self.monitor.step(rho, time, config, rng)?;
        let d = self.dim();
        let mut x = DMatrix::<C64>::zeros(d, d);
        for (a, f) in measured.record.signals.iter().zip(&self.feedback) {
            x += f * c(a * config.dt, 0.0);
        }
        let u = expm(&(x * c(0.0, -1.0)));
        let rotated = &u * measured.state.matrix() * u.adjoint();
        let (state, _) = finish_state(rotated, false);
        Ok(SmeStep { state, ..measured })
    }
}

/// One monitoring step; see [`MonitoredSystem`].
pub fn sme_step<R: Rng + ?Sized>(
    rho: &Operator,
    system: &MonitoredSystem,
    time: f64,
    config: &SchemeConfig,
    rng: &mut R,
) -> Result<SmeStep> {
    system.step(rho, time, config, rng)
}

/// One measurement-then-feedback step; see [`FeedbackLoop`].
pub fn feedback_trajectory_step<R: Rng + ?Sized>(
    rho: &Operator,
    control: &FeedbackLoop,
    time: f64,
    config: &SchemeConfig,
    rng: &mut R,
) -> Result<SmeStep> {
    control.step(rho, time, config, rng)
}

impl Unraveling for MonitoredSystem {
    type State = Operator;

    fn step(&self, state: &mut Operator, time: f64, config: &SchemeConfig, rng: &mut TrajectoryRng) -> Result<()> {
        *state = MonitoredSystem::step(self, state, time, config, rng)?.state;
        Ok(())
    }

    fn density(&self, state: &Operator) -> Operator {
        state.clone()
    }
}

impl Unraveling for FeedbackLoop {
    type State = Operator;

    fn step(&self, state: &mut Operator, time: f64, config: &SchemeConfig, rng: &mut TrajectoryRng) -> Result<()> {
        *state = FeedbackLoop::step(self, state, time, config, rng)?.state;
        Ok(())
    }

    fn density(&self, state: &Operator) -> Operator {
        state.clone()
    }
}
