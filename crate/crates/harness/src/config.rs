//! Scenario configuration.
//!
//! A config file has up to six sections; every key is optional and unknown
//! keys are rejected. Missing keys take scenario-specific defaults, and the
//! fully resolved config is what gets hashed and written to the metadata
//! sidecar, so re-running from it reproduces the output.
//!
//! ```toml
//! [system]
//! kind = "lattice"        # "qubits" | "lattice"
//! sites = 4               # lattice sites per party
//! spacing = 1.0
//! hopping = 1.0           # nearest-neighbour hopping on each ring
//! field = 1.0             # qubits: local σx field on each party
//! initial = "plus"        # "plus" | "localized" | "random-product"
//! states = 20             # number of random product states
//! feedback = "monitoring" # "monitoring" | "one-way" | "symmetric"
//!
//! [potential]
//! kind = "cosine"         # "zero" | "cosine" | "delta" | "power-law" | "table"
//! amplitude = 1.0
//! harmonic = 1
//! exponent = 1.0
//! path = "v.txt"          # for kind = "table"
//! divergence_resolutions = [8, 16, 32, 64]
//!
//! [gamma]
//! value = 2.0             # monitoring precision, all modes and both parties
//! lambdas = [0.0, 0.25, 0.5, 0.75, 1.0]
//! noise_scales = [0.0, 0.5, 1.0, 2.0]
//! cost_range = [0.1, 40.0]
//! cost_points = 101
//!
//! [integration]
//! horizon = 1.0
//! checkpoints = 10
//! steps_per_checkpoint = 20   # deterministic propagation
//! dt = 1e-3                   # stochastic step
//! scheme = "ito-kraus"        # "ito-kraus" | "ito-euler" | "stratonovich-heun"
//! propagation = "rk4"         # "rk4" | "exact"
//!
//! [ensemble]
//! trajectories = 10000
//! seed = 0
//!
//! [output]
//! path = "out.csv"
//! ```

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::scenarios::Scenario;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub system: RawSystem,
    #[serde(default)]
    pub potential: RawPotential,
    #[serde(default)]
    pub gamma: RawGamma,
    #[serde(default)]
    pub integration: RawIntegration,
    #[serde(default)]
    pub ensemble: RawEnsemble,
    #[serde(default)]
    pub output: RawOutput,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSystem {
    pub kind: Option<SystemKind>,
    pub sites: Option<usize>,
    pub spacing: Option<f64>,
    pub hopping: Option<f64>,
    pub field: Option<f64>,
    pub initial: Option<InitialState>,
    pub states: Option<usize>,
    pub feedback: Option<FeedbackKind>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPotential {
    pub kind: Option<PotentialKind>,
    pub amplitude: Option<f64>,
    pub harmonic: Option<usize>,
    pub exponent: Option<f64>,
    pub path: Option<String>,
    pub divergence_resolutions: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGamma {
    pub value: Option<f64>,
    pub lambdas: Option<Vec<f64>>,
    pub noise_scales: Option<Vec<f64>>,
    pub cost_range: Option<[f64; 2]>,
    pub cost_points: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawIntegration {
    pub horizon: Option<f64>,
    pub checkpoints: Option<usize>,
    pub steps_per_checkpoint: Option<usize>,
    pub dt: Option<f64>,
    pub scheme: Option<SchemeName>,
    pub propagation: Option<PropagationName>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEnsemble {
    pub trajectories: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    pub path: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    Qubits,
    Lattice,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    /// `|+⟩` per qubit, or the uniform superposition over lattice sites.
    Plus,
    /// `|0⟩` per party.
    Localized,
    /// Haar-random product states drawn from the ensemble seed.
    RandomProduct,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeedbackKind {
    Monitoring,
    OneWay,
    Symmetric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    Zero,
    Cosine,
    Delta,
    PowerLaw,
    Table,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    ItoKraus,
    ItoEuler,
    StratonovichHeun,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropagationName {
    Rk4,
    Exact,
}

/// Fully resolved configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub system: System,
    pub potential: Potential,
    pub gamma: Gamma,
    pub integration: Integration,
    pub ensemble: Ensemble,
    pub output: Output,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct System {
    pub kind: SystemKind,
    pub sites: usize,
    pub spacing: f64,
    pub hopping: f64,
    pub field: f64,
    pub initial: InitialState,
    pub states: usize,
    pub feedback: FeedbackKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Potential {
    pub kind: PotentialKind,
    pub amplitude: f64,
    pub harmonic: usize,
    pub exponent: f64,
    pub path: String,
    pub divergence_resolutions: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gamma {
    pub value: f64,
    pub lambdas: Vec<f64>,
    pub noise_scales: Vec<f64>,
    pub cost_range: [f64; 2],
    pub cost_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Integration {
    pub horizon: f64,
    pub checkpoints: usize,
    pub steps_per_checkpoint: usize,
    pub dt: f64,
    pub scheme: SchemeName,
    pub propagation: PropagationName,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ensemble {
    pub trajectories: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub path: String,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Config { field: None, message: e.message().to_string() })
    }
}

struct Defaults {
    kind: SystemKind,
    sites: usize,
    field: f64,
    initial: InitialState,
    potential: PotentialKind,
    amplitude: f64,
    horizon: f64,
    checkpoints: usize,
    steps_per_checkpoint: usize,
    dt: f64,
    scheme: SchemeName,
    trajectories: usize,
}

fn defaults(scenario: Scenario) -> Defaults {
    let base = Defaults {
        kind: SystemKind::Qubits,
        sites: 4,
        field: 1.0,
        initial: InitialState::Plus,
        potential: PotentialKind::Cosine,
        amplitude: 1.0,
        horizon: 1.0,
        checkpoints: 10,
        steps_per_checkpoint: 20,
        dt: 1e-3,
        scheme: SchemeName::ItoKraus,
        trajectories: 10_000,
    };
    match scenario {
        Scenario::NonEntangling => Defaults {
            initial: InitialState::RandomProduct,
            horizon: 10.0,
            checkpoints: 100,
            ..base
        },
        // t = π/4 falls on the 10th of 40 checkpoints.
        Scenario::SubthresholdEntanglement => Defaults {
            field: 0.0,
            horizon: PI,
            checkpoints: 40,
            steps_per_checkpoint: 25,
            ..base
        },
        Scenario::TrajectoryEquivalence => base,
        // Noise strength μ·𝕍(0) up to 0.5 keeps the Heun norm drift well
        // inside its budget at this step.
        Scenario::SseThreshold => Defaults {
            kind: SystemKind::Lattice,
            amplitude: 0.25,
            dt: 2e-4,
            scheme: SchemeName::StratonovichHeun,
            ..base
        },
        Scenario::LeastDecoherenceReport => Defaults { kind: SystemKind::Lattice, sites: 8, ..base },
    }
}

fn bad(field: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Config { field: Some(field.to_string()), message: message.into() }
}

fn positive(field: &str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(bad(field, format!("must be positive, got {value}")))
    }
}

fn nonnegative(field: &str, value: f64) -> Result<f64> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(bad(field, format!("must be nonnegative, got {value}")))
    }
}

fn at_least(field: &str, value: usize, min: usize) -> Result<usize> {
    if value >= min {
        Ok(value)
    } else {
        Err(bad(field, format!("must be at least {min}, got {value}")))
    }
}

impl Config {
    /// Fills defaults for `scenario` and validates every field.
    pub fn resolve(raw: &RawConfig, scenario: Scenario) -> Result<Self> {
        let d = defaults(scenario);
        let s = &raw.system;
        let system = System {
            kind: s.kind.unwrap_or(d.kind),
            sites: at_least("system.sites", s.sites.unwrap_or(d.sites), 2)?,
            spacing: positive("system.spacing", s.spacing.unwrap_or(1.0))?,
            hopping: nonnegative("system.hopping", s.hopping.unwrap_or(1.0))?,
            field: s.field.unwrap_or(d.field),
            initial: s.initial.unwrap_or(d.initial),
            states: at_least("system.states", s.states.unwrap_or(20), 1)?,
            feedback: s.feedback.unwrap_or(FeedbackKind::Monitoring),
        };
        if !system.field.is_finite() {
            return Err(bad("system.field", "must be finite"));
        }

        let p = &raw.potential;
        let potential = Potential {
            kind: p.kind.unwrap_or(d.potential),
            amplitude: p.amplitude.unwrap_or(d.amplitude),
            harmonic: p.harmonic.unwrap_or(1),
            exponent: positive("potential.exponent", p.exponent.unwrap_or(1.0))?,
            path: p.path.clone().unwrap_or_default(),
            divergence_resolutions: p.divergence_resolutions.clone().unwrap_or_else(|| vec![8, 16, 32, 64]),
        };
        if !potential.amplitude.is_finite() {
            return Err(bad("potential.amplitude", "must be finite"));
        }
        if potential.kind == PotentialKind::Table && potential.path.is_empty() {
            return Err(bad("potential.path", "required when potential.kind = \"table\""));
        }
        if potential.divergence_resolutions.is_empty() {
            return Err(bad("potential.divergence_resolutions", "must not be empty"));
        }
        for (i, r) in potential.divergence_resolutions.iter().enumerate() {
            at_least(&format!("potential.divergence_resolutions[{i}]"), *r, 2)?;
        }

        let g = &raw.gamma;
        let gamma = Gamma {
            value: positive("gamma.value", g.value.unwrap_or(2.0))?,
            lambdas: g.lambdas.clone().unwrap_or_else(|| vec![0.0, 0.25, 0.5, 0.75, 1.0]),
            noise_scales: g.noise_scales.clone().unwrap_or_else(|| vec![0.0, 0.5, 1.0, 2.0]),
            cost_range: g.cost_range.unwrap_or([0.1, 40.0]),
            cost_points: at_least("gamma.cost_points", g.cost_points.unwrap_or(101), 2)?,
        };
        if gamma.lambdas.is_empty() {
            return Err(bad("gamma.lambdas", "must not be empty"));
        }
        for (i, l) in gamma.lambdas.iter().enumerate() {
            if !(0.0..=1.0).contains(l) {
                return Err(bad(&format!("gamma.lambdas[{i}]"), format!("must lie in [0, 1], got {l}")));
            }
        }
        if gamma.noise_scales.is_empty() {
            return Err(bad("gamma.noise_scales", "must not be empty"));
        }
        for (i, m) in gamma.noise_scales.iter().enumerate() {
            nonnegative(&format!("gamma.noise_scales[{i}]"), *m)?;
        }
        let [lo, hi] = gamma.cost_range;
        positive("gamma.cost_range[0]", lo)?;
        if !(hi > lo) || !hi.is_finite() {
            return Err(bad("gamma.cost_range[1]", format!("must exceed the lower end {lo}, got {hi}")));
        }

        let i = &raw.integration;
        let integration = Integration {
            horizon: positive("integration.horizon", i.horizon.unwrap_or(d.horizon))?,
            checkpoints: at_least("integration.checkpoints", i.checkpoints.unwrap_or(d.checkpoints), 1)?,
            steps_per_checkpoint: at_least(
                "integration.steps_per_checkpoint",
                i.steps_per_checkpoint.unwrap_or(d.steps_per_checkpoint),
                1,
            )?,
            dt: positive("integration.dt", i.dt.unwrap_or(d.dt))?,
            scheme: i.scheme.unwrap_or(d.scheme),
            propagation: i.propagation.unwrap_or(PropagationName::Rk4),
        };

        let e = &raw.ensemble;
        let ensemble = Ensemble {
            trajectories: at_least("ensemble.trajectories", e.trajectories.unwrap_or(d.trajectories), 1)?,
            seed: e.seed.unwrap_or(0),
        };
        let output = Output { path: raw.output.path.clone().unwrap_or_else(|| format!("{}.csv", scenario.name())) };

        let config = Config { system, potential, gamma, integration, ensemble, output };
        config.check_scenario(scenario)?;
        Ok(config)
    }

    fn check_scenario(&self, scenario: Scenario) -> Result<()> {
        match scenario {
            Scenario::TrajectoryEquivalence => {
                if self.integration.scheme == SchemeName::StratonovichHeun {
                    return Err(bad("integration.scheme", "monitoring trajectories use an Itô scheme"));
                }
                self.check_grid()?;
            }
            Scenario::SseThreshold => {
                if self.system.kind != SystemKind::Lattice {
                    return Err(bad("system.kind", "noise potentials live on a lattice"));
                }
                if self.integration.scheme != SchemeName::StratonovichHeun {
                    return Err(bad("integration.scheme", "noise potentials use the stratonovich-heun scheme"));
                }
                self.check_grid()?;
            }
            Scenario::SubthresholdEntanglement => {
                if self.system.kind != SystemKind::Qubits {
                    return Err(bad("system.kind", "the Ising sweep runs on two qubits"));
                }
            }
            Scenario::NonEntangling | Scenario::LeastDecoherenceReport => {}
        }
        Ok(())
    }

    fn check_grid(&self) -> Result<()> {
        let interval = self.integration.horizon / self.integration.checkpoints as f64;
        let steps = (interval / self.integration.dt).round();
        if steps < 1.0 || (steps * self.integration.dt - interval).abs() > 1e-9 * interval {
            return Err(bad(
                "integration.dt",
                format!("checkpoint interval {interval} is not a whole number of steps of {}", self.integration.dt),
            ));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    pub fn checkpoint_interval(&self) -> f64 {
        self.integration.horizon / self.integration.checkpoints as f64
    }
}
