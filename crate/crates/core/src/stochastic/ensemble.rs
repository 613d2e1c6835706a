//! Reproducible, thread-count-independent trajectory averaging.
//!
//! Trajectory `i` draws from a ChaCha8 stream seeded with
//! `trajectory_seed(base_seed, i)`, where
//!
//! ```text
//! trajectory_seed(s, i) = splitmix64(s + (i + 1) · 0x9E3779B97F4A7C15)   (wrapping)
//! splitmix64(z): z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//!                z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31
//! ```
//!
//! Trajectories are grouped into fixed chunks of [`CHUNK`] consecutive
//! indices. Each chunk is summed sequentially and chunk sums are merged in
//! index order, so the floating-point result does not depend on how rayon
//! schedules chunks.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rayon::prelude::*;

use super::{SchemeConfig, TrajectoryRng, Unraveling};
use crate::error::{Error, Result};
use crate::operator::{Operator, C64};

pub const CHUNK: usize = 32;
const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trajectory_seed(base_seed: u64, index: u64) -> u64 {
    splitmix64(base_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn trajectory_rng(base_seed: u64, index: u64) -> TrajectoryRng {
    TrajectoryRng::seed_from_u64(trajectory_seed(base_seed, index))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleConfig {
    pub trajectories: usize,
    pub horizon: f64,
    /// Number of equal intervals in `[0, horizon]`; the mean is recorded at
    /// `t = 0` and at the end of every interval.
    pub checkpoints: usize,
    pub scheme: SchemeConfig,
    pub base_seed: u64,
    /// Worker threads; `None` uses rayon's global pool.
    pub threads: Option<usize>,
}

impl EnsembleConfig {
    pub fn new(trajectories: usize, horizon: f64, scheme: SchemeConfig, base_seed: u64) -> Self {
        Self { trajectories, horizon, checkpoints: 1, scheme, base_seed, threads: None }
    }

    pub fn with_checkpoints(mut self, checkpoints: usize) -> Self {
        self.checkpoints = checkpoints;
        self
    }

    pub fn with_threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    fn steps_per_interval(&self) -> Result<usize> {
        if self.trajectories == 0 {
            return Err(Error::InvalidArgument("trajectory count must be at least 1".into()));
        }
        if self.checkpoints == 0 {
            return Err(Error::InvalidArgument("checkpoint count must be at least 1".into()));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {}", self.horizon)));
        }
        let interval = self.horizon / self.checkpoints as f64;
        let steps = (interval / self.scheme.dt).round();
        if steps < 1.0 || (steps * self.scheme.dt - interval).abs() > 1e-9 * interval {
            return Err(Error::InvalidArgument(format!(
                "checkpoint interval {interval} is not a whole number of steps of {}",
                self.scheme.dt
            )));
        }
        Ok(steps as usize)
    }
}

/// Ensemble statistics at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsemblePoint {
    pub time: f64,
    pub mean_state: Operator,
    /// Mean of `Tr(O ρ)` for the designated observable `O`.
    pub observable_mean: f64,
    pub observable_sem: f64,
    /// Standard error of the mean state in Frobenius norm,
    /// `sqrt(Σ_ij Var(ρ_ij) / n)`.
    pub state_sem: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryEnsemble {
    pub n: usize,
    pub base_seed: u64,
    pub points: Vec<EnsemblePoint>,
}

impl TrajectoryEnsemble {
    pub fn final_point(&self) -> &EnsemblePoint {
        self.points.last().expect("at least the initial point")
    }

    pub fn mean_state(&self) -> &Operator {
        &self.final_point().mean_state
    }

    /// Standard error of the designated observable at the horizon.
    pub fn sem(&self) -> f64 {
        self.final_point().observable_sem
    }
}

#[derive(Clone, Debug)]
struct Accumulator {
    count: usize,
    sums: Vec<DMatrix<C64>>,
    frob_sq: Vec<f64>,
    obs: Vec<f64>,
    obs_sq: Vec<f64>,
}

impl Accumulator {
    fn new(points: usize, dim: usize) -> Self {
        Self {
            count: 0,
            sums: vec![DMatrix::zeros(dim, dim); points],
            frob_sq: vec![0.0; points],
            obs: vec![0.0; points],
            obs_sq: vec![0.0; points],
        }
    }

    fn record(&mut self, point: usize, rho: &Operator, observable: &Operator) {
        let m = rho.matrix();
        self.sums[point] += m;
        self.frob_sq[point] += m.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let o = observable.expectation(rho).re;
        self.obs[point] += o;
        self.obs_sq[point] += o * o;
    }

    fn merge(&mut self, other: &Accumulator) {
        self.count += other.count;
        for p in 0..self.sums.len() {
            self.sums[p] += &other.sums[p];
            self.frob_sq[p] += other.frob_sq[p];
            self.obs[p] += other.obs[p];
            self.obs_sq[p] += other.obs_sq[p];
        }
    }
}

/// Runs `config.trajectories` independent trajectories from `initial` and
/// averages their density matrices at every checkpoint.
pub fn run_ensemble<U: Unraveling>(
    unraveling: &U,
    initial: &U::State,
    observable: &Operator,
    config: &EnsembleConfig,
) -> Result<TrajectoryEnsemble> {
    let steps = config.steps_per_interval()?;
    let dim = unraveling.density(initial).dim();
    if observable.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: observable.dim() });
    }
    let n = config.trajectories;
    let points = config.checkpoints + 1;
    let chunks = n.div_ceil(CHUNK);
    let dt = config.scheme.dt;

    let run_chunk = |chunk: usize| -> Result<Accumulator> {
        let mut acc = Accumulator::new(points, dim);
        for index in chunk * CHUNK..((chunk + 1) * CHUNK).min(n) {
            let mut rng = trajectory_rng(config.base_seed, index as u64);
            let mut state = initial.clone();
            acc.record(0, &unraveling.density(&state), observable);
            let mut step_count = 0usize;
            for point in 1..points {
                for _ in 0..steps {
                    let time = step_count as f64 * dt;
                    unraveling
                        .step(&mut state, time, &config.scheme, &mut rng)
                        .map_err(|e| Error::Trajectory { index, source: Box::new(e) })?;
                    step_count += 1;
                }
                acc.record(point, &unraveling.density(&state), observable);
            }
            acc.count += 1;
        }
        Ok(acc)
    };

    let results: Vec<Result<Accumulator>> = match config.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))?
            .install(|| (0..chunks).into_par_iter().map(run_chunk).collect()),
        None => (0..chunks).into_par_iter().map(run_chunk).collect(),
    };

    let mut total = Accumulator::new(points, dim);
    for r in results {
        total.merge(&r?);
    }

    let nf = n as f64;
    let interval = config.horizon / config.checkpoints as f64;
    let points = (0..points)
        .map(|p| {
            let mean = &total.sums[p] / C64::new(nf, 0.0);
            let mean_frob_sq: f64 = mean.iter().map(|z| z.norm_sqr()).sum();
            let obs_mean = total.obs[p] / nf;
            let (obs_var, state_var) = if n > 1 {
                (
                    ((total.obs_sq[p] - nf * obs_mean * obs_mean) / (nf - 1.0)).max(0.0),
                    ((total.frob_sq[p] - nf * mean_frob_sq) / (nf - 1.0)).max(0.0),
                )
            } else {
                (0.0, 0.0)
            };
            EnsemblePoint {
                time: p as f64 * interval,
                mean_state: Operator::new(mean).expect("square"),
                observable_mean: obs_mean,
                observable_sem: (obs_var / nf).sqrt(),
                state_sem: (state_var / nf).sqrt(),
            }
        })
        .collect();
    Ok(TrajectoryEnsemble { n, base_seed: config.base_seed, points })
}
