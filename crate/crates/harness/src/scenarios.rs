//! Named scenarios; each reproduces one claim about LOCC dynamics.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;
use std::path::Path;

use locc_core::gkls::{
    local_monitoring_generator, oneway_feedback_generator, pair_potential_parts, propagate_series,
    symmetric_feedback_generator, symmetric_feedback_parts, Generator, GeneratorParts, MonitoringSpec,
    PropagationMode,
};
use locc_core::operator::{lift, pauli_x, pauli_z, BipartiteSpace, Operator, Side, C64};
use locc_core::potential::{
    build_local_operators, decoherence_cost, decoherence_kernel, divergence_scan, fourier_modes,
    least_decoherence_rate, tabulate_potential, Lattice, PairPotential, MODE_CUTOFF,
};
use locc_core::state::{negativity_op, random_pure_product, trace_distance, DensityMatrix};
use locc_core::stochastic::{
    run_ensemble, trajectory_rng, EnsembleConfig, EnsemblePoint, FeedbackLoop, MonitoredSystem, NoiseModel,
    NoisyPotentialSse, Scheme, SchemeConfig, SseState, Unraveling,
};
use nalgebra::DMatrix;

use crate::config::{
    Config, FeedbackKind, InitialState, PotentialKind, PropagationName, SchemeName, SystemKind,
};
use crate::error::{HarnessError, Result};
use crate::output::{ReportRow, ResultRecord, StateRow, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scenario {
    NonEntangling,
    SubthresholdEntanglement,
    TrajectoryEquivalence,
    SseThreshold,
    LeastDecoherenceReport,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::NonEntangling,
        Scenario::SubthresholdEntanglement,
        Scenario::TrajectoryEquivalence,
        Scenario::SseThreshold,
        Scenario::LeastDecoherenceReport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::NonEntangling => "non-entangling",
            Scenario::SubthresholdEntanglement => "subthreshold-entanglement",
            Scenario::TrajectoryEquivalence => "trajectory-equivalence",
            Scenario::SseThreshold => "sse-threshold",
            Scenario::LeastDecoherenceReport => "least-decoherence-report",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Scenario::NonEntangling => "symmetric feedback at the least-decoherence point never entangles product states",
            Scenario::SubthresholdEntanglement => "negativity of the Ising feedback channel as its decoherence is scaled down",
            Scenario::TrajectoryEquivalence => "trajectory averages of monitoring and feedback versus the master equation",
            Scenario::SseThreshold => "noise-potential Schrödinger trajectories with noise scaled around the kernel",
            Scenario::LeastDecoherenceReport => "mode decomposition, optimal precision, kernel and divergence table",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Scenario::ALL.into_iter().find(|s| s.name() == name).ok_or_else(|| HarnessError::UnknownScenario {
            name: name.to_string(),
            valid: Scenario::ALL.map(Scenario::name).join(", "),
        })
    }

    /// Runs the scenario. `threads` only affects scheduling, never results.
    pub fn run(self, config: &Config, threads: Option<usize>) -> Result<ResultRecord> {
        let (table, summary) = match self {
            Scenario::NonEntangling => non_entangling(config)?,
            Scenario::SubthresholdEntanglement => subthreshold_entanglement(config)?,
            Scenario::TrajectoryEquivalence => trajectory_equivalence(config, threads)?,
            Scenario::SseThreshold => sse_threshold(config, threads)?,
            Scenario::LeastDecoherenceReport => least_decoherence_report(config)?,
        };
        let record = ResultRecord::new(self, config.clone(), table, summary);
        record.check_invariants()?;
        Ok(record)
    }
}

type Summary = BTreeMap<String, f64>;

fn qubits() -> BipartiteSpace {
    BipartiteSpace::new(2, 2).expect("nonzero")
}

fn on(op: &Operator, side: Side, space: BipartiteSpace) -> Operator {
    lift(op, side, space).expect("dimensions match the space")
}

fn potential_error(e: locc_core::Error) -> HarnessError {
    HarnessError::Config { field: Some("potential".into()), message: e.to_string() }
}

fn lattice_and_potential(config: &Config) -> Result<(Lattice, PairPotential)> {
    let lattice = Lattice::new(config.system.sites, config.system.spacing).map_err(potential_error)?;
    let p = &config.potential;
    let pot = match p.kind {
        PotentialKind::Zero => PairPotential::zero(lattice.sites()),
        PotentialKind::Cosine => PairPotential::cosine(&lattice, p.amplitude, p.harmonic),
        PotentialKind::Delta => PairPotential::delta(&lattice, p.amplitude),
        PotentialKind::PowerLaw => PairPotential::power_law(&lattice, p.amplitude, p.exponent),
        PotentialKind::Table => PairPotential::load_table(Path::new(&p.path)),
    }
    .map_err(potential_error)?;
    if pot.sites() != lattice.sites() {
        return Err(HarnessError::Config {
            field: Some("potential.path".into()),
            message: format!("table has {} sites but system.sites = {}", pot.sites(), lattice.sites()),
        });
    }
    Ok((lattice, pot))
}

fn hopping(l: usize, j: f64) -> Operator {
    Operator::from_fn(l, |a, b| {
        if (a + 1) % l == b || (b + 1) % l == a {
            C64::new(-j, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Symmetric-feedback realization of the configured lattice potential with
/// one precision for every mode, plus the coupling `V` itself.
fn lattice_parts(config: &Config) -> Result<(GeneratorParts, Operator, BipartiteSpace)> {
    let (lattice, pot) = lattice_and_potential(config)?;
    let l = lattice.sites();
    let pairs = build_local_operators(&fourier_modes(&pot, &lattice)?);
    let h = hopping(l, config.system.hopping);
    let gamma = vec![config.gamma.value; lattice.mode_count()];
    let parts = pair_potential_parts(&h, &h, &pairs, &gamma)?;
    Ok((parts, tabulate_potential(&pot, &lattice), BipartiteSpace::new(l, l)?))
}

fn local_vector(space: BipartiteSpace, side: Side, initial: InitialState) -> Vec<C64> {
    let d = space.local_dim(side);
    match initial {
        InitialState::Localized => (0..d).map(|i| C64::new(if i == 0 { 1.0 } else { 0.0 }, 0.0)).collect(),
        _ => vec![C64::new(1.0 / (d as f64).sqrt(), 0.0); d],
    }
}

/// Initial product states: `count` random ones, or the single configured one.
fn initial_states(config: &Config, space: BipartiteSpace, count: usize) -> Result<Vec<DensityMatrix>> {
    match config.system.initial {
        InitialState::RandomProduct => Ok((0..count)
            .map(|i| random_pure_product(space, &mut trajectory_rng(config.ensemble.seed, i as u64)))
            .collect()),
        initial => {
            let psi = locc_core::state::kron_vec(
                &local_vector(space, Side::A, initial),
                &local_vector(space, Side::B, initial),
            );
            Ok(vec![DensityMatrix::pure(&psi, space)?])
        }
    }
}

fn propagation_mode(config: &Config) -> PropagationMode {
    match config.integration.propagation {
        PropagationName::Rk4 => PropagationMode::Rk4,
        PropagationName::Exact => PropagationMode::Exact,
    }
}

fn state_row(series: &str, t: f64, rho: &Operator, space: BipartiteSpace, observable: &Operator) -> Result<StateRow> {
    Ok(StateRow {
        series: series.to_string(),
        t,
        negativity: negativity_op(rho, space)?,
        trace: rho.trace().re,
        min_eigenvalue: rho.hermitian_eigenvalues()?[0],
        observable: Some(observable.expectation(rho).re),
        observable_sem: None,
        state_sem: None,
        trace_distance: None,
    })
}

/// Deterministic rows at `t = 0` and every checkpoint.
fn deterministic_series(
    config: &Config,
    series: &str,
    g: &Generator,
    rho0: &DensityMatrix,
    observable: &Operator,
) -> Result<Vec<StateRow>> {
    let interval = config.checkpoint_interval();
    let states = propagate_series(
        g,
        rho0,
        interval,
        config.integration.checkpoints,
        config.integration.steps_per_checkpoint,
        propagation_mode(config),
    )?;
    let space = rho0.space();
    let mut rows = vec![state_row(series, 0.0, rho0.operator(), space, observable)?];
    for (n, p) in states.iter().enumerate() {
        rows.push(state_row(series, (n + 1) as f64 * interval, p.state.operator(), space, observable)?);
    }
    Ok(rows)
}

fn max_negativity(rows: &[StateRow]) -> f64 {
    rows.iter().map(|r| r.negativity).fold(0.0, f64::max)
}

fn non_entangling(config: &Config) -> Result<(Table, Summary)> {
    let (g, coupling, space) = match config.system.kind {
        SystemKind::Qubits => {
            let space = qubits();
            let field = config.system.field;
            let h = &on(&pauli_x(), Side::A, space).scale(field) + &on(&pauli_x(), Side::B, space).scale(field);
            let a = on(&pauli_z(), Side::A, space);
            let b = on(&pauli_z(), Side::B, space);
            let gamma = DMatrix::from_element(1, 1, config.gamma.value);
            let g = symmetric_feedback_generator(&h, std::slice::from_ref(&a), std::slice::from_ref(&b), &gamma, &gamma)?;
            (g, &a * &b, space)
        }
        SystemKind::Lattice => {
            let (parts, v, space) = lattice_parts(config)?;
            (parts.combine(1.0), v, space)
        }
    };
    let mut rows = Vec::new();
    for (i, rho0) in initial_states(config, space, config.system.states)?.iter().enumerate() {
        rows.extend(deterministic_series(config, &format!("state-{i}"), &g, rho0, &coupling)?);
    }
    let mut summary = Summary::new();
    summary.insert("max_negativity".into(), max_negativity(&rows));
    Ok((Table::States(rows), summary))
}

fn subthreshold_entanglement(config: &Config) -> Result<(Table, Summary)> {
    let space = qubits();
    let field = config.system.field;
    let h = &on(&pauli_x(), Side::A, space).scale(field) + &on(&pauli_x(), Side::B, space).scale(field);
    let a = on(&pauli_z(), Side::A, space);
    let b = on(&pauli_z(), Side::B, space);
    let gamma = DMatrix::from_element(1, 1, config.gamma.value);
    // Hamiltonian part H + σz⊗σz; the dissipator is scaled by λ.
    let parts = symmetric_feedback_parts(&h, std::slice::from_ref(&a), std::slice::from_ref(&b), &gamma, &gamma)?;
    let coupling = &a * &b;
    let rho0 = initial_states(config, space, 1)?.remove(0);
    let mut rows = Vec::new();
    let mut summary = Summary::new();
    for &lambda in &config.gamma.lambdas {
        let series = format!("lambda={lambda}");
        let curve = deterministic_series(config, &series, &parts.combine(lambda), &rho0, &coupling)?;
        summary.insert(format!("max_negativity[{series}]"), max_negativity(&curve));
        if let Some(row) = curve.iter().find(|r| (r.t - FRAC_PI_4).abs() < 1e-9) {
            summary.insert(format!("negativity_at_quarter_pi[{series}]"), row.negativity);
        }
        rows.extend(curve);
    }
    Ok((Table::States(rows), summary))
}

fn scheme_config(config: &Config) -> Result<SchemeConfig> {
    let scheme = match config.integration.scheme {
        SchemeName::ItoKraus => Scheme::ItoKraus,
        SchemeName::ItoEuler => Scheme::ItoEuler,
        SchemeName::StratonovichHeun => Scheme::StratonovichHeun,
    };
    Ok(SchemeConfig::new(config.integration.dt, scheme)?)
}

fn ensemble_config(config: &Config, trajectories: usize, threads: Option<usize>) -> Result<EnsembleConfig> {
    Ok(EnsembleConfig::new(trajectories, config.integration.horizon, scheme_config(config)?, config.ensemble.seed)
        .with_checkpoints(config.integration.checkpoints)
        .with_threads(threads))
}

/// Ensemble rows alongside their deterministic reference; returns the rows
/// and the final trace distance.
fn compare_ensemble<U: Unraveling>(
    config: &Config,
    series: &str,
    unraveling: &U,
    initial: &U::State,
    trajectories: usize,
    threads: Option<usize>,
    observable: &Operator,
    reference: &[StateRow],
    reference_states: &[Operator],
    space: BipartiteSpace,
) -> Result<(Vec<StateRow>, Vec<EnsemblePoint>)> {
    let ens = run_ensemble(unraveling, initial, observable, &ensemble_config(config, trajectories, threads)?)?;
    let mut rows = Vec::with_capacity(ens.points.len());
    for (p, (r, exact)) in ens.points.iter().zip(reference.iter().zip(reference_states)) {
        debug_assert!((p.time - r.t).abs() < 1e-9);
        let mut row = state_row(series, p.time, &p.mean_state, space, observable)?;
        row.observable = Some(p.observable_mean);
        row.observable_sem = Some(p.observable_sem);
        row.state_sem = Some(p.state_sem);
        row.trace_distance = Some(trace_distance(&p.mean_state, exact)?);
        rows.push(row);
    }
    Ok((rows, ens.points))
}

/// Deterministic states at `t = 0` and every checkpoint.
fn reference_states(config: &Config, g: &Generator, rho0: &DensityMatrix) -> Result<Vec<Operator>> {
    let mut out = vec![rho0.operator().clone()];
    let states = propagate_series(
        g,
        rho0,
        config.checkpoint_interval(),
        config.integration.checkpoints,
        config.integration.steps_per_checkpoint,
        propagation_mode(config),
    )?;
    out.extend(states.into_iter().map(|p| p.state.into_operator()));
    Ok(out)
}

fn reference_rows(series: &str, config: &Config, states: &[Operator], space: BipartiteSpace, obs: &Operator) -> Result<Vec<StateRow>> {
    let interval = config.checkpoint_interval();
    states.iter().enumerate().map(|(n, s)| state_row(series, n as f64 * interval, s, space, obs)).collect()
}

fn trajectory_equivalence(config: &Config, threads: Option<usize>) -> Result<(Table, Summary)> {
    let field = config.system.field;
    let gamma = DMatrix::from_element(1, 1, config.gamma.value);
    let n = config.ensemble.trajectories;
    let (space, g, observable, unraveling) = match config.system.feedback {
        FeedbackKind::Monitoring => {
            let space = BipartiteSpace::single(2)?;
            let h = pauli_x().scale(field);
            let spec = MonitoringSpec::single(pauli_z(), config.gamma.value)?;
            let g = local_monitoring_generator(&h, &spec)?;
            (space, g, pauli_z(), Either::Monitor(MonitoredSystem::new(&h, &spec)?))
        }
        FeedbackKind::OneWay => {
            let space = qubits();
            let h = &on(&pauli_x(), Side::A, space).scale(field) + &on(&pauli_z(), Side::B, space).scale(field);
            let a = [on(&pauli_z(), Side::A, space)];
            let b = [on(&pauli_x(), Side::B, space)];
            let g = oneway_feedback_generator(&h, &a, &b, &gamma)?;
            (space, g, a[0].clone(), Either::Feedback(FeedbackLoop::one_way(&h, &a, &b, &gamma)?))
        }
        FeedbackKind::Symmetric => {
            let space = qubits();
            let h = &on(&pauli_x(), Side::A, space).scale(field) + &on(&pauli_x(), Side::B, space).scale(field);
            let a = [on(&pauli_z(), Side::A, space)];
            let b = [on(&pauli_z(), Side::B, space)];
            let g = symmetric_feedback_generator(&h, &a, &b, &gamma, &gamma)?;
            (space, g, a[0].clone(), Either::Feedback(FeedbackLoop::symmetric(&h, &a, &b, &gamma, &gamma)?))
        }
    };
    let rho0 = initial_states(config, space, 1)?.remove(0);
    let exact = reference_states(config, &g, &rho0)?;
    let mut rows = reference_rows("deterministic", config, &exact, space, &observable)?;
    let (ens_rows, points) = match unraveling {
        Either::Monitor(m) => {
            compare_ensemble(config, "ensemble", &m, rho0.operator(), n, threads, &observable, &rows, &exact, space)?
        }
        Either::Feedback(f) => {
            compare_ensemble(config, "ensemble", &f, rho0.operator(), n, threads, &observable, &rows, &exact, space)?
        }
    };
    let last = ens_rows.last().expect("at least one point");
    let final_exact = rows.last().expect("at least one point").observable.expect("observable recorded");
    let mut summary = Summary::new();
    summary.insert("final_trace_distance".into(), last.trace_distance.expect("set"));
    summary.insert("final_state_sem".into(), points.last().expect("point").state_sem);
    summary.insert("final_observable_gap".into(), (last.observable.expect("set") - final_exact).abs());
    summary.insert("final_observable_sem".into(), last.observable_sem.expect("set"));
    rows.extend(ens_rows);
    Ok((Table::States(rows), summary))
}

enum Either {
    Monitor(MonitoredSystem),
    Feedback(FeedbackLoop),
}

fn sse_threshold(config: &Config, threads: Option<usize>) -> Result<(Table, Summary)> {
    let (lattice, pot) = lattice_and_potential(config)?;
    let modes = fourier_modes(&pot, &lattice)?;
    if let Some(v) = modes.values().iter().find(|v| **v < -MODE_CUTOFF) {
        return Err(HarnessError::Config {
            field: Some("potential".into()),
            message: format!("the noise threshold needs nonnegative modes, found {v}"),
        });
    }
    let l = lattice.sites();
    let kernel = decoherence_kernel(&modes);
    let kernel_cov = DMatrix::from_fn(l, l, |a, b| kernel.values()[lattice.displacement(a, b)]);
    let h = hopping(l, config.system.hopping);
    let space = BipartiteSpace::new(l, l)?;
    let v = tabulate_potential(&pot, &lattice);
    let h_total = &(&on(&h, Side::A, space) + &on(&h, Side::B, space)) + &v;
    // At γ = 2 the dissipator is exactly the kernel dissipator, so scaling
    // the noise covariance by μ scales it by μ.
    let parts = pair_potential_parts(&h, &h, &build_local_operators(&modes), &vec![2.0; lattice.mode_count()])?;
    let rho0 = initial_states(config, space, 1)?.remove(0);
    let psi0 = pure_vector(&rho0);

    let mut rows = Vec::new();
    let mut summary = Summary::new();
    for &mu in &config.gamma.noise_scales {
        let series = format!("mu={mu}");
        let exact = reference_states(config, &parts.combine(mu), &rho0)?;
        let reference = reference_rows(&format!("deterministic {series}"), config, &exact, space, &v)?;
        let noise = if mu == 0.0 { NoiseModel::zero(l) } else { NoiseModel::new(&kernel_cov * mu)? };
        let sse = NoisyPotentialSse::new(&h_total, space, noise.clone(), noise)?;
        // Without noise every trajectory is the same.
        let n = if mu == 0.0 { 1 } else { config.ensemble.trajectories };
        let (ens_rows, _) =
            compare_ensemble(config, &series, &sse, &SseState::new(&psi0)?, n, threads, &v, &reference, &exact, space)?;
        let last = ens_rows.last().expect("at least one point");
        summary.insert(format!("final_trace_distance[{series}]"), last.trace_distance.expect("set"));
        summary.insert(format!("max_negativity[{series}]"), max_negativity(&ens_rows));
        let excess = ens_rows
            .iter()
            .map(|r| r.negativity - r.state_sem.expect("set"))
            .fold(f64::NEG_INFINITY, f64::max);
        summary.insert(format!("max_negativity_minus_sem[{series}]"), excess);
        rows.extend(reference);
        rows.extend(ens_rows);
    }
    Ok((Table::States(rows), summary))
}

/// Dominant eigenvector of a pure density matrix (phase fixed by the
/// largest component).
fn pure_vector(rho: &DensityMatrix) -> Vec<C64> {
    let m = rho.operator().matrix();
    let (col, _) = (0..m.ncols())
        .map(|j| (j, m[(j, j)].re))
        .fold((0, f64::NEG_INFINITY), |best, x| if x.1 > best.1 { x } else { best });
    let norm = m[(col, col)].re.sqrt();
    (0..m.nrows()).map(|i| m[(i, col)] / norm).collect()
}

fn least_decoherence_report(config: &Config) -> Result<(Table, Summary)> {
    let (lattice, pot) = lattice_and_potential(config)?;
    let modes = fourier_modes(&pot, &lattice)?;
    let kernel = decoherence_kernel(&modes);
    let best = least_decoherence_rate();
    let mut rows = Vec::new();
    let mut push = |series: &str, x: f64, value: f64| rows.push(ReportRow { series: series.into(), x, value });

    for (d, v) in pot.values().iter().enumerate() {
        push("potential", d as f64, *v);
    }
    for (m, v) in modes.values().iter().enumerate() {
        push("mode", m as f64, *v);
    }
    for (d, k) in kernel.values().iter().enumerate() {
        push("kernel", d as f64, *k);
    }
    let [lo, hi] = config.gamma.cost_range;
    let points = config.gamma.cost_points;
    for i in 0..points {
        let gamma = lo * (hi / lo).powf(i as f64 / (points - 1) as f64);
        push("cost", gamma, decoherence_cost(gamma)?);
    }
    push("minimizer", best.numerical_gamma, best.numerical_cost);

    let p = &config.potential;
    let period = lattice.period();
    let (amplitude, exponent) = (p.amplitude, p.exponent);
    let scan = divergence_scan(|r, a| amplitude / r.max(a).powf(exponent), period, &p.divergence_resolutions)?;
    for row in &scan {
        push("divergence", row.sites as f64, row.kernel_diag);
    }

    let nonnegative = modes.values().iter().all(|v| *v >= -MODE_CUTOFF);
    let kernel_gap =
        kernel.values().iter().zip(pot.values()).map(|(k, v)| (k - v).abs()).fold(0.0, f64::max);
    let monotone = scan.windows(2).all(|w| w[1].kernel_diag > w[0].kernel_diag);
    let mut summary = Summary::new();
    summary.insert("gamma_star".into(), best.numerical_gamma);
    summary.insert("cost_star".into(), best.numerical_cost);
    summary.insert("nonnegative_modes".into(), f64::from(u8::from(nonnegative)));
    summary.insert("kernel_potential_max_gap".into(), kernel_gap);
    summary.insert("kernel_diag".into(), kernel.diag());
    summary.insert("divergence_strictly_increasing".into(), f64::from(u8::from(monotone)));
    Ok((Table::Report(rows), summary))
}
