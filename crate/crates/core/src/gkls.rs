//! GKLS generators as dense superoperators, and deterministic propagation.
//!
//! States are column-vectorized: `vec(ρ)[col·d + row] = ρ[row, col]`, which
//! is nalgebra's native storage order. Under this convention
//! `vec(XρY) = (Yᵀ ⊗ X) vec(ρ)`, so `−i[H,·]` is `−i(I ⊗ H − Hᵀ ⊗ I)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::operator::{c, expm, lift, BipartiteSpace, Operator, Side, C64};
use crate::potential::LocalOperatorPair;
use crate::state::DensityMatrix;

/// Trace drift above which propagated states are renormalized.
pub const TRACE_DRIFT_TOL: f64 = 1e-12;
/// Eigenvalue below which propagation aborts.
pub const PROPAGATION_POSITIVITY_FLOOR: f64 = -1e-6;
/// Conditional Choi eigenvalues must stay above this for a GKLS verdict.
pub const CONDITIONAL_CP_FLOOR: f64 = -1e-8;
/// Largest superoperator dimension (`d²`) for the exact exponential mode.
pub const EXACT_MODE_MAX: usize = 1024;

/// Monitored observables with their (symmetric, PSD) precision matrix.
#[derive(Clone, Debug)]
pub struct MonitoringSpec {
    observables: Vec<Operator>,
    gamma: DMatrix<f64>,
}

impl MonitoringSpec {
    pub fn new(observables: Vec<Operator>, gamma: DMatrix<f64>) -> Result<Self> {
        let n = observables.len();
        if gamma.nrows() != n || gamma.ncols() != n {
            return Err(Error::InvalidRateMatrix(format!(
                "expected {n}x{n} for {n} observables, got {}x{}",
                gamma.nrows(),
                gamma.ncols()
            )));
        }
        if let Some(first) = observables.first() {
            for obs in &observables {
                if obs.dim() != first.dim() {
                    return Err(Error::DimensionMismatch { expected: first.dim(), found: obs.dim() });
                }
                obs.ensure_hermitian("monitored observable")?;
            }
        }
        check_symmetric(&gamma)?;
        if n > 0 {
            let min = min_eigenvalue_real(&gamma);
            if min < -1e-10 {
                return Err(Error::InvalidRateMatrix(format!("not positive semidefinite (eigenvalue {min:e})")));
            }
        }
        Ok(Self { observables, gamma })
    }

    /// One observable monitored at scalar precision `gamma`.
    pub fn single(observable: Operator, gamma: f64) -> Result<Self> {
        Self::new(vec![observable], DMatrix::from_element(1, 1, gamma))
    }

    pub fn observables(&self) -> &[Operator] {
        &self.observables
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn len(&self) -> usize {
        self.observables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observables.is_empty()
    }

    /// `γ⁻¹`, requiring every eigenvalue of `γ` to be at least `1e-10`.
    pub fn gamma_inverse(&self) -> Result<DMatrix<f64>> {
        invert_rate_matrix(&self.gamma)
    }
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    let dev = (m - m.transpose()).abs().max();
    if dev > 1e-12 {
        return Err(Error::InvalidRateMatrix(format!("not symmetric (deviation {dev:e})")));
    }
    Ok(())
}

fn min_eigenvalue_real(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

pub(crate) fn invert_rate_matrix(gamma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(gamma)?;
    if gamma.nrows() == 0 {
        return Ok(gamma.clone());
    }
    let min = min_eigenvalue_real(gamma);
    if min < 1e-10 {
        return Err(Error::InvalidRateMatrix(format!(
            "must be strictly positive definite to invert (smallest eigenvalue {min:e})"
        )));
    }
    let inv = gamma
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidRateMatrix("singular".into()))?;
    Ok((&inv + inv.transpose()) * 0.5)
}

/// A linear superoperator acting on column-vectorized `d×d` matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    matrix: DMatrix<C64>,
    dim: usize,
}

impl Generator {
    pub fn from_matrix(matrix: DMatrix<C64>) -> Result<Self> {
        let n = matrix.nrows();
        let dim = (n as f64).sqrt().round() as usize;
        if matrix.ncols() != n || dim * dim != n || dim == 0 {
            return Err(Error::InvalidArgument(format!(
                "superoperator must be d²×d², got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix, dim })
    }

    pub fn zero(dim: usize) -> Self {
        Self { matrix: DMatrix::zeros(dim * dim, dim * dim), dim }
    }

    /// `−i[H, ·]`.
    pub fn hamiltonian(h: &Operator) -> Result<Self> {
        h.ensure_hermitian("Hamiltonian")?;
        let d = h.dim();
        let id = DMatrix::<C64>::identity(d, d);
        let m = (id.kronecker(h.matrix()) - h.matrix().transpose().kronecker(&id)) * c(0.0, -1.0);
        Ok(Self { matrix: m, dim: d })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, rho: &Operator) -> Operator {
        let v = &self.matrix * vectorize(rho);
        unvectorize(&v, self.dim)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { matrix: &self.matrix * c(factor, 0.0), dim: self.dim }
    }

    pub fn plus(&self, other: &Generator) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        Ok(Self { matrix: &self.matrix + &other.matrix, dim: self.dim })
    }

    /// `‖vec(I)ᵀ G‖_max`: zero for trace-preserving generators.
    pub fn trace_preservation_error(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for col in 0..d * d {
            let s: C64 = (0..d).map(|a| self.matrix[(a * d + a, col)]).sum();
            worst = worst.max(s.norm());
        }
        worst
    }

    /// Max deviation of the Choi matrix from Hermiticity; zero iff
    /// `G(ρ†) = G(ρ)†` for every `ρ`.
    pub fn hermiticity_preservation_error(&self) -> f64 {
        self.choi().hermitian_deviation()
    }

    /// `C = Σ_{ij} |i⟩⟨j| ⊗ G(|i⟩⟨j|)`.
    pub fn choi(&self) -> Operator {
        let d = self.dim;
        // C[(i,a),(j,b)] = G(E_ij)[a,b] = M[b·d + a, j·d + i]
        Operator::from_fn(d * d, |row, col| {
            let (i, a) = (row / d, row % d);
            let (j, b) = (col / d, col % d);
            self.matrix[(b * d + a, j * d + i)]
        })
    }
}

pub fn vectorize(m: &Operator) -> DVector<C64> {
    DVector::from_column_slice(m.matrix().as_slice())
}

pub fn unvectorize(v: &DVector<C64>, dim: usize) -> Operator {
    Operator::new(DMatrix::from_column_slice(dim, dim, v.as_slice())).expect("square by construction")
}

/// Superoperator of `ρ ↦ X ρ Y`.
fn sandwich(x: &DMatrix<C64>, y: &DMatrix<C64>) -> DMatrix<C64> {
    y.transpose().kronecker(x)
}

/// Superoperator of `ρ ↦ [a, [b, ρ]] = abρ − aρb − bρa + ρba`.
fn double_commutator_super(a: &Operator, b: &Operator) -> DMatrix<C64> {
    let d = a.dim();
    let id = DMatrix::<C64>::identity(d, d);
    let (a, b) = (a.matrix(), b.matrix());
    sandwich(&(a * b), &id) - sandwich(a, b) - sandwich(b, a) + sandwich(&id, &(b * a))
}

/// Superoperator of `ρ ↦ i[b, {a, ρ}] = i(baρ + bρa − aρb − ρab)`.
fn feedback_cross_super(b: &Operator, a: &Operator) -> DMatrix<C64> {
    let d = a.dim();
    let id = DMatrix::<C64>::identity(d, d);
    let (a, b) = (a.matrix(), b.matrix());
    (sandwich(&(b * a), &id) + sandwich(b, a) - sandwich(a, b) - sandwich(&id, &(a * b))) * c(0.0, 1.0)
}

/// `−Σ_{νμ} coeff_{νμ} [X_ν, [X_μ, ·]]`.
fn double_commutator_sum(ops: &[Operator], coeff: &DMatrix<f64>, dim: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(dim * dim, dim * dim);
    for (nu, x) in ops.iter().enumerate() {
        for (mu, y) in ops.iter().enumerate() {
            let w = coeff[(nu, mu)];
            if w != 0.0 {
                m -= double_commutator_super(x, y) * c(w, 0.0);
            }
        }
    }
    m
}

fn check_operator_list(ops: &[Operator], dim: usize, what: &'static str) -> Result<()> {
    for op in ops {
        if op.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: op.dim() });
        }
        op.ensure_hermitian(what)?;
    }
    Ok(())
}

/// Monitoring without feedback:
/// `G(ρ) = −i[H,ρ] − (1/8) Σ_{νμ} γ_{νμ} [A_ν,[A_μ,ρ]]`.
pub fn local_monitoring_generator(h: &Operator, spec: &MonitoringSpec) -> Result<Generator> {
    let mut g = Generator::hamiltonian(h)?;
    check_operator_list(spec.observables(), h.dim(), "monitored observable")?;
    g.matrix += double_commutator_sum(spec.observables(), &(spec.gamma() / 8.0), h.dim());
    Ok(g)
}

/// Alice monitors `A_ν` with precision `γ^A`; Bob feeds back `Σ_ν a_ν(t) B_ν`:
///
/// ```text
/// G(ρ) = −i[H,ρ] − ½ Σ_ν i[B_ν,{A_ν,ρ}]
///        − (1/8) Σ_{νμ} γ^A_{νμ}[A_ν,[A_μ,ρ]] − ½ Σ_{νμ} (γ^A)⁻¹_{νμ}[B_ν,[B_μ,ρ]]
/// ```
pub fn oneway_feedback_generator(
    h: &Operator,
    a_list: &[Operator],
    b_list: &[Operator],
    gamma_a: &DMatrix<f64>,
) -> Result<Generator> {
    if a_list.len() != b_list.len() {
        return Err(Error::LengthMismatch { left: a_list.len(), right: b_list.len() });
    }
    let d = h.dim();
    check_operator_list(a_list, d, "monitored observable")?;
    check_operator_list(b_list, d, "feedback observable")?;
    let spec = MonitoringSpec::new(a_list.to_vec(), gamma_a.clone())?;
    let inv = spec.gamma_inverse()?;
    let mut g = local_monitoring_generator(h, &spec)?;
    for (a, b) in a_list.iter().zip(b_list) {
        g.matrix -= feedback_cross_super(b, a) * c(0.5, 0.0);
    }
    g.matrix += double_commutator_sum(b_list, &(inv / 2.0), d);
    Ok(g)
}

/// Hamiltonian and dissipative halves of a generator.
#[derive(Clone, Debug)]
pub struct GeneratorParts {
    pub hamiltonian: Generator,
    pub dissipator: Generator,
}

impl GeneratorParts {
    /// `hamiltonian + scale · dissipator`.
    pub fn combine(&self, dissipator_scale: f64) -> Generator {
        self.hamiltonian
            .plus(&self.dissipator.scaled(dissipator_scale))
            .expect("parts share a dimension")
    }
}

/// Both parties monitor their own observables and feed the other's signal
/// back through the same observables:
///
/// ```text
/// G(ρ) = −i[H + Σ_ν A_ν B_ν, ρ]
///        − Σ_{νμ} (γ^A_{νμ}/8 + (γ^B)⁻¹_{νμ}/2)[A_ν,[A_μ,ρ]]
///        − Σ_{νμ} (γ^B_{νμ}/8 + (γ^A)⁻¹_{νμ}/2)[B_ν,[B_μ,ρ]]
/// ```
pub fn symmetric_feedback_generator(
    h: &Operator,
    a_list: &[Operator],
    b_list: &[Operator],
    gamma_a: &DMatrix<f64>,
    gamma_b: &DMatrix<f64>,
) -> Result<Generator> {
    Ok(symmetric_feedback_parts(h, a_list, b_list, gamma_a, gamma_b)?.combine(1.0))
}

pub fn symmetric_feedback_parts(
    h: &Operator,
    a_list: &[Operator],
    b_list: &[Operator],
    gamma_a: &DMatrix<f64>,
    gamma_b: &DMatrix<f64>,
) -> Result<GeneratorParts> {
    if a_list.len() != b_list.len() {
        return Err(Error::LengthMismatch { left: a_list.len(), right: b_list.len() });
    }
    let d = h.dim();
    check_operator_list(a_list, d, "Alice's observable")?;
    check_operator_list(b_list, d, "Bob's observable")?;
    for g in [gamma_a, gamma_b] {
        if g.nrows() != a_list.len() || g.ncols() != a_list.len() {
            return Err(Error::InvalidRateMatrix(format!(
                "expected {0}x{0}, got {1}x{2}",
                a_list.len(),
                g.nrows(),
                g.ncols()
            )));
        }
    }
    let inv_a = invert_rate_matrix(gamma_a)?;
    let inv_b = invert_rate_matrix(gamma_b)?;

    let mut h_total = h.clone();
    for (a, b) in a_list.iter().zip(b_list) {
        h_total = &h_total + &(a * b);
    }
    // A_ν and B_ν act on different factors, so A_ν B_ν is Hermitian; tolerate
    // rounding only.
    let hamiltonian = Generator::hamiltonian(&h_total.hermitian_part())?;

    let coeff_a = gamma_a / 8.0 + &inv_b / 2.0;
    let coeff_b = gamma_b / 8.0 + &inv_a / 2.0;
    let mut m = double_commutator_sum(a_list, &coeff_a, d);
    m += double_commutator_sum(b_list, &coeff_b, d);
    Ok(GeneratorParts { hamiltonian, dissipator: Generator { matrix: m, dim: d } })
}

/// Symmetric feedback realizing a pair potential from its local operator
/// decomposition, with translation- and swap-symmetric precisions
/// `γ_{k,s;k',s'} = γ_k δ_{kk'} δ_{ss'}` on both sides. `gamma_k` is indexed
/// by mode number and must cover every mode present in `pairs`.
pub fn pair_potential_generator(
    h_a: &Operator,
    h_b: &Operator,
    pairs: &[LocalOperatorPair],
    gamma_k: &[f64],
) -> Result<Generator> {
    Ok(pair_potential_parts(h_a, h_b, pairs, gamma_k)?.combine(1.0))
}

pub fn pair_potential_parts(
    h_a: &Operator,
    h_b: &Operator,
    pairs: &[LocalOperatorPair],
    gamma_k: &[f64],
) -> Result<GeneratorParts> {
    let space = BipartiteSpace::new(h_a.dim(), h_b.dim())?;
    let h = &lift(h_a, Side::A, space)? + &lift(h_b, Side::B, space)?;
    let mut a_list = Vec::with_capacity(pairs.len());
    let mut b_list = Vec::with_capacity(pairs.len());
    let mut rates = Vec::with_capacity(pairs.len());
    for p in pairs {
        let gamma = *gamma_k.get(p.mode).ok_or_else(|| {
            Error::InvalidArgument(format!("no rate given for mode {} ({} rates)", p.mode, gamma_k.len()))
        })?;
        if !(gamma > 0.0) {
            return Err(Error::NonPositiveRate(gamma));
        }
        a_list.push(lift(&p.a, Side::A, space)?);
        b_list.push(lift(&p.b, Side::B, space)?);
        rates.push(gamma);
    }
    let gamma = DMatrix::from_diagonal(&DVector::from_vec(rates));
    symmetric_feedback_parts(&h, &a_list, &b_list, &gamma, &gamma)
}

/// Standard Lindblad form `−i[H,ρ] + Σ r (LρL† − ½{L†L, ρ})`.
pub fn lindblad_generator(h: &Operator, jumps: &[(f64, Operator)]) -> Result<Generator> {
    let mut g = Generator::hamiltonian(h)?;
    let d = h.dim();
    let id = DMatrix::<C64>::identity(d, d);
    for (rate, l) in jumps {
        if l.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: l.dim() });
        }
        let l = l.matrix();
        let ldl = l.adjoint() * l;
        let term = sandwich(l, &l.adjoint()) - (sandwich(&ldl, &id) + sandwich(&id, &ldl)) * c(0.5, 0.0);
        g.matrix += term * c(*rate, 0.0);
    }
    Ok(g)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PropagationMode {
    /// Classical fourth-order Runge-Kutta with a fixed step.
    #[default]
    Rk4,
    /// Exponential of the superoperator (`d² ≤ 1024`).
    Exact,
}

#[derive(Clone, Debug)]
pub struct Propagated {
    pub state: DensityMatrix,
    /// `|Tr ρ − 1|` before any renormalization.
    pub trace_drift: f64,
    pub renormalized: bool,
    pub min_eigenvalue: f64,
}

/// Propagates `rho0` for time `t` in `steps` fixed steps.
pub fn propagate(
    g: &Generator,
    rho0: &DensityMatrix,
    t: f64,
    steps: usize,
    mode: PropagationMode,
) -> Result<Propagated> {
    let mut out = propagate_series(g, rho0, t, 1, steps, mode)?;
    Ok(out.pop().expect("one interval"))
}

/// States at `interval, 2·interval, …, intervals·interval`, each interval
/// integrated in `steps_per_interval` steps.
pub fn propagate_series(
    g: &Generator,
    rho0: &DensityMatrix,
    interval: f64,
    intervals: usize,
    steps_per_interval: usize,
    mode: PropagationMode,
) -> Result<Vec<Propagated>> {
    if g.dim() != rho0.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), found: rho0.dim() });
    }
    if !(interval >= 0.0) || !interval.is_finite() {
        return Err(Error::InvalidArgument(format!("time must be nonnegative, got {interval}")));
    }
    if steps_per_interval == 0 {
        return Err(Error::InvalidArgument("steps must be positive".into()));
    }
    let h = interval / steps_per_interval as f64;
    let step_map = match mode {
        PropagationMode::Exact => {
            if g.matrix.nrows() > EXACT_MODE_MAX {
                return Err(Error::InvalidArgument(format!(
                    "exact mode supports d² ≤ {EXACT_MODE_MAX}, got {}",
                    g.matrix.nrows()
                )));
            }
            Some(expm(&(&g.matrix * c(interval, 0.0))))
        }
        PropagationMode::Rk4 => None,
    };

    let space = rho0.space();
    let d = g.dim();
    let mut v = vectorize(rho0.operator());
    let mut out = Vec::with_capacity(intervals);
    for n in 1..=intervals {
        if interval > 0.0 {
            match &step_map {
                Some(map) => v = map * &v,
                None => {
                    for _ in 0..steps_per_interval {
                        v = rk4_step(&g.matrix, &v, h);
                    }
                }
            }
        }
        let rho = unvectorize(&v, d).hermitian_part();
        let trace = rho.trace().re;
        let trace_drift = (trace - 1.0).abs();
        let renormalized = trace_drift > TRACE_DRIFT_TOL;
        let rho = if renormalized {
            log::debug!("trace drift {trace_drift:e} at t = {}; renormalizing", n as f64 * interval);
            rho.scale(1.0 / trace)
        } else {
            rho
        };
        let min_eigenvalue = rho.hermitian_eigenvalues()?[0];
        if min_eigenvalue < PROPAGATION_POSITIVITY_FLOOR {
            return Err(Error::PositivityViolation { time: n as f64 * interval, min_eigenvalue, dt: h });
        }
        v = vectorize(&rho);
        out.push(Propagated {
            state: DensityMatrix::new_unchecked(rho, space),
            trace_drift,
            renormalized,
            min_eigenvalue,
        });
    }
    Ok(out)
}

fn rk4_step(g: &DMatrix<C64>, v: &DVector<C64>, h: f64) -> DVector<C64> {
    let hc = c(h, 0.0);
    let k1 = g * v;
    let k2 = g * (v + &k1 * (hc * 0.5));
    let k3 = g * (v + &k2 * (hc * 0.5));
    let k4 = g * (v + &k3 * hc);
    v + (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * (hc / 6.0)
}

/// Structural GKLS diagnostics of a generator.
#[derive(Clone, Debug)]
pub struct GklsReport {
    pub trace_preservation_error: f64,
    pub hermiticity_preservation_error: f64,
    /// Smallest eigenvalue of the Choi matrix projected off the maximally
    /// entangled direction (the Kossakowski block).
    pub min_conditional_eigenvalue: f64,
    /// Traceless Hamiltonian recovered from the generator.
    pub hamiltonian: Operator,
    /// `G + i[H, ·]`.
    pub dissipator: Generator,
    pub passed: bool,
}

/// Splits `g` into Hamiltonian and dissipative parts and checks conditional
/// complete positivity of the latter.
pub fn gkls_validity_check(g: &Generator) -> Result<GklsReport> {
    let d = g.dim();
    let n = d * d;
    let choi = g.choi();
    let omega = DVector::<C64>::from_fn(n, |idx, _| {
        if idx / d == idx % d {
            c(1.0 / (d as f64).sqrt(), 0.0)
        } else {
            C64::default()
        }
    });
    let projector = DMatrix::<C64>::identity(n, n) - &omega * omega.adjoint();
    let projected = Operator::new(&projector * choi.matrix() * &projector)?;
    let min_conditional_eigenvalue = projected.hermitian_eigenvalues()?[0];

    // C = √d(|k⟩⟨Ω| + |Ω⟩⟨k|) + P C P with G(ρ) = Kρ + ρK† + dissipator.
    let u = choi.matrix() * &omega;
    let c00 = omega.dotc(&u);
    let k = (&u - &omega * (c00 * 0.5)) / c((d as f64).sqrt(), 0.0);
    let kmat = DMatrix::from_column_slice(d, d, k.as_slice());
    let hmat = (&kmat - kmat.adjoint()) * c(0.0, 0.5);
    let shift = hmat.trace() / d as f64;
    let hamiltonian = Operator::new(hmat - DMatrix::<C64>::identity(d, d) * shift)?.hermitian_part();
    let dissipator = g.plus(&Generator::hamiltonian(&hamiltonian)?.scaled(-1.0))?;

    let trace_preservation_error = g.trace_preservation_error();
    let hermiticity_preservation_error = choi.hermitian_deviation();
    let passed = min_conditional_eigenvalue >= CONDITIONAL_CP_FLOOR
        && trace_preservation_error <= 1e-10
        && hermiticity_preservation_error <= 1e-10;
    Ok(GklsReport {
        trace_preservation_error,
        hermiticity_preservation_error,
        min_conditional_eigenvalue,
        hamiltonian,
        dissipator,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{double_commutator, pauli_x, pauli_y, pauli_z, tensor};

    fn scalar(x: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, x)
    }

    #[test]
    fn vectorization_convention() {
        let m = Operator::from_fn(3, |i, j| c(i as f64, j as f64));
        let v = vectorize(&m);
        assert_eq!(v[2 * 3 + 1], m.get(1, 2));
        assert_eq!(unvectorize(&v, 3), m);
        let x = Operator::from_fn(3, |i, j| c((i * j) as f64, 1.0));
        let y = Operator::from_fn(3, |i, j| c(1.0, (i + j) as f64));
        let direct = &(&x * &m) * &y;
        let via = unvectorize(&(sandwich(x.matrix(), y.matrix()) * v), 3);
        assert!((&direct - &via).max_abs() < 1e-12);
    }

    #[test]
    fn monitoring_generator_matches_operator_formula() {
        let spec = MonitoringSpec::single(pauli_z(), 1.3).unwrap();
        let g = local_monitoring_generator(&pauli_x(), &spec).unwrap();
        let rho = Operator::from_rows(2, &[c(0.7, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.3, 0.0)]).unwrap();
        let h_part = crate::operator::commutator(&pauli_x(), &rho).unwrap().scale_complex(c(0.0, -1.0));
        let d_part = double_commutator(&pauli_z(), &pauli_z(), &rho).unwrap().scale(-1.3 / 8.0);
        assert!((&g.apply(&rho) - &(&h_part + &d_part)).max_abs() < 1e-14);
    }

    #[test]
    fn identity_observable_does_not_dissipate() {
        let spec = MonitoringSpec::single(Operator::identity(2), 3.0).unwrap();
        let g = local_monitoring_generator(&pauli_y(), &spec).unwrap();
        assert_eq!(g, Generator::hamiltonian(&pauli_y()).unwrap());
    }

    #[test]
    fn monitoring_spec_validation() {
        assert!(MonitoringSpec::single(pauli_z(), -1.0).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(MonitoringSpec::new(vec![pauli_z(), pauli_x()], asym).is_err());
        let non_herm = Operator::from_rows(2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(MonitoringSpec::single(non_herm, 1.0).is_err());
        let psd = MonitoringSpec::new(vec![pauli_z(), pauli_x()], DMatrix::from_element(2, 2, 1.0)).unwrap();
        assert!(matches!(psd.gamma_inverse(), Err(Error::InvalidRateMatrix(_))));
    }

    #[test]
    fn feedback_generators_reject_bad_inputs() {
        let h = Operator::zeros(4);
        let a = tensor(&pauli_z(), &Operator::identity(2));
        assert!(matches!(
            oneway_feedback_generator(&h, std::slice::from_ref(&a), &[], &scalar(1.0)),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(oneway_feedback_generator(&h, std::slice::from_ref(&a), std::slice::from_ref(&a), &scalar(0.0)).is_err());
        assert!(symmetric_feedback_generator(&h, std::slice::from_ref(&a), std::slice::from_ref(&a), &scalar(1.0), &scalar(-2.0)).is_err());
        assert!(local_monitoring_generator(&pauli_z(), &MonitoringSpec::single(a, 1.0).unwrap()).is_err());
    }

    #[test]
    fn symmetric_with_no_pairs_is_local_hamiltonian() {
        let h = tensor(&pauli_x(), &Operator::identity(2));
        let empty = DMatrix::<f64>::zeros(0, 0);
        let g = symmetric_feedback_generator(&h, &[], &[], &empty, &empty).unwrap();
        assert_eq!(g, Generator::hamiltonian(&h).unwrap());
    }

    #[test]
    fn exact_mode_is_limited_to_small_systems() {
        let g = Generator::zero(33);
        let rho = DensityMatrix::maximally_mixed(BipartiteSpace::new(33, 1).unwrap());
        assert!(propagate(&g, &rho, 1.0, 1, PropagationMode::Exact).is_err());
    }

    #[test]
    fn zero_time_returns_the_initial_state() {
        let g = local_monitoring_generator(&pauli_x(), &MonitoringSpec::single(pauli_z(), 2.0).unwrap()).unwrap();
        let rho = DensityMatrix::pure(&[c(0.6, 0.0), c(0.0, 0.8)], BipartiteSpace::single(2).unwrap()).unwrap();
        for mode in [PropagationMode::Rk4, PropagationMode::Exact] {
            let out = propagate(&g, &rho, 0.0, 10, mode).unwrap();
            assert!((out.state.operator() - rho.operator()).max_abs() < 1e-15);
        }
    }

    #[test]
    fn positivity_failure_reports_the_step_size() {
        // A huge step on a strongly dephasing generator overshoots.
        let g = local_monitoring_generator(&Operator::zeros(2), &MonitoringSpec::single(pauli_z(), 400.0).unwrap())
            .unwrap();
        let plus = DensityMatrix::pure(&[c(1.0, 0.0), c(1.0, 0.0)], BipartiteSpace::single(2).unwrap()).unwrap();
        match propagate(&g, &plus, 1.0, 4, PropagationMode::Rk4) {
            Err(Error::PositivityViolation { dt, .. }) => assert_eq!(dt, 0.25),
            other => panic!("expected positivity failure, got {other:?}"),
        }
    }

    #[test]
    fn negative_coefficient_fails_validity() {
        let good = local_monitoring_generator(&pauli_x(), &MonitoringSpec::single(pauli_z(), 1.0).unwrap()).unwrap();
        let report = gkls_validity_check(&good).unwrap();
        assert!(report.passed);
        assert!((&report.hamiltonian - &pauli_x()).max_abs() < 1e-12);

        let mut bad = Generator::hamiltonian(&pauli_x()).unwrap();
        bad.matrix += double_commutator_super(&pauli_z(), &pauli_z()) * c(0.25, 0.0);
        let report = gkls_validity_check(&bad).unwrap();
        assert!(!report.passed);
        assert!(report.min_conditional_eigenvalue < -0.1);
    }
}
