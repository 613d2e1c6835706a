//! Bipartite density matrices and entanglement diagnostics.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::operator::{c, tensor, BipartiteSpace, Operator, Side, C64};

pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_FLOOR: f64 = -1e-8;

/// A Hermitian, unit-trace, positive-semidefinite operator on a bipartite
/// space. A single system is represented as `dim ⊗ 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
    space: BipartiteSpace,
}

impl DensityMatrix {
    pub fn new(op: Operator, space: BipartiteSpace) -> Result<Self> {
        if op.dim() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: op.dim() });
        }
        op.ensure_hermitian("density matrix")?;
        let trace = op.trace();
        if (trace - c(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {trace}, expected 1")));
        }
        let min = op.hermitian_eigenvalues()?[0];
        if min < POSITIVITY_FLOOR {
            return Err(Error::InvalidState(format!("minimum eigenvalue {min:e} is negative")));
        }
        Ok(Self { op, space })
    }

    /// Skips validation; for states produced by trusted internal routines.
    pub(crate) fn new_unchecked(op: Operator, space: BipartiteSpace) -> Self {
        debug_assert_eq!(op.dim(), space.dim());
        Self { op, space }
    }

    /// `|ψ⟩⟨ψ|` after normalizing `psi`.
    pub fn pure(psi: &[C64], space: BipartiteSpace) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let normalized: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Self::new(Operator::projector(&normalized), space)
    }

    pub fn product(rho_a: &DensityMatrix, rho_b: &DensityMatrix) -> Self {
        let space = BipartiteSpace::new(rho_a.dim(), rho_b.dim()).expect("nonzero dimensions");
        Self::new_unchecked(tensor(&rho_a.op, &rho_b.op), space)
    }

    pub fn maximally_mixed(space: BipartiteSpace) -> Self {
        let d = space.dim();
        Self::new_unchecked(Operator::identity(d).scale(1.0 / d as f64), space)
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn into_operator(self) -> Operator {
        self.op
    }

    pub fn space(&self) -> BipartiteSpace {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.op.hermitian_eigenvalues()?[0])
    }

    /// Real part of `Tr(obs · ρ)`.
    pub fn expectation(&self, obs: &Operator) -> f64 {
        obs.expectation(&self.op).re
    }
}

/// Reduced state of the kept factor.
pub fn partial_trace(rho: &DensityMatrix, keep: Side) -> DensityMatrix {
    let space = rho.space();
    let (da, db) = (space.dim_a(), space.dim_b());
    let m = rho.operator();
    let reduced = match keep {
        Side::A => Operator::from_fn(da, |i, j| {
            (0..db).map(|k| m.get(space.index(i, k), space.index(j, k))).sum()
        }),
        Side::B => Operator::from_fn(db, |i, j| {
            (0..da).map(|k| m.get(space.index(k, i), space.index(k, j))).sum()
        }),
    };
    let kept = BipartiteSpace::single(reduced.dim()).expect("nonzero dimension");
    DensityMatrix::new_unchecked(reduced, kept)
}

/// Transpose on Bob's factor only.
pub fn partial_transpose(rho: &DensityMatrix) -> Operator {
    partial_transpose_op(rho.operator(), rho.space())
}

pub(crate) fn partial_transpose_op(m: &Operator, space: BipartiteSpace) -> Operator {
    let db = space.dim_b();
    Operator::from_fn(space.dim(), |row, col| {
        let (ia, ib) = (row / db, row % db);
        let (ja, jb) = (col / db, col % db);
        m.get(space.index(ia, jb), space.index(ja, ib))
    })
}

/// `(‖ρ^{T_B}‖₁ − 1)/2`, clamped at zero for PPT states.
pub fn negativity(rho: &DensityMatrix) -> Result<f64> {
    negativity_op(rho.operator(), rho.space())
}

/// Negativity of an operator that is a density matrix up to sampling error
/// (e.g. an ensemble mean); the trace is taken as measured.
pub fn negativity_op(m: &Operator, space: BipartiteSpace) -> Result<f64> {
    let eigs = partial_transpose_op(&m.hermitian_part(), space).hermitian_eigenvalues()?;
    // Σ|λ| − Σλ = 2 Σ_{λ<0} |λ|
    let neg: f64 = eigs.iter().filter(|l| **l < 0.0).map(|l| -l).sum();
    Ok(neg.max(0.0))
}

/// Smallest eigenvalue of the partial transpose.
pub fn min_pt_eigenvalue(rho: &DensityMatrix) -> Result<f64> {
    Ok(partial_transpose(rho).hermitian_part().hermitian_eigenvalues()?[0])
}

/// `½‖a − b‖₁` for Hermitian operators.
pub fn trace_distance(a: &Operator, b: &Operator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(0.5 * (a - b).hermitian_part().trace_norm_hermitian()?)
}

/// Random mixed state from the Ginibre (Hilbert-Schmidt) ensemble.
pub fn random_density<R: Rng + ?Sized>(space: BipartiteSpace, rng: &mut R) -> DensityMatrix {
    let d = space.dim();
    let g = Operator::from_fn(d, |_, _| gaussian_c(rng));
    let w = &g * &g.adjoint();
    let tr = w.trace().re;
    DensityMatrix::new_unchecked(w.scale(1.0 / tr).hermitian_part(), space)
}

/// Haar-random pure state vector of length `dim`.
pub fn random_pure_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    let v: Vec<C64> = (0..dim).map(|_| gaussian_c(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// Product of two independent Haar-random pure states.
pub fn random_pure_product<R: Rng + ?Sized>(space: BipartiteSpace, rng: &mut R) -> DensityMatrix {
    let a = random_pure_vector(space.dim_a(), rng);
    let b = random_pure_vector(space.dim_b(), rng);
    let psi = kron_vec(&a, &b);
    DensityMatrix::new_unchecked(Operator::projector(&psi).hermitian_part(), space)
}

/// Kronecker product of two state vectors (A-major).
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

fn gaussian_c<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn qubits() -> BipartiteSpace {
        BipartiteSpace::new(2, 2).unwrap()
    }

    fn bell() -> DensityMatrix {
        let s = 0.5f64.sqrt();
        DensityMatrix::pure(&[c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)], qubits()).unwrap()
    }

    #[test]
    fn validation_rejects_bad_states() {
        let space = BipartiteSpace::single(2).unwrap();
        assert!(DensityMatrix::new(Operator::identity(2), space).is_err());
        assert!(DensityMatrix::new(Operator::from_real_diagonal(&[1.5, -0.5]), space).is_err());
        assert!(DensityMatrix::new(Operator::identity(3).scale(1.0 / 3.0), space).is_err());
        assert!(DensityMatrix::new(Operator::from_real_diagonal(&[0.25, 0.75]), space).is_ok());
    }

    #[test]
    fn partial_trace_of_product_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let a = random_density(BipartiteSpace::single(3).unwrap(), &mut rng);
            let b = random_density(BipartiteSpace::single(2).unwrap(), &mut rng);
            let prod = DensityMatrix::product(&a, &b);
            assert!((partial_trace(&prod, Side::A).operator() - a.operator()).max_abs() < 1e-12);
            assert!((partial_trace(&prod, Side::B).operator() - b.operator()).max_abs() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let r = partial_trace(&bell(), Side::A);
        assert!((r.operator() - &Operator::identity(2).scale(0.5)).max_abs() < 1e-15);
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let rho = random_density(BipartiteSpace::new(2, 3).unwrap(), &mut rng);
            for side in [Side::A, Side::B] {
                assert!((partial_trace(&rho, side).operator().trace().re - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn partial_transpose_is_an_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let rho = random_density(BipartiteSpace::new(3, 2).unwrap(), &mut rng);
        let once = partial_transpose(&rho);
        let twice = partial_transpose_op(&once, rho.space());
        assert_eq!(&twice, rho.operator());
        assert!(once.is_hermitian(1e-12));
    }

    #[test]
    fn bell_state_partial_transpose_spectrum() {
        let eigs = partial_transpose(&bell()).hermitian_eigenvalues().unwrap();
        let expected = [-0.5, 0.5, 0.5, 0.5];
        for (e, x) in eigs.iter().zip(expected) {
            assert!((e - x).abs() < 1e-12);
        }
        assert!((negativity(&bell()).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn product_states_have_zero_negativity() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..20 {
            let rho = random_pure_product(BipartiteSpace::new(2, 3).unwrap(), &mut rng);
            assert!(min_pt_eigenvalue(&rho).unwrap() > -1e-12);
            assert_eq!(negativity(&rho).unwrap(), 0.0_f64.max(negativity(&rho).unwrap()));
            assert!(negativity(&rho).unwrap() < 1e-12);
        }
    }

    #[test]
    fn trace_distance_basics() {
        let space = BipartiteSpace::single(2).unwrap();
        let up = DensityMatrix::pure(&[c(1.0, 0.0), c(0.0, 0.0)], space).unwrap();
        let down = DensityMatrix::pure(&[c(0.0, 0.0), c(1.0, 0.0)], space).unwrap();
        assert!((trace_distance(up.operator(), down.operator()).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(trace_distance(up.operator(), up.operator()).unwrap(), 0.0);
    }

    #[test]
    fn random_states_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let space = BipartiteSpace::new(2, 2).unwrap();
        for _ in 0..20 {
            let rho = random_density(space, &mut rng);
            assert!(DensityMatrix::new(rho.operator().clone(), space).is_ok());
            let prod = random_pure_product(space, &mut rng);
            assert!(DensityMatrix::new(prod.operator().clone(), space).is_ok());
        }
    }
}
