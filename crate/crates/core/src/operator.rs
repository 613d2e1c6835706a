//! Dense complex operators on finite-dimensional (bipartite) Hilbert spaces.
//!
//! Index convention: a composite index on `A ⊗ B` is A-major,
//! `row = i_a * dim_b + i_b`. Every routine in this crate uses it.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Hermiticity tolerance used by constructor-level checks.
pub const HERMITIAN_TOL: f64 = 1e-12;

pub(crate) const fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Which half of a bipartite system an object belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

/// Local dimensions of Alice's and Bob's factors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BipartiteSpace {
    dim_a: usize,
    dim_b: usize,
}

impl BipartiteSpace {
    pub fn new(dim_a: usize, dim_b: usize) -> Result<Self> {
        if dim_a == 0 || dim_b == 0 {
            return Err(Error::InvalidArgument(format!(
                "local dimensions must be positive, got ({dim_a}, {dim_b})"
            )));
        }
        Ok(Self { dim_a, dim_b })
    }

    /// A single system viewed as `dim ⊗ 1`.
    pub fn single(dim: usize) -> Result<Self> {
        Self::new(dim, 1)
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn local_dim(&self, side: Side) -> usize {
        match side {
            Side::A => self.dim_a,
            Side::B => self.dim_b,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim_a * self.dim_b
    }

    /// Composite index of the basis vector `|i_a⟩ ⊗ |i_b⟩`.
    pub fn index(&self, i_a: usize, i_b: usize) -> usize {
        i_a * self.dim_b + i_b
    }

    /// The space with the two factors exchanged.
    pub fn swapped(&self) -> Self {
        Self { dim_a: self.dim_b, dim_b: self.dim_a }
    }
}

/// A square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator(DMatrix<C64>);

impl Operator {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::NotSquare { rows: matrix.nrows(), cols: matrix.ncols() });
        }
        if matrix.nrows() == 0 {
            return Err(Error::InvalidArgument("operator dimension must be positive".into()));
        }
        Ok(Self(matrix))
    }

    /// Builds a Hermitian operator, rejecting matrices that deviate from
    /// their adjoint by more than [`HERMITIAN_TOL`].
    pub fn hermitian(matrix: DMatrix<C64>) -> Result<Self> {
        let op = Self::new(matrix)?;
        op.ensure_hermitian("operator")?;
        Ok(op)
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(dim, dim, f))
    }

    /// Row-major entries.
    pub fn from_rows(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: entries.len() });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self(DMatrix::from_fn(n, n, |i, j| if i == j { c(diag[i], 0.0) } else { C64::default() }))
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) vector.
    pub fn projector(psi: &[C64]) -> Self {
        let n = psi.len();
        Self(DMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj()))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self(self.0.map(|z| z * factor))
    }

    pub fn scale_complex(&self, factor: C64) -> Self {
        Self(&self.0 * factor)
    }

    /// `Tr(self · rho)`.
    pub fn expectation(&self, rho: &Operator) -> C64 {
        let n = self.dim();
        let mut acc = C64::default();
        for i in 0..n {
            for k in 0..n {
                acc += self.0[(i, k)] * rho.0[(k, i)];
            }
        }
        acc
    }

    /// `max |M - M†|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim();
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub(crate) fn ensure_hermitian(&self, what: &'static str) -> Result<()> {
        let deviation = self.hermitian_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { what, deviation });
        }
        Ok(())
    }

    /// `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * c(0.5, 0.0))
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.max_abs() <= tol
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        let eig = SymmetricEigen::try_new(self.hermitian_part().0, f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Eigen(format!("no convergence for {0}x{0} matrix", self.dim())))?;
        let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        Ok(values)
    }

    /// Trace norm of a Hermitian operator, `Σ |λ_i|`.
    pub fn trace_norm_hermitian(&self) -> Result<f64> {
        Ok(self.hermitian_eigenvalues()?.iter().map(|l| l.abs()).sum())
    }

    /// Matrix exponential `exp(self)`.
    pub fn exp(&self) -> Self {
        Self(expm(&self.0))
    }

    fn check_same_dim(&self, other: &Operator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator(-&self.0)
    }
}

pub fn pauli_x() -> Operator {
    Operator(DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]))
}

pub fn pauli_y() -> Operator {
    Operator(DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]))
}

pub fn pauli_z() -> Operator {
    Operator::from_real_diagonal(&[1.0, -1.0])
}

/// Kronecker product `a ⊗ b` (A-major).
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    Operator(a.0.kronecker(&b.0))
}

/// Embeds a local operator into the bipartite space: `op ⊗ I` or `I ⊗ op`.
pub fn lift(op: &Operator, side: Side, space: BipartiteSpace) -> Result<Operator> {
    let expected = space.local_dim(side);
    if op.dim() != expected {
        return Err(Error::DimensionMismatch { expected, found: op.dim() });
    }
    Ok(match side {
        Side::A => tensor(op, &Operator::identity(space.dim_b())),
        Side::B => tensor(&Operator::identity(space.dim_a()), op),
    })
}

/// `[a, b]`.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    a.check_same_dim(b)?;
    Ok(Operator(&a.0 * &b.0 - &b.0 * &a.0))
}

/// `{a, b}`.
pub fn anticommutator(a: &Operator, b: &Operator) -> Result<Operator> {
    a.check_same_dim(b)?;
    Ok(Operator(&a.0 * &b.0 + &b.0 * &a.0))
}

/// `[a, [b, rho]]`.
pub fn double_commutator(a: &Operator, b: &Operator, rho: &Operator) -> Result<Operator> {
    commutator(a, &commutator(b, rho)?)
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn expm(m: &DMatrix<C64>) -> DMatrix<C64> {
    let n = m.nrows();
    // 1-norm (max column sum)
    let norm = (0..n)
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let mut squarings = 0u32;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as u32;
    }
    let scaled = m * c(0.5f64.powi(squarings as i32), 0.0);
    let mut result = DMatrix::<C64>::identity(n, n);
    let mut term = DMatrix::<C64>::identity(n, n);
    // ||scaled|| <= 1/2, so 20 terms reach double precision with a wide margin.
    for k in 1..=20 {
        term = &term * &scaled * c(1.0 / k as f64, 0.0);
        result += &term;
        if term.iter().all(|z| z.norm() < 1e-18) {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_op(dim: usize, rng: &mut impl Rng) -> Operator {
        Operator::from_fn(dim, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn identity_tensor_identity_is_identity() {
        let t = tensor(&Operator::identity(2), &Operator::identity(3));
        assert_eq!(t.dim(), 6);
        assert_eq!(t, Operator::identity(6));
    }

    #[test]
    fn sigma_z_tensor_sigma_x_is_block_diagonal() {
        let t = tensor(&pauli_z(), &pauli_x());
        let x = pauli_x();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(t.get(i, j), x.get(i, j));
                assert_eq!(t.get(i + 2, j + 2), -x.get(i, j));
                assert_eq!(t.get(i, j + 2), C64::default());
                assert_eq!(t.get(i + 2, j), C64::default());
            }
        }
    }

    #[test]
    fn tensor_dimension_and_index_convention() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_op(2, &mut rng);
        let b = random_op(3, &mut rng);
        let t = tensor(&a, &b);
        assert_eq!(t.dim(), 6);
        let space = BipartiteSpace::new(2, 3).unwrap();
        for (ia, ja, ib, jb) in (0..2).flat_map(|ia| (0..2).flat_map(move |ja| (0..3).flat_map(move |ib| (0..3).map(move |jb| (ia, ja, ib, jb))))) {
            let expected = a.get(ia, ja) * b.get(ib, jb);
            assert_eq!(t.get(space.index(ia, ib), space.index(ja, jb)), expected);
        }
    }

    #[test]
    fn tensor_is_associative_on_three_qubits() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (a, b, cc) = (random_op(2, &mut rng), random_op(2, &mut rng), random_op(2, &mut rng));
        let left = tensor(&tensor(&a, &b), &cc);
        let right = tensor(&a, &tensor(&b, &cc));
        // With A-major ordering, (i, j, k) maps to 4i + 2j + k either way.
        for i in 0..8 {
            for j in 0..8 {
                let (i0, i1, i2) = (i >> 2, (i >> 1) & 1, i & 1);
                let (j0, j1, j2) = (j >> 2, (j >> 1) & 1, j & 1);
                let explicit = a.get(i0, j0) * b.get(i1, j1) * cc.get(i2, j2);
                assert!((left.get(i, j) - explicit).norm() < 1e-14);
                assert!((right.get(i, j) - explicit).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn lift_places_operator_on_the_requested_factor() {
        let space = BipartiteSpace::new(2, 2).unwrap();
        assert_eq!(lift(&pauli_z(), Side::A, space).unwrap(), tensor(&pauli_z(), &Operator::identity(2)));
        let space = BipartiteSpace::new(3, 4).unwrap();
        assert_eq!(lift(&Operator::identity(4), Side::B, space).unwrap(), Operator::identity(12));
        assert!(matches!(
            lift(&pauli_z(), Side::B, space),
            Err(Error::DimensionMismatch { expected: 4, found: 2 })
        ));
    }

    #[test]
    fn lifted_operators_on_opposite_sides_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let space = BipartiteSpace::new(3, 2).unwrap();
        for _ in 0..20 {
            let x = lift(&random_op(3, &mut rng), Side::A, space).unwrap();
            let y = lift(&random_op(2, &mut rng), Side::B, space).unwrap();
            assert!(commutator(&x, &y).unwrap().max_abs() < 1e-14);
        }
    }

    #[test]
    fn pauli_algebra() {
        assert!(commutator(&pauli_z(), &pauli_z()).unwrap().is_zero(0.0));
        assert!(anticommutator(&pauli_z(), &pauli_x()).unwrap().is_zero(0.0));
        assert!(anticommutator(&pauli_y(), &pauli_x()).unwrap().is_zero(0.0));
    }

    #[test]
    fn double_commutator_of_plus_state() {
        let plus = Operator::from_rows(2, &[c(0.5, 0.0); 4]).unwrap();
        let dc = double_commutator(&pauli_z(), &pauli_z(), &plus).unwrap();
        assert_eq!(dc.get(0, 0), C64::default());
        assert_eq!(dc.get(1, 1), C64::default());
        assert_eq!(dc.get(0, 1), plus.get(0, 1) * 4.0);
        assert_eq!(dc.get(1, 0), plus.get(1, 0) * 4.0);
    }

    #[test]
    fn commutator_rejects_mismatched_dimensions() {
        assert!(commutator(&pauli_z(), &Operator::identity(3)).is_err());
        assert!(double_commutator(&pauli_z(), &pauli_z(), &Operator::identity(3)).is_err());
    }

    #[test]
    fn hermitian_constructor_checks() {
        assert!(Operator::hermitian(pauli_y().into_matrix()).is_ok());
        let bad = Operator::from_rows(2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(matches!(Operator::hermitian(bad.into_matrix()), Err(Error::NotHermitian { .. })));
        assert!(matches!(Operator::new(DMatrix::zeros(2, 3)), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn expm_matches_closed_form_rotation() {
        // exp(-i θ σx) = cos θ I - i sin θ σx
        for &theta in &[0.0, 0.3, 2.0, 17.5] {
            let u = pauli_x().scale_complex(c(0.0, -theta)).exp();
            let expected = &Operator::identity(2).scale(theta.cos()) + &pauli_x().scale_complex(c(0.0, -theta.sin()));
            assert!((&u - &expected).max_abs() < 1e-12, "theta = {theta}");
        }
    }

    #[test]
    fn expm_of_diagonal_matrix() {
        let d = Operator::from_real_diagonal(&[-3.0, 0.5, 4.0]);
        let e = d.exp();
        for (i, v) in [-3.0f64, 0.5, 4.0].iter().enumerate() {
            assert!((e.get(i, i).re - v.exp()).abs() < 1e-12 * v.exp());
        }
    }

    #[test]
    fn operations_leave_inputs_untouched() {
        let a = pauli_x();
        let b = pauli_z();
        let (a0, b0) = (a.clone(), b.clone());
        let _ = tensor(&a, &b);
        let _ = double_commutator(&a, &b, &a).unwrap();
        let _ = &a * &b;
        assert_eq!(a, a0);
        assert_eq!(b, b0);
    }
}
