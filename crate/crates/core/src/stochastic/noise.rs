use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Zero-mean Gaussian white noise with covariance `C δ(t − s)`.
///
/// Over one step of length `dt` the noise is represented by its step
/// average, which is `N(0, C/dt)`; the increment `ΔW = ξ dt` then has
/// covariance `C dt`.
#[derive(Clone, Debug)]
pub struct NoiseModel {
    covariance: DMatrix<f64>,
    factor: DMatrix<f64>,
}

impl NoiseModel {
    /// Factors `covariance` (symmetric PSD, possibly singular) as `F Fᵀ`
    /// with `F` lower triangular.
    pub fn new(covariance: DMatrix<f64>) -> Result<Self> {
        let factor = semidefinite_cholesky(&covariance)?;
        let err = (&factor * factor.transpose() - &covariance).abs().max();
        let scale = covariance.abs().max().max(1.0);
        if err > 1e-10 * scale {
            return Err(Error::InvalidRateMatrix(format!(
                "covariance factorization residual {err:e} exceeds 1e-10"
            )));
        }
        Ok(Self { covariance, factor })
    }

    pub fn zero(n: usize) -> Self {
        Self { covariance: DMatrix::zeros(n, n), factor: DMatrix::zeros(n, n) }
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn dim(&self) -> usize {
        self.covariance.nrows()
    }

    pub fn is_zero(&self) -> bool {
        self.factor.iter().all(|x| *x == 0.0)
    }

    /// Writes a white-noise sample into `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R, out: &mut [f64]) {
        let n = self.dim();
        debug_assert_eq!(out.len(), n);
        let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let inv_sqrt_dt = 1.0 / dt.sqrt();
        for (i, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, zj) in z.iter().enumerate().take(i + 1) {
                acc += self.factor[(i, j)] * zj;
            }
            *slot = acc * inv_sqrt_dt;
        }
    }
}

/// One step's white-noise value, distributed as `N(0, covariance/dt)`.
pub fn sample_noise_increments<R: Rng + ?Sized>(model: &NoiseModel, dt: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let mut out = vec![0.0; model.dim()];
    model.sample_into(dt, rng, &mut out);
    Ok(out)
}

/// Cholesky factorization tolerant of zero pivots: a column whose pivot
/// vanishes (relative to the largest diagonal entry) is set to zero, which
/// is exact for PSD matrices in exact arithmetic.
fn semidefinite_cholesky(c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = c.nrows();
    if c.ncols() != n {
        return Err(Error::InvalidRateMatrix("covariance must be square".into()));
    }
    let asym = (c - c.transpose()).abs().max();
    if asym > 1e-12 {
        return Err(Error::InvalidRateMatrix(format!("covariance not symmetric ({asym:e})")));
    }
    let scale = (0..n).map(|i| c[(i, i)].abs()).fold(0.0f64, f64::max);
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let pivot = c[(j, j)] - (0..j).map(|k| l[(j, k)] * l[(j, k)]).sum::<f64>();
        if pivot < -1e-10 * scale.max(1.0) {
            return Err(Error::InvalidRateMatrix(format!(
                "covariance not positive semidefinite (pivot {pivot:e})"
            )));
        }
        if pivot <= tol {
            continue;
        }
        let root = pivot.sqrt();
        l[(j, j)] = root;
        for i in j + 1..n {
            let s = c[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
            l[(i, j)] = s / root;
        }
    }
    Ok(l)
}
