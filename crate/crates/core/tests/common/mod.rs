//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use locc_core::operator::{Operator, C64};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cz(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Eigenvalues of a Hermitian matrix by cyclic Jacobi rotations on the real
/// symmetric embedding `[[Re, -Im], [Im, Re]]`, whose spectrum is that of
/// the input with every eigenvalue doubled.
pub fn jacobi_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let n = m.nrows();
    let size = 2 * n;
    let mut a = vec![vec![0.0; size]; size];
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            a[i][j] = z.re;
            a[i + n][j + n] = z.re;
            a[i][j + n] = -z.im;
            a[i + n][j] = z.im;
        }
    }
    for _sweep in 0..100 {
        let off: f64 = (0..size)
            .flat_map(|i| (0..size).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..size {
            for q in p + 1..size {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..size {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..size {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..size).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev.into_iter().step_by(2).collect()
}

/// Partial transpose on the second factor, element by element.
pub fn partial_transpose_loops(m: &DMatrix<C64>, da: usize, db: usize) -> DMatrix<C64> {
    let mut out = DMatrix::zeros(da * db, da * db);
    for ia in 0..da {
        for ib in 0..db {
            for ja in 0..da {
                for jb in 0..db {
                    out[(ia * db + jb, ja * db + ib)] = m[(ia * db + ib, ja * db + jb)];
                }
            }
        }
    }
    out
}

pub fn negativity_oracle(m: &DMatrix<C64>, da: usize, db: usize) -> f64 {
    jacobi_eigenvalues(&partial_transpose_loops(m, da, db)).iter().filter(|x| **x < 0.0).map(|x| -x).sum()
}

/// Real cosine-series coefficients by direct summation:
/// `v_m = w_m / L · Σ_d V(d) cos(2π m d / L)`.
pub fn direct_modes(values: &[f64]) -> Vec<f64> {
    let l = values.len();
    (0..=l / 2)
        .map(|m| {
            let w = if m == 0 || 2 * m == l { 1.0 } else { 2.0 };
            let s: f64 = values
                .iter()
                .enumerate()
                .map(|(d, v)| v * (2.0 * std::f64::consts::PI * (m * d) as f64 / l as f64).cos())
                .sum();
            w * s / l as f64
        })
        .collect()
}

/// Random even potential on `l` sites with values in `[-1, 1]`.
pub fn random_even_potential<R: Rng>(l: usize, rng: &mut R) -> Vec<f64> {
    let mut v = vec![0.0; l];
    for d in 0..=l / 2 {
        let x = rng.random_range(-1.0..1.0);
        v[d] = x;
        v[(l - d) % l] = x;
    }
    v
}

pub fn random_hermitian<R: Rng>(d: usize, rng: &mut R) -> Operator {
    let g = DMatrix::from_fn(d, d, |_, _| cz(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    Operator::new((&g + g.adjoint()) * cz(0.5, 0.0)).unwrap()
}

/// Random symmetric positive-definite matrix with eigenvalues at least `floor`.
pub fn random_pd<R: Rng>(n: usize, floor: f64, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &g * g.transpose() + DMatrix::identity(n, n) * floor
}

pub fn comm(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a * b - b * a
}

pub fn anti(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a * b + b * a
}

pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Two-qubit swap.
pub fn swap(d: usize) -> DMatrix<C64> {
    let mut s = DMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            s[(i * d + j, j * d + i)] = cz(1.0, 0.0);
        }
    }
    s
}

/// Nearest-neighbour hopping `-J Σ (|x⟩⟨x+1| + h.c.)` on a ring.
pub fn hopping(l: usize, j: f64) -> Operator {
    Operator::from_fn(l, |a, b| {
        if l > 1 && ((a + 1) % l == b || (b + 1) % l == a) {
            cz(-j, 0.0)
        } else {
            cz(0.0, 0.0)
        }
    })
}
