//! Reference implementations used as independent oracles.
//!
//! Nothing here calls into the decomposition code under test.

#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use xlmimo_core::{ChannelMatrix, Complex64};

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations, descending.
pub fn jacobi_symmetric_eigenvalues(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        let diag: f64 = (0..n).map(|i| a[i * n + i] * a[i * n + i]).sum();
        if off <= 1e-30 * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut values: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    values.sort_by(|x, y| y.total_cmp(x));
    values
}

/// Eigenvalues of a Hermitian matrix, descending, through its real
/// `2n x 2n` embedding `[[Re, -Im], [Im, Re]]`, whose spectrum is that of
/// the Hermitian matrix with every eigenvalue doubled in multiplicity.
pub fn hermitian_eigenvalues(h: &[Complex64], n: usize) -> Vec<f64> {
    let m = 2 * n;
    let mut real = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = h[i * n + j];
            real[i * m + j] = z.re;
            real[i * m + j + n] = -z.im;
            real[(i + n) * m + j] = z.im;
            real[(i + n) * m + j + n] = z.re;
        }
    }
    let doubled = jacobi_symmetric_eigenvalues(real, m);
    doubled.into_iter().step_by(2).collect()
}

/// `G G^H` by explicit triple loop.
pub fn gram(g: &ChannelMatrix) -> Vec<Complex64> {
    let (r, c) = (g.nrows(), g.ncols());
    let mut out = vec![Complex64::new(0.0, 0.0); r * r];
    for i in 0..r {
        for j in 0..r {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..c {
                acc += g.get(i, k) * g.get(j, k).conj();
            }
            out[i * r + j] = acc;
        }
    }
    out
}

/// `log2 det(I + scale * G G^H)` through a complex Cholesky factorization.
pub fn log2_det_identity_plus(g: &ChannelMatrix, scale: f64) -> f64 {
    let n = g.nrows();
    let mut a = gram(g);
    for v in a.iter_mut() {
        *v *= scale;
    }
    for i in 0..n {
        a[i * n + i] += 1.0;
    }
    let mut l = vec![Complex64::new(0.0, 0.0); n * n];
    let mut log_det = 0.0;
    for j in 0..n {
        let mut d = a[j * n + j].re;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        assert!(d > 0.0, "matrix is not positive definite");
        let djj = d.sqrt();
        l[j * n + j] = Complex64::new(djj, 0.0);
        log_det += 2.0 * djj.ln();
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / djj;
        }
    }
    log_det / std::f64::consts::LN_2
}

pub fn random_matrix(rng: &mut StdRng, rows: usize, cols: usize) -> Vec<Complex64> {
    (0..rows * cols)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect()
}

/// Random unitary from modified Gram-Schmidt on a random complex matrix (columns orthonormalized).
pub fn random_unitary(rng: &mut StdRng, n: usize) -> Vec<Complex64> {
    let mut q = random_matrix(rng, n, n);
    for j in 0..n {
        for k in 0..j {
            let mut proj = Complex64::new(0.0, 0.0);
            for i in 0..n {
                proj += q[i * n + k].conj() * q[i * n + j];
            }
            for i in 0..n {
                let qk = q[i * n + k];
                q[i * n + j] -= proj * qk;
            }
        }
        let norm: f64 = (0..n).map(|i| q[i * n + j].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..n {
            q[i * n + j] /= norm;
        }
    }
    q
}

/// Dense product of row-major matrices.
pub fn matmul(a: &[Complex64], b: &[Complex64], n: usize, k: usize, m: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * m];
    for i in 0..n {
        for l in 0..k {
            let ail = a[i * k + l];
            for j in 0..m {
                out[i * m + j] += ail * b[l * m + j];
            }
        }
    }
    out
}

pub fn seeded(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Max relative deviation between two descending spectra, relative to the largest value.
pub fn spectrum_deviation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = a[0].abs().max(b[0].abs());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / scale)
        .fold(0.0, f64::max)
}
