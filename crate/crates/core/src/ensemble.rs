//! Reproducible random inputs: correlation matrices by the normalized Gram
//! construction, and small-integer rational matrices for exact checks.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::Matrix;
use crate::par::stream_rng;
use crate::ring::{rat, Rational};

/// `D^{-1/2} G G^T D^{-1/2}` with `G` an `n x n` standard normal matrix and
/// `D = diag(G G^T)`. The result is exactly symmetric with unit diagonal.
pub fn random_correlation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix<f64> {
    loop {
        let g: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
        let gram = |i: usize, j: usize| (0..n).map(|k| g[i * n + k] * g[j * n + k]).sum::<f64>();
        let diag: Vec<f64> = (0..n).map(|i| gram(i, i)).collect();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            m[i * n + i] = 1.0;
            for j in 0..i {
                let v = gram(i, j) / (diag[i] * diag[j]).sqrt();
                m[i * n + j] = v;
                m[j * n + i] = v;
            }
        }
        let m = Matrix::from_vec(n, n, m).expect("square");
        // a singular draw has probability zero but is cheap to reject
        if m.cholesky().is_ok() {
            return m;
        }
    }
}

/// The `index`-th member of the ensemble keyed by `(seed, n)`.
pub fn ensemble_member(n: usize, seed: u64, index: usize) -> Matrix<f64> {
    random_correlation(n, &mut stream_rng(seed, &[n as u64, index as u64]))
}

pub fn correlation_ensemble(n: usize, count: usize, seed: u64) -> Vec<Matrix<f64>> {
    (0..count).map(|k| ensemble_member(n, seed, k)).collect()
}

/// Entries `p/q` with `|p| <= 6`, `1 <= q <= 4`.
pub fn random_rational_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix<Rational> {
    let data = (0..rows * cols)
        .map(|_| rat(rng.random_range(-6..=6), rng.random_range(1..=4)))
        .collect();
    Matrix::from_vec(rows, cols, data).expect("sized data")
}

/// `G G^T + I` with `G` a random rational matrix; exactly positive definite.
pub fn random_rational_spd<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix<Rational> {
    let g = random_rational_matrix(n, n, rng);
    g.mul(&g.transpose())
        .and_then(|m| m.add(&Matrix::identity(n)))
        .expect("square shapes")
}
