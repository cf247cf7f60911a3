//! Gauss-Hermite quadrature nodes and weights.
//!
//! Golub-Welsch construction: the nodes are the eigenvalues of the symmetric
//! tridiagonal Jacobi matrix of the (physicists') Hermite recurrence, and the
//! weights follow from the first eigenvector components, scaled so they sum
//! to `sqrt(pi)`. Used by the scalar-channel quadrature oracle.

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights of the `n`-point rule for the weight `exp(-x^2)`,
/// nodes sorted ascending.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "at least one quadrature node");
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let off = (i as f64 / 2.0).sqrt();
        jacobi[(i - 1, i)] = off;
        jacobi[(i, i - 1)] = off;
    }
    let eig = SymmetricEigen::new(jacobi);
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let first = eig.eigenvectors[(0, j)];
            (eig.eigenvalues[j], sqrt_pi * first * first)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs.into_iter().unzip()
}
