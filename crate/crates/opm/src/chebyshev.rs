//! Chebyshev-Lobatto collocation: differentiation matrices and barycentric
//! interpolation, used by the linearized eigenproblem of the double-fold
//! study.

use nalgebra::DMatrix;

/// Chebyshev-Lobatto points `x_j = cos(j pi / n)` for `j = 0..=n`, i.e.
/// `n + 1` points running from `+1` down to `-1`.
pub fn lobatto_points(n: usize) -> Vec<f64> {
    (0..=n)
        .map(|j| (std::f64::consts::PI * j as f64 / n as f64).cos())
        .collect()
}

/// First-order Chebyshev differentiation matrix on the Lobatto points
/// (Trefethen's `cheb`), size `(n+1) x (n+1)`.
pub fn differentiation_matrix(n: usize) -> DMatrix<f64> {
    assert!(n >= 1);
    let x = lobatto_points(n);
    let c = |i: usize| -> f64 {
        let ci = if i == 0 || i == n { 2.0 } else { 1.0 };
        ci * if i % 2 == 0 { 1.0 } else { -1.0 }
    };
    let mut d = DMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[(i, j)] = c(i) / c(j) / (x[i] - x[j]);
            }
        }
    }
    // Diagonal via negative row sums; keeps the matrix exact on constants.
    for i in 0..=n {
        let row_sum: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -row_sum;
    }
    d
}

/// Barycentric interpolation from Lobatto samples to arbitrary abscissae in
/// `[-1, 1]`.
pub fn barycentric_interpolate(xs: &[f64], values: &[f64], targets: &[f64]) -> Vec<f64> {
    let n = xs.len() - 1;
    // Lobatto barycentric weights: (-1)^j, halved at the endpoints.
    let w = |j: usize| -> f64 {
        let base = if j % 2 == 0 { 1.0 } else { -1.0 };
        if j == 0 || j == n {
            0.5 * base
        } else {
            base
        }
    };
    targets
        .iter()
        .map(|&t| {
            // Exact hit avoids the 0/0 form.
            if let Some(j) = xs.iter().position(|&x| (x - t).abs() < 1e-14) {
                return values[j];
            }
            let mut num = 0.0;
            let mut den = 0.0;
            for j in 0..=n {
                let q = w(j) / (t - xs[j]);
                num += q * values[j];
                den += q;
            }
            num / den
        })
        .collect()
}
