//! Eigenbases of the linearized operators, spectral fields, interaction
//! tensors and energy diagnostics.
//!
//! Two basis kinds are supported: the analytic sine eigenbasis of
//! `d^2/dx^2 + 1` on `(0, L)` with Dirichlet conditions, and the collocation
//! eigenbasis of a Schroedinger-type operator `d^2/dx^2 + c(x)` computed by
//! Chebyshev collocation and resampled onto the uniform simulation grid.
//! All quadrature downstream (projections, tensors, energies) lives on that
//! single uniform grid.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::chebyshev;
use crate::error::{OpmError, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    /// `e_j(x) = sqrt(2/L) sin(j pi x / L)` with eigenvalue `1 - j^2 pi^2 / L^2`.
    AnalyticSine,
    /// Eigenmodes of a linearized operator computed by Chebyshev collocation.
    Collocation,
}

/// Ordered eigenpairs of a self-adjoint linearized operator, with grid
/// samples. Eigenvalues are strictly decreasing in the index; modes are
/// L2-orthonormal on the grid quadrature. Immutable after construction.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    pub kind: BasisKind,
    pub grid: Grid,
    /// Decreasing eigenvalues, one per retained mode.
    pub eigenvalues: Vec<f64>,
    /// Mode samples on the grid, mode-major: `modes[n][i] = e_{n+1}(x_i)`.
    pub modes: Vec<Vec<f64>>,
}

impl EigenBasis {
    pub fn n_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn length(&self) -> f64 {
        self.grid.length
    }

    /// Sum of `coeffs[n] * e_n` sampled on the grid.
    pub fn reconstruct(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.points];
        self.reconstruct_into(coeffs, &mut out);
        out
    }

    pub fn reconstruct_into(&self, coeffs: &[f64], out: &mut [f64]) {
        debug_assert!(coeffs.len() <= self.modes.len());
        out.fill(0.0);
        for (c, mode) in coeffs.iter().zip(&self.modes) {
            if *c != 0.0 {
                for (o, m) in out.iter_mut().zip(mode.iter()) {
                    *o += c * m;
                }
            }
        }
    }

    /// Quadrature projections `<f, e_n>` for the first `out.len()` modes.
    pub fn project_into(&self, values: &[f64], out: &mut [f64]) {
        debug_assert!(out.len() <= self.modes.len());
        let n = self.grid.points;
        let dx = self.grid.dx();
        for (o, mode) in out.iter_mut().zip(&self.modes) {
            let mut acc = 0.5 * (values[0] * mode[0] + values[n - 1] * mode[n - 1]);
            for i in 1..n - 1 {
                acc += values[i] * mode[i];
            }
            *o = acc * dx;
        }
    }

    pub fn project(&self, values: &[f64], n_modes: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_modes];
        self.project_into(values, &mut out);
        out
    }

    /// Largest off-diagonal / diagonal-deviation entry of the Gram matrix.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n_modes() {
            for j in i..self.n_modes() {
                let g = self.grid.inner(&self.modes[i], &self.modes[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }

    /// CSV dump: eigenvalues then mode samples, for inspection and
    /// cross-language checks.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("mode,eigenvalue\n");
        for (n, lam) in self.eigenvalues.iter().enumerate() {
            let _ = writeln!(s, "{},{}", n + 1, lam);
        }
        s.push_str("x");
        for n in 0..self.n_modes() {
            let _ = write!(s, ",e{}", n + 1);
        }
        s.push('\n');
        for i in 0..self.grid.points {
            let _ = write!(s, "{}", self.grid.x(i));
            for mode in &self.modes {
                let _ = write!(s, ",{}", mode[i]);
            }
            s.push('\n');
        }
        s
    }
}

/// A state expressed as coefficients over an eigenbasis, split into resolved
/// (`..split`) and unresolved (`split..`) ranges.
#[derive(Debug, Clone)]
pub struct SpectralField {
    pub coeffs: Vec<f64>,
    pub split: usize,
    pub basis: Arc<EigenBasis>,
}

impl SpectralField {
    pub fn new(coeffs: Vec<f64>, split: usize, basis: Arc<EigenBasis>) -> Self {
        assert!(split <= coeffs.len());
        assert!(coeffs.len() <= basis.n_modes());
        SpectralField {
            coeffs,
            split,
            basis,
        }
    }

    pub fn zeros(n_modes: usize, split: usize, basis: Arc<EigenBasis>) -> Self {
        Self::new(vec![0.0; n_modes], split, basis)
    }

    pub fn resolved(&self) -> &[f64] {
        &self.coeffs[..self.split]
    }

    pub fn unresolved(&self) -> &[f64] {
        &self.coeffs[self.split..]
    }

    pub fn reconstruct(&self) -> Vec<f64> {
        self.basis.reconstruct(&self.coeffs)
    }
}

/// Quadratic and cubic mode-interaction tensors.
///
/// `cubic(n, i, j, k) = -<e_i e_j e_k, e_n>` (the sign convention of the
/// `-u^3` nonlinearity), `quadratic(n, i, j) = <w e_i e_j, e_n>` for the
/// supplied weight. Indices are zero-based mode indices.
#[derive(Debug, Clone)]
pub struct InteractionTensors {
    pub n_total: usize,
    cubic: Vec<f64>,
    quadratic: Option<Vec<f64>>,
}

impl InteractionTensors {
    #[inline]
    pub fn cubic(&self, n: usize, i: usize, j: usize, k: usize) -> f64 {
        let m = self.n_total;
        self.cubic[((n * m + i) * m + j) * m + k]
    }

    #[inline]
    pub fn quadratic(&self, n: usize, i: usize, j: usize) -> f64 {
        match &self.quadratic {
            Some(q) => q[(n * self.n_total + i) * self.n_total + j],
            None => 0.0,
        }
    }

    pub fn has_quadratic(&self) -> bool {
        self.quadratic.is_some()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("kind,n,i,j,k,value\n");
        for n in 0..self.n_total {
            for i in 0..self.n_total {
                for j in 0..self.n_total {
                    if self.quadratic.is_some() {
                        let _ = writeln!(s, "B,{},{},{},,{}", n + 1, i + 1, j + 1, self.quadratic(n, i, j));
                    }
                    for k in 0..self.n_total {
                        let _ = writeln!(
                            s,
                            "C,{},{},{},{},{}",
                            n + 1,
                            i + 1,
                            j + 1,
                            k + 1,
                            self.cubic(n, i, j, k)
                        );
                    }
                }
            }
        }
        s
    }
}

/// Analytic sine eigenbasis of `d^2/dx^2 + 1` on `(0, L)` with homogeneous
/// Dirichlet conditions: `lambda_j = 1 - j^2 pi^2 / L^2` exactly.
pub fn build_sine_basis(length: f64, n_modes: usize, grid_points: usize) -> Result<EigenBasis> {
    if length <= 0.0 {
        return Err(OpmError::invalid("domain length must be positive"));
    }
    if n_modes == 0 {
        return Err(OpmError::invalid("need at least one mode"));
    }
    if grid_points < 4 * n_modes {
        return Err(OpmError::invalid(format!(
            "grid too coarse: {grid_points} points for {n_modes} modes"
        )));
    }
    let grid = Grid::new(length, grid_points);
    let amp = (2.0 / length).sqrt();
    let mut eigenvalues = Vec::with_capacity(n_modes);
    let mut modes = Vec::with_capacity(n_modes);
    for j in 1..=n_modes {
        let freq = j as f64 * std::f64::consts::PI / length;
        eigenvalues.push(1.0 - freq * freq);
        modes.push(grid.xs().map(|x| amp * (freq * x).sin()).collect());
    }
    Ok(EigenBasis {
        kind: BasisKind::AnalyticSine,
        grid,
        eigenvalues,
        modes,
    })
}

/// Eigenpairs of `psi'' + lambda (2 U* - 3 eps U*^2) psi = beta psi` with
/// Dirichlet conditions on `(0, L)`, by Chebyshev collocation.
///
/// `u_star_cheb` holds `U*` sampled on the `cheb_points` Lobatto nodes
/// (including both boundaries, ordered from `x = 0` to `x = L`). The first
/// `n_modes` eigenpairs (decreasing eigenvalue) are resampled onto
/// `uniform_grid` by barycentric interpolation, re-normalized in L2 there,
/// and sign-fixed so the first nonzero grid value is positive.
pub fn build_linearized_basis(
    u_star_cheb: &[f64],
    lambda_bif: f64,
    eps: f64,
    cheb_points: usize,
    uniform_grid: &Grid,
    n_modes: usize,
) -> Result<EigenBasis> {
    if cheb_points < 32 {
        return Err(OpmError::invalid("cheb_points must be at least 32"));
    }
    if u_star_cheb.len() != cheb_points {
        return Err(OpmError::invalid(format!(
            "expected U* on {} collocation points, got {}",
            cheb_points,
            u_star_cheb.len()
        )));
    }
    let n = cheb_points - 1;
    let n_int = n - 1;
    if n_modes > n_int {
        return Err(OpmError::invalid("more modes requested than interior points"));
    }
    let length = uniform_grid.length;

    // Lobatto points run from xi = +1 to -1; map x = L (1 - xi) / 2 so the
    // sample order matches u_star_cheb (x = 0 first).
    let d = chebyshev::differentiation_matrix(n);
    let d2 = &d * &d;
    let scale = 4.0 / (length * length);

    let mut a = DMatrix::zeros(n_int, n_int);
    for i in 0..n_int {
        for j in 0..n_int {
            a[(i, j)] = scale * d2[(i + 1, j + 1)];
        }
        let us = u_star_cheb[i + 1];
        a[(i, i)] += lambda_bif * (2.0 * us - 3.0 * eps * us * us);
    }

    // The continuous problem is self-adjoint: the spectrum must come out
    // real and simple. Complex pairs indicate a discretization bug.
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), 1.0e-13, 0)
        .ok_or_else(|| OpmError::Eigensolver("Schur iteration did not converge".into()))?;
    let complex_eigs = schur.complex_eigenvalues();
    let magnitude = a.norm();
    let mut eigs: Vec<f64> = Vec::with_capacity(n_int);
    for e in complex_eigs.iter() {
        if e.im.abs() > 1.0e-8 * magnitude.max(1.0) {
            return Err(OpmError::Eigensolver(format!(
                "complex eigenvalue {} + {}i from a self-adjoint problem",
                e.re, e.im
            )));
        }
        eigs.push(e.re);
    }
    eigs.sort_by(|x, y| y.partial_cmp(x).unwrap());

    let lobatto = chebyshev::lobatto_points(n);
    let targets: Vec<f64> = uniform_grid.xs().map(|x| 1.0 - 2.0 * x / length).collect();

    let mut eigenvalues = Vec::with_capacity(n_modes);
    let mut modes = Vec::with_capacity(n_modes);
    for &beta in eigs.iter().take(n_modes) {
        let vec = inverse_iteration(&a, beta)?;
        // Rayleigh-quotient polish of the Schur estimate.
        let av = &a * &vec;
        let beta_refined = vec.dot(&av) / vec.dot(&vec);
        let residual = (&av - beta_refined * &vec).norm() / vec.norm();
        if residual > 1.0e-5 * beta_refined.abs().max(1.0) {
            return Err(OpmError::Eigensolver(format!(
                "inverse iteration residual {residual:.3e} at eigenvalue {beta_refined:.6}"
            )));
        }

        // Pad with the Dirichlet boundary zeros, then resample.
        let mut full = vec![0.0; n + 1];
        for i in 0..n_int {
            full[i + 1] = vec[i];
        }
        let mut sampled = chebyshev::barycentric_interpolate(&lobatto, &full, &targets);
        let norm = uniform_grid.norm(&sampled);
        if norm == 0.0 {
            return Err(OpmError::Eigensolver("zero eigenvector after resampling".into()));
        }
        let first_nonzero = sampled
            .iter()
            .find(|v| v.abs() > 1.0e-10)
            .copied()
            .unwrap_or(1.0);
        let scale = first_nonzero.signum() / norm;
        for v in &mut sampled {
            *v *= scale;
        }
        eigenvalues.push(beta_refined);
        modes.push(sampled);
    }

    Ok(EigenBasis {
        kind: BasisKind::Collocation,
        grid: uniform_grid.clone(),
        eigenvalues,
        modes,
    })
}

fn inverse_iteration(a: &DMatrix<f64>, eigenvalue: f64) -> Result<DVector<f64>> {
    let n = a.nrows();
    let shift = eigenvalue + 1.0e-9 * eigenvalue.abs().max(1.0);
    let mut shifted = a.clone();
    for i in 0..n {
        shifted[(i, i)] -= shift;
    }
    let lu = shifted.lu();
    let mut x = DVector::from_fn(n, |i, _| 1.0 / (1.0 + i as f64));
    for _ in 0..12 {
        let mut y = lu
            .solve(&x)
            .ok_or_else(|| OpmError::Eigensolver("singular shifted matrix".into()))?;
        let norm = y.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(OpmError::Eigensolver("inverse iteration diverged".into()));
        }
        y /= norm;
        x = y;
    }
    Ok(x)
}

/// Interaction tensors on a basis: `cubic(n,i,j,k) = -<e_i e_j e_k, e_n>`
/// and, when a weight is supplied, `quadratic(n,i,j) = <w e_i e_j, e_n>`,
/// both by trapezoid quadrature on the basis grid.
pub fn interaction_tensors(
    basis: &EigenBasis,
    weight: Option<&[f64]>,
    n_total: usize,
) -> Result<InteractionTensors> {
    if n_total > basis.n_modes() {
        return Err(OpmError::invalid("tensor range exceeds basis modes"));
    }
    if let Some(w) = weight {
        if w.len() != basis.grid.points {
            return Err(OpmError::invalid("weight not sampled on the basis grid"));
        }
    }
    let g = &basis.grid;
    let np = g.points;
    let mut cubic = vec![0.0; n_total.pow(4)];
    let mut quadratic = weight.map(|_| vec![0.0; n_total.pow(3)]);
    let mut product = vec![0.0; np];
    for n in 0..n_total {
        for i in 0..n_total {
            for j in 0..n_total {
                if let (Some(q), Some(w)) = (quadratic.as_mut(), weight) {
                    for p in 0..np {
                        product[p] = w[p] * basis.modes[i][p] * basis.modes[j][p];
                    }
                    q[(n * n_total + i) * n_total + j] = g.inner(&product, &basis.modes[n]);
                }
                for k in 0..n_total {
                    for p in 0..np {
                        product[p] = basis.modes[i][p] * basis.modes[j][p] * basis.modes[k][p];
                    }
                    cubic[((n * n_total + i) * n_total + j) * n_total + k] =
                        -g.inner(&product, &basis.modes[n]);
                }
            }
        }
    }
    Ok(InteractionTensors {
        n_total,
        cubic,
        quadratic,
    })
}

/// Ginzburg-Landau free energy `E(u) = \int |u_x|^2/2 + (u^2-1)^2/4 dx`,
/// with the derivative evaluated spectrally from the sine coefficients.
pub fn gl_energy(field: &SpectralField) -> f64 {
    let basis = &field.basis;
    assert_eq!(basis.kind, BasisKind::AnalyticSine, "energy uses the sine basis");
    let g = &basis.grid;
    let length = g.length;
    let amp = (2.0 / length).sqrt();
    let u = field.reconstruct();
    let mut du = vec![0.0; g.points];
    for (j, c) in field.coeffs.iter().enumerate() {
        if *c == 0.0 {
            continue;
        }
        let freq = (j + 1) as f64 * std::f64::consts::PI / length;
        for (i, d) in du.iter_mut().enumerate() {
            *d += c * amp * freq * (freq * g.x(i)).cos();
        }
    }
    let density: Vec<f64> = u
        .iter()
        .zip(&du)
        .map(|(&ui, &di)| 0.5 * di * di + 0.25 * (ui * ui - 1.0) * (ui * ui - 1.0))
        .collect();
    g.integrate(&density)
}
