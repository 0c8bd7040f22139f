//! Steady states and continuation.
//!
//! Two Galerkin problems live here: the double-fold elliptic problem
//! `u'' + lambda (1 + u^2 - eps u^3) = 0` (S-shaped diagram, folds, the
//! unstable state that seeds the jump study) and the deterministic
//! Allen-Cahn steady states used for the energy-distribution checks. Both
//! expand solutions in sine modes and solve the resulting algebraic systems
//! with a damped Newton iteration and finite-difference Jacobians.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{OpmError, Result};
use crate::rng::{CounterRng, Stream};
use crate::spectral::{build_sine_basis, EigenBasis};

/// Critical cubic coefficient for `L = 2`: the solution curve is S-shaped
/// exactly when `eps < EPS_STAR`.
pub const EPS_STAR: f64 = 0.3103;

/// Default continuation increment.
pub const DEFAULT_D_LAMBDA: f64 = 1e-3;

/// Condition-estimate threshold treated as "nearly singular".
pub const COND_MAX: f64 = 1e8;

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub coeffs: Vec<f64>,
    pub iterations: usize,
    pub condition: f64,
    pub residual_norm: f64,
}

/// Damped Newton with a forward-difference Jacobian on a generic residual.
fn damped_newton(
    residual: &dyn Fn(&[f64]) -> Vec<f64>,
    a0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<NewtonOutcome> {
    let n = a0.len();
    let mut a = DVector::from_column_slice(a0);
    let mut r = DVector::from_vec(residual(a.as_slice()));
    let mut condition = 0.0;
    for iter in 0..=max_iter {
        let rnorm = r.amax();
        if rnorm < tol {
            return Ok(NewtonOutcome {
                coeffs: a.as_slice().to_vec(),
                iterations: iter,
                condition,
                residual_norm: rnorm,
            });
        }
        if iter == max_iter {
            break;
        }
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let h = 1e-7 * a[j].abs().max(1.0);
            let mut ap = a.clone();
            ap[j] += h;
            let rp = residual(ap.as_slice());
            for i in 0..n {
                jac[(i, j)] = (rp[i] - r[i]) / h;
            }
        }
        let jac_norm = jac.amax();
        let inv = jac.clone().try_inverse();
        condition = match &inv {
            Some(inv) => jac_norm * inv.amax() * n as f64,
            None => f64::INFINITY,
        };
        let delta = match inv {
            Some(inv) => inv * &r,
            None => {
                return Err(OpmError::NewtonFailure(format!(
                    "singular Jacobian (cond estimate {condition:.3e})"
                )))
            }
        };
        // Damping: halve until the residual does not grow.
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let trial = &a - step * &delta;
            let rt = DVector::from_vec(residual(trial.as_slice()));
            if rt.amax() < rnorm || rt.amax() < tol {
                a = trial;
                r = rt;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(OpmError::NewtonFailure(format!(
                "line search stalled at residual {rnorm:.3e} (cond {condition:.3e})"
            )));
        }
    }
    Err(OpmError::NewtonFailure(format!(
        "no convergence in {max_iter} iterations (residual {:.3e})",
        r.amax()
    )))
}

/// Sine-Galerkin discretization of the double-fold elliptic problem.
#[derive(Debug, Clone)]
pub struct FoldProblem {
    pub basis: Arc<EigenBasis>,
    pub n_modes: usize,
    pub eps: f64,
}

impl FoldProblem {
    pub fn new(length: f64, n_modes: usize, grid_points: usize, eps: f64) -> Result<Self> {
        let basis = Arc::new(build_sine_basis(length, n_modes, grid_points)?);
        Ok(FoldProblem {
            basis,
            n_modes,
            eps,
        })
    }

    /// Residual of `u'' + lambda (1 + u^2 - eps u^3) = 0` projected on the
    /// first `n_modes` sine modes; nonlinear terms by grid quadrature.
    pub fn residual(&self, a: &[f64], lambda: f64) -> Vec<f64> {
        let length = self.basis.length();
        let u = self.basis.reconstruct(a);
        let f: Vec<f64> = u
            .iter()
            .map(|&v| lambda * (1.0 + v * v - self.eps * v * v * v))
            .collect();
        let proj = self.basis.project(&f, self.n_modes);
        (0..self.n_modes)
            .map(|n| {
                let freq = (n + 1) as f64 * std::f64::consts::PI / length;
                -freq * freq * a[n] + proj[n]
            })
            .collect()
    }

    pub fn newton(&self, a0: &[f64], lambda: f64) -> Result<NewtonOutcome> {
        damped_newton(&|a| self.residual(a, lambda), a0, 1e-11, 60)
    }

    /// Symmetric Galerkin Jacobian eigenvalues at a converged point; the
    /// state is stable when all are negative.
    pub fn jacobian_eigenvalues(&self, a: &[f64], lambda: f64) -> Vec<f64> {
        let length = self.basis.length();
        let u = self.basis.reconstruct(a);
        let weight: Vec<f64> = u
            .iter()
            .map(|&v| lambda * (2.0 * v - 3.0 * self.eps * v * v))
            .collect();
        let mut jac = DMatrix::zeros(self.n_modes, self.n_modes);
        let g = &self.basis.grid;
        let mut product = vec![0.0; g.points];
        for m in 0..self.n_modes {
            for n in m..self.n_modes {
                for p in 0..g.points {
                    product[p] = weight[p] * self.basis.modes[n][p];
                }
                let v = g.inner(&product, &self.basis.modes[m]);
                jac[(m, n)] = v;
                jac[(n, m)] = v;
            }
            let freq = (m + 1) as f64 * std::f64::consts::PI / length;
            jac[(m, m)] -= freq * freq;
        }
        let eig = jac.symmetric_eigenvalues();
        let mut out: Vec<f64> = eig.iter().copied().collect();
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out
    }

    pub fn is_stable(&self, a: &[f64], lambda: f64) -> bool {
        self.jacobian_eigenvalues(a, lambda)
            .iter()
            .all(|e| *e < 0.0)
    }
}

#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub lambda: f64,
    pub coeffs: Vec<f64>,
    pub stable: bool,
    pub condition: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Termination {
    ReachedEnd,
    /// Continuation stopped on a nearly singular Jacobian; the stored value
    /// is the last converged lambda after step refinement.
    Fold,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub termination: Termination,
}

impl Branch {
    pub fn last_lambda(&self) -> f64 {
        self.points.last().map_or(f64::NAN, |p| p.lambda)
    }

    /// CSV export `(lambda, a1, stable)` - the diagram's data.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,a1,stable\n");
        for p in &self.points {
            let _ = writeln!(s, "{},{},{}", p.lambda, p.coeffs[0], u8::from(p.stable));
        }
        s
    }
}

/// Natural continuation in `lambda` with the previous solution as the next
/// initial guess. Stops at `lambda_end`, or refines the step down to
/// `min_step` when the Jacobian turns nearly singular (fold).
pub fn continue_branch(
    problem: &FoldProblem,
    start: &[f64],
    lambda0: f64,
    d_lambda: f64,
    lambda_end: f64,
    min_step: f64,
) -> Result<Branch> {
    assert!(d_lambda != 0.0);
    let first = problem.newton(start, lambda0).map_err(|e| {
        OpmError::NewtonFailure(format!("no convergence at branch start {lambda0}: {e}"))
    })?;
    let stable = problem.is_stable(&first.coeffs, lambda0);
    let mut points = vec![BranchPoint {
        lambda: lambda0,
        coeffs: first.coeffs,
        stable,
        condition: first.condition,
    }];

    let mut step = d_lambda;
    let forward = d_lambda > 0.0;
    loop {
        let current = points.last().unwrap();
        if (forward && current.lambda >= lambda_end) || (!forward && current.lambda <= lambda_end)
        {
            return Ok(Branch {
                points,
                termination: Termination::ReachedEnd,
            });
        }
        let mut next_lambda = current.lambda + step;
        if (forward && next_lambda > lambda_end) || (!forward && next_lambda < lambda_end) {
            next_lambda = lambda_end;
        }
        match problem.newton(&current.coeffs, next_lambda) {
            Ok(out) if out.condition < COND_MAX => {
                let stable = problem.is_stable(&out.coeffs, next_lambda);
                points.push(BranchPoint {
                    lambda: next_lambda,
                    coeffs: out.coeffs,
                    stable,
                    condition: out.condition,
                });
            }
            outcome => {
                // Near-singular or failed: refine toward the turning point.
                step *= 0.5;
                if step.abs() < min_step {
                    if points.len() == 1 {
                        if let Err(e) = outcome {
                            return Err(OpmError::NewtonFailure(format!(
                                "immediate failure after branch start at lambda {}: {e}",
                                current.lambda
                            )));
                        }
                    }
                    return Ok(Branch {
                        points,
                        termination: Termination::Fold,
                    });
                }
            }
        }
    }
}

/// One steady state with its stability flag and per-mode energy fractions.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub coeffs: Vec<f64>,
    pub stable: bool,
    /// `coeffs[n]^2 / sum coeffs^2`, in percent.
    pub energy_fractions: Vec<f64>,
}

fn energy_fractions(coeffs: &[f64]) -> Vec<f64> {
    let total: f64 = coeffs.iter().map(|c| c * c).sum();
    coeffs
        .iter()
        .map(|c| if total > 0.0 { 100.0 * c * c / total } else { 0.0 })
        .collect()
}

/// Distinct solutions of the fold problem at one `lambda`, found by
/// multi-start Newton from seeded random initial guesses, deduplicated by
/// sup-norm clustering on the grid.
pub fn multi_start_solutions(
    problem: &FoldProblem,
    lambda: f64,
    n_starts: usize,
    seed: u64,
) -> Vec<SteadyState> {
    let rng = CounterRng::new(seed, Stream::InitialGuess, 0, 0);
    let mut found: Vec<Vec<f64>> = Vec::new();
    let mut grids: Vec<Vec<f64>> = Vec::new();
    let mut draw = 0u64;
    for _ in 0..n_starts {
        let mut guess = vec![0.0; problem.n_modes];
        // First mode spans the solution amplitudes; higher modes decay.
        guess[0] = 9.5 * rng.uniform(draw);
        draw += 1;
        for item in guess.iter_mut().skip(1) {
            *item = 2.0 * rng.uniform_symmetric(draw);
            draw += 1;
        }
        let Ok(out) = problem.newton(&guess, lambda) else {
            continue;
        };
        if out.residual_norm > 1e-10 {
            continue;
        }
        let grid_vals = problem.basis.reconstruct(&out.coeffs);
        // The elliptic problem admits only nonnegative profiles; spurious
        // sign-changing Galerkin roots are discarded.
        if grid_vals.iter().any(|v| *v < -0.2) {
            continue;
        }
        let duplicate = grids.iter().any(|g| {
            g.iter()
                .zip(&grid_vals)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
                < 1e-6
        });
        if !duplicate {
            grids.push(grid_vals);
            found.push(out.coeffs);
        }
    }
    found.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
    found
        .into_iter()
        .map(|coeffs| {
            let stable = problem.is_stable(&coeffs, lambda);
            let energy_fractions = energy_fractions(&coeffs);
            SteadyState {
                coeffs,
                stable,
                energy_fractions,
            }
        })
        .collect()
}

/// The three coexisting states at `lambda` inside the S-shaped interval,
/// ordered by increasing first-mode amplitude: minimal stable state, the
/// unstable middle state, maximal stable state.
pub fn three_states_at(
    problem: &FoldProblem,
    lambda: f64,
    seed: u64,
) -> Result<[SteadyState; 3]> {
    let states = multi_start_solutions(problem, lambda, 200, seed);
    if states.len() != 3 {
        return Err(OpmError::NewtonFailure(format!(
            "expected multiplicity 3 at lambda {lambda}, found {}",
            states.len()
        )));
    }
    let mut it = states.into_iter();
    let low = it.next().unwrap();
    let mid = it.next().unwrap();
    let high = it.next().unwrap();
    Ok([low, mid, high])
}

/// Lower-branch continuation from `lambda = 1` up to the first fold;
/// returns the branch and the refined turning-point estimate.
pub fn lower_branch_to_fold(problem: &FoldProblem) -> Result<(Branch, f64)> {
    let start = vec![0.0; problem.n_modes];
    let branch = continue_branch(problem, &start, 1.0, DEFAULT_D_LAMBDA, 2.0, 1e-7)?;
    match branch.termination {
        Termination::Fold => {
            let lambda_star = branch.last_lambda();
            Ok((branch, lambda_star))
        }
        Termination::ReachedEnd => Err(OpmError::NewtonFailure(
            "no fold encountered on the lower branch".into(),
        )),
    }
}

/// Galerkin Jacobian spectrum of the deterministic Allen-Cahn equation at a
/// coefficient vector, sorted decreasing. The sign-change states carry
/// exponentially small positive eigenvalues (interface interactions), so
/// stability classification must come from here rather than from finite
/// time integration.
pub fn allen_cahn_jacobian_eigenvalues(
    length: f64,
    grid_points: usize,
    coeffs: &[f64],
) -> Result<Vec<f64>> {
    let n_modes = coeffs.len();
    let basis = build_sine_basis(length, n_modes, grid_points)?;
    let u = basis.reconstruct(coeffs);
    let weight: Vec<f64> = u.iter().map(|&v| -3.0 * v * v).collect();
    let mut jac = DMatrix::zeros(n_modes, n_modes);
    let g = &basis.grid;
    let mut product = vec![0.0; g.points];
    for m in 0..n_modes {
        for n in m..n_modes {
            for p in 0..g.points {
                product[p] = weight[p] * basis.modes[n][p];
            }
            let v = g.inner(&product, &basis.modes[m]);
            jac[(m, n)] = v;
            jac[(n, m)] = v;
        }
        jac[(m, m)] += basis.eigenvalues[m];
    }
    let mut eig: Vec<f64> = jac.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(eig)
}

/// Steady states of the deterministic Allen-Cahn equation
/// `u'' + u - u^3 = 0` on `(0, L)` from structured initial guesses along
/// the first three mode directions, with per-mode energy fractions.
pub fn allen_cahn_steady_states(
    length: f64,
    n_modes: usize,
    grid_points: usize,
) -> Result<Vec<SteadyState>> {
    let basis = Arc::new(build_sine_basis(length, n_modes, grid_points)?);
    let residual = |a: &[f64]| -> Vec<f64> {
        let u = basis.reconstruct(a);
        let cubed: Vec<f64> = u.iter().map(|&v| v * v * v).collect();
        let proj = basis.project(&cubed, n_modes);
        (0..n_modes)
            .map(|n| basis.eigenvalues[n] * a[n] - proj[n])
            .collect()
    };
    let jacobian_stable = |a: &[f64]| -> bool {
        let u = basis.reconstruct(a);
        let weight: Vec<f64> = u.iter().map(|&v| -3.0 * v * v).collect();
        let mut jac = DMatrix::zeros(n_modes, n_modes);
        let g = &basis.grid;
        let mut product = vec![0.0; g.points];
        for m in 0..n_modes {
            for n in m..n_modes {
                for p in 0..g.points {
                    product[p] = weight[p] * basis.modes[n][p];
                }
                let v = g.inner(&product, &basis.modes[m]);
                jac[(m, n)] = v;
                jac[(n, m)] = v;
            }
            jac[(m, m)] += basis.eigenvalues[m];
        }
        jac.symmetric_eigenvalues().iter().all(|e| *e < 0.0)
    };

    // Landau amplitude of the j-th bifurcated state as the starting guess.
    let mut states: Vec<SteadyState> = Vec::new();
    let mut grids: Vec<Vec<f64>> = Vec::new();
    for j in 0..3.min(n_modes) {
        let lam = basis.eigenvalues[j];
        if lam <= 0.0 {
            continue;
        }
        let amp = (lam * 2.0 * length / 3.0).sqrt();
        for sign in [1.0, -1.0] {
            let mut guess = vec![0.0; n_modes];
            guess[j] = sign * amp;
            let out = damped_newton(&residual, &guess, 1e-11, 60)?;
            let grid_vals = basis.reconstruct(&out.coeffs);
            let duplicate = grids.iter().any(|g| {
                g.iter()
                    .zip(&grid_vals)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
                    < 1e-6
            });
            if duplicate {
                continue;
            }
            grids.push(grid_vals);
            states.push(SteadyState {
                stable: jacobian_stable(&out.coeffs),
                energy_fractions: energy_fractions(&out.coeffs),
                coeffs: out.coeffs,
            });
        }
    }
    if states.len() < 6 {
        return Err(OpmError::NewtonFailure(format!(
            "expected six nontrivial Allen-Cahn states, found {}",
            states.len()
        )));
    }
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(eps: f64) -> FoldProblem {
        FoldProblem::new(2.0, 6, 257, eps).unwrap()
    }

    #[test]
    fn residual_at_zero_matches_sine_moments() {
        let p = problem(EPS_STAR / 2.0);
        let lambda = 0.7;
        let r = p.residual(&[0.0; 6], lambda);
        let length = 2.0;
        for (n, rn) in r.iter().enumerate() {
            let j = n + 1;
            if j % 2 == 0 {
                // Even sine moments vanish to roundoff by grid antisymmetry.
                assert!(rn.abs() < 1e-12, "mode {j}: {rn}");
            } else {
                // Odd moments match the analytic integral to quadrature
                // accuracy (the constant integrand is not a sine polynomial).
                let expected = lambda * (2.0f64 / length).sqrt() * 2.0 * length
                    / (j as f64 * std::f64::consts::PI);
                assert!(
                    (rn - expected).abs() < 2e-4,
                    "mode {j}: {rn} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn newton_converges_for_small_lambda_monotone_problem() {
        let p = problem(0.0);
        let out = p.newton(&[0.0; 6], 0.1).unwrap();
        assert!(out.residual_norm < 1e-11);
        let r = p.residual(&out.coeffs, 0.1);
        assert!(r.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn converged_start_needs_no_iterations() {
        let p = problem(EPS_STAR / 2.0);
        let out = p.newton(&[0.0; 6], 1.0).unwrap();
        let again = p.newton(&out.coeffs, 1.0).unwrap();
        assert_eq!(again.iterations, 0);
    }

    #[test]
    fn lower_branch_folds_near_the_documented_turning_point() {
        let p = problem(EPS_STAR / 2.0);
        let (branch, lambda_star) = lower_branch_to_fold(&p).unwrap();
        assert!(
            (lambda_star - 1.3309).abs() < 0.005,
            "lambda* = {lambda_star}"
        );
        assert_eq!(branch.termination, Termination::Fold);
        // Lambda strictly increasing along the stored branch.
        for w in branch.points.windows(2) {
            assert!(w[1].lambda > w[0].lambda);
        }
        // Every emitted point satisfies the residual bound.
        for pt in branch.points.iter().step_by(37) {
            let r = p.residual(&pt.coeffs, pt.lambda);
            assert!(r.iter().all(|v| v.abs() < 1e-10));
        }
    }

    #[test]
    fn multiplicity_three_inside_the_s_interval() {
        let p = problem(EPS_STAR / 2.0);
        let states = multi_start_solutions(&p, 1.32, 200, 11);
        assert_eq!(states.len(), 3, "found {} solutions", states.len());
        // Ordered by first-mode amplitude: stable, unstable, stable.
        assert!(states[0].stable);
        assert!(!states[1].stable);
        assert!(states[2].stable);
    }

    #[test]
    fn no_fold_above_eps_star() {
        let p = problem(0.35);
        let start = vec![0.0; 6];
        let branch = continue_branch(&p, &start, 1.0, DEFAULT_D_LAMBDA, 1.45, 1e-7).unwrap();
        assert_eq!(branch.termination, Termination::ReachedEnd);
        assert!((branch.last_lambda() - 1.45).abs() < 1e-12);
        let states = multi_start_solutions(&p, 1.4, 150, 13);
        assert_eq!(states.len(), 1);
    }

    #[test]
    fn fold_flips_the_smallest_jacobian_eigenvalue() {
        let p = problem(EPS_STAR / 2.0);
        let (branch, lambda_star) = lower_branch_to_fold(&p).unwrap();
        let last = branch.points.last().unwrap();
        let eig_lower = p.jacobian_eigenvalues(&last.coeffs, last.lambda);
        let smallest_lower = eig_lower
            .iter()
            .copied()
            .min_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
            .unwrap();
        // Middle-branch state slightly below the fold.
        let lambda_probe = lambda_star - 5.0 * DEFAULT_D_LAMBDA;
        let [_, mid, _] = three_states_at(&p, lambda_probe, 17).unwrap();
        let eig_mid = p.jacobian_eigenvalues(&mid.coeffs, lambda_probe);
        let smallest_mid = eig_mid
            .iter()
            .copied()
            .min_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
            .unwrap();
        assert!(
            smallest_lower < 0.0 && smallest_mid > 0.0,
            "eigenvalues across the fold: {smallest_lower} / {smallest_mid}"
        );
    }

    #[test]
    fn galerkin_resolution_is_converged_at_six_modes() {
        let p6 = problem(EPS_STAR / 2.0);
        let p12 = FoldProblem::new(2.0, 12, 257, EPS_STAR / 2.0).unwrap();
        let a6 = p6.newton(&[0.0; 6], 1.3).unwrap().coeffs;
        let mut guess = vec![0.0; 12];
        guess[..6].copy_from_slice(&a6);
        let a12 = p12.newton(&guess, 1.3).unwrap().coeffs;
        let u6 = p6.basis.reconstruct(&a6);
        let u12 = p12.basis.reconstruct(&a12);
        let diff = u6
            .iter()
            .zip(&u12)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        // The boundary second derivative u''(0) = -lambda does not vanish,
        // so sine coefficients decay like n^-3 and modes 7..12 still carry
        // a few 1e-3; six modes are converged to that level, not further.
        assert!(diff < 5e-3, "N=6 vs N=12 differ by {diff}");
    }

    #[test]
    fn allen_cahn_energy_fractions_match_the_tabulated_values() {
        let states = allen_cahn_steady_states(3.9 * std::f64::consts::PI, 16, 201).unwrap();
        // Two constant-sign states dominated by mode 1 (94.69% / 4.79%),
        // two sign-change states on mode 2 (99.16%), two on mode 3 (99.93%).
        let phi1: Vec<&SteadyState> = states
            .iter()
            .filter(|s| s.energy_fractions[0] > 90.0)
            .collect();
        assert_eq!(phi1.len(), 2);
        for s in &phi1 {
            assert!(s.stable);
            assert!((s.energy_fractions[0] - 94.69).abs() < 0.5);
            assert!((s.energy_fractions[2] - 4.79).abs() < 0.5);
        }
        let phi2: Vec<&SteadyState> = states
            .iter()
            .filter(|s| s.energy_fractions[1] > 90.0)
            .collect();
        assert_eq!(phi2.len(), 2);
        for s in &phi2 {
            assert!(!s.stable);
            assert!((s.energy_fractions[1] - 99.16).abs() < 0.5);
        }
        let phi3: Vec<&SteadyState> = states
            .iter()
            .filter(|s| s.energy_fractions[2] > 90.0)
            .collect();
        assert_eq!(phi3.len(), 2);
        for s in &phi3 {
            assert!(!s.stable);
            assert!((s.energy_fractions[2] - 99.93).abs() < 0.5);
        }
    }
}
