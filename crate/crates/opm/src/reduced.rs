//! The non-Markovian closures: the q-dimensional Allen-Cahn system with one
//! auxiliary memory equation per parameterized mode, and the 1-D jump system
//! with two.
//!
//! The Allen-Cahn closure evaluates its cubic term pseudo-spectrally on the
//! lifted field (reconstruct, cube, project) rather than through the
//! quadruple tensor sum; the two routes agree to machine precision and the
//! tensor route is kept for the consistency check. The jump closure is the
//! precomputed polynomial in `(y, J_3, J_5)`, with the purely stochastic
//! parameterization (the convolution terms alone) as the default and the
//! full polynomial parameterization behind a switch.

use std::sync::Arc;

use crate::error::{OpmError, Result};
use crate::forcing::MemoryState;
use crate::parameterization::{ModelKind, NoiseRealization, ParameterizationSpec, SpecTemplate};
use crate::solver::Trajectory;
use crate::spectral::EigenBasis;

/// Resolved amplitudes plus the memory states that carry the noise history.
#[derive(Debug, Clone)]
pub struct ReducedState {
    pub y: Vec<f64>,
    pub mems: Vec<MemoryState>,
    pub t: f64,
}

/// Escape sentinel: trajectories beyond this amplitude abort as blow-ups.
pub const BLOWUP_LIMIT: f64 = 1e3;

/// The Allen-Cahn OPM closure.
#[derive(Debug, Clone)]
pub struct SaceClosure {
    pub spec: ParameterizationSpec,
    pub template: SpecTemplate,
    pub basis: Arc<EigenBasis>,
    pub dt: f64,
    implicit_denom: Vec<f64>,
}

impl SaceClosure {
    pub fn new(
        spec: ParameterizationSpec,
        template: SpecTemplate,
        basis: Arc<EigenBasis>,
        dt: f64,
    ) -> Result<Self> {
        if spec.model != ModelKind::Sace {
            return Err(OpmError::invalid("spec is not an Allen-Cahn parameterization"));
        }
        if spec.n_total > basis.n_modes() {
            return Err(OpmError::invalid("closure needs basis samples for every mode"));
        }
        let implicit_denom = basis.eigenvalues[..spec.resolved]
            .iter()
            .map(|l| 1.0 - dt * l)
            .collect();
        Ok(SaceClosure {
            spec,
            template,
            basis,
            dt,
            implicit_denom,
        })
    }

    pub fn resolved(&self) -> usize {
        self.spec.resolved
    }

    /// Fresh state at `t0`; memory either pre-history-initialized by
    /// quadrature or zeroed.
    pub fn init_state(
        &self,
        y0: &[f64],
        t0: f64,
        noise: &NoiseRealization,
        zeroed_memory: bool,
    ) -> Result<ReducedState> {
        let mems = self
            .spec
            .modes
            .iter()
            .map(|par| self.template.init_memory(par, noise, t0, zeroed_memory))
            .collect::<Result<Vec<_>>>()?;
        Ok(ReducedState {
            y: y0.to_vec(),
            mems,
            t: t0,
        })
    }

    /// Current parameterization values, one per parameterized mode.
    pub fn phi_values(&self, state: &ReducedState, noise: &NoiseRealization) -> Vec<f64> {
        self.spec
            .modes
            .iter()
            .zip(&state.mems)
            .map(|(par, mem)| self.template.eval_phi(par, &state.y, state.t, mem, noise))
            .collect()
    }

    /// Nonlinear term of the closure: the cubic of the lifted field,
    /// evaluated pseudo-spectrally and projected on the resolved modes.
    pub fn nonlinear_rhs(&self, y: &[f64], phi: &[f64], scratch: &mut ClosureScratch) {
        let q = self.spec.resolved;
        scratch.coeffs[..q].copy_from_slice(y);
        for (par, value) in self.spec.modes.iter().zip(phi) {
            scratch.coeffs[par.mode] = *value;
        }
        self.basis
            .reconstruct_into(&scratch.coeffs, &mut scratch.grid);
        for g in scratch.grid.iter_mut() {
            *g = -*g * *g * *g;
        }
        self.basis.project_into(&scratch.grid, &mut scratch.rhs);
    }

    /// The same nonlinear term through the expanded tensor contraction
    /// (cubic in y, the mixed blocks, and the pure parameterization block).
    /// Kept as the independent route for the consistency identity.
    pub fn nonlinear_rhs_tensor(&self, y: &[f64], phi: &[f64]) -> Vec<f64> {
        let q = self.spec.resolved;
        let n_total = self.spec.n_total;
        let mut full = vec![0.0; n_total];
        full[..q].copy_from_slice(y);
        for (par, value) in self.spec.modes.iter().zip(phi) {
            full[par.mode] = *value;
        }
        (0..q)
            .map(|i| {
                let mut acc = 0.0;
                for a in 0..n_total {
                    for b in 0..n_total {
                        let fab = full[a] * full[b];
                        for c in 0..n_total {
                            acc += self.template.tensors.cubic(i, a, b, c) * fab * full[c];
                        }
                    }
                }
                acc
            })
            .collect()
    }

    /// One semi-implicit step: evaluate the parameterization, advance the
    /// resolved modes, then advance the memory equations.
    pub fn step(
        &self,
        state: &mut ReducedState,
        noise: &NoiseRealization,
        scratch: &mut ClosureScratch,
    ) -> Result<()> {
        let q = self.spec.resolved;
        let phi = self.phi_values(state, noise);
        self.nonlinear_rhs(&state.y, &phi, scratch);
        for i in 0..q {
            state.y[i] = (state.y[i] + self.dt * scratch.rhs[i]) / self.implicit_denom[i];
        }
        for mem in &mut state.mems {
            self.template.step_memory(mem, noise, self.dt);
        }
        state.t += self.dt;
        check_state(&state.y, state.t)
    }
}

/// Reusable buffers for the pseudo-spectral closure evaluation.
pub struct ClosureScratch {
    coeffs: Vec<f64>,
    grid: Vec<f64>,
    rhs: Vec<f64>,
}

impl ClosureScratch {
    pub fn new(closure: &SaceClosure) -> Self {
        ClosureScratch {
            coeffs: vec![0.0; closure.spec.n_total],
            grid: vec![0.0; closure.basis.grid.points],
            rhs: vec![0.0; closure.spec.resolved],
        }
    }

    /// Nonlinear right-hand side written by the last evaluation.
    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }
}

fn check_state(y: &[f64], t: f64) -> Result<()> {
    for v in y {
        if !v.is_finite() || v.abs() > BLOWUP_LIMIT {
            return Err(OpmError::NonFinite {
                step: 0,
                time: t,
                context: format!("reduced state escaped (|y| = {:.3e})", v.abs()),
            });
        }
    }
    Ok(())
}

/// Integrates the Allen-Cahn closure from `y0` at `t0`, snapshotting the
/// resolved amplitudes every `stride` steps. Returns the trajectory and the
/// final state (whose memory values feed the terminal lift).
pub fn run_reduced_sace(
    closure: &SaceClosure,
    noise: &NoiseRealization,
    y0: &[f64],
    t0: f64,
    t_end: f64,
    stride: usize,
    zeroed_memory: bool,
) -> Result<(Trajectory, ReducedState)> {
    let mut state = closure.init_state(y0, t0, noise, zeroed_memory)?;
    let mut scratch = ClosureScratch::new(closure);
    let stride = stride.max(1);
    let n_steps = ((t_end - t0) / closure.dt).round() as usize;
    let mut traj = Trajectory {
        t0,
        dt: closure.dt,
        stride,
        times: vec![t0],
        snapshots: vec![state.y.clone()],
    };
    for k in 0..n_steps {
        closure.step(&mut state, noise, &mut scratch).map_err(|e| match e {
            OpmError::NonFinite { time, context, .. } => OpmError::NonFinite {
                step: k + 1,
                time,
                context,
            },
            other => other,
        })?;
        if (k + 1) % stride == 0 {
            traj.times.push(state.t);
            traj.snapshots.push(state.y.clone());
        }
    }
    Ok((traj, state))
}

/// Which parameterization feeds the jump closure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpApproximation {
    /// Purely stochastic parameterization: `Phi_n = J_n` (the default).
    ConvolutionOnly,
    /// Full polynomial parameterization including the `D B X^2 + E C X^3`
    /// terms and the offset.
    Full,
}

/// The 1-D jump closure with precomputed interaction coefficients over the
/// directions `(e_1, e_3, e_5)`.
#[derive(Debug, Clone)]
pub struct JumpClosure {
    pub spec: ParameterizationSpec,
    pub template: SpecTemplate,
    pub dt: f64,
    pub approximation: JumpApproximation,
    /// Linear rate of the resolved mode.
    beta1: f64,
    /// `lambda * eps` scaling of the cubic term.
    lambda_eps: f64,
    /// Participating mode indices: `[0, parameterized...]`.
    dirs: Vec<usize>,
    /// `<a e_alpha e_beta, e_1>` over the participating directions.
    quad_form: Vec<f64>,
    /// `<e_alpha e_beta e_gamma, e_1>` over the participating directions.
    cubic_form: Vec<f64>,
}

impl JumpClosure {
    pub fn new(
        spec: ParameterizationSpec,
        template: SpecTemplate,
        dt: f64,
        approximation: JumpApproximation,
    ) -> Result<Self> {
        if spec.model != ModelKind::Jump {
            return Err(OpmError::invalid("spec is not a jump parameterization"));
        }
        if spec.resolved != 1 {
            return Err(OpmError::invalid("the jump closure reduces to one mode"));
        }
        let mut dirs = vec![0usize];
        dirs.extend(spec.modes.iter().map(|m| m.mode));
        let d = dirs.len();
        let mut quad_form = vec![0.0; d * d];
        let mut cubic_form = vec![0.0; d * d * d];
        for (ai, &a) in dirs.iter().enumerate() {
            for (bi, &b) in dirs.iter().enumerate() {
                quad_form[ai * d + bi] = template.tensors.quadratic(0, a, b);
                for (ci, &c) in dirs.iter().enumerate() {
                    // The stored cubic tensor is -<e e e, e_n>.
                    cubic_form[(ai * d + bi) * d + ci] = -template.tensors.cubic(0, a, b, c);
                }
            }
        }
        let beta1 = template.eigenvalues[0];
        let lambda_eps = template.lambda_eps.0 * template.lambda_eps.1;
        Ok(JumpClosure {
            spec,
            template,
            dt,
            approximation,
            beta1,
            lambda_eps,
            dirs,
            quad_form,
            cubic_form,
        })
    }

    /// Interaction coefficient `<a e_i e_j, e_1>` of the quadratic block.
    pub fn quad_coefficient(&self, i: usize, j: usize) -> f64 {
        let d = self.dirs.len();
        self.quad_form[i * d + j]
    }

    pub fn cubic_coefficient(&self, i: usize, j: usize, k: usize) -> f64 {
        let d = self.dirs.len();
        self.cubic_form[(i * d + j) * d + k]
    }

    /// Parameterization slots for the current state.
    pub fn phi_values(&self, state: &ReducedState) -> Vec<f64> {
        self.spec
            .modes
            .iter()
            .zip(&state.mems)
            .map(|(par, mem)| match self.approximation {
                JumpApproximation::ConvolutionOnly => mem.value,
                JumpApproximation::Full => par.eval_jump(state.y[0], state.t, mem),
            })
            .collect()
    }

    /// Right-hand side `beta_1 y + <a (y e_1 + P)^2, e_1> - lambda eps
    /// <(y e_1 + P)^3, e_1>` with `P` the parameterized field.
    pub fn rhs(&self, y: f64, phi: &[f64]) -> f64 {
        let d = self.dirs.len();
        let mut c = vec![0.0; d];
        c[0] = y;
        c[1..].copy_from_slice(phi);
        let mut quad = 0.0;
        let mut cubic = 0.0;
        for a in 0..d {
            for b in 0..d {
                let cab = c[a] * c[b];
                quad += self.quad_form[a * d + b] * cab;
                for k in 0..d {
                    cubic += self.cubic_form[(a * d + b) * d + k] * cab * c[k];
                }
            }
        }
        self.beta1 * y + quad - self.lambda_eps * cubic
    }

    pub fn init_state(
        &self,
        y0: f64,
        t0: f64,
        noise: &NoiseRealization,
        zeroed_memory: bool,
    ) -> Result<ReducedState> {
        let mems = self
            .spec
            .modes
            .iter()
            .map(|par| self.template.init_memory(par, noise, t0, zeroed_memory))
            .collect::<Result<Vec<_>>>()?;
        Ok(ReducedState {
            y: vec![y0],
            mems,
            t: t0,
        })
    }

    /// One forward-Euler step.
    pub fn step(&self, state: &mut ReducedState, noise: &NoiseRealization) -> Result<()> {
        let phi = self.phi_values(state);
        let dy = self.rhs(state.y[0], &phi);
        state.y[0] += self.dt * dy;
        for mem in &mut state.mems {
            self.template.step_memory(mem, noise, self.dt);
        }
        state.t += self.dt;
        check_state(&state.y, state.t)
    }
}

/// Integrates the jump closure from `y0` at `t0 = max(tau*)` (per the
/// training protocol, `y0` is the full solution's first-mode amplitude at
/// that time).
pub fn run_reduced_jump(
    closure: &JumpClosure,
    noise: &NoiseRealization,
    y0: f64,
    t0: f64,
    t_end: f64,
    stride: usize,
) -> Result<(Trajectory, ReducedState)> {
    let mut state = closure.init_state(y0, t0, noise, false)?;
    let stride = stride.max(1);
    let n_steps = ((t_end - t0) / closure.dt).round() as usize;
    let mut traj = Trajectory {
        t0,
        dt: closure.dt,
        stride,
        times: vec![t0],
        snapshots: vec![state.y.clone()],
    };
    for k in 0..n_steps {
        closure.step(&mut state, noise).map_err(|e| match e {
            OpmError::NonFinite { time, context, .. } => OpmError::NonFinite {
                step: k + 1,
                time,
                context,
            },
            other => other,
        })?;
        if (k + 1) % stride == 0 {
            traj.times.push(state.t);
            traj.snapshots.push(state.y.clone());
        }
    }
    Ok((traj, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::SaceStudy;
    use crate::rng::{CounterRng, Stream};
    use crate::solver::SaceConfig;

    fn quick_closure() -> (SaceStudy, SaceClosure) {
        let study = SaceStudy::build(SaceConfig::default()).unwrap();
        let spec = {
            let modes = (4..8)
                .map(|n| study.template.instantiate(n, 0.75 + 0.1 * n as f64, false))
                .collect();
            ParameterizationSpec {
                version: crate::parameterization::SPEC_FORMAT_VERSION,
                model: ModelKind::Sace,
                resolved: 4,
                n_total: 8,
                modes,
                training_seed: 0,
                training_window: (10.0, 40.0),
                tau_grid: (0.0, 0.05, 10.0),
            }
        };
        let closure = SaceClosure::new(
            spec,
            study.template.clone(),
            study.basis().clone(),
            study.cfg.dt,
        )
        .unwrap();
        (study, closure)
    }

    #[test]
    fn closure_carries_one_memory_equation_per_parameterized_mode() {
        let (study, closure) = quick_closure();
        let paths = study.sample_noise(3, 0, 1.0, 10.0).unwrap();
        let noise = NoiseRealization::Brownian(&paths);
        let state = closure.init_state(&[0.0; 4], 0.0, &noise, false).unwrap();
        assert_eq!(state.mems.len(), 4);
    }

    #[test]
    fn pseudo_spectral_and_tensor_routes_agree() {
        let (_study, closure) = quick_closure();
        let rng = CounterRng::new(5, Stream::Test, 0, 0);
        let mut scratch = ClosureScratch::new(&closure);
        for trial in 0..20u64 {
            let y: Vec<f64> = (0..4).map(|i| rng.uniform_symmetric(trial * 8 + i)).collect();
            let phi: Vec<f64> = (4..8)
                .map(|i| 0.3 * rng.uniform_symmetric(trial * 8 + i))
                .collect();
            closure.nonlinear_rhs(&y, &phi, &mut scratch);
            let tensor = closure.nonlinear_rhs_tensor(&y, &phi);
            for i in 0..4 {
                assert!(
                    (scratch.rhs[i] - tensor[i]).abs() < 1e-12,
                    "component {i}: {} vs {}",
                    scratch.rhs[i],
                    tensor[i]
                );
            }
        }
    }

    #[test]
    fn zero_phi_reduces_to_the_galerkin_truncation() {
        let (_study, closure) = quick_closure();
        let rng = CounterRng::new(9, Stream::Test, 0, 0);
        for trial in 0..10u64 {
            let y: Vec<f64> = (0..4).map(|i| rng.uniform_symmetric(trial * 4 + i)).collect();
            let tensor = closure.nonlinear_rhs_tensor(&y, &[0.0; 4]);
            for i in 0..4 {
                let mut direct = 0.0;
                for a in 0..4 {
                    for b in 0..4 {
                        for c in 0..4 {
                            direct +=
                                closure.template.tensors.cubic(i, a, b, c) * y[a] * y[b] * y[c];
                        }
                    }
                }
                assert!((tensor[i] - direct).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn closure_rhs_is_odd_under_joint_sign_flip() {
        // The cubic nonlinearity is odd: flipping y and the parameterization
        // history together flips the right-hand side.
        let (_study, closure) = quick_closure();
        let y = [0.4, -0.1, 0.2, 0.3];
        let phi = [0.05, -0.02, 0.01, 0.03];
        let mut scratch = ClosureScratch::new(&closure);
        closure.nonlinear_rhs(&y, &phi, &mut scratch);
        let plus = scratch.rhs.clone();
        let y_neg: Vec<f64> = y.iter().map(|v| -v).collect();
        let phi_neg: Vec<f64> = phi.iter().map(|v| -v).collect();
        closure.nonlinear_rhs(&y_neg, &phi_neg, &mut scratch);
        for i in 0..4 {
            assert!((plus[i] + scratch.rhs[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn deterministic_closure_converges_to_a_nonzero_fixed_point() {
        // Zero noise, small kick along e_1: the deterministic closure flows
        // to a nonzero equilibrium of the truncated gradient dynamics.
        let (study, closure) = quick_closure();
        let silent = crate::forcing::BrownianPaths::sample(0, 0, &[], &[], 1e-2, -15.0, 60.0)
            .unwrap();
        let noise = NoiseRealization::Brownian(&silent);
        let mut y0 = vec![0.0; 4];
        y0[0] = 1e-2;
        let (traj, state) = run_reduced_sace(&closure, &noise, &y0, 0.0, 60.0, 100, false).unwrap();
        assert!(state.y[0].abs() > 0.5, "y = {:?}", state.y);
        // With silent noise the parameterization reduces to its polynomial
        // part; the endpoint must be an equilibrium of that closed system.
        let rhs_at = |y: &[f64]| {
            let phi: Vec<f64> = closure
                .spec
                .modes
                .iter()
                .map(|par| par.markovian_part(y))
                .collect();
            let tensor = closure.nonlinear_rhs_tensor(y, &phi);
            (0..4)
                .map(|i| study.basis().eigenvalues[i] * y[i] + tensor[i])
                .collect::<Vec<f64>>()
        };
        let residual: f64 = rhs_at(&state.y).iter().map(|r| r.abs()).fold(0.0, f64::max);
        assert!(residual < 1e-5, "rhs residual {residual}");
        let _ = traj;
    }

    #[test]
    fn reduced_trajectory_honors_the_stride() {
        let (study, closure) = quick_closure();
        let paths = study.sample_noise(11, 0, 2.0, 10.0).unwrap();
        let noise = NoiseRealization::Brownian(&paths);
        let (traj, _) = run_reduced_sace(&closure, &noise, &[0.0; 4], 0.0, 2.0, 7, false).unwrap();
        for (k, t) in traj.times.iter().enumerate() {
            let expected = k as f64 * 7.0 * closure.dt;
            assert!((t - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn blowup_aborts_with_diagnostics() {
        let (study, closure) = quick_closure();
        let paths = study.sample_noise(1, 0, 1.0, 10.0).unwrap();
        let noise = NoiseRealization::Brownian(&paths);
        let err = run_reduced_sace(&closure, &noise, &[900.0, 0.0, 0.0, 0.0], 0.0, 1.0, 1, false)
            .unwrap_err();
        assert!(matches!(err, OpmError::NonFinite { .. }));
    }
}
