//! Full-model reference integrators.
//!
//! Both models use the semi-implicit Euler scheme: the linear (stiff) part is
//! treated implicitly per mode, the nonlinearity and the noise explicitly;
//! nonlinear terms are evaluated pseudo-spectrally (reconstruct on the grid,
//! apply pointwise, project back).

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{OpmError, Result};
use crate::forcing::{BrownianPaths, JumpSignal};
use crate::spectral::{build_sine_basis, EigenBasis};

/// Stochastic Allen-Cahn configuration. Defaults reproduce the bimodal
/// study regime: `L = 3.9 pi`, forcing `sigma = 0.2` on modes 5..=8, 201
/// grid points, `dt = 1e-2`.
#[derive(Debug, Clone)]
pub struct SaceConfig {
    pub domain_length: f64,
    /// Resolved mode count q.
    pub resolved: usize,
    /// Largest forced mode index N (1-based); forcing acts on q+1..=N.
    pub forced_max: usize,
    pub sigma: f64,
    /// Modes retained by the solver.
    pub n_modes: usize,
    pub grid_points: usize,
    pub dt: f64,
}

impl Default for SaceConfig {
    fn default() -> Self {
        SaceConfig {
            domain_length: 3.9 * std::f64::consts::PI,
            resolved: 4,
            forced_max: 8,
            sigma: 0.2,
            n_modes: 32,
            grid_points: 201,
            dt: 1e-2,
        }
    }
}

impl SaceConfig {
    /// Zero-based indices of the stochastically forced modes.
    pub fn forced_modes(&self) -> Vec<usize> {
        (self.resolved..self.forced_max).collect()
    }

    pub fn sigmas(&self) -> Vec<f64> {
        vec![self.sigma; self.forced_max - self.resolved]
    }
}

/// Jump-driven double-fold configuration (fluctuation variable around the
/// unstable steady state). Defaults are the bimodal-regime parameters:
/// `eps = eps*/2`, `f_r = 0.35`, `Delta t = 1`, `sigma = 300`,
/// `lambda = 1.32`, `L = 2`, 257 grid points.
#[derive(Debug, Clone)]
pub struct JumpConfig {
    pub domain_length: f64,
    pub lambda: f64,
    pub eps: f64,
    pub sigma: f64,
    pub firing_rate: f64,
    pub block_length: f64,
    pub n_modes: usize,
    pub grid_points: usize,
    pub cheb_points: usize,
    pub dt: f64,
}

impl Default for JumpConfig {
    fn default() -> Self {
        JumpConfig {
            domain_length: 2.0,
            lambda: 1.32,
            eps: crate::bifurcation::EPS_STAR / 2.0,
            sigma: 300.0,
            firing_rate: 0.35,
            block_length: 1.0,
            n_modes: 32,
            grid_points: 257,
            cheb_points: 96,
            dt: 1e-2,
        }
    }
}

impl JumpConfig {
    /// Zero-based indices of the jump-forced modes (third and fifth).
    pub fn forced_modes(&self) -> Vec<usize> {
        vec![2, 4]
    }
}

/// Time-stamped spectral snapshots at a constant stride.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t0: f64,
    pub dt: f64,
    pub stride: usize,
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Series of one mode's amplitude across the snapshots.
    pub fn mode_series(&self, mode: usize) -> Vec<f64> {
        self.snapshots.iter().map(|s| s[mode]).collect()
    }

    /// CSV export `(t, u1, u2, ...)`.
    pub fn to_csv(&self) -> String {
        let n_modes = self.snapshots.first().map_or(0, Vec::len);
        let mut s = String::from("t");
        for m in 0..n_modes {
            let _ = write!(s, ",u{}", m + 1);
        }
        s.push('\n');
        for (t, snap) in self.times.iter().zip(&self.snapshots) {
            let _ = write!(s, "{t}");
            for v in snap {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }

    /// CSV export of grid reconstructions `(t, x, u)`, one row per point.
    pub fn to_grid_csv(&self, basis: &EigenBasis) -> String {
        let mut s = String::from("t,x,u\n");
        let mut values = vec![0.0; basis.grid.points];
        for (t, snap) in self.times.iter().zip(&self.snapshots) {
            basis.reconstruct_into(snap, &mut values);
            for (i, v) in values.iter().enumerate() {
                let _ = writeln!(s, "{t},{},{v}", basis.grid.x(i));
            }
        }
        s
    }
}

fn check_finite(coeffs: &[f64], step: usize, time: f64, context: &str) -> Result<()> {
    if coeffs.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(OpmError::NonFinite {
            step,
            time,
            context: context.to_string(),
        })
    }
}

/// Semi-implicit pseudo-spectral integrator for the stochastic Allen-Cahn
/// equation `du = (u_xx + u - u^3) dt + dW` on the sine eigenbasis.
#[derive(Debug, Clone)]
pub struct SaceSolver {
    pub cfg: SaceConfig,
    pub basis: Arc<EigenBasis>,
    implicit_denom: Vec<f64>,
}

impl SaceSolver {
    pub fn new(cfg: SaceConfig) -> Result<Self> {
        if cfg.dt <= 0.0 {
            return Err(OpmError::invalid("dt must be positive"));
        }
        if cfg.forced_max > cfg.n_modes || cfg.resolved >= cfg.forced_max {
            return Err(OpmError::invalid("need q < N <= n_modes"));
        }
        let basis = Arc::new(build_sine_basis(
            cfg.domain_length,
            cfg.n_modes,
            cfg.grid_points,
        )?);
        let implicit_denom = basis
            .eigenvalues
            .iter()
            .map(|l| 1.0 - cfg.dt * l)
            .collect();
        Ok(SaceSolver {
            cfg,
            basis,
            implicit_denom,
        })
    }

    /// One semi-implicit step. `dw` holds per-mode Brownian increments over
    /// the step; under assumption (H) increments on resolved modes are
    /// rejected.
    pub fn step(&self, coeffs: &mut [f64], dw: &[f64]) -> Result<()> {
        if dw.iter().take(self.cfg.resolved).any(|d| *d != 0.0) {
            return Err(OpmError::invalid(
                "noise increment on a resolved mode violates assumption (H)",
            ));
        }
        let mut scratch = StepScratch::new(self.basis.grid.points, self.cfg.n_modes);
        self.step_with(coeffs, dw, &mut scratch);
        Ok(())
    }

    #[inline]
    fn step_with(&self, coeffs: &mut [f64], dw: &[f64], scratch: &mut StepScratch) {
        let dt = self.cfg.dt;
        self.basis.reconstruct_into(coeffs, &mut scratch.grid);
        for g in scratch.grid.iter_mut() {
            *g = -*g * *g * *g;
        }
        self.basis.project_into(&scratch.grid, &mut scratch.modal);
        for n in 0..coeffs.len() {
            coeffs[n] = (coeffs[n] + dt * scratch.modal[n] + dw[n]) / self.implicit_denom[n];
        }
    }

    /// Integrates from `u0` over `[0, t_end]`, consuming the supplied noise
    /// realization (increments scaled by the path's per-mode sigma).
    pub fn integrate(
        &self,
        u0: &[f64],
        paths: &BrownianPaths,
        t_end: f64,
        stride: usize,
    ) -> Result<Trajectory> {
        if self.cfg.resolved > 0 {
            if let Some(&m) = paths
                .forced_modes
                .iter()
                .find(|&&m| m < self.cfg.resolved)
            {
                return Err(OpmError::invalid(format!(
                    "noise on resolved mode {} violates assumption (H)",
                    m + 1
                )));
            }
        }
        let dt = self.cfg.dt;
        let n_steps = (t_end / dt).round() as usize;
        let stride = stride.max(1);
        let mut coeffs = vec![0.0; self.cfg.n_modes];
        let ncopy = u0.len().min(self.cfg.n_modes);
        coeffs[..ncopy].copy_from_slice(&u0[..ncopy]);
        let mut dw = vec![0.0; self.cfg.n_modes];
        let mut scratch = StepScratch::new(self.basis.grid.points, self.cfg.n_modes);
        let mut traj = Trajectory {
            t0: 0.0,
            dt,
            stride,
            times: Vec::with_capacity(n_steps / stride + 2),
            snapshots: Vec::with_capacity(n_steps / stride + 2),
        };
        traj.times.push(0.0);
        traj.snapshots.push(coeffs.clone());
        for k in 0..n_steps {
            let t = k as f64 * dt;
            for (&mode, &sig) in paths.forced_modes.iter().zip(&paths.sigma) {
                if mode < dw.len() {
                    dw[mode] = sig * paths.increment(mode, t);
                }
            }
            self.step_with(&mut coeffs, &dw, &mut scratch);
            check_finite(&coeffs, k + 1, t + dt, "sACE integration")?;
            if (k + 1) % stride == 0 {
                traj.times.push(t + dt);
                traj.snapshots.push(coeffs.clone());
            }
        }
        Ok(traj)
    }
}

struct StepScratch {
    grid: Vec<f64>,
    modal: Vec<f64>,
}

impl StepScratch {
    fn new(grid_points: usize, n_modes: usize) -> Self {
        StepScratch {
            grid: vec![0.0; grid_points],
            modal: vec![0.0; n_modes],
        }
    }
}

/// Allocation-free stepping handle for tight ensemble loops.
pub struct SaceStepper<'a> {
    solver: &'a SaceSolver,
    scratch: StepScratch,
}

impl<'a> SaceStepper<'a> {
    pub fn new(solver: &'a SaceSolver) -> Self {
        let scratch = StepScratch::new(solver.basis.grid.points, solver.cfg.n_modes);
        SaceStepper { solver, scratch }
    }

    pub fn step(&mut self, coeffs: &mut [f64], dw: &[f64]) {
        self.solver.step_with(coeffs, dw, &mut self.scratch);
    }
}

/// Allocation-free stepping handle for tight ensemble loops.
pub struct JumpStepper<'a> {
    solver: &'a JumpSolver,
    scratch: StepScratch,
}

impl<'a> JumpStepper<'a> {
    pub fn new(solver: &'a JumpSolver) -> Self {
        let scratch = StepScratch::new(solver.basis.grid.points, solver.cfg.n_modes);
        JumpStepper { solver, scratch }
    }

    pub fn step(&mut self, coeffs: &mut [f64], zeta_f: f64) {
        self.solver.step_with(coeffs, zeta_f, &mut self.scratch);
    }
}

/// Semi-implicit pseudo-spectral integrator for the jump-driven fluctuation
/// equation `v_t = v_xx + a0(x) v + a(x) v^2 - lambda eps v^3 + lambda eta`
/// expressed in the linearized eigenbasis `(beta_n, e_n)`.
#[derive(Debug, Clone)]
pub struct JumpSolver {
    pub cfg: JumpConfig,
    pub basis: Arc<EigenBasis>,
    /// Quadratic weight `a(x) = lambda (1 - 3 eps U*(x))` on the grid.
    pub quad_weight: Vec<f64>,
    implicit_denom: Vec<f64>,
}

impl JumpSolver {
    /// Builds the solver from the linearized basis and the unstable steady
    /// state's grid samples.
    pub fn new(cfg: JumpConfig, basis: Arc<EigenBasis>, u_star_grid: &[f64]) -> Result<Self> {
        if basis.grid.points != cfg.grid_points || u_star_grid.len() != cfg.grid_points {
            return Err(OpmError::invalid("grid mismatch between basis and U*"));
        }
        if cfg.n_modes > basis.n_modes() {
            return Err(OpmError::invalid("solver retains more modes than the basis"));
        }
        let quad_weight = u_star_grid
            .iter()
            .map(|us| cfg.lambda * (1.0 - 3.0 * cfg.eps * us))
            .collect();
        let implicit_denom = basis.eigenvalues[..cfg.n_modes]
            .iter()
            .map(|b| 1.0 - cfg.dt * b)
            .collect();
        Ok(JumpSolver {
            cfg,
            basis,
            quad_weight,
            implicit_denom,
        })
    }

    /// One semi-implicit step, with `zeta_f` the current value of the scalar
    /// jump process `zeta_t f(t)`.
    pub fn step(&self, coeffs: &mut [f64], zeta_f: f64) {
        let mut scratch = StepScratch::new(self.basis.grid.points, self.cfg.n_modes);
        self.step_with(coeffs, zeta_f, &mut scratch);
    }

    #[inline]
    fn step_with(&self, coeffs: &mut [f64], zeta_f: f64, scratch: &mut StepScratch) {
        let dt = self.cfg.dt;
        let le = self.cfg.lambda * self.cfg.eps;
        self.basis.reconstruct_into(coeffs, &mut scratch.grid);
        for (g, a) in scratch.grid.iter_mut().zip(&self.quad_weight) {
            let v = *g;
            *g = v * v * (a - le * v);
        }
        self.basis.project_into(&scratch.grid, &mut scratch.modal);
        // <lambda eta, e_n> = lambda sigma zeta f on the forced modes.
        let drive = self.cfg.lambda * self.cfg.sigma * zeta_f;
        for &m in &self.cfg.forced_modes() {
            scratch.modal[m] += drive;
        }
        for n in 0..coeffs.len() {
            coeffs[n] = (coeffs[n] + dt * scratch.modal[n]) / self.implicit_denom[n];
        }
    }

    /// Integrates the fluctuation variable from `v0` over `[0, t_end]`.
    pub fn integrate(
        &self,
        v0: &[f64],
        signal: &JumpSignal,
        t_end: f64,
        stride: usize,
    ) -> Result<Trajectory> {
        let dt = self.cfg.dt;
        let n_steps = (t_end / dt).round() as usize;
        let stride = stride.max(1);
        let mut coeffs = vec![0.0; self.cfg.n_modes];
        let ncopy = v0.len().min(self.cfg.n_modes);
        coeffs[..ncopy].copy_from_slice(&v0[..ncopy]);
        let mut scratch = StepScratch::new(self.basis.grid.points, self.cfg.n_modes);
        let mut traj = Trajectory {
            t0: 0.0,
            dt,
            stride,
            times: Vec::with_capacity(n_steps / stride + 2),
            snapshots: Vec::with_capacity(n_steps / stride + 2),
        };
        traj.times.push(0.0);
        traj.snapshots.push(coeffs.clone());
        for k in 0..n_steps {
            let t = k as f64 * dt;
            self.step_with(&mut coeffs, signal.zeta_f(t), &mut scratch);
            check_finite(&coeffs, k + 1, t + dt, "jump-model integration")?;
            if (k + 1) % stride == 0 {
                traj.times.push(t + dt);
                traj.snapshots.push(coeffs.clone());
            }
        }
        Ok(traj)
    }
}
