//! End-to-end study setups: everything the training, reduction and ensemble
//! stages share for each of the two case studies.

use std::sync::Arc;

use crate::bifurcation::{three_states_at, FoldProblem, SteadyState};
use crate::chebyshev;
use crate::defect::{compute_defect_curve, optimize_tau, DefectCurve, TauGrid};
use crate::error::Result;
use crate::forcing::{BrownianPaths, JumpSignal};
use crate::grid::Grid;
use crate::parameterization::{NoiseRealization, ParameterizationSpec, SpecTemplate};
use crate::solver::{JumpConfig, JumpSolver, SaceConfig, SaceSolver};
use crate::spectral::{build_linearized_basis, interaction_tensors, EigenBasis, InteractionTensors};

/// Pre-history margin over the largest backward time, so tau sweeps never
/// exhaust the sampled path.
pub const PRE_HISTORY_FACTOR: f64 = 1.25;

/// Stochastic Allen-Cahn study: solver, tensors over the parameterized
/// range, and the parameterization template.
#[derive(Debug, Clone)]
pub struct SaceStudy {
    pub cfg: SaceConfig,
    pub solver: SaceSolver,
    pub tensors: InteractionTensors,
    pub template: SpecTemplate,
}

impl SaceStudy {
    pub fn build(cfg: SaceConfig) -> Result<Self> {
        let solver = SaceSolver::new(cfg.clone())?;
        let tensors = interaction_tensors(&solver.basis, None, cfg.forced_max)?;
        let template = SpecTemplate::sace(
            &solver.basis.eigenvalues,
            &tensors,
            cfg.resolved,
            cfg.forced_max,
            &cfg.forced_modes(),
            cfg.sigma,
        );
        Ok(SaceStudy {
            cfg,
            solver,
            tensors,
            template,
        })
    }

    pub fn basis(&self) -> &Arc<EigenBasis> {
        &self.solver.basis
    }

    /// Seeded noise covering `[-PRE_HISTORY_FACTOR * tau_max, t_max]`.
    pub fn sample_noise(&self, seed: u64, path_id: u64, t_max: f64, tau_max: f64) -> Result<BrownianPaths> {
        BrownianPaths::sample(
            seed,
            path_id,
            &self.cfg.forced_modes(),
            &self.cfg.sigmas(),
            self.cfg.dt,
            -PRE_HISTORY_FACTOR * tau_max,
            t_max,
        )
    }

    /// Single-path training: full-model run from `u = 0`, defect sweep for
    /// every parameterized mode over `window`, optimal tau per mode.
    pub fn train(
        &self,
        seed: u64,
        window: (f64, f64),
        tau_grid: &TauGrid,
    ) -> Result<(ParameterizationSpec, Vec<DefectCurve>)> {
        let paths = self.sample_noise(seed, 0, window.1, tau_grid.end)?;
        let traj = self
            .solver
            .integrate(&vec![0.0; self.cfg.n_modes], &paths, window.1, 1)?;
        let noise = NoiseRealization::Brownian(&paths);
        let curves: Vec<DefectCurve> = self
            .template
            .parameterized
            .clone()
            .iter()
            .map(|&mode| {
                compute_defect_curve(&traj, &noise, &self.template, mode, tau_grid, window)
            })
            .collect::<Result<_>>()?;
        let spec = optimize_tau(&curves, &self.template, seed, window, tau_grid)?;
        Ok((spec, curves))
    }
}

/// Jump study: steady states of the double-fold problem, the linearized
/// eigenbasis around the unstable state, the weighted tensors, the
/// fluctuation solver and the parameterization template.
#[derive(Debug, Clone)]
pub struct JumpStudy {
    pub cfg: JumpConfig,
    pub solver: JumpSolver,
    /// Minimal stable, unstable, maximal stable steady states at `lambda`.
    pub states: [SteadyState; 3],
    /// Unstable steady state on the uniform grid.
    pub u_star_grid: Vec<f64>,
    pub tensors: InteractionTensors,
    pub template: SpecTemplate,
    /// First-mode offsets of the stable states relative to `U*`:
    /// `(<U^m - U*, e_1>, <U^M - U*, e_1>)`.
    pub well_centers: (f64, f64),
}

impl JumpStudy {
    /// Number of sine modes used for the steady-state Galerkin systems.
    pub const GALERKIN_MODES: usize = 6;
    /// Modes covered by the interaction tensors (enough for e_1, e_3, e_5).
    pub const TENSOR_MODES: usize = 5;

    pub fn build(cfg: JumpConfig, continuation_seed: u64) -> Result<Self> {
        let fold = FoldProblem::new(
            cfg.domain_length,
            Self::GALERKIN_MODES,
            cfg.grid_points,
            cfg.eps,
        )?;
        let states = three_states_at(&fold, cfg.lambda, continuation_seed)?;
        let u_star_grid = fold.basis.reconstruct(&states[1].coeffs);

        // U* sampled on the Lobatto nodes (x = 0 first) for the eigenproblem.
        let lobatto = chebyshev::lobatto_points(cfg.cheb_points - 1);
        let sine_amp = (2.0 / cfg.domain_length).sqrt();
        let u_star_cheb: Vec<f64> = lobatto
            .iter()
            .map(|&xi| {
                let x = cfg.domain_length * (1.0 - xi) / 2.0;
                states[1]
                    .coeffs
                    .iter()
                    .enumerate()
                    .map(|(n, a)| {
                        a * sine_amp
                            * ((n + 1) as f64 * std::f64::consts::PI * x / cfg.domain_length).sin()
                    })
                    .sum()
            })
            .collect();

        let grid = Grid::new(cfg.domain_length, cfg.grid_points);
        let basis = Arc::new(build_linearized_basis(
            &u_star_cheb,
            cfg.lambda,
            cfg.eps,
            cfg.cheb_points,
            &grid,
            cfg.n_modes,
        )?);

        let weight: Vec<f64> = u_star_grid
            .iter()
            .map(|us| cfg.lambda * (1.0 - 3.0 * cfg.eps * us))
            .collect();
        let tensors = interaction_tensors(&basis, Some(&weight), Self::TENSOR_MODES)?;
        let template = SpecTemplate::jump(
            &basis.eigenvalues,
            &tensors,
            Self::TENSOR_MODES,
            cfg.lambda,
            cfg.eps,
            cfg.sigma,
            &cfg.forced_modes(),
        );

        let diff_m: Vec<f64> = fold
            .basis
            .reconstruct(&states[0].coeffs)
            .iter()
            .zip(&u_star_grid)
            .map(|(a, b)| a - b)
            .collect();
        let diff_max: Vec<f64> = fold
            .basis
            .reconstruct(&states[2].coeffs)
            .iter()
            .zip(&u_star_grid)
            .map(|(a, b)| a - b)
            .collect();
        let well_centers = (
            basis.project(&diff_m, 1)[0],
            basis.project(&diff_max, 1)[0],
        );

        let solver = JumpSolver::new(cfg.clone(), basis, &u_star_grid)?;
        Ok(JumpStudy {
            cfg,
            solver,
            states,
            u_star_grid,
            tensors,
            template,
            well_centers,
        })
    }

    pub fn basis(&self) -> &Arc<EigenBasis> {
        &self.solver.basis
    }

    pub fn sample_noise(&self, seed: u64, path_id: u64, t_max: f64, tau_max: f64) -> Result<JumpSignal> {
        JumpSignal::sample(
            seed,
            path_id,
            self.cfg.firing_rate,
            self.cfg.block_length,
            self.cfg.dt,
            -PRE_HISTORY_FACTOR * tau_max,
            t_max,
            false,
        )
    }

    /// Fluctuation initial datum `v0 = 0.5 e_1`.
    pub fn default_initial(&self) -> Vec<f64> {
        let mut v0 = vec![0.0; self.cfg.n_modes];
        v0[0] = 0.5;
        v0
    }

    /// Single-path training over `window` (the full interval `(0, T)` with
    /// `T = 400` by default).
    pub fn train(
        &self,
        seed: u64,
        window: (f64, f64),
        tau_grid: &TauGrid,
    ) -> Result<(ParameterizationSpec, Vec<DefectCurve>)> {
        let signal = self.sample_noise(seed, 0, window.1, tau_grid.end)?;
        let traj = self
            .solver
            .integrate(&self.default_initial(), &signal, window.1, 1)?;
        let noise = NoiseRealization::Jump(&signal);
        let curves: Vec<DefectCurve> = self
            .template
            .parameterized
            .clone()
            .iter()
            .map(|&mode| {
                compute_defect_curve(&traj, &noise, &self.template, mode, tau_grid, window)
            })
            .collect::<Result<_>>()?;
        let spec = optimize_tau(&curves, &self.template, seed, window, tau_grid)?;
        Ok((spec, curves))
    }
}
