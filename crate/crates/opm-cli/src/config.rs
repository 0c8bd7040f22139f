//! Experiment configuration: a single human-readable document whose defaults
//! equal the reference parameter tables of the two case studies. Physical
//! quantities carry their unit in the key name (`dt_time`, `sigma_amp`, ...).

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use opm::defect::TauGrid;
use opm::solver::{JumpConfig, SaceConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Sace,
    Jump,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaceSection {
    pub domain_length_space: f64,
    pub resolved_count: usize,
    pub forced_max_count: usize,
    pub sigma_amp: f64,
    pub solver_modes_count: usize,
    pub grid_points_count: usize,
    pub dt_time: f64,
    pub train_seed: u64,
    pub train_t_start_time: f64,
    pub train_t_end_time: f64,
    pub tau_start_time: f64,
    pub tau_step_time: f64,
    pub tau_end_time: f64,
    pub ensemble_paths_count: u64,
    pub ensemble_t_end_time: f64,
    pub rare_threshold_amp: f64,
    /// Start the reduced-model memory terms from zero instead of the
    /// pre-history quadrature.
    pub zeroed_memory_start: bool,
}

impl Default for SaceSection {
    fn default() -> Self {
        SaceSection {
            domain_length_space: 3.9 * std::f64::consts::PI,
            resolved_count: 4,
            forced_max_count: 8,
            sigma_amp: 0.2,
            solver_modes_count: 32,
            grid_points_count: 201,
            dt_time: 1e-2,
            train_seed: 8,
            train_t_start_time: 10.0,
            train_t_end_time: 40.0,
            tau_start_time: 0.0,
            tau_step_time: 0.05,
            tau_end_time: 10.0,
            ensemble_paths_count: 10_000,
            ensemble_t_end_time: 40.0,
            rare_threshold_amp: 0.5,
            zeroed_memory_start: false,
        }
    }
}

impl SaceSection {
    pub fn solver_config(&self) -> SaceConfig {
        SaceConfig {
            domain_length: self.domain_length_space,
            resolved: self.resolved_count,
            forced_max: self.forced_max_count,
            sigma: self.sigma_amp,
            n_modes: self.solver_modes_count,
            grid_points: self.grid_points_count,
            dt: self.dt_time,
        }
    }

    pub fn tau_grid(&self) -> TauGrid {
        TauGrid {
            start: self.tau_start_time,
            step: self.tau_step_time,
            end: self.tau_end_time,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JumpSection {
    pub domain_length_space: f64,
    pub lambda_bif: f64,
    /// The S-shape threshold constant; the study runs at half this value.
    pub eps_star: f64,
    pub sigma_amp: f64,
    pub firing_rate_prob: f64,
    pub block_length_time: f64,
    pub solver_modes_count: usize,
    pub grid_points_count: usize,
    pub cheb_points_count: usize,
    pub dt_time: f64,
    pub continuation_seed: u64,
    pub train_seed: u64,
    pub train_t_end_time: f64,
    pub tau_start_time: f64,
    pub tau_step_time: f64,
    pub tau_end_time: f64,
    pub ensemble_paths_count: u64,
    pub ensemble_t_end_time: f64,
    /// Use the full polynomial parameterization instead of the purely
    /// stochastic convolution terms.
    pub full_parameterization: bool,
}

impl Default for JumpSection {
    fn default() -> Self {
        JumpSection {
            domain_length_space: 2.0,
            lambda_bif: 1.32,
            eps_star: opm::bifurcation::EPS_STAR,
            sigma_amp: 300.0,
            firing_rate_prob: 0.35,
            block_length_time: 1.0,
            solver_modes_count: 32,
            grid_points_count: 257,
            cheb_points_count: 96,
            dt_time: 1e-2,
            continuation_seed: 11,
            train_seed: 8,
            train_t_end_time: 400.0,
            tau_start_time: 0.0,
            tau_step_time: 0.01,
            tau_end_time: 2.0,
            ensemble_paths_count: 1_000,
            ensemble_t_end_time: 2_000.0,
            full_parameterization: false,
        }
    }
}

impl JumpSection {
    pub fn solver_config(&self) -> JumpConfig {
        JumpConfig {
            domain_length: self.domain_length_space,
            lambda: self.lambda_bif,
            eps: self.eps_star / 2.0,
            sigma: self.sigma_amp,
            firing_rate: self.firing_rate_prob,
            block_length: self.block_length_time,
            n_modes: self.solver_modes_count,
            grid_points: self.grid_points_count,
            cheb_points: self.cheb_points_count,
            dt: self.dt_time,
        }
    }

    pub fn tau_grid(&self) -> TauGrid {
        TauGrid {
            start: self.tau_start_time,
            step: self.tau_step_time,
            end: self.tau_end_time,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelChoice,
    pub base_seed: u64,
    /// Worker threads; 0 uses the available parallelism.
    pub workers_count: usize,
    pub sace: SaceSection,
    pub jump: JumpSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: ModelChoice::Sace,
            base_seed: 2_024,
            workers_count: 0,
            sace: SaceSection::default(),
            jump: JumpSection::default(),
        }
    }
}

impl ExperimentConfig {
    /// Loads TOML (or an emitted JSON manifest, recognized by extension or
    /// a leading `{`).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: ExperimentConfig = if path.extension().is_some_and(|e| e == "json")
            || text.trim_start().starts_with('{')
        {
            let manifest: super::manifest::RunManifest = serde_json::from_str(&text)
                .with_context(|| format!("invalid manifest JSON in {}", path.display()))?;
            manifest.config
        } else {
            toml::from_str(&text)
                .with_context(|| format!("invalid config in {}", path.display()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.sace;
        if s.dt_time <= 0.0 {
            bail!("sace.dt_time: must be positive");
        }
        if s.resolved_count >= s.forced_max_count {
            bail!("sace.resolved_count: must be below sace.forced_max_count");
        }
        if s.forced_max_count > s.solver_modes_count {
            bail!("sace.forced_max_count: exceeds sace.solver_modes_count");
        }
        if s.tau_step_time <= 0.0 || s.tau_end_time < s.tau_start_time {
            bail!("sace.tau_*_time: degenerate tau grid");
        }
        if s.train_t_start_time >= s.train_t_end_time {
            bail!("sace.train_t_start_time: window is empty");
        }
        let j = &self.jump;
        if j.dt_time <= 0.0 {
            bail!("jump.dt_time: must be positive");
        }
        if !(0.0..=1.0).contains(&j.firing_rate_prob) {
            bail!("jump.firing_rate_prob: must lie in [0, 1]");
        }
        if (j.block_length_time / j.dt_time).fract().abs() > 1e-9 {
            bail!("jump.block_length_time: must be an integer multiple of jump.dt_time");
        }
        if j.cheb_points_count < 32 {
            bail!("jump.cheb_points_count: must be at least 32");
        }
        Ok(())
    }
}
