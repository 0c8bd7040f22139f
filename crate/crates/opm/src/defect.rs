//! Parameterization defects along a training trajectory and the grid search
//! for the optimal backward times.
//!
//! For each candidate tau the memory equation is re-initialized by quadrature
//! at the window start, propagated alongside the stored trajectory, and the
//! squared residual `|u_n(t) - Phi_n(tau, u_c(t), t)|^2` is averaged over the
//! window. The normalized defect divides by the mode's mean energy, so
//! `Phi = 0` scores exactly 1.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{OpmError, Result};
use crate::parameterization::{
    NoiseRealization, ParameterizationSpec, SpecTemplate, SPEC_FORMAT_VERSION,
};
use crate::solver::Trajectory;

/// Uniform tau search grid.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TauGrid {
    pub start: f64,
    pub step: f64,
    pub end: f64,
}

impl Default for TauGrid {
    fn default() -> Self {
        TauGrid {
            start: 0.0,
            step: 0.05,
            end: 10.0,
        }
    }
}

impl TauGrid {
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.end - self.start) / self.step).round() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

/// Defect samples of one mode over the tau grid.
#[derive(Debug, Clone)]
pub struct DefectCurve {
    pub mode: usize,
    pub taus: Vec<f64>,
    /// Raw defects.
    pub raw: Vec<f64>,
    /// Defects normalized by the mode's mean energy.
    pub normalized: Vec<f64>,
    pub normalization: f64,
    pub tau_star: f64,
    /// Set when the minimum sits at the top of the grid (monotone curve).
    pub asymptotic: bool,
}

impl DefectCurve {
    /// CSV export `(tau, raw, normalized)`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("tau,defect,normalized\n");
        for i in 0..self.taus.len() {
            let _ = writeln!(s, "{},{},{}", self.taus[i], self.raw[i], self.normalized[i]);
        }
        s
    }
}

/// Time-mean squared residual between a mode series and a parameterization
/// series, with its normalization by the mode's mean energy. This is the
/// scoring rule shared by the real sweep and the oracle substitutions.
pub fn defect_of_series(mode_series: &[f64], phi_series: &[f64]) -> (f64, f64) {
    assert_eq!(mode_series.len(), phi_series.len());
    assert!(!mode_series.is_empty());
    let n = mode_series.len() as f64;
    let raw: f64 = mode_series
        .iter()
        .zip(phi_series)
        .map(|(u, p)| (u - p) * (u - p))
        .sum::<f64>()
        / n;
    let energy: f64 = mode_series.iter().map(|u| u * u).sum::<f64>() / n;
    (raw, if energy > 0.0 { raw / energy } else { f64::NAN })
}

/// Sweeps the defect of one mode over the tau grid along a stored training
/// trajectory and its noise realization.
pub fn compute_defect_curve(
    traj: &Trajectory,
    noise: &NoiseRealization,
    template: &SpecTemplate,
    mode: usize,
    tau_grid: &TauGrid,
    window: (f64, f64),
) -> Result<DefectCurve> {
    let (t_start, t_end) = window;
    let sample_dt = traj.dt * traj.stride as f64;
    let last_time = *traj.times.last().ok_or_else(|| OpmError::invalid("empty trajectory"))?;
    if t_end > last_time + 1e-9 || t_start < traj.t0 - 1e-9 || t_start >= t_end {
        return Err(OpmError::invalid(format!(
            "window ({t_start}, {t_end}) exceeds trajectory [{}, {last_time}]",
            traj.t0
        )));
    }
    let i_start = ((t_start - traj.t0) / sample_dt).round() as usize;
    let i_end = ((t_end - traj.t0) / sample_dt).round() as usize;
    if ((t_start - traj.t0) / sample_dt - i_start as f64).abs() > 1e-6 {
        return Err(OpmError::invalid(
            "window start must align with the snapshot grid",
        ));
    }

    let energy: f64 = traj.snapshots[i_start..=i_end]
        .iter()
        .map(|s| s[mode] * s[mode])
        .sum::<f64>()
        / (i_end - i_start + 1) as f64;

    let taus = tau_grid.values();
    let raw: Vec<f64> = taus
        .par_iter()
        .map(|&tau| -> Result<f64> {
            let par = template.instantiate(mode, tau, false);
            let mut mem = template.init_memory(&par, noise, t_start, false)?;
            let mut acc = 0.0;
            for idx in i_start..=i_end {
                let t = traj.times[idx];
                let snap = &traj.snapshots[idx];
                let phi = template.eval_phi(&par, &snap[..template.resolved], t, &mem, noise);
                let r = snap[mode] - phi;
                acc += r * r;
                if idx < i_end {
                    template.step_memory(&mut mem, noise, sample_dt);
                }
            }
            Ok(acc / (i_end - i_start + 1) as f64)
        })
        .collect::<Result<Vec<f64>>>()?;

    let normalized: Vec<f64> = raw.iter().map(|q| q / energy).collect();
    // Argmin with ties broken toward the smallest tau.
    let mut best = 0;
    for (i, q) in raw.iter().enumerate() {
        if *q < raw[best] {
            best = i;
        }
    }
    Ok(DefectCurve {
        mode,
        taus: taus.clone(),
        tau_star: taus[best],
        asymptotic: best == taus.len() - 1,
        raw,
        normalized,
        normalization: energy,
    })
}

/// Selects the optimal backward times from per-mode curves and assembles the
/// trained spec. Monotone curves land on the largest grid value and are
/// flagged asymptotic.
pub fn optimize_tau(
    curves: &[DefectCurve],
    template: &SpecTemplate,
    training_seed: u64,
    training_window: (f64, f64),
    tau_grid: &TauGrid,
) -> Result<ParameterizationSpec> {
    if curves.is_empty() || curves.iter().any(|c| c.taus.is_empty()) {
        return Err(OpmError::invalid("empty defect curves"));
    }
    let modes = curves
        .iter()
        .map(|c| template.instantiate(c.mode, c.tau_star, c.asymptotic))
        .collect();
    Ok(ParameterizationSpec {
        version: SPEC_FORMAT_VERSION,
        model: template.model,
        resolved: template.resolved,
        n_total: template.n_total,
        modes,
        training_seed,
        training_window,
        tau_grid: (tau_grid.start, tau_grid.step, tau_grid.end),
    })
}

/// Synthetic-curve constructor for the optimizer tests.
#[cfg(test)]
fn synthetic_curve(mode: usize, taus: Vec<f64>, raw: Vec<f64>) -> DefectCurve {
    let mut best = 0;
    for (i, q) in raw.iter().enumerate() {
        if *q < raw[best] {
            best = i;
        }
    }
    DefectCurve {
        mode,
        tau_star: taus[best],
        asymptotic: best == taus.len() - 1,
        normalized: raw.clone(),
        normalization: 1.0,
        raw,
        taus,
    }
}
