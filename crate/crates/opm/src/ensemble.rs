//! Large-ensemble execution of paired full/reduced runs and the comparison
//! statistics: min+max metric histograms, class-conditioned profiles,
//! autocorrelation functions, pooled amplitude PDFs and their L1 distance.
//!
//! Paths are embarrassingly parallel with per-path derived seeds; results
//! are collected in path order and reduced sequentially, so output is
//! independent of the worker count.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{OpmError, Result};
use crate::parameterization::{lift, NoiseRealization, ParameterizationSpec};
use crate::pipeline::{JumpStudy, SaceStudy};
use crate::reduced::{
    run_reduced_jump, run_reduced_sace, JumpApproximation, JumpClosure, SaceClosure,
};
use crate::rng::derive_path_seed;

/// Histogram over uniform bins, with a density normalization.
#[derive(Debug, Clone)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub density: Vec<f64>,
    pub n_samples: usize,
}

impl Histogram {
    pub fn from_samples(samples: &[f64], bins: usize, range: Option<(f64, f64)>) -> Result<Self> {
        if samples.is_empty() || bins == 0 {
            return Err(OpmError::invalid("histogram needs samples and bins"));
        }
        let (lo, hi) = match range {
            Some(r) => r,
            None => {
                let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
        };
        if !(hi > lo) {
            return Err(OpmError::invalid("degenerate sample range"));
        }
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
        let mut counts = vec![0u64; bins];
        let mut kept = 0usize;
        for &s in samples {
            if s < lo || s > hi {
                continue;
            }
            let mut b = ((s - lo) / width) as usize;
            if b == bins {
                b -= 1;
            }
            counts[b] += 1;
            kept += 1;
        }
        let density: Vec<f64> = counts
            .iter()
            .map(|&c| c as f64 / (kept as f64 * width))
            .collect();
        Ok(Histogram {
            edges,
            counts,
            density,
            n_samples: kept,
        })
    }

    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }

    /// Integral of the density (1 up to roundoff).
    pub fn total_mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin_width()
    }

    /// L1 distance between two densities on identical binning, in `[0, 2]`.
    pub fn l1_distance(&self, other: &Histogram) -> Result<f64> {
        if self.edges.len() != other.edges.len()
            || self
                .edges
                .iter()
                .zip(&other.edges)
                .any(|(a, b)| (a - b).abs() > 1e-12)
        {
            return Err(OpmError::invalid("histograms use different binning"));
        }
        Ok(self
            .density
            .iter()
            .zip(&other.density)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.bin_width())
    }

    /// Location of the highest density bin with center inside `[lo, hi]`.
    pub fn peak_in(&self, lo: f64, hi: f64) -> Option<(f64, f64)> {
        self.centers()
            .iter()
            .zip(&self.density)
            .filter(|(c, _)| **c >= lo && **c <= hi)
            .map(|(c, d)| (*c, *d))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
    }

    /// Peak abscissa in `[lo, hi]` with sub-bin accuracy: the argmax bin
    /// refined by a parabola through its neighbors.
    pub fn refined_peak_in(&self, lo: f64, hi: f64) -> Option<(f64, f64)> {
        let centers = self.centers();
        let (idx, _) = centers
            .iter()
            .enumerate()
            .filter(|(_, c)| **c >= lo && **c <= hi)
            .max_by(|a, b| self.density[a.0].partial_cmp(&self.density[b.0]).unwrap())?;
        let peak = self.density[idx];
        if idx == 0 || idx + 1 == self.density.len() {
            return Some((centers[idx], peak));
        }
        let (dl, dc, dr) = (self.density[idx - 1], peak, self.density[idx + 1]);
        let denom = dl - 2.0 * dc + dr;
        let offset = if denom.abs() > 1e-300 {
            (0.5 * (dl - dr) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        Some((centers[idx] + offset * self.bin_width(), peak))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("left,right,count,density\n");
        for i in 0..self.counts.len() {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                self.edges[i],
                self.edges[i + 1],
                self.counts[i],
                self.density[i]
            );
        }
        s
    }
}

/// Freedman-Diaconis bin count for a sample set.
pub fn freedman_diaconis_bins(samples: &[f64]) -> usize {
    let n = samples.len();
    if n < 4 {
        return 1;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| -> f64 {
        let idx = p * (n - 1) as f64;
        let lo = idx.floor() as usize;
        let frac = idx - lo as f64;
        if lo + 1 < n {
            sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
        } else {
            sorted[lo]
        }
    };
    let iqr = q(0.75) - q(0.25);
    let span = sorted[n - 1] - sorted[0];
    if iqr <= 0.0 || span <= 0.0 {
        return 1;
    }
    let width = 2.0 * iqr / (n as f64).cbrt();
    ((span / width).ceil() as usize).clamp(1, 10_000)
}

/// `min_x u(x) + max_x u(x)` over a grid profile: the terminal-state
/// classifier separating sign-change states (near 0) from constant-sign
/// states (near the state's own min+max).
pub fn minmax_metric(profile: &[f64]) -> f64 {
    let min = profile.iter().copied().fold(f64::INFINITY, f64::min);
    let max = profile.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    min + max
}

/// Unbiased-normalized autocorrelation of one series up to `max_lag`.
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if n <= max_lag {
        return Err(OpmError::invalid(format!(
            "series of length {n} is too short for lag {max_lag}"
        )));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let var = series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    if var == 0.0 {
        return Err(OpmError::invalid("constant series has no autocorrelation"));
    }
    Ok((0..=max_lag)
        .map(|lag| {
            let cov = (0..n - lag)
                .map(|i| (series[i] - mean) * (series[i + lag] - mean))
                .sum::<f64>()
                / (n - lag) as f64;
            cov / var
        })
        .collect())
}

/// Ensemble mean and standard deviation of per-path ACFs.
#[derive(Debug, Clone)]
pub struct AcfSet {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub fn ensemble_acf(per_path: &[Vec<f64>]) -> Result<AcfSet> {
    let n = per_path.len();
    if n == 0 {
        return Err(OpmError::invalid("no ACF samples"));
    }
    let lags = per_path[0].len();
    let mut mean = vec![0.0; lags];
    let mut m2 = vec![0.0; lags];
    for a in per_path {
        for (i, v) in a.iter().enumerate() {
            mean[i] += v;
            m2[i] += v * v;
        }
    }
    for i in 0..lags {
        mean[i] /= n as f64;
        m2[i] = (m2[i] / n as f64 - mean[i] * mean[i]).max(0.0).sqrt();
    }
    Ok(AcfSet { mean, std: m2 })
}

/// Wilson score interval for a binomial proportion at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Pointwise mean and standard deviation over a set of grid profiles.
pub fn profile_mean_std(profiles: &[&[f64]]) -> Result<(Vec<f64>, Vec<f64>)> {
    if profiles.is_empty() {
        return Err(OpmError::invalid("empty profile class"));
    }
    let len = profiles[0].len();
    let n = profiles.len() as f64;
    let mut mean = vec![0.0; len];
    let mut m2 = vec![0.0; len];
    for p in profiles {
        for i in 0..len {
            mean[i] += p[i];
            m2[i] += p[i] * p[i];
        }
    }
    for i in 0..len {
        mean[i] /= n;
        m2[i] = (m2[i] / n - mean[i] * mean[i]).max(0.0).sqrt();
    }
    Ok((mean, m2))
}

/// Terminal-state classification by the min+max metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionClass {
    Typical,
    RarePlus,
    RareMinus,
}

pub fn classify_metric(metric: f64, threshold: f64) -> TransitionClass {
    if metric > threshold {
        TransitionClass::RarePlus
    } else if metric < -threshold {
        TransitionClass::RareMinus
    } else {
        TransitionClass::Typical
    }
}

#[derive(Debug, Clone)]
pub struct SaceEnsembleOptions {
    pub n_paths: u64,
    pub base_seed: u64,
    pub t_end: f64,
    /// |metric| above this is a rare (constant-sign) outcome.
    pub rare_threshold: f64,
    /// Snapshot stride for the ACF series.
    pub acf_stride: usize,
    pub acf_max_lag: usize,
    /// Modes whose full-model ACFs are collected (zero-based).
    pub acf_modes: Vec<usize>,
    pub zeroed_memory: bool,
}

impl Default for SaceEnsembleOptions {
    fn default() -> Self {
        SaceEnsembleOptions {
            n_paths: 10_000,
            base_seed: 2_024,
            t_end: 40.0,
            rare_threshold: 0.5,
            acf_stride: 5,
            acf_max_lag: 60,
            acf_modes: vec![3, 4, 5, 6, 7],
            zeroed_memory: false,
        }
    }
}

/// Per-path paired outcome of the Allen-Cahn ensemble.
#[derive(Debug, Clone)]
pub struct SacePathOutcome {
    pub path_index: u64,
    pub seed: u64,
    pub full_terminal: Vec<f64>,
    pub reduced_terminal: Vec<f64>,
    pub full_metric: f64,
    pub reduced_metric: f64,
    /// Full-model ACFs for the requested modes, in option order.
    pub acfs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct SaceEnsemble {
    pub options: SaceEnsembleOptions,
    pub outcomes: Vec<SacePathOutcome>,
    /// Aborted paths with their failure messages; never silently dropped.
    pub failures: Vec<(u64, String)>,
    pub elapsed_seconds: f64,
}

impl SaceEnsemble {
    pub fn full_metrics(&self) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.full_metric).collect()
    }

    pub fn reduced_metrics(&self) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.reduced_metric).collect()
    }

    /// Rare fraction of one metric set at the configured threshold.
    pub fn rare_fraction(metrics: &[f64], threshold: f64) -> f64 {
        let rare = metrics.iter().filter(|m| m.abs() > threshold).count();
        rare as f64 / metrics.len() as f64
    }

    /// Class-conditioned terminal profiles of one model side.
    pub fn class_profiles(
        &self,
        class: TransitionClass,
        reduced: bool,
    ) -> Vec<&[f64]> {
        self.outcomes
            .iter()
            .filter(|o| {
                let m = if reduced { o.reduced_metric } else { o.full_metric };
                classify_metric(m, self.options.rare_threshold) == class
            })
            .map(|o| {
                if reduced {
                    o.reduced_terminal.as_slice()
                } else {
                    o.full_terminal.as_slice()
                }
            })
            .collect()
    }

    /// Ensemble ACF per requested mode.
    pub fn acf_sets(&self) -> Result<Vec<(usize, AcfSet)>> {
        self.options
            .acf_modes
            .iter()
            .enumerate()
            .map(|(slot, &mode)| {
                let per_path: Vec<Vec<f64>> = self
                    .outcomes
                    .iter()
                    .map(|o| o.acfs[slot].clone())
                    .collect();
                Ok((mode, ensemble_acf(&per_path)?))
            })
            .collect()
    }
}

/// Runs paired full/reduced Allen-Cahn ensembles on identical noise
/// realizations.
pub fn run_sace_ensemble(
    study: &SaceStudy,
    spec: &ParameterizationSpec,
    options: SaceEnsembleOptions,
) -> Result<SaceEnsemble> {
    let start = Instant::now();
    let closure = SaceClosure::new(
        spec.clone(),
        study.template.clone(),
        study.basis().clone(),
        study.cfg.dt,
    )?;
    let tau_max = spec.max_tau();
    let n_steps = (options.t_end / study.cfg.dt).round() as usize;
    let results: Vec<std::result::Result<SacePathOutcome, (u64, String)>> = (0..options.n_paths)
        .into_par_iter()
        .map(|p| {
            let seed = derive_path_seed(options.base_seed, p);
            let run = || -> Result<SacePathOutcome> {
                let paths = study.sample_noise(seed, 0, options.t_end, tau_max)?;
                let full = study.solver.integrate(
                    &vec![0.0; study.cfg.n_modes],
                    &paths,
                    options.t_end,
                    options.acf_stride,
                )?;
                let full_last = full.snapshots.last().unwrap();
                let full_terminal = study.basis().reconstruct(full_last);
                let acfs = options
                    .acf_modes
                    .iter()
                    .map(|&m| acf(&full.mode_series(m), options.acf_max_lag))
                    .collect::<Result<Vec<_>>>()?;

                let noise = NoiseRealization::Brownian(&paths);
                let (_, state) = run_reduced_sace(
                    &closure,
                    &noise,
                    &vec![0.0; study.cfg.resolved],
                    0.0,
                    options.t_end,
                    n_steps,
                    options.zeroed_memory,
                )?;
                let lifted = lift(
                    spec,
                    &study.template,
                    &state.y,
                    state.t,
                    &state.mems,
                    &noise,
                );
                let reduced_terminal = study.basis().reconstruct(&lifted);
                Ok(SacePathOutcome {
                    path_index: p,
                    seed,
                    full_metric: minmax_metric(&full_terminal),
                    reduced_metric: minmax_metric(&reduced_terminal),
                    full_terminal,
                    reduced_terminal,
                    acfs,
                })
            };
            run().map_err(|e| (p, e.to_string()))
        })
        .collect();

    let mut outcomes = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(o) => outcomes.push(o),
            Err(f) => failures.push(f),
        }
    }
    if outcomes.is_empty() {
        return Err(OpmError::invalid("every ensemble path failed"));
    }
    Ok(SaceEnsemble {
        options,
        outcomes,
        failures,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone)]
pub struct JumpEnsembleOptions {
    pub n_paths: u64,
    pub base_seed: u64,
    pub t_end: f64,
    /// Pooling stride (in steps) for the amplitude samples fed to the PDFs.
    pub pool_stride: usize,
    pub approximation: JumpApproximation,
}

impl Default for JumpEnsembleOptions {
    fn default() -> Self {
        JumpEnsembleOptions {
            n_paths: 1_000,
            base_seed: 7_071,
            t_end: 2_000.0,
            pool_stride: 50,
            approximation: JumpApproximation::ConvolutionOnly,
        }
    }
}

#[derive(Debug, Clone)]
pub struct JumpPathOutcome {
    pub path_index: u64,
    pub seed: u64,
    /// Pooled first-mode amplitude samples (t >= t0), full model.
    pub full_samples: Vec<f64>,
    /// Pooled first-mode amplitude samples (t >= t0), reduced model.
    pub reduced_samples: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct JumpEnsemble {
    pub options: JumpEnsembleOptions,
    pub t0: f64,
    pub outcomes: Vec<JumpPathOutcome>,
    pub failures: Vec<(u64, String)>,
    pub elapsed_seconds: f64,
}

impl JumpEnsemble {
    pub fn pooled_full(&self) -> Vec<f64> {
        self.outcomes
            .iter()
            .flat_map(|o| o.full_samples.iter().copied())
            .collect()
    }

    pub fn pooled_reduced(&self) -> Vec<f64> {
        self.outcomes
            .iter()
            .flat_map(|o| o.reduced_samples.iter().copied())
            .collect()
    }
}

/// Runs paired full/reduced jump ensembles on identical signals. The
/// reduced run starts at `t0 = max(tau*)` from the full solution's
/// first-mode amplitude at that time; pooled samples from both sides start
/// at `t0`.
pub fn run_jump_ensemble(
    study: &JumpStudy,
    spec: &ParameterizationSpec,
    options: JumpEnsembleOptions,
) -> Result<JumpEnsemble> {
    let start = Instant::now();
    let closure = JumpClosure::new(
        spec.clone(),
        study.template.clone(),
        study.cfg.dt,
        options.approximation,
    )?;
    let tau_max = spec.max_tau();
    let t0 = tau_max;
    let dt = study.cfg.dt;
    let t0_steps = (t0 / dt).round() as usize;
    let n_steps = (options.t_end / dt).round() as usize;
    let pool = options.pool_stride.max(1);

    let results: Vec<std::result::Result<JumpPathOutcome, (u64, String)>> = (0..options.n_paths)
        .into_par_iter()
        .map(|p| {
            let seed = derive_path_seed(options.base_seed, p);
            let run = || -> Result<JumpPathOutcome> {
                let signal = study.sample_noise(seed, 0, options.t_end, tau_max)?;
                let mut stepper = crate::solver::JumpStepper::new(&study.solver);
                let mut v = study.default_initial();
                let mut full_samples = Vec::with_capacity((n_steps - t0_steps) / pool + 1);
                let mut y0 = f64::NAN;
                for k in 0..n_steps {
                    if k == t0_steps {
                        y0 = v[0];
                    }
                    if k >= t0_steps && (k - t0_steps) % pool == 0 {
                        if !v[0].is_finite() {
                            return Err(OpmError::NonFinite {
                                step: k,
                                time: k as f64 * dt,
                                context: "jump-model ensemble path".into(),
                            });
                        }
                        full_samples.push(v[0]);
                    }
                    stepper.step(&mut v, signal.zeta_f(k as f64 * dt));
                }
                if !y0.is_finite() {
                    return Err(OpmError::invalid("t0 beyond the integration window"));
                }

                let noise = NoiseRealization::Jump(&signal);
                let (traj, _) =
                    run_reduced_jump(&closure, &noise, y0, t0, options.t_end, pool)?;
                Ok(JumpPathOutcome {
                    path_index: p,
                    seed,
                    full_samples,
                    reduced_samples: traj.snapshots.iter().map(|s| s[0]).collect(),
                })
            };
            run().map_err(|e| (p, e.to_string()))
        })
        .collect();

    let mut outcomes = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(o) => outcomes.push(o),
            Err(f) => failures.push(f),
        }
    }
    if outcomes.is_empty() {
        return Err(OpmError::invalid("every ensemble path failed"));
    }
    Ok(JumpEnsemble {
        options,
        t0,
        outcomes,
        failures,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

/// L1 density distance at a fixed bin width, averaged over sub-bin shifts
/// of the bin origin. A single origin aliases sharply peaked densities
/// (the value can move by ~10% with the phase of the edges); averaging
/// over offsets estimates the width-`width` distance without that
/// arbitrariness.
pub fn dealiased_l1_distance(
    a: &[f64],
    b: &[f64],
    width: f64,
    lo: f64,
    hi: f64,
    offsets: usize,
) -> Result<f64> {
    if width <= 0.0 || offsets == 0 || hi <= lo {
        return Err(OpmError::invalid("degenerate de-aliasing parameters"));
    }
    let mut total = 0.0;
    for k in 0..offsets {
        let shift = width * k as f64 / offsets as f64;
        let start = lo + shift;
        let bins = ((hi - lo) / width).round() as usize;
        let end = start + bins as f64 * width;
        let ha = Histogram::from_samples(a, bins, Some((start, end)))?;
        let hb = Histogram::from_samples(b, bins, Some((start, end)))?;
        total += ha.l1_distance(&hb)?;
    }
    Ok(total / offsets as f64)
}

/// Common-binning PDFs of two sample sets plus their L1 distance.
pub fn pdf_and_distance(
    a: &[f64],
    b: &[f64],
    bins: usize,
) -> Result<(Histogram, Histogram, f64)> {
    let lo = a
        .iter()
        .chain(b)
        .copied()
        .fold(f64::INFINITY, f64::min);
    let hi = a
        .iter()
        .chain(b)
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let ha = Histogram::from_samples(a, bins, Some((lo, hi)))?;
    let hb = Histogram::from_samples(b, bins, Some((lo, hi)))?;
    let d = ha.l1_distance(&hb)?;
    Ok((ha, hb, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{CounterRng, Stream};

    #[test]
    fn histogram_density_integrates_to_one() {
        let rng = CounterRng::new(3, Stream::Test, 0, 0);
        let samples: Vec<f64> = (0..5000).map(|i| rng.normal(i)).collect();
        let bins = freedman_diaconis_bins(&samples);
        let h = Histogram::from_samples(&samples, bins, None).unwrap();
        assert!((h.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn histogram_rejects_degenerate_samples() {
        assert!(Histogram::from_samples(&[1.0, 1.0, 1.0], 10, None).is_err());
        assert!(Histogram::from_samples(&[], 10, None).is_err());
    }

    #[test]
    fn l1_distance_extremes() {
        let a: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        let (ha, hb, d) = pdf_and_distance(&a, &a, 20).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(ha.counts, hb.counts);
        // Disjoint supports approach distance 2.
        let b: Vec<f64> = (0..1000).map(|i| 10.0 + i as f64 / 1000.0).collect();
        let (_, _, d2) = pdf_and_distance(&a, &b, 40).unwrap();
        assert!((d2 - 2.0).abs() < 1e-9, "distance {d2}");
    }

    #[test]
    fn minmax_metric_of_antisymmetric_profile_vanishes() {
        let n = 101;
        let profile: Vec<f64> = (0..n)
            .map(|i| {
                let x = i as f64 / (n - 1) as f64;
                (2.0 * std::f64::consts::PI * x).sin()
            })
            .collect();
        assert!(minmax_metric(&profile).abs() < 1e-12);
    }

    #[test]
    fn acf_starts_at_one_and_white_noise_decorrelates() {
        let rng = CounterRng::new(17, Stream::Test, 0, 0);
        let series: Vec<f64> = (0..20_000).map(|i| rng.normal(i)).collect();
        let a = acf(&series, 20).unwrap();
        assert_eq!(a[0], 1.0);
        let band = 3.0 / (series.len() as f64).sqrt();
        for (lag, v) in a.iter().enumerate().skip(1) {
            assert!(v.abs() < band, "lag {lag}: {v} outside {band}");
        }
        assert!(acf(&series[..10], 20).is_err());
        assert!(acf(&vec![1.0; 100], 10).is_err());
    }

    #[test]
    fn profile_stats_trivial_cases() {
        let a = vec![1.0, 2.0, 3.0];
        let profiles: Vec<&[f64]> = vec![&a, &a, &a];
        let (mean, std) = profile_mean_std(&profiles).unwrap();
        assert_eq!(mean, a);
        assert!(std.iter().all(|s| *s == 0.0));
        let b: Vec<f64> = a.iter().map(|v| -v).collect();
        let sym: Vec<&[f64]> = vec![&a, &b];
        let (mean2, _) = profile_mean_std(&sym).unwrap();
        assert!(mean2.iter().all(|m| m.abs() < 1e-15));
        let empty: Vec<&[f64]> = Vec::new();
        assert!(profile_mean_std(&empty).is_err());
    }

    #[test]
    fn wilson_interval_behaves() {
        let (lo, hi) = wilson_interval(0, 100, 2.576);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.1);
        let (lo2, hi2) = wilson_interval(50, 100, 2.576);
        assert!(lo2 < 0.5 && hi2 > 0.5);
    }

    #[test]
    fn classification_thresholds() {
        assert_eq!(classify_metric(0.2, 0.5), TransitionClass::Typical);
        assert_eq!(classify_metric(0.9, 0.5), TransitionClass::RarePlus);
        assert_eq!(classify_metric(-0.7, 0.5), TransitionClass::RareMinus);
    }
}
