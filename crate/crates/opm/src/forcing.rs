//! Seeded driving noise and the auxiliary memory equations.
//!
//! Brownian paths are sampled per forced mode on a uniform time grid with a
//! pre-history segment (t < 0), so backward-time quadratures never run out of
//! path. The dichotomous jump signal is piecewise constant on blocks of
//! length `block_length`. Both are pure functions of `(seed, path, mode,
//! index)` through the counter-based generator, hence bit-reproducible and
//! independent per mode by construction.
//!
//! The running noise-history integrals (`I` for Brownian forcing, `J` for the
//! jump signal) are carried by `MemoryState` values and advanced by forward
//! Euler; their initial values come from trapezoid quadrature over the
//! pre-history.

use std::fmt::Write as _;

use crate::error::{OpmError, Result};
use crate::rng::{zigzag, CounterRng, Stream};

/// Per-mode Brownian sample paths `W^j(t_k)` with `W^j(0) = 0`, covering
/// `[t_min, t_max]` at spacing `dt`.
#[derive(Debug, Clone)]
pub struct BrownianPaths {
    pub seed: u64,
    pub path_id: u64,
    pub dt: f64,
    /// Zero-based indices of the forced modes.
    pub forced_modes: Vec<usize>,
    /// Forcing amplitude per forced mode (same order as `forced_modes`).
    pub sigma: Vec<f64>,
    n_pre: usize,
    samples: Vec<Vec<f64>>,
}

impl BrownianPaths {
    /// Samples seeded Brownian paths for the given forced modes.
    ///
    /// `t_min <= 0` is required: the memory quadratures need pre-history.
    pub fn sample(
        seed: u64,
        path_id: u64,
        forced_modes: &[usize],
        sigma: &[f64],
        dt: f64,
        t_min: f64,
        t_max: f64,
    ) -> Result<Self> {
        if dt <= 0.0 {
            return Err(OpmError::invalid("dt must be positive"));
        }
        if t_min > 0.0 {
            return Err(OpmError::invalid(
                "t_min must not exceed 0: pre-history is required",
            ));
        }
        if t_max < 0.0 {
            return Err(OpmError::invalid("t_max must be nonnegative"));
        }
        if forced_modes.len() != sigma.len() {
            return Err(OpmError::invalid("forced_modes and sigma length mismatch"));
        }
        let n_pre = (-t_min / dt).ceil() as usize;
        let n_fwd = (t_max / dt).ceil() as usize;
        let sqrt_dt = dt.sqrt();
        let mut samples = Vec::with_capacity(forced_modes.len());
        for &mode in forced_modes {
            let fwd = CounterRng::new(seed, Stream::BrownianForward, path_id, mode as u64);
            let bwd = CounterRng::new(seed, Stream::BrownianBackward, path_id, mode as u64);
            let mut w = vec![0.0; n_pre + n_fwd + 1];
            for k in 0..n_fwd {
                w[n_pre + k + 1] = w[n_pre + k] + sqrt_dt * fwd.normal(k as u64);
            }
            for k in 0..n_pre {
                w[n_pre - k - 1] = w[n_pre - k] + sqrt_dt * bwd.normal(k as u64);
            }
            samples.push(w);
        }
        Ok(BrownianPaths {
            seed,
            path_id,
            dt,
            forced_modes: forced_modes.to_vec(),
            sigma: sigma.to_vec(),
            n_pre,
            samples,
        })
    }

    pub fn t_min(&self) -> f64 {
        -(self.n_pre as f64) * self.dt
    }

    pub fn n_samples(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn t_max(&self) -> f64 {
        (self.n_samples() as f64 - 1.0 - self.n_pre as f64) * self.dt
    }

    #[inline]
    fn slot(&self, mode: usize) -> Option<usize> {
        self.forced_modes.iter().position(|&m| m == mode)
    }

    /// Sample index of an aligned time `t`; panics when `t` is off-grid.
    #[inline]
    pub fn index_of(&self, t: f64) -> usize {
        let raw = t / self.dt + self.n_pre as f64;
        let idx = raw.round();
        assert!(
            (raw - idx).abs() < 1e-6,
            "time {t} is not aligned to the dt = {} sample grid",
            self.dt
        );
        assert!(
            idx >= 0.0 && (idx as usize) < self.n_samples(),
            "time {t} outside the sampled interval [{}, {}]",
            self.t_min(),
            self.t_max()
        );
        idx as usize
    }

    /// `W^mode(t)`; zero for modes that carry no forcing.
    #[inline]
    pub fn value(&self, mode: usize, t: f64) -> f64 {
        match self.slot(mode) {
            Some(s) => self.samples[s][self.index_of(t)],
            None => 0.0,
        }
    }

    /// Increment `W(t + dt) - W(t)`.
    #[inline]
    pub fn increment(&self, mode: usize, t: f64) -> f64 {
        match self.slot(mode) {
            Some(s) => {
                let i = self.index_of(t);
                self.samples[s][i + 1] - self.samples[s][i]
            }
            None => 0.0,
        }
    }

    pub fn sigma_of(&self, mode: usize) -> f64 {
        self.slot(mode).map_or(0.0, |s| self.sigma[s])
    }

    /// CSV export `(t, W^m1, W^m2, ...)`; floats round-trip exactly.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        for m in &self.forced_modes {
            let _ = write!(s, ",w{}", m + 1);
        }
        s.push('\n');
        for k in 0..self.n_samples() {
            let t = (k as f64 - self.n_pre as f64) * self.dt;
            let _ = write!(s, "{t}");
            for col in &self.samples {
                let _ = write!(s, ",{}", col[k]);
            }
            s.push('\n');
        }
        s
    }

    /// Rebuilds paths from the CSV emitted by [`Self::to_csv`]. Metadata that
    /// is not part of the table (seed, sigma) must be supplied again.
    pub fn from_csv(text: &str, seed: u64, path_id: u64, sigma: &[f64]) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| OpmError::invalid("empty noise CSV"))?;
        let forced_modes: Vec<usize> = header
            .split(',')
            .skip(1)
            .map(|c| {
                c.trim_start_matches('w')
                    .parse::<usize>()
                    .map(|m| m - 1)
                    .map_err(|e| OpmError::invalid(format!("bad noise CSV header: {e}")))
            })
            .collect::<Result<_>>()?;
        if forced_modes.len() != sigma.len() {
            return Err(OpmError::invalid("sigma length mismatch on import"));
        }
        let mut times = Vec::new();
        let mut samples = vec![Vec::new(); forced_modes.len()];
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut cells = line.split(',');
            let t: f64 = cells
                .next()
                .unwrap()
                .parse()
                .map_err(|e| OpmError::invalid(format!("bad noise CSV row: {e}")))?;
            times.push(t);
            for col in samples.iter_mut() {
                let v: f64 = cells
                    .next()
                    .ok_or_else(|| OpmError::invalid("short noise CSV row"))?
                    .parse()
                    .map_err(|e| OpmError::invalid(format!("bad noise CSV row: {e}")))?;
                col.push(v);
            }
        }
        if times.len() < 2 {
            return Err(OpmError::invalid("noise CSV needs at least two samples"));
        }
        let dt = times[1] - times[0];
        let n_pre = (-times[0] / dt).round() as usize;
        Ok(BrownianPaths {
            seed,
            path_id,
            dt,
            forced_modes,
            sigma: sigma.to_vec(),
            n_pre,
            samples,
        })
    }
}

/// Dichotomous jump signal: `f(t) in {0,1}` fires per block with probability
/// `firing_rate`; `zeta(t) in (-1,1)` is an independent per-block amplitude.
#[derive(Debug, Clone)]
pub struct JumpSignal {
    pub seed: u64,
    pub path_id: u64,
    pub dt: f64,
    pub block_length: f64,
    pub firing_rate: f64,
    /// Resample `zeta` every step instead of every block (sensitivity mode).
    pub per_step_zeta: bool,
    n_pre: usize,
    f: Vec<f64>,
    zeta: Vec<f64>,
}

impl JumpSignal {
    pub fn sample(
        seed: u64,
        path_id: u64,
        firing_rate: f64,
        block_length: f64,
        dt: f64,
        t_min: f64,
        t_max: f64,
        per_step_zeta: bool,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&firing_rate) {
            return Err(OpmError::invalid("firing rate must lie in [0, 1]"));
        }
        if dt <= 0.0 || block_length <= 0.0 {
            return Err(OpmError::invalid("dt and block length must be positive"));
        }
        let steps_per_block_f = block_length / dt;
        let steps_per_block = steps_per_block_f.round() as i64;
        if (steps_per_block_f - steps_per_block as f64).abs() > 1e-9 || steps_per_block == 0 {
            return Err(OpmError::invalid(
                "block length must be an integer multiple of dt",
            ));
        }
        if t_min > 0.0 {
            return Err(OpmError::invalid("t_min must not exceed 0"));
        }
        let n_pre = (-t_min / dt).ceil() as usize;
        let n_fwd = (t_max / dt).ceil() as usize;
        let n = n_pre + n_fwd + 1;
        let firing = CounterRng::new(seed, Stream::JumpFiring, path_id, 0);
        let amplitude = CounterRng::new(seed, Stream::JumpAmplitude, path_id, 0);
        let mut f = vec![0.0; n];
        let mut zeta = vec![0.0; n];
        for k in 0..n {
            let step = k as i64 - n_pre as i64;
            let block = step.div_euclid(steps_per_block);
            let xi = firing.uniform(zigzag(block));
            f[k] = if xi <= firing_rate { 1.0 } else { 0.0 };
            zeta[k] = if per_step_zeta {
                amplitude.uniform_symmetric(zigzag(step))
            } else {
                amplitude.uniform_symmetric(zigzag(block))
            };
        }
        Ok(JumpSignal {
            seed,
            path_id,
            dt,
            block_length,
            firing_rate,
            per_step_zeta,
            n_pre,
            f,
            zeta,
        })
    }

    pub fn t_min(&self) -> f64 {
        -(self.n_pre as f64) * self.dt
    }

    pub fn t_max(&self) -> f64 {
        (self.f.len() as f64 - 1.0 - self.n_pre as f64) * self.dt
    }

    #[inline]
    pub fn index_of(&self, t: f64) -> usize {
        let raw = t / self.dt + self.n_pre as f64;
        let idx = raw.round();
        assert!(
            (raw - idx).abs() < 1e-6,
            "time {t} is not aligned to the dt = {} sample grid",
            self.dt
        );
        assert!(
            idx >= 0.0 && (idx as usize) < self.f.len(),
            "time {t} outside the sampled interval [{}, {}]",
            self.t_min(),
            self.t_max()
        );
        idx as usize
    }

    #[inline]
    pub fn firing(&self, t: f64) -> f64 {
        self.f[self.index_of(t)]
    }

    #[inline]
    pub fn amplitude(&self, t: f64) -> f64 {
        self.zeta[self.index_of(t)]
    }

    /// The product `zeta_t f(t)` that multiplies the forcing pattern.
    #[inline]
    pub fn zeta_f(&self, t: f64) -> f64 {
        let i = self.index_of(t);
        self.zeta[i] * self.f[i]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,f,zeta\n");
        for k in 0..self.f.len() {
            let t = (k as f64 - self.n_pre as f64) * self.dt;
            let _ = writeln!(s, "{t},{},{}", self.f[k], self.zeta[k]);
        }
        s
    }

    /// Rebuilds a signal from the CSV emitted by [`Self::to_csv`]; block
    /// metadata (rate, block length, seed) must be supplied again.
    pub fn from_csv(
        text: &str,
        seed: u64,
        path_id: u64,
        firing_rate: f64,
        block_length: f64,
    ) -> Result<Self> {
        let mut times = Vec::new();
        let mut f = Vec::new();
        let mut zeta = Vec::new();
        for line in text.lines().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let mut cells = line.split(',');
            let parse = |c: Option<&str>| -> Result<f64> {
                c.ok_or_else(|| OpmError::invalid("short signal CSV row"))?
                    .parse()
                    .map_err(|e| OpmError::invalid(format!("bad signal CSV row: {e}")))
            };
            times.push(parse(cells.next())?);
            f.push(parse(cells.next())?);
            zeta.push(parse(cells.next())?);
        }
        if times.len() < 2 {
            return Err(OpmError::invalid("signal CSV needs at least two samples"));
        }
        let dt = times[1] - times[0];
        let n_pre = (-times[0] / dt).round() as usize;
        Ok(JumpSignal {
            seed,
            path_id,
            dt,
            block_length,
            firing_rate,
            per_step_zeta: false,
            n_pre,
            f,
            zeta,
        })
    }
}

/// Running value of one auxiliary memory equation (`I` for a Brownian mode,
/// `J` for the jump signal), attached to a single parameterized mode.
/// Construction rejects nonnegative decay rates: the memory integrals are
/// only well-behaved for stable modes.
#[derive(Debug, Clone, Copy)]
pub struct MemoryState {
    pub mode: usize,
    pub value: f64,
    pub rate: f64,
    pub tau: f64,
    pub time: f64,
}

impl MemoryState {
    pub fn new(mode: usize, rate: f64, tau: f64, time: f64, value: f64) -> Result<Self> {
        if rate >= 0.0 {
            return Err(OpmError::invalid(format!(
                "memory equation needs a negative decay rate, got {rate}"
            )));
        }
        if tau < 0.0 {
            return Err(OpmError::invalid("backward time must be nonnegative"));
        }
        Ok(MemoryState {
            mode,
            value,
            rate,
            tau,
            time,
        })
    }

    /// Forward-Euler step of `dI/dt = rate I + W_t - e^{rate tau} W_{t-tau}`.
    #[inline]
    pub fn step_gaussian(&mut self, paths: &BrownianPaths, dt: f64) {
        let w_now = paths.value(self.mode, self.time);
        let w_then = paths.value(self.mode, self.time - self.tau);
        let forcing = w_now - (self.rate * self.tau).exp() * w_then;
        self.value += dt * (self.rate * self.value + forcing);
        self.time += dt;
    }

    /// Forward-Euler step of
    /// `dJ/dt = rate J + amp (zeta_t f(t) - e^{rate tau} zeta_{t-tau} f(t-tau))`
    /// with `amp = sigma * lambda`.
    #[inline]
    pub fn step_jump(&mut self, signal: &JumpSignal, sigma_amp: f64, lambda_bif: f64, dt: f64) {
        let now = signal.zeta_f(self.time);
        let then = signal.zeta_f(self.time - self.tau);
        let forcing = sigma_amp * lambda_bif * (now - (self.rate * self.tau).exp() * then);
        self.value += dt * (self.rate * self.value + forcing);
        self.time += dt;
    }
}

/// Trapezoid quadrature of the Brownian history integral
/// `I = \int_{t-tau}^{t} e^{kappa (t-s)} W_s ds`.
///
/// Used to initialize the memory equations (the defining integral at the
/// start time) and, in tests, as the independent oracle for the propagated
/// values.
pub fn gaussian_memory_quadrature(
    paths: &BrownianPaths,
    mode: usize,
    kappa: f64,
    tau: f64,
    t: f64,
) -> Result<f64> {
    if tau < 0.0 {
        return Err(OpmError::invalid("tau must be nonnegative"));
    }
    if t - tau < paths.t_min() - 1e-9 {
        return Err(OpmError::InsufficientCoverage(format!(
            "memory init needs samples down to {}, path starts at {}",
            t - tau,
            paths.t_min()
        )));
    }
    let steps = (tau / paths.dt).round() as usize;
    let dt = paths.dt;
    let values: Vec<f64> = (0..=steps)
        .map(|k| {
            let s = t - tau + k as f64 * dt;
            (kappa * (t - s)).exp() * paths.value(mode, s)
        })
        .collect();
    Ok(crate::grid::trapezoid_series(&values, dt))
}

/// Trapezoid quadrature of the jump history integral
/// `J = sigma lambda \int_{t-tau}^{t} e^{beta (t-s)} zeta_s f(s) ds`.
pub fn jump_memory_quadrature(
    signal: &JumpSignal,
    beta: f64,
    tau: f64,
    t: f64,
    sigma_amp: f64,
    lambda_bif: f64,
) -> Result<f64> {
    if tau < 0.0 {
        return Err(OpmError::invalid("tau must be nonnegative"));
    }
    if t - tau < signal.t_min() - 1e-9 {
        return Err(OpmError::InsufficientCoverage(format!(
            "memory init needs samples down to {}, signal starts at {}",
            t - tau,
            signal.t_min()
        )));
    }
    let steps = (tau / signal.dt).round() as usize;
    let dt = signal.dt;
    let values: Vec<f64> = (0..=steps)
        .map(|k| {
            let s = t - tau + k as f64 * dt;
            (beta * (t - s)).exp() * signal.zeta_f(s)
        })
        .collect();
    Ok(sigma_amp * lambda_bif * crate::grid::trapezoid_series(&values, dt))
}

/// Memory state for a Brownian mode initialized from the pre-history
/// quadrature at time `t0`.
pub fn init_gaussian_memory(
    paths: &BrownianPaths,
    mode: usize,
    kappa: f64,
    tau: f64,
    t0: f64,
) -> Result<MemoryState> {
    let value = gaussian_memory_quadrature(paths, mode, kappa, tau, t0)?;
    MemoryState::new(mode, kappa, tau, t0, value)
}

/// Memory state for the jump signal initialized at time `t0`.
pub fn init_jump_memory(
    signal: &JumpSignal,
    mode: usize,
    beta: f64,
    tau: f64,
    t0: f64,
    sigma_amp: f64,
    lambda_bif: f64,
) -> Result<MemoryState> {
    let value = jump_memory_quadrature(signal, beta, tau, t0, sigma_amp, lambda_bif)?;
    MemoryState::new(mode, beta, tau, t0, value)
}
