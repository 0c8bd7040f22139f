//! The tau-parameterized stochastic parameterizations of the unresolved
//! modes, their backward-time coefficients, the non-resonance checker, the
//! numeric backward-forward oracle, and the lifted reconstruction.
//!
//! For a parameterized mode `n` the closed form reads
//!
//! `Phi_n = e^{rate tau} Y + stochastic memory term
//!        + sum_ij D(tau) B_ij X_i X_j + sum_ijk E(tau) C_ijk X_i X_j X_k`
//!
//! where the memory term is `sigma (W_t - e^{rate tau} W_{t-tau}) + Z` with
//! `Z = sigma rate I` carried by an auxiliary equation for Brownian forcing,
//! and `J` itself for the jump signal. The same expression is the terminal
//! value of a backward-forward system integrated over `[t - tau, t]`, which
//! `integrate_bf_numeric` evaluates directly as the validation oracle.

use serde::{Deserialize, Serialize};

use crate::error::{OpmError, Result};
use crate::forcing::{BrownianPaths, JumpSignal, MemoryState};
use crate::spectral::InteractionTensors;

/// Shared backward-time coefficient `(1 - e^{-delta tau}) / delta`, with the
/// exact `delta = 0` branch and a two-term Taylor guard against cancellation
/// when `|delta tau|` is tiny.
#[inline]
pub fn gap_coefficient(tau: f64, delta: f64) -> f64 {
    debug_assert!(tau >= 0.0);
    if delta == 0.0 {
        tau
    } else if (delta * tau).abs() < 1e-8 {
        tau - 0.5 * delta * tau * tau
    } else {
        (1.0 - (-delta * tau).exp()) / delta
    }
}

/// Quadratic-interaction coefficient `D^n_ij(tau)`.
pub fn coeff_d(tau: f64, lam_i: f64, lam_j: f64, lam_n: f64) -> f64 {
    gap_coefficient(tau, lam_i + lam_j - lam_n)
}

/// Cubic-interaction coefficient `E^n_ijk(tau)`.
pub fn coeff_e(tau: f64, lam_i: f64, lam_j: f64, lam_k: f64, lam_n: f64) -> f64 {
    gap_coefficient(tau, lam_i + lam_j + lam_k - lam_n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Sace,
    Jump,
}

/// Trained parameterization of a single unresolved mode: the backward time,
/// offset, eigenvalue, noise amplitude and the tau-dependent contraction of
/// the interaction tensors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeParameterization {
    /// Zero-based mode index.
    pub mode: usize,
    pub tau: f64,
    /// Offset `Y` (zero in both case studies).
    pub offset: f64,
    /// Linear rate of the mode (`lambda_n` or `beta_n`).
    pub rate: f64,
    /// Noise amplitude felt by this mode.
    pub sigma: f64,
    /// Flagged when the defect curve was monotone and tau sits at the grid
    /// maximum (asymptotic regime).
    pub asymptotic: bool,
    /// `E^n_ijk(tau) * C^n_ijk`, flattened over `(i, j, k)` resolved indices.
    pub cubic: Vec<f64>,
    /// `D^n_ij(tau) * B^n_ij`, flattened over `(i, j)`; empty without a
    /// quadratic nonlinearity.
    pub quadratic: Vec<f64>,
}

impl ModeParameterization {
    fn q(&self) -> usize {
        if self.quadratic.is_empty() {
            (self.cubic.len() as f64).cbrt().round() as usize
        } else {
            (self.quadratic.len() as f64).sqrt().round() as usize
        }
    }

    /// Deterministic polynomial part in the resolved amplitudes.
    pub fn polynomial_part(&self, x: &[f64]) -> f64 {
        let q = self.q();
        debug_assert!(x.len() >= q);
        let mut acc = 0.0;
        if !self.quadratic.is_empty() {
            let mut idx = 0;
            for xi in &x[..q] {
                for xj in &x[..q] {
                    acc += self.quadratic[idx] * xi * xj;
                    idx += 1;
                }
            }
        }
        let mut idx = 0;
        for xi in &x[..q] {
            for xj in &x[..q] {
                let xij = xi * xj;
                for xk in &x[..q] {
                    acc += self.cubic[idx] * xij * xk;
                    idx += 1;
                }
            }
        }
        acc
    }

    /// `e^{rate tau} Y` plus the polynomial part: everything that survives
    /// taking expectations over the noise.
    pub fn markovian_part(&self, x: &[f64]) -> f64 {
        (self.rate * self.tau).exp() * self.offset + self.polynomial_part(x)
    }

    /// Memory term for Brownian forcing:
    /// `sigma (W_t - e^{rate tau} W_{t-tau}) + sigma rate I`.
    pub fn gaussian_memory_term(&self, t: f64, mem: &MemoryState, paths: &BrownianPaths) -> f64 {
        debug_assert_eq!(mem.mode, self.mode);
        assert!(
            (mem.time - t).abs() < 1e-9 * t.abs().max(1.0) + 1e-12,
            "memory state at {} queried at {}",
            mem.time,
            t
        );
        let w_now = paths.value(self.mode, t);
        let w_then = paths.value(self.mode, t - self.tau);
        self.sigma * (w_now - (self.rate * self.tau).exp() * w_then)
            + self.sigma * self.rate * mem.value
    }

    /// Full parameterization value for Brownian forcing.
    pub fn eval_gaussian(
        &self,
        x: &[f64],
        t: f64,
        mem: &MemoryState,
        paths: &BrownianPaths,
    ) -> f64 {
        self.markovian_part(x) + self.gaussian_memory_term(t, mem, paths)
    }

    /// Full parameterization value for the jump signal; `mem` carries the
    /// already-scaled convolution `J`.
    pub fn eval_jump(&self, x: f64, t: f64, mem: &MemoryState) -> f64 {
        debug_assert_eq!(mem.mode, self.mode);
        assert!(
            (mem.time - t).abs() < 1e-9 * t.abs().max(1.0) + 1e-12,
            "memory state at {} queried at {}",
            mem.time,
            t
        );
        self.markovian_part(&[x]) + mem.value
    }
}

/// Everything needed to instantiate per-mode parameterizations except the
/// backward times themselves; the defect optimizer sweeps tau against this.
#[derive(Debug, Clone)]
pub struct SpecTemplate {
    pub model: ModelKind,
    pub resolved: usize,
    pub n_total: usize,
    /// Eigenvalues of all retained modes.
    pub eigenvalues: Vec<f64>,
    /// Per absolute mode noise amplitude (zero on unforced modes).
    pub mode_sigma: Vec<f64>,
    /// Modes to parameterize (zero-based).
    pub parameterized: Vec<usize>,
    pub offset: f64,
    /// `(lambda, eps)` scaling of the jump-model nonlinearity.
    pub lambda_eps: (f64, f64),
    pub tensors: InteractionTensors,
}

impl SpecTemplate {
    /// sACE template: cubic nonlinearity only, `Y = 0`.
    pub fn sace(
        eigenvalues: &[f64],
        tensors: &InteractionTensors,
        resolved: usize,
        n_total: usize,
        forced_modes: &[usize],
        sigma: f64,
    ) -> Self {
        let mut mode_sigma = vec![0.0; n_total];
        for &m in forced_modes {
            mode_sigma[m] = sigma;
        }
        SpecTemplate {
            model: ModelKind::Sace,
            resolved,
            n_total,
            eigenvalues: eigenvalues[..n_total].to_vec(),
            mode_sigma,
            parameterized: (resolved..n_total).collect(),
            offset: 0.0,
            lambda_eps: (0.0, 0.0),
            tensors: tensors.clone(),
        }
    }

    /// Jump template: parameterizes the forced modes (third and fifth) with
    /// the `U*`-weighted quadratic tensor and the `lambda eps`-scaled cubic.
    pub fn jump(
        eigenvalues: &[f64],
        tensors: &InteractionTensors,
        n_total: usize,
        lambda: f64,
        eps: f64,
        sigma: f64,
        forced_modes: &[usize],
    ) -> Self {
        let mut mode_sigma = vec![0.0; n_total];
        for &m in forced_modes {
            mode_sigma[m] = sigma;
        }
        SpecTemplate {
            model: ModelKind::Jump,
            resolved: 1,
            n_total,
            eigenvalues: eigenvalues[..n_total].to_vec(),
            mode_sigma,
            parameterized: forced_modes.to_vec(),
            offset: 0.0,
            lambda_eps: (lambda, eps),
            tensors: tensors.clone(),
        }
    }

    /// Bare cubic coefficient of the backward-forward nonlinearity
    /// `Pi_n G(p)` for this model, including any model scaling.
    pub fn cubic_coefficient(&self, n: usize, i: usize, j: usize, k: usize) -> f64 {
        match self.model {
            ModelKind::Sace => self.tensors.cubic(n, i, j, k),
            // G_3 = -lambda eps v^3, and the stored tensor is -<eee, e_n>.
            ModelKind::Jump => self.lambda_eps.0 * self.lambda_eps.1 * self.tensors.cubic(n, i, j, k),
        }
    }

    /// Quadratic coefficient `<w e_i e_j, e_n>` (zero for the sACE).
    pub fn quadratic_coefficient(&self, n: usize, i: usize, j: usize) -> f64 {
        match self.model {
            ModelKind::Sace => 0.0,
            ModelKind::Jump => self.tensors.quadratic(n, i, j),
        }
    }

    /// Instantiates the mode parameterization at a fixed backward time.
    pub fn instantiate(&self, mode: usize, tau: f64, asymptotic: bool) -> ModeParameterization {
        let q = self.resolved;
        let rate = self.eigenvalues[mode];
        let mut cubic = Vec::with_capacity(q * q * q);
        for i in 0..q {
            for j in 0..q {
                for k in 0..q {
                    let e = coeff_e(
                        tau,
                        self.eigenvalues[i],
                        self.eigenvalues[j],
                        self.eigenvalues[k],
                        rate,
                    );
                    cubic.push(e * self.cubic_coefficient(mode, i, j, k));
                }
            }
        }
        let quadratic = if self.model == ModelKind::Jump {
            let mut qd = Vec::with_capacity(q * q);
            for i in 0..q {
                for j in 0..q {
                    let d = coeff_d(tau, self.eigenvalues[i], self.eigenvalues[j], rate);
                    qd.push(d * self.quadratic_coefficient(mode, i, j));
                }
            }
            qd
        } else {
            Vec::new()
        };
        ModeParameterization {
            mode,
            tau,
            offset: self.offset,
            rate,
            sigma: self.mode_sigma[mode],
            asymptotic,
            cubic,
            quadratic,
        }
    }

    /// Memory state for one parameterized mode, initialized at `t0` from the
    /// pre-history quadrature (or zeroed).
    pub fn init_memory(
        &self,
        par: &ModeParameterization,
        noise: &NoiseRealization,
        t0: f64,
        zeroed: bool,
    ) -> Result<MemoryState> {
        if zeroed {
            return MemoryState::new(par.mode, par.rate, par.tau, t0, 0.0);
        }
        match noise {
            NoiseRealization::Brownian(paths) => {
                crate::forcing::init_gaussian_memory(paths, par.mode, par.rate, par.tau, t0)
            }
            NoiseRealization::Jump(signal) => crate::forcing::init_jump_memory(
                signal,
                par.mode,
                par.rate,
                par.tau,
                t0,
                self.mode_sigma[par.mode],
                self.lambda_eps.0,
            ),
        }
    }

    /// Advances one memory state by a forward-Euler step.
    pub fn step_memory(&self, mem: &mut MemoryState, noise: &NoiseRealization, dt: f64) {
        match noise {
            NoiseRealization::Brownian(paths) => mem.step_gaussian(paths, dt),
            NoiseRealization::Jump(signal) => {
                mem.step_jump(signal, self.mode_sigma[mem.mode], self.lambda_eps.0, dt)
            }
        }
    }

    /// Evaluates `Phi_n` for a mode given the current memory state.
    pub fn eval_phi(
        &self,
        par: &ModeParameterization,
        x: &[f64],
        t: f64,
        mem: &MemoryState,
        noise: &NoiseRealization,
    ) -> f64 {
        match noise {
            NoiseRealization::Brownian(paths) => par.eval_gaussian(x, t, mem, paths),
            NoiseRealization::Jump(_) => par.eval_jump(x[0], t, mem),
        }
    }
}

/// Borrowed view of one driving-noise realization.
#[derive(Debug, Clone, Copy)]
pub enum NoiseRealization<'a> {
    Brownian(&'a BrownianPaths),
    Jump(&'a JumpSignal),
}

/// The trained-model artifact: per-mode backward times and cached
/// coefficients, serialized as versioned JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParameterizationSpec {
    pub version: u32,
    pub model: ModelKind,
    pub resolved: usize,
    pub n_total: usize,
    pub modes: Vec<ModeParameterization>,
    /// Training provenance: seed, window, tau grid.
    pub training_seed: u64,
    pub training_window: (f64, f64),
    pub tau_grid: (f64, f64, f64),
}

pub const SPEC_FORMAT_VERSION: u32 = 1;

impl ParameterizationSpec {
    pub fn mode(&self, mode: usize) -> Result<&ModeParameterization> {
        self.modes
            .iter()
            .find(|m| m.mode == mode)
            .ok_or_else(|| OpmError::invalid(format!("mode {} is not parameterized", mode + 1)))
    }

    pub fn max_tau(&self) -> f64 {
        self.modes.iter().map(|m| m.tau).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| OpmError::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ParameterizationSpec =
            serde_json::from_str(text).map_err(|e| OpmError::Serialization(e.to_string()))?;
        if spec.version != SPEC_FORMAT_VERSION {
            return Err(OpmError::Serialization(format!(
                "unsupported spec version {} (expected {})",
                spec.version, SPEC_FORMAT_VERSION
            )));
        }
        Ok(spec)
    }
}

/// The optimized non-Markovian field: the unresolved-mode coefficients of
/// `xi_t`, equal to `Phi_n` at `X = 0`, `Y = 0` mode by mode.
pub fn memory_field(
    spec: &ParameterizationSpec,
    t: f64,
    mems: &[MemoryState],
    paths: &BrownianPaths,
) -> Vec<f64> {
    let mut coeffs = vec![0.0; spec.n_total];
    for (par, mem) in spec.modes.iter().zip(mems) {
        coeffs[par.mode] = par.gaussian_memory_term(t, mem, paths);
    }
    coeffs
}

/// Lifts resolved amplitudes to a full coefficient vector through the
/// trained parameterization; unparameterized unresolved modes stay zero.
pub fn lift(
    spec: &ParameterizationSpec,
    template: &SpecTemplate,
    y: &[f64],
    t: f64,
    mems: &[MemoryState],
    noise: &NoiseRealization,
) -> Vec<f64> {
    let mut coeffs = vec![0.0; spec.n_total];
    coeffs[..spec.resolved].copy_from_slice(&y[..spec.resolved]);
    for (par, mem) in spec.modes.iter().zip(mems) {
        coeffs[par.mode] = template.eval_phi(par, y, t, mem, noise);
    }
    coeffs
}

/// One violating tuple of the non-resonance condition.
#[derive(Debug, Clone)]
pub struct ResonanceViolation {
    /// Parameterized mode (zero-based).
    pub mode: usize,
    /// Resolved-mode tuple `(j_1..j_k)` (zero-based).
    pub tuple: Vec<usize>,
    /// Bitmask over tuple positions selecting the noise factors.
    pub kz_mask: u32,
    /// Offending real part `lambda_n - sum_{p not in K_z} lambda_{j_p}`.
    pub real_part: f64,
}

#[derive(Debug, Clone)]
pub struct NonresonanceReport {
    pub violations: Vec<ResonanceViolation>,
    pub checked: usize,
}

impl NonresonanceReport {
    pub fn all_clear(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the non-resonance condition for a leading nonlinearity of order
/// `k`: for every resolved tuple with a nonvanishing interaction coefficient
/// and every subset `K_z` of positions whose modes carry noise, the real
/// part `lambda_n - sum_{p not in K_z} lambda_{j_p}` must be negative.
///
/// `interaction(n, tuple)` supplies the coefficient `G^n_{j_1..j_k}`.
pub fn check_nonresonance(
    eigenvalues: &[f64],
    sigma: &[f64],
    resolved: usize,
    n_total: usize,
    k: usize,
    interaction: &dyn Fn(usize, &[usize]) -> f64,
) -> NonresonanceReport {
    assert!(k >= 1 && k <= 8);
    let mut violations = Vec::new();
    let mut checked = 0;
    let mut tuple = vec![0usize; k];
    let tuples = (resolved as u64).pow(k as u32);
    for n in resolved..n_total {
        for flat in 0..tuples {
            let mut rem = flat;
            for slot in tuple.iter_mut() {
                *slot = (rem % resolved as u64) as usize;
                rem /= resolved as u64;
            }
            if interaction(n, &tuple).abs() < 1e-12 {
                continue;
            }
            for mask in 0u32..(1 << k) {
                // K_z applies only when every selected position carries
                // nonzero noise amplitude.
                let active = (0..k)
                    .filter(|p| mask & (1 << p) != 0)
                    .all(|p| sigma[tuple[p]] != 0.0);
                if !active {
                    continue;
                }
                checked += 1;
                let sum: f64 = (0..k)
                    .filter(|p| mask & (1 << p) == 0)
                    .map(|p| eigenvalues[tuple[p]])
                    .sum();
                let real_part = eigenvalues[n] - sum;
                if real_part >= 0.0 {
                    violations.push(ResonanceViolation {
                        mode: n,
                        tuple: tuple.clone(),
                        kz_mask: mask,
                        real_part,
                    });
                }
            }
        }
    }
    NonresonanceReport {
        violations,
        checked,
    }
}

/// Direct numerical integration of the scale-aware backward-forward system
/// for mode `n`: the resolved part is the exact backward exponential, the
/// forward equation is advanced by Euler-Maruyama (Brownian forcing) or
/// explicit Euler (jump forcing) from `q(t - tau) = Y` to `q(t)`.
///
/// This is the oracle validating the closed-form `Phi_n`.
pub fn integrate_bf_numeric(
    template: &SpecTemplate,
    mode: usize,
    x: &[f64],
    y_init: f64,
    tau: f64,
    t: f64,
    dt: f64,
    noise: &NoiseRealization,
) -> Result<f64> {
    let q = template.resolved;
    let rate = template.eigenvalues[mode];
    let steps = (tau / dt).round() as usize;
    if steps == 0 {
        return Ok(y_init);
    }
    let coverage_start = t - tau;
    match noise {
        NoiseRealization::Brownian(p) => {
            if coverage_start < p.t_min() - 1e-9 {
                return Err(OpmError::InsufficientCoverage(format!(
                    "BF integration needs samples from {coverage_start}"
                )));
            }
        }
        NoiseRealization::Jump(s) => {
            if coverage_start < s.t_min() - 1e-9 {
                return Err(OpmError::InsufficientCoverage(format!(
                    "BF integration needs samples from {coverage_start}"
                )));
            }
        }
    }
    let mut p_buf = vec![0.0; q];
    let mut value = y_init;
    for step in 0..steps {
        let s = t - tau + step as f64 * dt;
        for i in 0..q {
            p_buf[i] = ((s - t) * template.eigenvalues[i]).exp() * x[i];
        }
        let mut g = 0.0;
        for i in 0..q {
            for j in 0..q {
                let pij = p_buf[i] * p_buf[j];
                if template.model == ModelKind::Jump {
                    g += template.quadratic_coefficient(mode, i, j) * pij;
                }
                for k in 0..q {
                    g += template.cubic_coefficient(mode, i, j, k) * pij * p_buf[k];
                }
            }
        }
        value += dt * (rate * value + g);
        match noise {
            NoiseRealization::Brownian(paths) => {
                value += template.mode_sigma[mode] * paths.increment(mode, s);
            }
            NoiseRealization::Jump(signal) => {
                value +=
                    dt * template.mode_sigma[mode] * template.lambda_eps.0 * signal.zeta_f(s);
            }
        }
    }
    Ok(value)
}
