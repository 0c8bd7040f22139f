//! Uniform spatial grid on `[0, L]` with trapezoid quadrature.
//!
//! Every spatial inner product in this crate lives on one of these grids, so
//! the basis samples, the interaction tensors and the pseudo-spectral
//! nonlinearities all share the same quadrature rule.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub length: f64,
    pub points: usize,
}

impl Grid {
    pub fn new(length: f64, points: usize) -> Self {
        assert!(length > 0.0 && points >= 2);
        Grid { length, points }
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.length / (self.points - 1) as f64
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.length * i as f64 / (self.points - 1) as f64
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(move |i| self.x(i))
    }

    /// Trapezoid rule over the grid samples.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.points);
        let inner: f64 = values[1..self.points - 1].iter().sum();
        self.dx() * (0.5 * (values[0] + values[self.points - 1]) + inner)
    }

    /// Trapezoid inner product `\int f g dx`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.points);
        debug_assert_eq!(g.len(), self.points);
        let n = self.points;
        let mut acc = 0.5 * (f[0] * g[0] + f[n - 1] * g[n - 1]);
        for i in 1..n - 1 {
            acc += f[i] * g[i];
        }
        acc * self.dx()
    }

    /// L2 norm of grid samples.
    pub fn norm(&self, f: &[f64]) -> f64 {
        self.inner(f, f).sqrt()
    }
}

/// Trapezoid quadrature of a uniformly sampled time series with spacing `dt`.
pub fn trapezoid_series(values: &[f64], dt: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    dt * (0.5 * (values[0] + values[values.len() - 1]) + inner)
}
