use serde::{Deserialize, Serialize};

use super::wrap;
use crate::error::{arg, Error, Result};
use crate::field::Field;

/// Viscous Burgers `u_t = −a·u·u_x + ν·u_xx` on a periodic interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BurgersConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    /// Time points at resolution `dt`, including `t = 0`.
    pub nt: usize,
    pub dt: f64,
    pub viscosity: f64,
    pub advection: f64,
    /// Keep every `save_stride`-th time point.
    pub save_stride: usize,
}

impl Default for BurgersConfig {
    fn default() -> Self {
        BurgersConfig {
            x_min: -8.0,
            x_max: 8.0,
            nx: 256,
            nt: 1000,
            dt: 0.01,
            viscosity: 0.1,
            advection: 1.0,
            save_stride: 1,
        }
    }
}

impl BurgersConfig {
    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 3 || self.nt < 2 || self.save_stride == 0 {
            return arg("Burgers grid needs nx ≥ 3, nt ≥ 2 and a positive save stride");
        }
        if !(self.x_max > self.x_min) || !(self.dt > 0.0) || !(self.viscosity >= 0.0) {
            return arg("Burgers domain, dt and viscosity must be positive");
        }
        let number = self.dt * self.viscosity / self.dx().powi(2);
        if number >= 0.5 {
            return arg(format!("explicit diffusion unstable: dt·ν/dx² = {number:.3} ≥ 0.5"));
        }
        if (self.nt - 1) / self.save_stride + 1 < 3 {
            return arg("fewer than 3 saved time slices");
        }
        Ok(())
    }

    pub fn saved_slices(&self) -> usize {
        (self.nt - 1) / self.save_stride + 1
    }
}

/// Runs the solver from `u(x, 0) = exp(−(x + 2)²)` with central differences.
pub fn simulate_burgers(config: &BurgersConfig) -> Result<Field> {
    config.validate()?;
    let n = config.nx;
    let dx = config.dx();
    let x: Vec<f64> = (0..n).map(|i| config.x_min + i as f64 * dx).collect();
    let mut u: Vec<f64> = x.iter().map(|&x| (-(x + 2.0).powi(2)).exp()).collect();
    let mut next = vec![0.0; n];
    let mut saved = Vec::with_capacity(n * config.saved_slices());
    saved.extend_from_slice(&u);

    let adv = config.advection * config.dt / (2.0 * dx);
    let diff = config.viscosity * config.dt / (dx * dx);
    for step in 1..config.nt {
        for i in 0..n {
            let (l, r) = (u[wrap(i, -1, n)], u[wrap(i, 1, n)]);
            next[i] = u[i] - adv * u[i] * (r - l) + diff * (r - 2.0 * u[i] + l);
        }
        std::mem::swap(&mut u, &mut next);
        if u.iter().any(|v| !v.is_finite() || v.abs() > 1e12) {
            return Err(Error::Unstable { step });
        }
        if step % config.save_stride == 0 {
            saved.extend_from_slice(&u);
        }
    }
    Field::new(
        "u",
        vec![n],
        config.saved_slices(),
        vec![dx],
        config.dt * config.save_stride as f64,
        saved,
    )
}
