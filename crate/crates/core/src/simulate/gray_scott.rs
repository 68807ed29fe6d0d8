use rand::Rng;
use serde::{Deserialize, Serialize};

use super::wrap;
use crate::error::{arg, Error, Result};
use crate::exec::Exec;
use crate::field::{unflatten, Field};
use crate::rng;

/// Initial state of a Gray-Scott run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrayScottInit {
    /// `u = 1, v = 0` except a centred cube of side `cube_fraction` of the
    /// box set to `(u, v)`; every cell then gets `u −= jitter·U[0,1)` and
    /// `v += jitter·U[0,1)`.
    Perturbed {
        cube_fraction: f64,
        u: f64,
        v: f64,
        jitter: f64,
    },
    Uniform {
        u: f64,
        v: f64,
    },
    /// Explicit values in field layout (first axis fastest).
    Given {
        u: Vec<f64>,
        v: Vec<f64>,
    },
}

/// `u_t = D_u∇²u − uv² + f(1 − u)`, `v_t = D_v∇²v + uv² − (f + k)v`
/// on a periodic cube (or square) of `grid` cells per side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrayScottConfig {
    pub dims: usize,
    pub grid: usize,
    pub dx: f64,
    pub dt: f64,
    pub steps: usize,
    pub f: f64,
    pub k: f64,
    pub du: f64,
    pub dv: f64,
    pub save_stride: usize,
    /// First step to save; later saves follow every `save_stride` steps.
    pub save_start: usize,
    pub seed: u64,
    pub init: GrayScottInit,
    /// Half-open spatial box `(lo, hi)` to keep from every saved slice.
    pub save_box: Option<(Vec<usize>, Vec<usize>)>,
}

impl Default for GrayScottConfig {
    fn default() -> Self {
        GrayScottConfig {
            dims: 3,
            grid: 64,
            dx: 0.01953,
            dt: 0.0005,
            steps: 10_000,
            f: 0.014,
            k: 0.053,
            du: 2.0e-5,
            dv: 1.0e-5,
            save_stride: 100,
            save_start: 0,
            seed: 0,
            init: GrayScottInit::Perturbed {
                cube_fraction: 0.1,
                u: 0.5,
                v: 0.25,
                jitter: 0.01,
            },
            save_box: None,
        }
    }
}

impl GrayScottConfig {
    fn cells(&self) -> usize {
        self.grid.pow(self.dims as u32)
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.dims) {
            return arg("Gray-Scott runs in 2 or 3 dimensions");
        }
        if self.grid < 3 || self.save_stride == 0 || self.save_start > self.steps || self.saved_slices() < 3 {
            return arg("Gray-Scott needs grid ≥ 3 and at least 3 saved slices");
        }
        if !(self.dx > 0.0 && self.dt > 0.0 && self.du >= 0.0 && self.dv >= 0.0) {
            return arg("Gray-Scott spacings must be positive and diffusivities non-negative");
        }
        let number = self.dt * self.du.max(self.dv) * 2.0 * self.dims as f64 / (self.dx * self.dx);
        if number >= 1.0 {
            return arg(format!("explicit diffusion unstable: dt·D·2d/dx² = {number:.3} ≥ 1"));
        }
        if let GrayScottInit::Given { u, v } = &self.init {
            if u.len() != self.cells() || v.len() != self.cells() {
                return arg(format!("initial condition needs {} values per field", self.cells()));
            }
        }
        if let Some((lo, hi)) = &self.save_box {
            let ok = lo.len() == self.dims
                && hi.len() == self.dims
                && lo.iter().zip(hi).all(|(l, h)| l + 3 <= *h && *h <= self.grid);
            if !ok {
                return arg("save box must have 3 to grid cells per axis");
            }
        }
        Ok(())
    }

    pub fn saved_slices(&self) -> usize {
        match self.save_stride {
            0 => 0,
            s => self.steps.saturating_sub(self.save_start) / s + 1,
        }
    }

    fn saves(&self, step: usize) -> bool {
        step >= self.save_start && (step - self.save_start).is_multiple_of(self.save_stride)
    }

    fn initial_state(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.cells();
        match &self.init {
            GrayScottInit::Uniform { u, v } => (vec![*u; n], vec![*v; n]),
            GrayScottInit::Given { u, v } => (u.clone(), v.clone()),
            GrayScottInit::Perturbed {
                cube_fraction,
                u: uc,
                v: vc,
                jitter,
            } => {
                let side = ((cube_fraction * self.grid as f64).round() as usize).clamp(1, self.grid);
                let lo = (self.grid - side) / 2;
                let inside = |i: usize| (lo..lo + side).contains(&i);
                let shape = vec![self.grid; self.dims];
                let mut r = rng::stream(self.seed, "gray-scott-init", &[]);
                let mut u = Vec::with_capacity(n);
                let mut v = Vec::with_capacity(n);
                for flat in 0..n {
                    let idx = unflatten(&shape, flat);
                    let (mut a, mut b) = if idx[..self.dims].iter().all(|&i| inside(i)) {
                        (*uc, *vc)
                    } else {
                        (1.0, 0.0)
                    };
                    a -= jitter * r.random::<f64>();
                    b += jitter * r.random::<f64>();
                    u.push(a);
                    v.push(b);
                }
                (u, v)
            }
        }
    }
}

/// Advances one x-row: `row` is the row index `j + n·k`, `un`/`vn` the
/// row's slots in the next state.
#[allow(clippy::too_many_arguments)]
#[inline]
fn step_row(u: &[f64], v: &[f64], un: &mut [f64], vn: &mut [f64], row: usize, dims: usize, n: usize, c: &Coefficients) {
    let (j, k) = (row % n, row / n);
    let base = row * n;
    // rows holding the y and z neighbours of this row
    let mut others = [0usize; 4];
    others[0] = (wrap(j, -1, n) + n * k) * n;
    others[1] = (wrap(j, 1, n) + n * k) * n;
    let m = if dims == 3 {
        others[2] = (j + n * wrap(k, -1, n)) * n;
        others[3] = (j + n * wrap(k, 1, n)) * n;
        4
    } else {
        2
    };
    let centre = 2.0 * (dims as f64);
    for i in 0..n {
        let (l, r) = (if i == 0 { n - 1 } else { i - 1 }, if i + 1 == n { 0 } else { i + 1 });
        let (uu, vv) = (u[base + i], v[base + i]);
        let mut lu = u[base + l] + u[base + r] - centre * uu;
        let mut lv = v[base + l] + v[base + r] - centre * vv;
        for &o in &others[..m] {
            lu += u[o + i];
            lv += v[o + i];
        }
        let uvv = uu * vv * vv;
        un[i] = uu + c.cu * lu + c.dt * (c.f * (1.0 - uu) - uvv);
        vn[i] = vv + c.cv * lv + c.dt * (uvv - c.kf * vv);
    }
}

struct Coefficients {
    cu: f64,
    cv: f64,
    dt: f64,
    f: f64,
    kf: f64,
}

fn save(out: &mut Vec<f64>, x: &[f64], config: &GrayScottConfig) {
    match &config.save_box {
        None => out.extend_from_slice(x),
        Some((lo, hi)) => {
            let n = config.grid;
            let (z_lo, z_hi) = if config.dims == 3 { (lo[2], hi[2]) } else { (0, 1) };
            for k in z_lo..z_hi {
                for j in lo[1]..hi[1] {
                    let row = n * j + n * n * k;
                    out.extend_from_slice(&x[row + lo[0]..row + hi[0]]);
                }
            }
        }
    }
}

/// Explicit Euler with a `2·dims + 1`-point Laplacian, double-buffered.
/// Returns `(u, v)` at steps `save_start + j·save_stride`.
pub fn simulate_gray_scott(config: &GrayScottConfig, exec: Exec) -> Result<(Field, Field)> {
    config.validate()?;
    let n = config.grid;
    let dims = config.dims;
    let (mut u, mut v) = config.initial_state();
    let mut u_next = vec![0.0; u.len()];
    let mut v_next = vec![0.0; v.len()];

    let slices = config.saved_slices();
    let saved_cells = match &config.save_box {
        Some((lo, hi)) => lo.iter().zip(hi).map(|(l, h)| h - l).product(),
        None => config.cells(),
    };
    let mut saved_u = Vec::with_capacity(saved_cells * slices);
    let mut saved_v = Vec::with_capacity(saved_cells * slices);
    if config.saves(0) {
        save(&mut saved_u, &u, config);
        save(&mut saved_v, &v, config);
    }

    let dt = config.dt;
    let c = Coefficients {
        cu: config.du * dt / (config.dx * config.dx),
        cv: config.dv * dt / (config.dx * config.dx),
        dt,
        f: config.f,
        kf: config.f + config.k,
    };
    // one chunk per x-row (2D) or xy-slab (3D)
    let chunk = n.pow(dims as u32 - 1);
    let rows_per_chunk = chunk / n;
    for step in 1..=config.steps {
        {
            let (u, v) = (&u, &v);
            exec.for_each_chunk_pair(&mut u_next, &mut v_next, chunk, |ci, un, vn| {
                for r in 0..rows_per_chunk {
                    let span = r * n..(r + 1) * n;
                    step_row(
                        u,
                        v,
                        &mut un[span.clone()],
                        &mut vn[span],
                        ci * rows_per_chunk + r,
                        dims,
                        n,
                        &c,
                    );
                }
            });
        }
        std::mem::swap(&mut u, &mut u_next);
        std::mem::swap(&mut v, &mut v_next);
        if (step.is_multiple_of(config.save_stride) || step == config.steps)
            && u.iter().chain(&v).any(|x| !x.is_finite() || x.abs() > 1e12)
        {
            return Err(Error::Unstable { step });
        }
        if config.saves(step) {
            save(&mut saved_u, &u, config);
            save(&mut saved_v, &v, config);
        }
    }

    let shape = match &config.save_box {
        Some((lo, hi)) => lo.iter().zip(hi).map(|(l, h)| h - l).collect(),
        None => vec![n; dims],
    };
    let spacing = vec![config.dx; dims];
    let dt_saved = dt * config.save_stride as f64;
    Ok((
        Field::new("u", shape.clone(), slices, spacing.clone(), dt_saved, saved_u)?,
        Field::new("v", shape, slices, spacing, dt_saved, saved_v)?,
    ))
}
