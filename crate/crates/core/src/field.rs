//! Spatiotemporal fields on regular grids, noise injection and point sampling.
//!
//! Values are stored time-major with the first spatial axis fastest, so a
//! field is also a row-major `n_t × (n₁·n₂·n₃)` matrix whose rows are time
//! slices.

use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{arg, Error, Result};
use crate::rng;

/// A named scalar quantity sampled on a regular space-time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    name: String,
    shape: Vec<usize>,
    nt: usize,
    spacing: Vec<f64>,
    dt: f64,
    values: Vec<f64>,
}

impl Field {
    /// Builds a field, checking extents, spacings and finiteness.
    pub fn new(
        name: impl Into<String>,
        shape: Vec<usize>,
        nt: usize,
        spacing: Vec<f64>,
        dt: f64,
        values: Vec<f64>,
    ) -> Result<Field> {
        let name = name.into();
        if shape.is_empty() || shape.len() > 3 {
            return arg(format!("field '{name}': 1 to 3 spatial dimensions required"));
        }
        if spacing.len() != shape.len() {
            return arg(format!("field '{name}': one spacing per spatial axis required"));
        }
        if shape.iter().any(|&n| n < 3) || nt < 3 {
            return arg(format!("field '{name}': all extents must be at least 3"));
        }
        if spacing
            .iter()
            .chain(std::iter::once(&dt))
            .any(|&h| !(h > 0.0) || !h.is_finite())
        {
            return arg(format!("field '{name}': spacings must be positive"));
        }
        let expected = shape.iter().product::<usize>() * nt;
        if values.len() != expected {
            return Err(Error::Format(format!(
                "field '{name}': {} values for a grid of {expected}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!("field '{name}': non-finite value at {i}")));
        }
        Ok(Field {
            name,
            shape,
            nt,
            spacing,
            dt,
            values,
        })
    }

    /// Builds a field by evaluating `f(x, t)` at the grid nodes, where `x`
    /// holds physical coordinates `origin + i·dx` of each spatial axis.
    pub fn from_fn(
        name: impl Into<String>,
        shape: Vec<usize>,
        nt: usize,
        spacing: Vec<f64>,
        dt: f64,
        f: impl Fn(&[f64], f64) -> f64,
    ) -> Result<Field> {
        let ns: usize = shape.iter().product();
        let mut values = Vec::with_capacity(ns * nt);
        let mut x = vec![0.0; shape.len()];
        for t in 0..nt {
            for s in 0..ns {
                let idx = unflatten(&shape, s);
                for (a, xi) in x.iter_mut().enumerate() {
                    *xi = idx[a] as f64 * spacing[a];
                }
                values.push(f(&x, t as f64 * dt));
            }
        }
        Field::new(name, shape, nt, spacing, dt, values)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Field {
        self.name = name.into();
        self
    }

    /// Spatial extents.
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dims(&self) -> usize {
        self.shape.len()
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    /// Number of spatial nodes per time slice.
    pub fn n_space(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Same grid and name, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Field> {
        Field::new(
            self.name.clone(),
            self.shape.clone(),
            self.nt,
            self.spacing.clone(),
            self.dt,
            values,
        )
    }

    /// Stride between neighbours along spatial `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.shape[..axis].iter().product()
    }

    /// Flat index of spatial node `space` at time `t`.
    pub fn index(&self, space: &[usize], t: usize) -> usize {
        t * self.n_space() + flatten(&self.shape, space)
    }

    pub fn at(&self, space: &[usize], t: usize) -> f64 {
        self.values[self.index(space, t)]
    }

    /// Time slice `t` as a flat spatial array.
    pub fn slice(&self, t: usize) -> &[f64] {
        let ns = self.n_space();
        &self.values[t * ns..(t + 1) * ns]
    }

    /// True when both fields live on the same grid.
    pub fn same_grid(&self, other: &Field) -> bool {
        self.shape == other.shape && self.nt == other.nt && self.spacing == other.spacing && self.dt == other.dt
    }

    /// Mean and population standard deviation over all entries.
    pub fn mean_std(&self) -> (f64, f64) {
        mean_std(&self.values)
    }

    /// Restricts the field to the half-open index box `region`.
    pub fn crop(&self, region: &Region) -> Result<Field> {
        region.check(self)?;
        let shape: Vec<usize> = (0..self.dims()).map(|a| region.hi[a] - region.lo[a]).collect();
        let nt = region.t_hi - region.t_lo;
        let ns: usize = shape.iter().product();
        let mut values = Vec::with_capacity(ns * nt);
        let mut idx = vec![0; self.dims()];
        for t in region.t_lo..region.t_hi {
            for s in 0..ns {
                let local = unflatten(&shape, s);
                for a in 0..self.dims() {
                    idx[a] = local[a] + region.lo[a];
                }
                values.push(self.at(&idx, t));
            }
        }
        Field::new(self.name.clone(), shape, nt, self.spacing.clone(), self.dt, values)
    }
}

/// Mean and 1/n-normalized standard deviation of a slice.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub(crate) fn flatten(shape: &[usize], idx: &[usize]) -> usize {
    let mut flat = 0;
    for a in (0..shape.len()).rev() {
        flat = flat * shape[a] + idx[a];
    }
    flat
}

pub(crate) fn unflatten(shape: &[usize], mut flat: usize) -> [usize; 3] {
    let mut idx = [0; 3];
    for (a, &n) in shape.iter().enumerate() {
        idx[a] = flat % n;
        flat /= n;
    }
    idx
}

/// Returns `ũ = u + ε`, with ε i.i.d. Gaussian of standard deviation
/// `sigma · std(u)`. Deterministic given `seed`.
pub fn add_noise(field: &Field, sigma: f64, seed: u64) -> Result<Field> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return arg(format!("noise level must be non-negative, got {sigma}"));
    }
    let (_, std) = field.mean_std();
    let scale = sigma * std;
    if scale == 0.0 {
        return Ok(field.clone());
    }
    let mut rng = rng::stream(seed, "add_noise", &[]);
    let values = field
        .values()
        .iter()
        .map(|&v| {
            let e: f64 = StandardNormal.sample(&mut rng);
            v + scale * e
        })
        .collect();
    field.with_values(values)
}

/// Half-open box in index space: spatial `lo[a]..hi[a]` and time `t_lo..t_hi`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    pub lo: Vec<usize>,
    pub hi: Vec<usize>,
    pub t_lo: usize,
    pub t_hi: usize,
}

impl Region {
    /// The whole grid of `field`.
    pub fn whole(field: &Field) -> Region {
        Region {
            lo: vec![0; field.dims()],
            hi: field.shape().to_vec(),
            t_lo: 0,
            t_hi: field.nt(),
        }
    }

    /// A centred spatial cube of physical side `side` over all time slices.
    pub fn central_cube(field: &Field, side: f64) -> Region {
        let mut lo = Vec::with_capacity(field.dims());
        let mut hi = Vec::with_capacity(field.dims());
        for (&n, &h) in field.shape().iter().zip(field.spacing()) {
            let cells = ((side / h).round() as usize).clamp(1, n);
            let start = (n - cells) / 2;
            lo.push(start);
            hi.push(start + cells);
        }
        Region {
            lo,
            hi,
            t_lo: 0,
            t_hi: field.nt(),
        }
    }

    /// Grows the spatial box by `margin` cells on every side, clamped to the grid.
    pub fn padded(&self, field: &Field, margin: usize) -> Region {
        Region {
            lo: self.lo.iter().map(|&l| l.saturating_sub(margin)).collect(),
            hi: self
                .hi
                .iter()
                .zip(field.shape())
                .map(|(&h, &n)| (h + margin).min(n))
                .collect(),
            t_lo: self.t_lo,
            t_hi: self.t_hi,
        }
    }

    /// Same box expressed in the coordinates of a field cropped at `origin`.
    pub fn shifted(&self, origin: &Region) -> Region {
        Region {
            lo: self.lo.iter().zip(&origin.lo).map(|(a, b)| a - b).collect(),
            hi: self.hi.iter().zip(&origin.lo).map(|(a, b)| a - b).collect(),
            t_lo: self.t_lo - origin.t_lo,
            t_hi: self.t_hi - origin.t_lo,
        }
    }

    fn check(&self, field: &Field) -> Result<()> {
        let ok = self.lo.len() == field.dims()
            && self.hi.len() == field.dims()
            && self.lo.iter().zip(&self.hi).all(|(l, h)| l < h)
            && self.hi.iter().zip(field.shape()).all(|(h, n)| h <= n)
            && self.t_lo < self.t_hi
            && self.t_hi <= field.nt();
        if ok {
            Ok(())
        } else {
            arg(format!("region {self:?} does not fit field '{}'", field.name()))
        }
    }

    /// Intersection with the points whose stencils stay inside the grid:
    /// spatial indices in `[margin, n−1−margin]`, time in `[1, n_t−2]`.
    fn valid_interior(&self, field: &Field, margin: usize) -> Option<Region> {
        let mut lo = Vec::with_capacity(field.dims());
        let mut hi = Vec::with_capacity(field.dims());
        for a in 0..field.dims() {
            let n = field.shape()[a];
            if n < 2 * margin + 1 {
                return None;
            }
            let l = self.lo[a].max(margin);
            let h = self.hi[a].min(n - margin);
            if l >= h {
                return None;
            }
            lo.push(l);
            hi.push(h);
        }
        let t_lo = self.t_lo.max(1);
        let t_hi = self.t_hi.min(field.nt() - 1);
        if t_lo >= t_hi {
            return None;
        }
        Some(Region { lo, hi, t_lo, t_hi })
    }

    fn count(&self) -> usize {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product::<usize>() * (self.t_hi - self.t_lo)
    }
}

/// One estimation point: spatial multi-index (unused axes are 0) and time index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SamplePoint {
    pub space: [usize; 3],
    pub t: usize,
}

/// Distinct estimation points, all at least `margin` cells from every
/// spatial boundary and in `[1, n_t−2]` in time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleSet {
    pub points: Vec<SamplePoint>,
    pub margin: usize,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Draws `n` distinct points uniformly without replacement from the valid
/// interior of `region`. Deterministic given `seed`.
pub fn sample_points(field: &Field, region: &Region, n: usize, margin: usize, seed: u64) -> Result<SampleSet> {
    region.check(field)?;
    let interior = region.valid_interior(field, margin);
    let available = interior.as_ref().map_or(0, Region::count);
    if n > available {
        return Err(Error::Capacity {
            requested: n,
            available,
        });
    }
    let Some(box_) = interior else {
        return Ok(SampleSet {
            points: Vec::new(),
            margin,
        });
    };
    let extents: Vec<usize> = box_.lo.iter().zip(&box_.hi).map(|(l, h)| h - l).collect();
    let per_slice: usize = extents.iter().product();
    let mut rng = rng::stream(seed, "sample_points", &[]);
    let points = index::sample(&mut rng, available, n)
        .into_iter()
        .map(|flat| {
            let local = unflatten(&extents, flat % per_slice);
            let mut space = [0; 3];
            for a in 0..extents.len() {
                space[a] = local[a] + box_.lo[a];
            }
            SamplePoint {
                space,
                t: box_.t_lo + flat / per_slice,
            }
        })
        .collect();
    Ok(SampleSet { points, margin })
}
