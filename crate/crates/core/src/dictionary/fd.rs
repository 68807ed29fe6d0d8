//! Finite-difference derivatives.
//!
//! Time: first-order forward differences. Space: second-order central
//! differences, with higher orders built by composing the first- and
//! second-order stencils (`D³ = D¹∘D²`, `D⁴ = D²∘D²`, ...).

use crate::error::{arg, Result};
use crate::field::{Field, SamplePoint};

/// Highest spatial derivative order supported.
pub const MAX_ORDER: usize = 6;

/// Stencil half-width of a composed derivative of `order`.
pub fn half_width(order: usize) -> usize {
    order.div_ceil(2)
}

/// A derivative field together with the part of the grid where it is valid.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeField {
    /// Entries outside the valid region are zero.
    pub field: Field,
    /// Cells closer than this to a spatial boundary along the derivative
    /// axis are invalid.
    pub margin: usize,
    /// Axis the margin applies to (`None` for time derivatives).
    pub axis: Option<usize>,
    /// Time slices `0..time_valid` are valid.
    pub time_valid: usize,
}

impl DerivativeField {
    pub fn is_valid(&self, space: &[usize], t: usize) -> bool {
        if t >= self.time_valid {
            return false;
        }
        match self.axis {
            Some(a) => space[a] >= self.margin && space[a] + self.margin < self.field.shape()[a],
            None => true,
        }
    }
}

fn stencil(values: &[f64], flat: usize, stride: usize, h: f64, order: usize) -> f64 {
    match order {
        0 => values[flat],
        o if o % 2 == 1 => {
            (stencil(values, flat + stride, stride, h, o - 1) - stencil(values, flat - stride, stride, h, o - 1))
                / (2.0 * h)
        }
        o => {
            (stencil(values, flat + stride, stride, h, o - 2) - 2.0 * stencil(values, flat, stride, h, o - 2)
                + stencil(values, flat - stride, stride, h, o - 2))
                / (h * h)
        }
    }
}

/// Spatial derivative of `order` along `axis` at a single grid point.
///
/// The caller guarantees the stencil stays inside the grid.
pub fn spatial_derivative_at(field: &Field, point: &SamplePoint, axis: usize, order: usize) -> f64 {
    let flat = field.index(&point.space[..field.dims()], point.t);
    stencil(field.values(), flat, field.stride(axis), field.spacing()[axis], order)
}

/// Forward time difference at a single grid point (`t < n_t − 1`).
pub fn time_derivative_at(field: &Field, point: &SamplePoint) -> f64 {
    let flat = field.index(&point.space[..field.dims()], point.t);
    (field.values()[flat + field.n_space()] - field.values()[flat]) / field.dt()
}

/// `(u[t+1] − u[t]) / dt` everywhere; the last slice is invalid.
pub fn time_derivative(field: &Field) -> Result<DerivativeField> {
    let ns = field.n_space();
    let nt = field.nt();
    let v = field.values();
    let mut out = vec![0.0; v.len()];
    for i in 0..ns * (nt - 1) {
        out[i] = (v[i + ns] - v[i]) / field.dt();
    }
    Ok(DerivativeField {
        field: field.with_values(out)?.renamed(format!("{}_t", field.name())),
        margin: 0,
        axis: None,
        time_valid: nt - 1,
    })
}

/// Central-difference derivative of `order` along `axis`; cells within the
/// stencil half-width of the boundary are invalid.
pub fn spatial_derivative(field: &Field, axis: usize, order: usize) -> Result<DerivativeField> {
    if axis >= field.dims() {
        return arg(format!("axis {axis} out of range for a {}-d field", field.dims()));
    }
    if order == 0 || order > MAX_ORDER {
        return arg(format!("derivative order must be in 1..={MAX_ORDER}, got {order}"));
    }
    let n = field.shape()[axis];
    if n < order + 2 {
        return arg(format!("extent {n} too small for an order-{order} stencil"));
    }
    let margin = half_width(order);
    let stride = field.stride(axis);
    let h = field.spacing()[axis];
    let v = field.values();
    let mut out = vec![0.0; v.len()];
    for (flat, o) in out.iter_mut().enumerate() {
        let i = (flat / stride) % n;
        if i >= margin && i + margin < n {
            *o = stencil(v, flat, stride, h, order);
        }
    }
    let axis_name = ['x', 'y', 'z'][axis];
    Ok(DerivativeField {
        field: field
            .with_values(out)?
            .renamed(format!("{}_{}", field.name(), axis_name.to_string().repeat(order))),
        margin,
        axis: Some(axis),
        time_valid: field.nt(),
    })
}
