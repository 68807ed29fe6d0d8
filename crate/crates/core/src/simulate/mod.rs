//! Ground-truth data: explicit-Euler solvers for viscous Burgers and
//! Gray-Scott reaction-diffusion on periodic grids.

mod burgers;
mod gray_scott;

pub use burgers::{simulate_burgers, BurgersConfig};
pub use gray_scott::{simulate_gray_scott, GrayScottConfig, GrayScottInit};

/// Index of the periodic neighbour `i + d` on a ring of `n` cells.
#[inline]
pub(crate) fn wrap(i: usize, d: isize, n: usize) -> usize {
    (i as isize + d).rem_euclid(n as isize) as usize
}
