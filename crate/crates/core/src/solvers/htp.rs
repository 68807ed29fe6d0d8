use nalgebra::DVector;

use super::{Coefficients, Problem, SolverOptions};
use crate::error::{arg, Result};

/// Indices of the `k` largest magnitudes (ties broken by index), sorted.
pub(crate) fn top_k(values: &DVector<f64>, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
    order.truncate(k);
    order.sort_unstable();
    order
}

impl Problem {
    /// Hard thresholding pursuit: gradient step, keep the `k` largest
    /// entries, least-squares refit on them; stops when the support repeats.
    pub(crate) fn htp(&self, k: usize, options: &SolverOptions) -> Result<Coefficients> {
        let p = self.p();
        if k == 0 || k > p {
            return arg(format!("HTP sparsity level must be in 1..={p}, got {k}"));
        }
        let l = self.lipschitz();
        if l == 0.0 {
            return Ok(Coefficients::zeros(p, 0));
        }
        let mut xi = DVector::<f64>::zeros(p);
        let mut previous: Option<Vec<usize>> = None;
        for it in 1..=options.maxit {
            let z = &xi - self.gradient(&xi) / l;
            let support = top_k(&z, k);
            xi = DVector::from_vec(self.ridge_on(&support, 0.0)?);
            if previous.as_ref() == Some(&support) {
                return Ok(Coefficients::new(xi.as_slice().to_vec(), it, true));
            }
            previous = Some(support);
        }
        Ok(Coefficients::new(xi.as_slice().to_vec(), options.maxit, false))
    }
}
