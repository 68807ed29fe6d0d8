use super::{Coefficients, Problem, SolverOptions};
use crate::error::Result;

impl Problem {
    /// Ridge on the full dictionary, then repeatedly drop coefficients below
    /// `threshold` and refit ridge on the survivors until the support is stable.
    pub(crate) fn stridge(&self, threshold: f64, options: &SolverOptions) -> Result<Coefficients> {
        let p = self.p();
        let mut support: Vec<usize> = (0..p).collect();
        let mut xi = self.ridge_on(&support, options.ridge_lambda)?;
        for it in 1..=options.maxit {
            let kept: Vec<usize> = support.iter().copied().filter(|&k| xi[k].abs() >= threshold).collect();
            if kept == support {
                return Ok(Coefficients::new(xi, it, true));
            }
            support = kept;
            xi = self.ridge_on(&support, options.ridge_lambda)?;
        }
        Ok(Coefficients::new(xi, options.maxit, false))
    }
}
