use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{soft_threshold, Coefficients, Problem, SolverOptions};
use crate::error::Result;
use crate::rng;

/// Cyclic coordinate descent on `½ξᵀGξ − cᵀξ + λ‖ξ‖₁`, tracking `Gξ`.
/// Stops once a sweep changes nothing beyond `tol` and the KKT conditions
/// hold to `1e-6·λ`.
fn coordinate_descent(gram: &DMatrix<f64>, xty: &DVector<f64>, lambda: f64, options: &SolverOptions) -> Coefficients {
    let p = xty.len();
    let mut xi = DVector::<f64>::zeros(p);
    let mut g_xi = DVector::<f64>::zeros(p);
    let scale = xty.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let kkt_tol = if lambda > 0.0 {
        1e-6 * lambda
    } else {
        1e-9 * scale.max(1e-300)
    };

    for sweep in 1..=options.maxit {
        let mut max_delta = 0.0f64;
        for k in 0..p {
            let gkk = gram[(k, k)];
            if gkk <= 0.0 {
                continue;
            }
            let rho = xty[k] - g_xi[k] + gkk * xi[k];
            let next = soft_threshold(rho, lambda) / gkk;
            let delta = next - xi[k];
            if delta != 0.0 {
                g_xi.axpy(delta, &gram.column(k), 1.0);
                xi[k] = next;
                max_delta = max_delta.max(delta.abs());
            }
        }
        let size = xi.amax();
        if max_delta <= options.tol * size.max(f64::MIN_POSITIVE) && kkt_holds(&xi, &g_xi, xty, lambda, kkt_tol) {
            return Coefficients::new(xi.as_slice().to_vec(), sweep, true);
        }
    }
    Coefficients::new(xi.as_slice().to_vec(), options.maxit, false)
}

fn kkt_holds(xi: &DVector<f64>, g_xi: &DVector<f64>, xty: &DVector<f64>, lambda: f64, tol: f64) -> bool {
    xi.iter().enumerate().all(|(k, &x)| {
        let grad = g_xi[k] - xty[k];
        if x != 0.0 {
            (grad + lambda * x.signum()).abs() <= tol
        } else {
            grad.abs() <= lambda + tol
        }
    })
}

impl Problem {
    /// LASSO, optionally on columns rescaled by `weights`.
    pub(crate) fn lasso(&self, lambda: f64, weights: Option<&[f64]>, options: &SolverOptions) -> Result<Coefficients> {
        let Some(w) = weights else {
            return Ok(coordinate_descent(self.gram(), self.xty(), lambda, options));
        };
        let p = self.p();
        let gram = DMatrix::from_fn(p, p, |i, j| w[i] * w[j] * self.gram()[(i, j)]);
        let xty = DVector::from_fn(p, |i, _| w[i] * self.xty()[i]);
        let beta = coordinate_descent(&gram, &xty, lambda, options);
        let values = beta.values.iter().zip(w).map(|(b, wk)| b * wk).collect();
        Ok(Coefficients::new(values, beta.iterations, beta.converged))
    }

    /// LASSO on columns scaled by `W_k ~ Uniform[α, 1]`; coefficients are
    /// mapped back as `ξ = Wβ`.
    pub(crate) fn randomized_lasso(&self, lambda: f64, options: &SolverOptions) -> Result<Coefficients> {
        let mut r = rng::stream(options.seed, "rlasso-weights", &[]);
        let weights: Vec<f64> = (0..self.p())
            .map(|_| r.random_range(options.lasso_alpha..=1.0))
            .collect();
        self.lasso(lambda, Some(&weights), options)
    }
}
