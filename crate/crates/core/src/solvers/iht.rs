use std::collections::HashMap;

use nalgebra::DVector;

use super::{hard_threshold, top_eigenvalue, Coefficients, Problem, SolverOptions};
use crate::error::{Error, Result};

fn relative_change(next: &DVector<f64>, prev: &DVector<f64>) -> f64 {
    let diff = (next - prev).norm();
    if diff == 0.0 {
        0.0
    } else {
        diff / next.norm().max(prev.norm())
    }
}

impl Problem {
    /// `½‖U_t − Θξ‖² + (L/2)·λ·‖ξ‖₀`, the quantity a `1/L` hard-thresholding
    /// step never increases.
    fn l0_objective(&self, xi: &DVector<f64>, lambda: f64) -> f64 {
        let nnz = xi.iter().filter(|v| **v != 0.0).count() as f64;
        0.5 * self.residual_sq(xi.as_slice()) + 0.5 * self.lipschitz() * lambda * nnz
    }

    pub(crate) fn iht(&self, lambda: f64, options: &SolverOptions) -> Result<Coefficients> {
        let p = self.p();
        let l = self.lipschitz();
        if l == 0.0 {
            return Ok(Coefficients::zeros(p, 0));
        }
        let mut xi = DVector::<f64>::zeros(p);
        let mut objective = self.l0_objective(&xi, lambda);
        let slack = 1e-10 * objective.max(f64::MIN_POSITIVE);
        for it in 1..=options.maxit {
            let z = &xi - self.gradient(&xi) / l;
            let next = z.map(|v| hard_threshold(v, lambda));
            let next_objective = self.l0_objective(&next, lambda);
            if next_objective > objective + slack {
                return Err(Error::Solver(format!(
                    "IHT objective increased from {objective} to {next_objective} at iteration {it}"
                )));
            }
            let change = relative_change(&next, &xi);
            xi = next;
            objective = next_objective;
            if change <= options.tol {
                return Ok(Coefficients::new(xi.as_slice().to_vec(), it, true));
            }
        }
        Ok(Coefficients::new(xi.as_slice().to_vec(), options.maxit, false))
    }

    /// IHT whose thresholded iterate is refined by gradient steps restricted
    /// to its support, with step `1/L_S`. The refinement returns early once
    /// `‖U_t − Θξ‖² ≤ λ·|S|`.
    pub(crate) fn iht_d(&self, lambda: f64, options: &SolverOptions) -> Result<Coefficients> {
        let p = self.p();
        let l = self.lipschitz();
        if l == 0.0 {
            return Ok(Coefficients::zeros(p, 0));
        }
        let mut restricted: HashMap<Vec<usize>, (nalgebra::DMatrix<f64>, f64)> = HashMap::new();
        let mut xi = DVector::<f64>::zeros(p);
        for it in 1..=options.maxit {
            let z = &xi - self.gradient(&xi) / l;
            let mut u = z.map(|v| hard_threshold(v, lambda));
            let support: Vec<usize> = (0..p).filter(|&k| u[k] != 0.0).collect();
            if !support.is_empty() {
                let (g_ss, l_s) = restricted.entry(support.clone()).or_insert_with(|| {
                    let g = self.gram().select_rows(&support).select_columns(&support);
                    let top = top_eigenvalue(&g);
                    (g, top)
                });
                let c_s = DVector::from_iterator(support.len(), support.iter().map(|&k| self.xty()[k]));
                let mut u_s = DVector::from_iterator(support.len(), support.iter().map(|&k| u[k]));
                let mut residual = self.residual_sq(u.as_slice());
                let budget = lambda * support.len() as f64;
                // ‖U_t − Θ_S u_S‖² = ‖U_t‖² − 2c_Sᵀu_S + u_Sᵀ G_SS u_S
                let mut g_u = &*g_ss * &u_s;
                let slack = 1e-12 * self.ut_sq();
                for _ in 0..options.subit {
                    if residual <= budget {
                        break;
                    }
                    let step = (&g_u - &c_s) / *l_s;
                    u_s -= &step;
                    g_u = &*g_ss * &u_s;
                    let next = (self.ut_sq() - 2.0 * c_s.dot(&u_s) + u_s.dot(&g_u)).max(0.0);
                    if next > residual + slack {
                        return Err(Error::Solver(format!(
                            "debiasing step increased the residual from {residual} to {next}"
                        )));
                    }
                    residual = next;
                    if step.norm() <= options.tol * u_s.norm() {
                        break;
                    }
                }
                for (i, &k) in support.iter().enumerate() {
                    u[k] = u_s[i];
                }
                if residual <= budget {
                    return Ok(Coefficients::new(u.as_slice().to_vec(), it, true));
                }
            }
            let change = relative_change(&u, &xi);
            xi = u;
            if change <= options.tol {
                return Ok(Coefficients::new(xi.as_slice().to_vec(), it, true));
            }
        }
        Ok(Coefficients::new(xi.as_slice().to_vec(), options.maxit, false))
    }
}
