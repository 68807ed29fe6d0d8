use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};

/// Least-squares refit on a fixed support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    /// Length p; zero off the support.
    pub coefficients: Vec<f64>,
    /// Zero unless the fit included an intercept.
    pub intercept: f64,
}

/// Refits `U_t ≈ Θ_S ξ_S (+ b)` by least squares through an SVD of the
/// column-normalized design. Rank-deficient supports are rejected with the
/// offending columns named.
pub fn ols_refit(theta: &DMatrix<f64>, ut: &DVector<f64>, support: &[usize], intercept: bool) -> Result<OlsFit> {
    let (n, p) = theta.shape();
    if ut.len() != n {
        return arg(format!("theta has {n} rows, ut has {}", ut.len()));
    }
    if let Some(&k) = support.iter().find(|&&k| k >= p) {
        return arg(format!("support index {k} out of range for {p} columns"));
    }
    let offset = usize::from(intercept);
    let q = support.len() + offset;
    let mut fit = OlsFit {
        coefficients: vec![0.0; p],
        intercept: 0.0,
    };
    if q == 0 {
        return Ok(fit);
    }
    if n < q {
        return Err(Error::Numerical(format!("{n} rows cannot determine {q} coefficients")));
    }
    let mut a = DMatrix::<f64>::zeros(n, q);
    if intercept {
        a.column_mut(0).fill(1.0);
    }
    for (j, &k) in support.iter().enumerate() {
        a.set_column(j + offset, &theta.column(k));
    }
    let norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    if let Some(j) = norms.iter().position(|&s| s == 0.0) {
        return Err(Error::Numerical(format!(
            "column {} is identically zero",
            support[j - offset]
        )));
    }
    for (j, s) in norms.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = a.svd(true, true);
    let s = &svd.singular_values;
    let s_max = s.max();
    let (j_min, s_min) = s.argmin();
    if s_min <= 1e-10 * s_max {
        let v_t = svd.v_t.as_ref().expect("requested V");
        let null = v_t.row(j_min);
        let involved: Vec<String> = (0..q)
            .filter(|&j| null[j].abs() > 0.1)
            .map(|j| {
                if intercept && j == 0 {
                    "intercept".to_string()
                } else {
                    support[j - offset].to_string()
                }
            })
            .collect();
        return Err(Error::Numerical(format!(
            "rank-deficient refit, collinear columns: {}",
            involved.join(", ")
        )));
    }
    let beta = svd
        .solve(ut, 0.0)
        .map_err(|e| Error::Numerical(format!("least-squares solve failed: {e}")))?;
    if intercept {
        fit.intercept = beta[0] / norms[0];
    }
    for (j, &k) in support.iter().enumerate() {
        fit.coefficients[k] = beta[j + offset] / norms[j + offset];
    }
    Ok(fit)
}
