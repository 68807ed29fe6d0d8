//! Truncated-SVD denoising of a field's time × space data matrix.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::field::Field;

/// Singular spectrum of the data matrix and the truncation applied to it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvdReport {
    /// Descending, non-negative.
    pub singular_values: Vec<f64>,
    pub chosen_rank: usize,
    /// Frobenius norm of the discarded part.
    pub reconstruction_error: f64,
}

/// Picks the elbow of a descending spectrum.
///
/// Returns the 1-based rank `k` maximizing `l[k] − 2·l[k+1] + l[k+2]`, where
/// `l[i] = ln(σᵢ + δ)` and `δ = 1e-12·σ₁`, i.e. the rank just before the
/// sharpest bend of the log spectrum. Ties go to the smallest rank.
pub fn detect_elbow(singular_values: &[f64]) -> Result<usize> {
    if singular_values.len() < 3 {
        return arg("elbow detection needs at least 3 singular values");
    }
    if singular_values.iter().any(|s| !(*s >= 0.0)) {
        return arg("singular values must be non-negative");
    }
    if singular_values.windows(2).any(|w| w[1] > w[0]) {
        return arg("singular values must be sorted in descending order");
    }
    let delta = 1e-12 * singular_values[0];
    let logs: Vec<f64> = singular_values.iter().map(|s| (s + delta).ln()).collect();
    if logs[0] == f64::NEG_INFINITY {
        // all-zero spectrum
        return Ok(1);
    }
    let mut best = 1;
    let mut best_curvature = f64::NEG_INFINITY;
    for k in 1..=logs.len() - 2 {
        let c = logs[k - 1] - 2.0 * logs[k] + logs[k + 1];
        if c > best_curvature {
            best_curvature = c;
            best = k;
        }
    }
    Ok(best)
}

/// Best rank-`rank` approximation of `matrix` (or of the elbow rank when
/// `rank` is `None`) together with the spectrum report.
pub fn truncate_matrix(matrix: &DMatrix<f64>, rank: Option<usize>) -> Result<(DMatrix<f64>, SvdReport)> {
    let full = matrix.nrows().min(matrix.ncols());
    if let Some(r) = rank {
        if r == 0 || r > full {
            return arg(format!("rank {r} outside [1, {full}]"));
        }
    }
    // nalgebra's bidiagonal SVD can return wrong singular vectors for wide,
    // rank-deficient inputs; factor the tall orientation instead.
    let wide = matrix.nrows() < matrix.ncols();
    let tall = if wide { matrix.transpose() } else { matrix.clone() };
    let svd = tall.svd(true, true);
    let left = svd.u.as_ref().ok_or_else(|| Error::Numerical("SVD without U".into()))?;
    let right = svd
        .v_t
        .as_ref()
        .ok_or_else(|| Error::Numerical("SVD without V".into()))?
        .transpose();
    let (u, v) = if wide {
        (right, left.clone())
    } else {
        (left.clone(), right)
    };

    // nalgebra does not guarantee ordering
    let mut order: Vec<usize> = (0..full).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();

    let chosen_rank = match rank {
        Some(r) => r,
        None if full >= 3 => detect_elbow(&singular_values)?,
        None => full,
    };

    let mut out = DMatrix::<f64>::zeros(matrix.nrows(), matrix.ncols());
    for &i in &order[..chosen_rank] {
        let s = svd.singular_values[i];
        out.ger(s, &u.column(i), &v.column(i), 1.0);
    }
    if chosen_rank == full {
        let error = (&out - matrix).norm();
        if !(error <= 1e-8 * matrix.norm().max(f64::MIN_POSITIVE)) {
            return Err(Error::Numerical(format!("SVD reconstruction error {error:e}")));
        }
    }
    let reconstruction_error = singular_values[chosen_rank..].iter().map(|s| s * s).sum::<f64>().sqrt();
    Ok((
        out,
        SvdReport {
            singular_values,
            chosen_rank,
            reconstruction_error,
        },
    ))
}

/// Reshapes `field` to a time × space matrix and replaces it by its truncated
/// SVD reconstruction.
pub fn denoise_field(field: &Field, rank: Option<usize>) -> Result<(Field, SvdReport)> {
    let matrix = DMatrix::from_row_slice(field.nt(), field.n_space(), field.values());
    let (low_rank, report) = truncate_matrix(&matrix, rank)?;
    let values = low_rank.transpose().as_slice().to_vec();
    Ok((field.with_values(values)?, report))
}
