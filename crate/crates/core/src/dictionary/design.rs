//! Design-matrix assembly and standardization.

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::fd;
use super::terms::TermSpec;
use crate::error::{arg, Error, Result};
use crate::field::{Field, SamplePoint, SampleSet};

/// Where a design came from; carried into output metadata.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub fields: Vec<String>,
    pub target: String,
    pub sample_seed: Option<u64>,
    pub sigma: Option<f64>,
}

/// Unstandardized linear system `ut ≈ theta · ξ`.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignSystem {
    /// N × p.
    pub theta: DMatrix<f64>,
    pub ut: DVector<f64>,
    pub labels: Vec<String>,
    /// Column of the constant term `1`, if the dictionary has one.
    pub constant: Option<usize>,
    pub provenance: Provenance,
}

impl DesignSystem {
    pub fn new(theta: DMatrix<f64>, ut: DVector<f64>, labels: Vec<String>) -> Result<DesignSystem> {
        if theta.nrows() != ut.len() || theta.ncols() != labels.len() {
            return arg(format!(
                "design shape mismatch: theta {}x{}, ut {}, {} labels",
                theta.nrows(),
                theta.ncols(),
                ut.len(),
                labels.len()
            ));
        }
        if theta.iter().chain(ut.iter()).any(|v| !v.is_finite()) {
            return arg("design contains non-finite entries");
        }
        let constant = labels.iter().position(|l| l == "1");
        Ok(DesignSystem {
            theta,
            ut,
            labels,
            constant,
            provenance: Provenance::default(),
        })
    }

    pub fn n(&self) -> usize {
        self.theta.nrows()
    }

    pub fn p(&self) -> usize {
        self.theta.ncols()
    }

    /// Sub-design made of the given rows, in the given order.
    pub fn rows(&self, rows: &[usize]) -> DesignSystem {
        DesignSystem {
            theta: self.theta.select_rows(rows),
            ut: DVector::from_iterator(rows.len(), rows.iter().map(|&r| self.ut[r])),
            labels: self.labels.clone(),
            constant: self.constant,
            provenance: self.provenance.clone(),
        }
    }

    pub fn standardize(&self) -> Standardized {
        standardize(&self.theta, &self.ut, self.constant)
    }
}

fn eval_term(fields: &[Field], term: &TermSpec, point: &SamplePoint) -> f64 {
    let mut value = 1.0;
    for (f, &p) in fields.iter().zip(&term.powers) {
        if p > 0 {
            value *= f.at(&point.space[..f.dims()], point.t).powi(p as i32);
        }
    }
    if let Some(d) = term.derivative {
        value *= fd::spatial_derivative_at(&fields[d.field], point, d.axis, d.order);
    }
    value
}

/// Evaluates every term at every sample point and the forward time
/// derivative of `fields[target]` as the response.
pub fn assemble_design(
    fields: &[Field],
    target: usize,
    terms: &[TermSpec],
    samples: &SampleSet,
) -> Result<DesignSystem> {
    let Some(first) = fields.first() else {
        return arg("no input fields");
    };
    if target >= fields.len() {
        return arg(format!("target index {target} out of range"));
    }
    if fields.iter().any(|f| !f.same_grid(first)) {
        return arg("all fields must share one grid");
    }
    for t in terms {
        if t.powers.len() != fields.len()
            || t.derivative
                .is_some_and(|d| d.field >= fields.len() || d.axis >= first.dims())
        {
            return arg(format!(
                "term '{}' does not match the {} input field(s)",
                t.label,
                fields.len()
            ));
        }
    }
    let margin = terms.iter().map(TermSpec::margin).max().unwrap_or(0);
    for p in &samples.points {
        let inside_space = (0..first.dims()).all(|a| p.space[a] >= margin && p.space[a] + margin < first.shape()[a]);
        if !inside_space || p.t + 1 >= first.nt() {
            return Err(Error::Numerical(format!(
                "sample {p:?} touches cells without valid derivatives (margin {margin})"
            )));
        }
    }
    let n = samples.len();
    let theta = DMatrix::from_fn(n, terms.len(), |i, k| eval_term(fields, &terms[k], &samples.points[i]));
    let ut = DVector::from_iterator(
        n,
        samples
            .points
            .iter()
            .map(|p| fd::time_derivative_at(&fields[target], p)),
    );
    let mut design = DesignSystem::new(theta, ut, terms.iter().map(|t| t.label.clone()).collect())?;
    design.constant = terms.iter().position(TermSpec::is_constant);
    design.provenance.fields = fields.iter().map(|f| f.name().to_string()).collect();
    design.provenance.target = fields[target].name().to_string();
    Ok(design)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DropReason {
    /// The intercept column; absorbed into the response mean.
    Constant,
    /// A non-constant column with zero variance on these rows.
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DroppedColumn {
    pub index: usize,
    pub reason: DropReason,
}

/// A centred and scaled design. Dropped columns are removed from `theta`;
/// `active[j]` is the original index of column `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardized {
    pub theta: DMatrix<f64>,
    pub ut: DVector<f64>,
    pub active: Vec<usize>,
    pub column_mean: Vec<f64>,
    pub column_scale: Vec<f64>,
    pub response_mean: f64,
    pub dropped: Vec<DroppedColumn>,
    /// Column count of the original design.
    pub p: usize,
}

impl Standardized {
    pub fn n(&self) -> usize {
        self.theta.nrows()
    }

    /// Maps indices into `active` back to original column indices.
    pub fn original_support(&self, support: &[usize]) -> Vec<usize> {
        support.iter().map(|&j| self.active[j]).collect()
    }

    /// Converts standardized coefficients (one per active column) into raw
    /// coefficients (one per original column) and an intercept.
    pub fn back_transform(&self, beta: &[f64]) -> (Vec<f64>, f64) {
        let mut raw = vec![0.0; self.p];
        let mut intercept = self.response_mean;
        for (j, &b) in beta.iter().enumerate() {
            let xi = b / self.column_scale[j];
            raw[self.active[j]] = xi;
            intercept -= xi * self.column_mean[j];
        }
        (raw, intercept)
    }

    /// Per-original-column record for serialization (dropped columns get
    /// mean and scale zero).
    pub fn record(&self) -> StandardizationRecord {
        let mut column_mean = vec![0.0; self.p];
        let mut column_scale = vec![0.0; self.p];
        for (j, &k) in self.active.iter().enumerate() {
            column_mean[k] = self.column_mean[j];
            column_scale[k] = self.column_scale[j];
        }
        StandardizationRecord {
            column_mean,
            column_scale,
            response_mean: self.response_mean,
            dropped: self.dropped.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardizationRecord {
    pub column_mean: Vec<f64>,
    pub column_scale: Vec<f64>,
    pub response_mean: f64,
    pub dropped: Vec<DroppedColumn>,
}

/// Centres every column, scales it to 1/n-variance one and centres the
/// response. The constant column and zero-variance columns are dropped.
pub fn standardize(theta: &DMatrix<f64>, ut: &DVector<f64>, constant: Option<usize>) -> Standardized {
    let n = theta.nrows() as f64;
    let mut active = Vec::new();
    let mut column_mean = Vec::new();
    let mut column_scale = Vec::new();
    let mut dropped = Vec::new();
    for k in 0..theta.ncols() {
        let col = theta.column(k);
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let scale = var.sqrt();
        let rms = (mean * mean + var).sqrt();
        if Some(k) == constant {
            dropped.push(DroppedColumn {
                index: k,
                reason: DropReason::Constant,
            });
        } else if rms == 0.0 || scale <= 1e-12 * rms {
            warn!("column {k} has zero variance on {} rows; dropped", theta.nrows());
            dropped.push(DroppedColumn {
                index: k,
                reason: DropReason::Degenerate,
            });
        } else {
            active.push(k);
            column_mean.push(mean);
            column_scale.push(scale);
        }
    }
    let z = DMatrix::from_fn(theta.nrows(), active.len(), |i, j| {
        (theta[(i, active[j])] - column_mean[j]) / column_scale[j]
    });
    let response_mean = ut.sum() / n;
    Standardized {
        theta: z,
        ut: ut.add_scalar(-response_mean),
        active,
        column_mean,
        column_scale,
        response_mean,
        dropped,
        p: theta.ncols(),
    }
}
