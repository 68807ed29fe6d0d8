//! Sparsity-promoting regression solvers.
//!
//! Every solver maps `(Θ, U_t, λ or K, options)` to a [`Coefficients`]
//! vector. The solvers work on a [`Problem`], which caches the Gram matrix
//! `ΘᵀΘ`, the correlations `ΘᵀU_t` and the Lipschitz constant so that a
//! whole regularization path can be solved without recomputing them.

mod htp;
mod iht;
mod lasso;
mod ols;
mod stridge;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};

pub use ols::{ols_refit, OlsFit};

/// Tuning knobs shared by all solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Outer iterations (sweeps for coordinate descent).
    pub maxit: usize,
    /// Inner debiasing steps of IHT-d.
    pub subit: usize,
    /// Relative coefficient change that counts as converged.
    pub tol: f64,
    /// Lower end of the randomized-LASSO weight interval `[α, 1]`.
    pub lasso_alpha: f64,
    /// Ridge parameter of STRidge.
    pub ridge_lambda: f64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            maxit: 1000,
            subit: 100,
            tol: 1e-6,
            lasso_alpha: 0.2,
            ridge_lambda: 1e-5,
            seed: 0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.maxit == 0 || self.subit == 0 {
            return arg("maxit and subit must be at least 1");
        }
        if !(self.tol > 0.0) {
            return arg("tol must be positive");
        }
        if !(self.lasso_alpha > 0.0 && self.lasso_alpha <= 1.0) {
            return arg("lasso_alpha must lie in (0, 1]");
        }
        if !(self.ridge_lambda >= 0.0) {
            return arg("ridge_lambda must be non-negative");
        }
        Ok(())
    }
}

/// A solver result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub values: Vec<f64>,
    /// Sorted indices of the non-zero values.
    pub support: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
}

impl Coefficients {
    pub(crate) fn new(values: Vec<f64>, iterations: usize, converged: bool) -> Coefficients {
        let support = support_of(&values);
        Coefficients {
            values,
            support,
            iterations,
            converged,
        }
    }

    pub(crate) fn zeros(p: usize, iterations: usize) -> Coefficients {
        Coefficients::new(vec![0.0; p], iterations, true)
    }
}

fn support_of(values: &[f64]) -> Vec<usize> {
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(k, _)| k)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Lasso,
    #[serde(rename = "rlasso")]
    RandomizedLasso,
    Iht,
    #[serde(rename = "ihtd")]
    IhtD,
    Htp,
    Stridge,
}

impl SolverKind {
    pub const ALL: [SolverKind; 6] = [
        SolverKind::Lasso,
        SolverKind::RandomizedLasso,
        SolverKind::Iht,
        SolverKind::IhtD,
        SolverKind::Htp,
        SolverKind::Stridge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Lasso => "lasso",
            SolverKind::RandomizedLasso => "rlasso",
            SolverKind::Iht => "iht",
            SolverKind::IhtD => "ihtd",
            SolverKind::Htp => "htp",
            SolverKind::Stridge => "stridge",
        }
    }

    /// Penalty whose `λ_max` anchors this solver's regularization path.
    /// HTP is parameterized by a sparsity level instead; its path is laid
    /// out on the ℓ0 axis for display only.
    pub fn penalty(self, options: &SolverOptions) -> Penalty {
        match self {
            SolverKind::Lasso | SolverKind::RandomizedLasso => Penalty::L1,
            SolverKind::Iht | SolverKind::IhtD | SolverKind::Htp => Penalty::L0,
            SolverKind::Stridge => Penalty::Threshold {
                ridge_lambda: options.ridge_lambda,
            },
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<SolverKind> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown solver '{s}'")))
    }
}

/// Penalty families with a closed-form `λ_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Penalty {
    /// `λ‖ξ‖₁`: `λ_max = max_k |θ_kᵀ U_t|`.
    L1,
    /// Hard thresholding at `√λ` after a `1/L` gradient step:
    /// `λ_max = (max_k |θ_kᵀ U_t| / L)²`.
    L0,
    /// Magnitude threshold on ridge coefficients: `λ_max = max_k |ξ_ridge,k|`.
    Threshold { ridge_lambda: f64 },
}

/// `sign(x)·max(|x| − γ, 0)`.
pub fn soft_threshold(x: f64, gamma: f64) -> f64 {
    if x > gamma {
        x - gamma
    } else if x < -gamma {
        x + gamma
    } else {
        0.0
    }
}

/// Zero when `|x| ≤ √λ`, `x` otherwise.
pub fn hard_threshold(x: f64, lambda: f64) -> f64 {
    if x.abs() <= lambda.sqrt() {
        0.0
    } else {
        x
    }
}

/// Largest eigenvalue of a symmetric positive semi-definite matrix by power
/// iteration with Rayleigh quotients.
pub(crate) fn top_eigenvalue(g: &DMatrix<f64>) -> f64 {
    let p = g.nrows();
    if p == 0 {
        return 0.0;
    }
    if p == 1 {
        return g[(0, 0)].max(0.0);
    }
    // deterministic start with no special symmetry
    let mut v = DVector::from_fn(p, |i, _| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_7).fract());
    v.normalize_mut();
    let mut rho = 0.0;
    for _ in 0..20_000 {
        let w = g * &v;
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let residual = (&w - &v * next).norm();
        v = w / norm;
        let settled = (next - rho).abs() <= 1e-15 * next.abs();
        rho = next;
        if residual <= 1e-11 * next.abs() || settled {
            break;
        }
    }
    rho
}

/// `L = ‖Θ‖₂²`, the Lipschitz constant of the gradient of `½‖U_t − Θξ‖²`.
pub fn lipschitz(theta: &DMatrix<f64>) -> f64 {
    top_eigenvalue(&theta.tr_mul(theta))
}

/// Smallest penalty for which the solver returns the all-zero vector.
pub fn lambda_max(theta: &DMatrix<f64>, ut: &DVector<f64>, penalty: Penalty) -> Result<f64> {
    Ok(Problem::new(theta, ut)?.lambda_max(penalty))
}

/// A least-squares problem with cached normal-equation quantities.
#[derive(Clone, Debug)]
pub struct Problem {
    theta: DMatrix<f64>,
    ut: DVector<f64>,
    gram: DMatrix<f64>,
    xty: DVector<f64>,
    ut_sq: f64,
    lipschitz: f64,
}

impl Problem {
    pub fn new(theta: &DMatrix<f64>, ut: &DVector<f64>) -> Result<Problem> {
        if theta.nrows() != ut.len() {
            return arg(format!("theta has {} rows, ut has {}", theta.nrows(), ut.len()));
        }
        if theta.iter().chain(ut.iter()).any(|v| !v.is_finite()) {
            return arg("non-finite entries in the linear system");
        }
        let gram = theta.tr_mul(theta);
        let xty = theta.tr_mul(ut);
        let lipschitz = top_eigenvalue(&gram);
        Ok(Problem {
            theta: theta.clone(),
            ut: ut.clone(),
            gram,
            xty,
            ut_sq: ut.norm_squared(),
            lipschitz,
        })
    }

    pub fn p(&self) -> usize {
        self.theta.ncols()
    }

    pub fn n(&self) -> usize {
        self.theta.nrows()
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub(crate) fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub(crate) fn xty(&self) -> &DVector<f64> {
        &self.xty
    }

    pub(crate) fn ut_sq(&self) -> f64 {
        self.ut_sq
    }

    /// `‖U_t − Θξ‖²`, computed directly from the rows.
    pub fn residual_sq(&self, xi: &[f64]) -> f64 {
        let mut r = self.ut.clone();
        for (k, &x) in xi.iter().enumerate() {
            if x != 0.0 {
                r.axpy(-x, &self.theta.column(k), 1.0);
            }
        }
        r.norm_squared()
    }

    /// `ΘᵀΘξ − ΘᵀU_t`.
    pub(crate) fn gradient(&self, xi: &DVector<f64>) -> DVector<f64> {
        &self.gram * xi - &self.xty
    }

    fn max_correlation(&self) -> f64 {
        self.xty.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn lambda_max(&self, penalty: Penalty) -> f64 {
        let c = self.max_correlation();
        match penalty {
            Penalty::L1 => c,
            Penalty::L0 if self.lipschitz > 0.0 => (c / self.lipschitz).powi(2),
            Penalty::L0 => 0.0,
            Penalty::Threshold { ridge_lambda } => {
                let all: Vec<usize> = (0..self.p()).collect();
                match self.ridge_on(&all, ridge_lambda) {
                    Ok(xi) => xi.iter().fold(0.0, |m, v| m.max(v.abs())),
                    Err(_) => 0.0,
                }
            }
        }
    }

    /// Solves `(G_SS + λ_R I) ξ_S = c_S` and scatters the result into a
    /// length-p vector.
    pub(crate) fn ridge_on(&self, support: &[usize], ridge_lambda: f64) -> Result<Vec<f64>> {
        let mut xi = vec![0.0; self.p()];
        if support.is_empty() {
            return Ok(xi);
        }
        let mut g = self.gram.select_rows(support).select_columns(support);
        for i in 0..support.len() {
            g[(i, i)] += ridge_lambda;
        }
        let c = DVector::from_iterator(support.len(), support.iter().map(|&k| self.xty[k]));
        let singular = || Error::Solver(format!("singular normal equations on support {support:?}"));
        let diag_max = g.diagonal().amax();
        let chol = g.cholesky().ok_or_else(singular)?;
        let pivot_min = chol
            .l_dirty()
            .diagonal()
            .iter()
            .fold(f64::INFINITY, |m, v| m.min(v * v));
        if !(pivot_min > 1e-13 * diag_max) {
            return Err(singular());
        }
        let sol = chol.solve(&c);
        if sol.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver(format!("non-finite restricted solve on {support:?}")));
        }
        for (i, &k) in support.iter().enumerate() {
            xi[k] = sol[i];
        }
        Ok(xi)
    }

    /// Dispatches to the solver `kind`. `param` is `λ` for penalized solvers
    /// and the sparsity level `K` for HTP.
    pub fn solve(&self, kind: SolverKind, param: f64, options: &SolverOptions) -> Result<Coefficients> {
        options.validate()?;
        if !(param >= 0.0) {
            return arg(format!("regularization parameter must be non-negative, got {param}"));
        }
        match kind {
            SolverKind::Lasso => self.lasso(param, None, options),
            SolverKind::RandomizedLasso => self.randomized_lasso(param, options),
            SolverKind::Iht => self.iht(param, options),
            SolverKind::IhtD => self.iht_d(param, options),
            SolverKind::Htp => self.htp(param.round() as usize, options),
            SolverKind::Stridge => self.stridge(param, options),
        }
    }
}

/// Cyclic coordinate-descent LASSO.
pub fn lasso_cd(theta: &DMatrix<f64>, ut: &DVector<f64>, lambda: f64, options: &SolverOptions) -> Result<Coefficients> {
    Problem::new(theta, ut)?.solve(SolverKind::Lasso, lambda, options)
}

/// Randomized LASSO with weights drawn from `Uniform[α, 1]` using `options.seed`.
pub fn randomized_lasso(
    theta: &DMatrix<f64>,
    ut: &DVector<f64>,
    lambda: f64,
    options: &SolverOptions,
) -> Result<Coefficients> {
    Problem::new(theta, ut)?.solve(SolverKind::RandomizedLasso, lambda, options)
}

/// Iterative hard thresholding.
pub fn iht(theta: &DMatrix<f64>, ut: &DVector<f64>, lambda: f64, options: &SolverOptions) -> Result<Coefficients> {
    Problem::new(theta, ut)?.solve(SolverKind::Iht, lambda, options)
}

/// Iterative hard thresholding with gradient-descent debiasing.
pub fn iht_d(theta: &DMatrix<f64>, ut: &DVector<f64>, lambda: f64, options: &SolverOptions) -> Result<Coefficients> {
    Problem::new(theta, ut)?.solve(SolverKind::IhtD, lambda, options)
}

/// Hard thresholding pursuit with sparsity level `k`.
pub fn htp(theta: &DMatrix<f64>, ut: &DVector<f64>, k: usize, options: &SolverOptions) -> Result<Coefficients> {
    options.validate()?;
    Problem::new(theta, ut)?.htp(k, options)
}

/// Sequentially thresholded ridge regression.
pub fn stridge(
    theta: &DMatrix<f64>,
    ut: &DVector<f64>,
    threshold: f64,
    options: &SolverOptions,
) -> Result<Coefficients> {
    Problem::new(theta, ut)?.solve(SolverKind::Stridge, threshold, options)
}
