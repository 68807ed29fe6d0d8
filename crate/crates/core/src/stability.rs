//! Stability selection over a regularization path.
//!
//! Each of `B` random half-size subsamples of the design is standardized and
//! solved at every point of a shared λ-path. The importance `Π̂_k^λ` of term
//! `k` is the fraction of subsamples whose support contains `k`; the stable
//! support keeps the terms whose importance at `λ_min` reaches `π_th`.

use log::{debug, warn};
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::denoise::denoise_field;
use crate::dictionary::{assemble_design, DesignSystem, TermSource};
use crate::error::{arg, Error, Result};
use crate::exec::Exec;
use crate::field::{sample_points, Field, Region};
use crate::rng;
use crate::solvers::{ols_refit, Penalty, Problem, SolverKind, SolverOptions};

/// Stability-selection parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StabilityParams {
    /// Number of subsamples `B`.
    pub b: usize,
    /// Path length `M`.
    pub m: usize,
    /// `λ_min = ε·λ_max`.
    pub epsilon: f64,
    pub pi_th: f64,
}

impl Default for StabilityParams {
    fn default() -> Self {
        StabilityParams {
            b: 250,
            m: 20,
            epsilon: 0.1,
            pi_th: 0.8,
        }
    }
}

impl StabilityParams {
    pub fn validate(&self) -> Result<()> {
        if self.b == 0 || self.m == 0 {
            return arg("B and M must be at least 1");
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return arg("epsilon must lie in (0, 1]");
        }
        if !(self.pi_th > 0.0 && self.pi_th <= 1.0) {
            return arg("pi_th must lie in (0, 1]");
        }
        Ok(())
    }
}

/// Log-spaced penalties from `λ_max` down to `ε·λ_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaPath {
    pub lambda_max: f64,
    pub epsilon: f64,
    pub values: Vec<f64>,
}

impl LambdaPath {
    pub fn new(lambda_max: f64, m: usize, epsilon: f64) -> Result<LambdaPath> {
        if !(lambda_max > 0.0) || !lambda_max.is_finite() {
            return Err(Error::DegeneratePath);
        }
        if m == 0 || !(epsilon > 0.0 && epsilon <= 1.0) {
            return arg(format!("invalid path: M = {m}, epsilon = {epsilon}"));
        }
        let values = (0..m)
            .map(|j| match j {
                0 => lambda_max,
                _ if j + 1 == m => lambda_max * epsilon,
                _ => lambda_max * epsilon.powf(j as f64 / (m - 1) as f64),
            })
            .collect();
        Ok(LambdaPath {
            lambda_max,
            epsilon,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `λ* = λ/λ_max`.
    pub fn normalized(&self) -> Vec<f64> {
        self.values.iter().map(|v| v / self.lambda_max).collect()
    }

    pub fn lambda_min(&self) -> f64 {
        *self.values.last().expect("non-empty path")
    }
}

/// Path for a standardized system.
pub fn build_path(
    theta: &nalgebra::DMatrix<f64>,
    ut: &nalgebra::DVector<f64>,
    penalty: Penalty,
    m: usize,
    epsilon: f64,
) -> Result<LambdaPath> {
    let problem = Problem::new(theta, ut)?;
    LambdaPath::new(problem.lambda_max(penalty), m, epsilon)
}

/// `b` independent draws of `⌊n/2⌋` distinct sorted row indices.
pub fn subsample_indices(n: usize, b: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if n < 4 {
        return arg(format!("subsampling needs at least 4 rows, got {n}"));
    }
    Ok((0..b).map(|i| subsample(n, seed, i)).collect())
}

fn subsample(n: usize, seed: u64, i: usize) -> Vec<usize> {
    let mut r = rng::stream(seed, "subsample", &[i as u64]);
    let mut rows = index::sample(&mut r, n, n / 2).into_vec();
    rows.sort_unstable();
    rows
}

/// Importance of every dictionary term along the path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityProfile {
    pub path: LambdaPath,
    /// `pi[j][k]`: importance of term `k` at path point `j`.
    pub pi: Vec<Vec<f64>>,
    pub labels: Vec<String>,
    pub b: usize,
    pub seed: u64,
    pub solver: SolverKind,
    /// Number of (subsample, λ) solves that failed and counted as empty.
    pub failures: usize,
}

impl StabilityProfile {
    pub fn lambda_min_row(&self) -> &[f64] {
        self.pi.last().expect("non-empty path")
    }
}

/// Solver parameter at path point `j`. ℓ1 penalties scale with the row
/// count of the standardized system, so they are rescaled from the full
/// design to the subsample; HTP walks sparsity levels `1, 2, …` instead.
fn path_parameter(kind: SolverKind, path: &LambdaPath, j: usize, n_full: usize, n_sub: usize, p_active: usize) -> f64 {
    match kind {
        SolverKind::Lasso | SolverKind::RandomizedLasso => path.values[j] * n_sub as f64 / n_full as f64,
        SolverKind::Htp => (j + 1).min(p_active) as f64,
        _ => path.values[j],
    }
}

/// Per-subsample supports (original column indices) at every path point.
fn subsample_supports(
    design: &DesignSystem,
    rows: &[usize],
    kind: SolverKind,
    options: &SolverOptions,
    path: &LambdaPath,
    seed: u64,
    i: usize,
) -> (Vec<Vec<usize>>, usize) {
    let empty = || vec![Vec::new(); path.len()];
    let sub = design.rows(rows).standardize();
    if sub.active.is_empty() {
        warn!("subsample {i}: no active columns");
        return (empty(), path.len());
    }
    let problem = match Problem::new(&sub.theta, &sub.ut) {
        Ok(p) => p,
        Err(e) => {
            warn!("subsample {i}: {e}");
            return (empty(), path.len());
        }
    };
    let opts = SolverOptions {
        seed: rng::derive_seed(seed, "solver", &[i as u64]),
        ..options.clone()
    };
    let mut failures = 0;
    let supports = (0..path.len())
        .map(|j| {
            let param = path_parameter(kind, path, j, design.n(), rows.len(), sub.active.len());
            match problem.solve(kind, param, &opts) {
                Ok(c) => sub.original_support(&c.support),
                Err(e) => {
                    debug!("subsample {i}, lambda {j}: {e}");
                    failures += 1;
                    Vec::new()
                }
            }
        })
        .collect();
    (supports, failures)
}

/// Runs the solver on `params.b` subsamples at every point of the path
/// anchored on the full standardized design.
pub fn importance_profile(
    design: &DesignSystem,
    kind: SolverKind,
    options: &SolverOptions,
    params: &StabilityParams,
    seed: u64,
    exec: Exec,
) -> Result<StabilityProfile> {
    params.validate()?;
    options.validate()?;
    let n = design.n();
    if n < 4 {
        return arg(format!("stability selection needs at least 4 rows, got {n}"));
    }
    let full = design.standardize();
    if full.active.is_empty() {
        return Err(Error::DegeneratePath);
    }
    let path = build_path(&full.theta, &full.ut, kind.penalty(options), params.m, params.epsilon)?;

    let runs = exec.map(params.b, |i| {
        let rows = subsample(n, seed, i);
        subsample_supports(design, &rows, kind, options, &path, seed, i)
    });

    let p = design.p();
    let mut counts = vec![vec![0u32; p]; path.len()];
    let mut failures = 0;
    for (supports, failed) in &runs {
        failures += failed;
        for (row, support) in counts.iter_mut().zip(supports) {
            for &k in support {
                row[k] += 1;
            }
        }
    }
    let total = params.b * path.len();
    if failures * 10 > total {
        return Err(Error::Numerical(format!(
            "{failures} of {total} subsample solves failed for {kind}"
        )));
    }
    if failures > 0 {
        warn!("{failures} of {total} subsample solves failed and counted as empty supports");
    }
    let pi = counts
        .into_iter()
        .map(|row| row.into_iter().map(|c| c as f64 / params.b as f64).collect())
        .collect();
    Ok(StabilityProfile {
        path,
        pi,
        labels: design.labels.clone(),
        b: params.b,
        seed,
        solver: kind,
        failures,
    })
}

/// Supports (original column indices) along the path on the whole design,
/// without subsampling. A failed solve yields an empty support.
pub fn solver_path(
    design: &DesignSystem,
    kind: SolverKind,
    options: &SolverOptions,
    m: usize,
    epsilon: f64,
) -> Result<(LambdaPath, Vec<Vec<usize>>)> {
    options.validate()?;
    let full = design.standardize();
    if full.active.is_empty() {
        return Err(Error::DegeneratePath);
    }
    let problem = Problem::new(&full.theta, &full.ut)?;
    let path = LambdaPath::new(problem.lambda_max(kind.penalty(options)), m, epsilon)?;
    let supports = (0..path.len())
        .map(|j| {
            let param = path_parameter(kind, &path, j, design.n(), design.n(), full.active.len());
            match problem.solve(kind, param, options) {
                Ok(c) => full.original_support(&c.support),
                Err(e) => {
                    debug!("solver path, lambda {j}: {e}");
                    Vec::new()
                }
            }
        })
        .collect();
    Ok((path, supports))
}

/// Indices with importance at `λ_min` of at least `pi_th`.
pub fn stable_support(profile: &StabilityProfile, pi_th: f64) -> Vec<usize> {
    profile
        .lambda_min_row()
        .iter()
        .enumerate()
        .filter(|(_, &pi)| pi >= pi_th)
        .map(|(k, _)| k)
        .collect()
}

/// One selected term of a recovered model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectedTerm {
    pub index: usize,
    pub label: String,
    pub coefficient: f64,
    pub importance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub n: usize,
    pub p: usize,
    pub sigma: Option<f64>,
    pub solver: SolverKind,
    pub options: SolverOptions,
    pub params: StabilityParams,
    pub seed: u64,
}

/// Stable support with least-squares coefficients on the raw columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveredModel {
    pub support: Vec<SelectedTerm>,
    /// Refit intercept; fitted only when the dictionary has a constant term.
    pub intercept: f64,
    pub meta: ModelMeta,
}

impl RecoveredModel {
    pub fn labels(&self) -> Vec<&str> {
        self.support.iter().map(|t| t.label.as_str()).collect()
    }

    pub fn coefficient(&self, label: &str) -> Option<f64> {
        self.support.iter().find(|t| t.label == label).map(|t| t.coefficient)
    }

    pub fn has_intercept_term(&self) -> bool {
        self.intercept.abs() > 1e-12
    }
}

/// Stability selection followed by the least-squares refit.
pub fn stride(
    design: &DesignSystem,
    kind: SolverKind,
    options: &SolverOptions,
    params: &StabilityParams,
    seed: u64,
    exec: Exec,
) -> Result<(RecoveredModel, StabilityProfile)> {
    let profile = importance_profile(design, kind, options, params, seed, exec).map_err(|e| e.at("stability"))?;
    let support = stable_support(&profile, params.pi_th);
    let fit = ols_refit(&design.theta, &design.ut, &support, design.constant.is_some()).map_err(|e| e.at("refit"))?;
    let importance = profile.lambda_min_row();
    let model = RecoveredModel {
        support: support
            .iter()
            .map(|&k| SelectedTerm {
                index: k,
                label: design.labels[k].clone(),
                coefficient: fit.coefficients[k],
                importance: importance[k],
            })
            .collect(),
        intercept: fit.intercept,
        meta: ModelMeta {
            n: design.n(),
            p: design.p(),
            sigma: design.provenance.sigma,
            solver: kind,
            options: options.clone(),
            params: params.clone(),
            seed,
        },
    };
    Ok((model, profile))
}

/// How the fields are denoised before differentiation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Denoise {
    #[default]
    None,
    /// Truncate at the detected elbow of the singular spectrum.
    Elbow,
    Rank(usize),
}

/// End-to-end configuration of [`pde_stride`].
#[derive(Clone, Debug, PartialEq)]
pub struct StrideConfig {
    pub terms: TermSource,
    /// Number of sample points.
    pub n: usize,
    /// Sampling box; the whole grid when `None`.
    pub region: Option<Region>,
    pub denoise: Denoise,
    pub solver: SolverKind,
    pub options: SolverOptions,
    pub params: StabilityParams,
    /// Noise level already applied to the fields, for the metadata only.
    pub sigma: Option<f64>,
}

impl StrideConfig {
    pub fn new(terms: TermSource, n: usize) -> StrideConfig {
        StrideConfig {
            terms,
            n,
            region: None,
            denoise: Denoise::None,
            solver: SolverKind::IhtD,
            options: SolverOptions::default(),
            params: StabilityParams::default(),
            sigma: None,
        }
    }
}

/// Denoises `fields` as configured.
pub fn denoise_all(fields: &[Field], mode: Denoise) -> Result<Vec<Field>> {
    fields
        .iter()
        .map(|f| match mode {
            Denoise::None => Ok(f.clone()),
            Denoise::Elbow => denoise_field(f, None).map(|r| r.0),
            Denoise::Rank(r) => denoise_field(f, Some(r)).map(|r| r.0),
        })
        .collect()
}

/// Builds the design for `fields[target]` from `config`: denoise, sample
/// points, assemble.
pub fn build_design(fields: &[Field], target: usize, config: &StrideConfig, seed: u64) -> Result<DesignSystem> {
    if fields.is_empty() || target >= fields.len() {
        return arg(format!("target {target} out of range for {} field(s)", fields.len()));
    }
    let denoised = denoise_all(fields, config.denoise).map_err(|e| e.at("denoise"))?;
    let names: Vec<&str> = fields.iter().map(Field::name).collect();
    let terms = config
        .terms
        .terms(&names, fields[0].dims())
        .map_err(|e| e.at("dictionary"))?;
    let margin = terms.iter().map(|t| t.margin()).max().unwrap_or(0);
    let region = config.region.clone().unwrap_or_else(|| Region::whole(&fields[0]));
    let sample_seed = rng::derive_seed(seed, "samples", &[]);
    let samples = sample_points(&denoised[0], &region, config.n, margin, sample_seed).map_err(|e| e.at("sampling"))?;
    let mut design = assemble_design(&denoised, target, &terms, &samples).map_err(|e| e.at("dictionary"))?;
    design.provenance.sample_seed = Some(sample_seed);
    design.provenance.sigma = config.sigma;
    Ok(design)
}

/// The whole pipeline on already-noisy fields.
pub fn pde_stride(
    fields: &[Field],
    target: usize,
    config: &StrideConfig,
    seed: u64,
    exec: Exec,
) -> Result<(RecoveredModel, StabilityProfile)> {
    let design = build_design(fields, target, config, seed)?;
    stride(
        &design,
        config.solver,
        &config.options,
        &config.params,
        rng::derive_seed(seed, "stability", &[]),
        exec,
    )
}
