//! Achievability sweeps and solver comparisons.
//!
//! A [`Benchmark`] holds clean simulated fields and the true support. Each
//! trial adds a fresh noise realization, samples a fresh point set and asks
//! whether the true support comes back exactly.

use std::collections::BTreeSet;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::dictionary::{Preset, TermSource};
use crate::error::{Error, ErrorClass, Result};
use crate::exec::Exec;
use crate::field::{add_noise, Field, Region};
use crate::rng::derive_seed;
use crate::simulate::{simulate_burgers, BurgersConfig};
use crate::solvers::{SolverKind, SolverOptions};
use crate::stability::{build_design, pde_stride, solver_path, Denoise, StabilityParams, StrideConfig};

/// Clean fields plus what a trial should recover from them.
#[derive(Clone, Debug)]
pub struct Benchmark {
    pub name: String,
    pub fields: Vec<Field>,
    pub target: usize,
    /// True support, without the constant term.
    pub truth: Vec<String>,
    pub region: Option<Region>,
    /// Applied to noisy fields only; clean fields are used as they are.
    pub denoise: Denoise,
}

/// Rank kept when denoising noisy Burgers data. The elbow of the Burgers
/// spectrum sits at rank 1, which discards the dynamics.
pub const BURGERS_RANK: usize = 12;

impl Benchmark {
    /// Default Burgers run with truth `{u·u_x, u_xx}`.
    pub fn burgers() -> Result<Benchmark> {
        Ok(Benchmark {
            name: "burgers".into(),
            fields: vec![simulate_burgers(&BurgersConfig::default())?],
            target: 0,
            truth: vec!["u·u_x".into(), "u_xx".into()],
            region: None,
            denoise: Denoise::Rank(BURGERS_RANK),
        })
    }

    /// Fields and denoising for a trial at noise level `sigma`.
    fn trial_fields(&self, sigma: f64, trial_seed: u64) -> Result<(Vec<Field>, Denoise)> {
        if sigma == 0.0 {
            return Ok((self.fields.clone(), Denoise::None));
        }
        let noisy = self
            .fields
            .iter()
            .enumerate()
            .map(|(i, f)| add_noise(f, sigma, derive_seed(trial_seed, "noise", &[i as u64])))
            .collect::<Result<_>>()?;
        Ok((noisy, self.denoise))
    }
}

/// How a trial decides success.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Some point of a single solver path has exactly the true support.
    SolverPath,
    /// The stable support equals the true support.
    #[default]
    Stride,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentDesign {
    pub n: usize,
    pub preset: Preset,
    pub sigma: f64,
    pub reps: usize,
    pub mode: Mode,
    pub solver: SolverKind,
    pub options: SolverOptions,
    pub params: StabilityParams,
}

impl ExperimentDesign {
    pub fn new(n: usize, preset: Preset, sigma: f64) -> ExperimentDesign {
        ExperimentDesign {
            n,
            preset,
            sigma,
            reps: 20,
            mode: Mode::Stride,
            solver: SolverKind::IhtD,
            options: SolverOptions::default(),
            params: StabilityParams::default(),
        }
    }

    fn config(&self, bench: &Benchmark, denoise: Denoise) -> StrideConfig {
        StrideConfig {
            terms: TermSource::Preset(self.preset),
            n: self.n,
            region: bench.region.clone(),
            denoise,
            solver: self.solver,
            options: self.options.clone(),
            params: self.params.clone(),
            sigma: Some(self.sigma),
        }
    }
}

/// One line of the achievability table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AchievabilityRow {
    pub model: String,
    pub p: usize,
    pub sigma: f64,
    pub n: usize,
    pub reps: usize,
    pub successes: usize,
    pub frequency: f64,
    /// Variance `f(1 − f)/reps` of the Bernoulli estimate.
    pub variance: f64,
}

impl AchievabilityRow {
    fn new(model: &str, design: &ExperimentDesign, successes: usize) -> AchievabilityRow {
        let f = successes as f64 / design.reps as f64;
        AchievabilityRow {
            model: model.into(),
            p: design.preset.size(),
            sigma: design.sigma,
            n: design.n,
            reps: design.reps,
            successes,
            frequency: f,
            variance: f * (1.0 - f) / design.reps as f64,
        }
    }
}

fn matches_truth<'a>(labels: impl IntoIterator<Item = &'a str>, truth: &BTreeSet<&str>) -> bool {
    let got: BTreeSet<&str> = labels.into_iter().filter(|l| *l != "1").collect();
    &got == truth
}

/// Runs one trial; `Ok(false)` for a failed recovery. Numerical failures
/// inside a trial count as failed recoveries.
pub fn run_trial(bench: &Benchmark, design: &ExperimentDesign, trial_seed: u64, exec: Exec) -> Result<bool> {
    let names: Vec<&str> = bench.fields.iter().map(Field::name).collect();
    let dims = bench.fields[0].dims();
    let labels: Vec<String> = TermSource::Preset(design.preset)
        .terms(&names, dims)?
        .into_iter()
        .map(|t| t.label)
        .collect();
    if let Some(missing) = bench.truth.iter().find(|t| !labels.contains(t)) {
        warn!(
            "true term {missing} is not in {}; trial counts as a failure",
            design.preset
        );
        return Ok(false);
    }
    let truth: BTreeSet<&str> = bench.truth.iter().map(String::as_str).collect();

    let (fields, denoise) = bench.trial_fields(design.sigma, trial_seed)?;
    let config = design.config(bench, denoise);
    let outcome = match design.mode {
        Mode::Stride => pde_stride(&fields, bench.target, &config, trial_seed, exec)
            .map(|(model, _)| matches_truth(model.labels(), &truth)),
        Mode::SolverPath => build_design(&fields, bench.target, &config, trial_seed).and_then(|d| {
            let (_, supports) = solver_path(
                &d,
                design.solver,
                &design.options,
                design.params.m,
                design.params.epsilon,
            )?;
            Ok(supports
                .iter()
                .any(|s| matches_truth(s.iter().map(|&k| d.labels[k].as_str()), &truth)))
        }),
    };
    match outcome {
        Err(e) if e.class() == ErrorClass::Numerical => {
            warn!("trial {trial_seed:#x} failed numerically: {e}");
            Ok(false)
        }
        other => other,
    }
}

fn trial_seed(master: u64, design: usize, trial: usize) -> u64 {
    derive_seed(master, "trial", &[design as u64, trial as u64])
}

fn successes(bench: &Benchmark, design: &ExperimentDesign, index: usize, master: u64, exec: Exec) -> Result<usize> {
    if design.reps == 0 {
        return Err(Error::Argument("reps must be at least 1".into()));
    }
    let outcomes = exec.map(design.reps, |t| {
        run_trial(bench, design, trial_seed(master, index, t), exec)
    });
    outcomes.into_iter().try_fold(0, |acc, r| r.map(|ok| acc + ok as usize))
}

/// Success frequency of every design, sorted by `(p, σ, n)`. Trial seeds
/// depend on the master seed, the design index and the trial index only.
pub fn achievability(
    bench: &Benchmark,
    designs: &[ExperimentDesign],
    master: u64,
    exec: Exec,
) -> Result<Vec<AchievabilityRow>> {
    if designs.is_empty() {
        return Err(Error::Argument("no designs to run".into()));
    }
    let mut rows = Vec::with_capacity(designs.len());
    for (d, design) in designs.iter().enumerate() {
        let ok = successes(bench, design, d, master, exec)?;
        log::info!(
            "{} p={} sigma={} n={}: {ok}/{}",
            bench.name,
            design.preset.size(),
            design.sigma,
            design.n,
            design.reps
        );
        rows.push(AchievabilityRow::new(&bench.name, design, ok));
    }
    rows.sort_by(|a, b| {
        (a.p, a.sigma, a.n)
            .partial_cmp(&(b.p, b.sigma, b.n))
            .expect("finite sigma")
    });
    Ok(rows)
}

/// Success table of one solver over a design grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverTable {
    pub solver: SolverKind,
    pub rows: Vec<AchievabilityRow>,
}

impl SolverTable {
    pub fn mean_frequency(&self) -> f64 {
        self.rows.iter().map(|r| r.frequency).sum::<f64>() / self.rows.len().max(1) as f64
    }
}

/// Runs every solver on the same grid in solver-path mode. Grid point `d`
/// and trial `t` use the same seed for every solver, so the noise and the
/// sampled points are paired across solvers.
#[allow(clippy::too_many_arguments)]
pub fn compare_solvers(
    bench: &Benchmark,
    grid: &[(usize, Preset, f64)],
    solvers: &[SolverKind],
    reps: usize,
    options: &SolverOptions,
    params: &StabilityParams,
    master: u64,
    exec: Exec,
) -> Result<Vec<SolverTable>> {
    solvers
        .iter()
        .map(|&solver| {
            let designs: Vec<ExperimentDesign> = grid
                .iter()
                .map(|&(n, preset, sigma)| ExperimentDesign {
                    reps,
                    mode: Mode::SolverPath,
                    solver,
                    options: options.clone(),
                    params: params.clone(),
                    ..ExperimentDesign::new(n, preset, sigma)
                })
                .collect();
            Ok(SolverTable {
                solver,
                rows: achievability(bench, &designs, master, exec)?,
            })
        })
        .collect()
}
