use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use log::info;
use serde::Serialize;

use pdestride::denoise::denoise_field;
use pdestride::dictionary::{Preset, TermSource};
use pdestride::error::Error;
use pdestride::experiments::{achievability, Benchmark, ExperimentDesign, Mode};
use pdestride::field::{add_noise, Field, Region};
use pdestride::io::{self, FieldHeader};
use pdestride::rng::derive_seed;
use pdestride::simulate::{simulate_burgers, simulate_gray_scott, BurgersConfig, GrayScottConfig};
use pdestride::solvers::{Problem, SolverKind, SolverOptions};
use pdestride::stability::{build_design, stride, Denoise, StabilityParams, StrideConfig};
use pdestride::Exec;

use crate::args::*;

/// What a command read, wrote and which seeds it used.
#[derive(Default)]
pub struct Record {
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

impl Record {
    fn seed(mut self, name: &str, value: u64) -> Record {
        self.seeds.insert(name.into(), value);
        self
    }
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Error::Argument(msg.into()).into()
}

/// Header and binary file of a field.
fn field_files(header: &Path) -> Result<Vec<PathBuf>> {
    let h: FieldHeader = io::read_json(header)?;
    Ok(vec![header.to_path_buf(), header.with_file_name(h.data)])
}

fn read_field(header: &Path) -> Result<Field> {
    io::read_field(header).with_context(|| format!("reading {}", header.display()))
}

fn write_field(field: &Field, header: &Path) -> Result<Vec<PathBuf>> {
    io::write_field(field, header)?;
    field_files(header)
}

fn solver_options(flags: &SolverFlags, seed: u64) -> Result<(SolverKind, SolverOptions)> {
    let kind: SolverKind = flags.solver.parse()?;
    let options = SolverOptions {
        maxit: flags.maxit,
        subit: flags.subit,
        tol: flags.tol,
        lasso_alpha: flags.alpha,
        ridge_lambda: flags.ridge,
        seed,
    };
    options.validate()?;
    Ok((kind, options))
}

fn stability_params(flags: &StabilityFlags) -> Result<StabilityParams> {
    let params = StabilityParams {
        b: flags.b,
        m: flags.m,
        epsilon: flags.eps,
        pi_th: flags.pith,
    };
    params.validate()?;
    Ok(params)
}

/// The main output of a command, next to which the manifest goes.
pub fn main_output(command: &Command) -> Option<PathBuf> {
    Some(match command {
        Command::Simulate(a) => prefixed(&a.out, "u"),
        Command::Noise(a) => a.out.clone(),
        Command::Denoise(a) => a.out.clone(),
        Command::Dictionary(a) => a.out.clone(),
        Command::Solve(a) => a.out.clone(),
        Command::Stride(a) => a.model.clone(),
        Command::Achievability(a) => a.out.clone(),
        Command::Convert(a) => a.output.clone(),
        Command::Replay(_) => return None,
    })
}

pub fn run(command: &Command, exec: Exec) -> Result<Record> {
    match command {
        Command::Simulate(a) => simulate(a, exec),
        Command::Noise(a) => noise(a),
        Command::Denoise(a) => denoise(a),
        Command::Dictionary(a) => dictionary(a),
        Command::Solve(a) => solve(a),
        Command::Stride(a) => run_stride(a, exec),
        Command::Achievability(a) => run_achievability(a, exec),
        Command::Convert(a) => convert(a),
        Command::Replay(_) => unreachable!("replay is handled by the caller"),
    }
}

/// `<out>_<var>.json`.
fn prefixed(out: &Path, var: &str) -> PathBuf {
    let base = out
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{base}_{var}.json"))
}

fn simulate(a: &SimulateArgs, exec: Exec) -> Result<Record> {
    let mut record = Record::default().seed("initial_condition", a.seed);
    match a.model {
        ModelName::Burgers => {
            let config = BurgersConfig {
                nx: a.grid.unwrap_or(256),
                nt: a.steps.unwrap_or(999) + 1,
                save_stride: a.save_stride.unwrap_or(1),
                ..Default::default()
            };
            let u = simulate_burgers(&config)?;
            record.outputs = write_field(&u, &prefixed(&a.out, "u"))?;
        }
        ModelName::GrayScott => {
            let mut config = GrayScottConfig {
                dims: a.dims,
                grid: if a.full { 128 } else { a.grid.unwrap_or(64) },
                steps: a.steps.unwrap_or(10_000),
                save_stride: a.save_stride.unwrap_or(100),
                save_start: a.save_start,
                seed: a.seed,
                ..Default::default()
            };
            if let Some(ic) = &a.ic {
                config.init = io::read_json(ic)?;
                record.inputs.push(ic.clone());
            }
            let (u, v) = simulate_gray_scott(&config, exec)?;
            record.outputs = write_field(&u, &prefixed(&a.out, "u"))?;
            record.outputs.extend(write_field(&v, &prefixed(&a.out, "v"))?);
        }
    }
    Ok(record)
}

fn noise(a: &NoiseArgs) -> Result<Record> {
    let field = read_field(&a.field)?;
    let noisy = add_noise(&field, a.sigma, a.seed)?;
    Ok(Record {
        inputs: field_files(&a.field)?,
        outputs: write_field(&noisy, &a.out)?,
        ..Record::default().seed("noise", a.seed)
    })
}

fn denoise(a: &DenoiseArgs) -> Result<Record> {
    let field = read_field(&a.field)?;
    let (clean, report) = denoise_field(&field, a.rank)?;
    info!("kept rank {} of {}", report.chosen_rank, report.singular_values.len());
    let mut outputs = write_field(&clean, &a.out)?;
    if let Some(path) = &a.report {
        io::write_json(&report, path)?;
        outputs.push(path.clone());
    }
    Ok(Record {
        inputs: field_files(&a.field)?,
        outputs,
        ..Record::default()
    })
}

fn term_source(a: &DictionaryArgs) -> Result<TermSource> {
    match (&a.preset, a.pmax, a.dmax) {
        (Some(p), _, _) => Ok(TermSource::Preset(p.parse()?)),
        (None, Some(pmax), Some(dmax)) => Ok(TermSource::Enumerate { pmax, dmax }),
        _ => Err(usage("give --preset or both --pmax and --dmax")),
    }
}

fn dictionary(a: &DictionaryArgs) -> Result<Record> {
    let fields = a.fields.iter().map(|p| read_field(p)).collect::<Result<Vec<_>>>()?;
    let target = match &a.target {
        None => 0,
        Some(name) => fields
            .iter()
            .position(|f| f.name() == name)
            .ok_or_else(|| usage(format!("no input field is named '{name}'")))?,
    };
    let whole = Region::whole(&fields[0]);
    let region = Region {
        lo: a.lo.clone().unwrap_or(whole.lo),
        hi: a.hi.clone().unwrap_or(whole.hi),
        t_lo: a.t_lo.unwrap_or(whole.t_lo),
        t_hi: a.t_hi.unwrap_or(whole.t_hi),
    };
    let config = StrideConfig {
        region: Some(region),
        sigma: a.sigma,
        ..StrideConfig::new(term_source(a)?, a.n)
    };
    let design = build_design(&fields, target, &config, a.seed)?;
    io::write_design(&design, &a.out)?;
    let mut inputs = Vec::new();
    for f in &a.fields {
        inputs.extend(field_files(f)?);
    }
    Ok(Record {
        inputs,
        outputs: vec![a.out.clone(), a.out.with_extension("bin")],
        ..Record::default()
            .seed("master", a.seed)
            .seed("samples", derive_seed(a.seed, "samples", &[]))
    })
}

fn design_files(header: &Path) -> Vec<PathBuf> {
    vec![header.to_path_buf(), header.with_extension("bin")]
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    solver: SolverKind,
    parameter: f64,
    lambda_max: f64,
    labels: &'a [String],
    /// On the standardized scale, one per dictionary column.
    standardized: Vec<f64>,
    /// On the raw scale.
    coefficients: Vec<f64>,
    intercept: f64,
    support: Vec<&'a str>,
    iterations: usize,
    converged: bool,
}

fn solve(a: &SolveArgs) -> Result<Record> {
    let design = io::read_design(&a.design)?;
    let (kind, options) = solver_options(&a.solver, a.seed)?;
    let param = match (a.lambda, a.k) {
        (Some(l), _) => l,
        (None, Some(k)) => k as f64,
        _ => return Err(usage("give --lambda or --k")),
    };
    let std = design.standardize();
    let problem = Problem::new(&std.theta, &std.ut)?;
    let c = problem.solve(kind, param, &options)?;
    let mut standardized = vec![0.0; design.p()];
    for (j, &v) in c.values.iter().enumerate() {
        standardized[std.active[j]] = v;
    }
    let (coefficients, intercept) = std.back_transform(&c.values);
    let out = SolveOutput {
        solver: kind,
        parameter: param,
        lambda_max: problem.lambda_max(kind.penalty(&options)),
        labels: &design.labels,
        standardized,
        coefficients,
        intercept,
        support: std
            .original_support(&c.support)
            .iter()
            .map(|&k| design.labels[k].as_str())
            .collect(),
        iterations: c.iterations,
        converged: c.converged,
    };
    io::write_json(&out, &a.out)?;
    Ok(Record {
        inputs: design_files(&a.design),
        outputs: vec![a.out.clone()],
        ..Record::default().seed("solver", a.seed)
    })
}

fn run_stride(a: &StrideArgs, exec: Exec) -> Result<Record> {
    let design = io::read_design(&a.design)?;
    let (kind, options) = solver_options(&a.solver, 0)?;
    let params = stability_params(&a.stability)?;
    let (model, profile) = stride(&design, kind, &options, &params, a.seed, exec)?;
    info!("stable support: {:?}", model.labels());
    io::write_profile_csv(&profile, &a.profile)?;
    io::write_model(&model, &a.model)?;
    Ok(Record {
        inputs: design_files(&a.design),
        outputs: vec![a.profile.clone(), a.model.clone()],
        ..Record::default().seed("master", a.seed)
    })
}

/// `p19` or `burgers-p19`.
fn burgers_preset(name: &str) -> Result<Preset> {
    Preset::ALL
        .into_iter()
        .filter(|p| p.name().starts_with("burgers"))
        .find(|p| p.short() == name || p.name() == name)
        .ok_or_else(|| usage(format!("'{name}' is not a Burgers preset (p11, p15, p19)")))
}

fn run_achievability(a: &AchievabilityArgs, exec: Exec) -> Result<Record> {
    let mut bench = match a.model {
        ModelName::Burgers => Benchmark::burgers()?,
        ModelName::GrayScott => return Err(usage("achievability sweeps support --model burgers only")),
    };
    if let Some(rank) = a.rank {
        bench.denoise = Denoise::Rank(rank);
    }
    let presets = a
        .preset_list
        .iter()
        .map(|s| burgers_preset(s))
        .collect::<Result<Vec<_>>>()?;
    let (kind, options) = solver_options(&a.solver, 0)?;
    let params = stability_params(&a.stability)?;
    let mut designs = Vec::new();
    for &preset in &presets {
        for &sigma in &a.sigma_list {
            for &n in &a.n_list {
                designs.push(ExperimentDesign {
                    reps: a.reps,
                    mode: match a.mode {
                        ModeName::SolverPath => Mode::SolverPath,
                        ModeName::Stride => Mode::Stride,
                    },
                    solver: kind,
                    options: options.clone(),
                    params: params.clone(),
                    ..ExperimentDesign::new(n, preset, sigma)
                });
            }
        }
    }
    let rows = achievability(&bench, &designs, a.seed, exec)?;
    io::write_achievability_csv(&rows, &a.out)?;
    Ok(Record {
        outputs: vec![a.out.clone()],
        ..Record::default().seed("master", a.seed)
    })
}

fn extension(path: &Path) -> &str {
    path.extension().and_then(|e| e.to_str()).unwrap_or("")
}

fn convert(a: &ConvertArgs) -> Result<Record> {
    match (extension(&a.input), extension(&a.output)) {
        ("json", "csv") => {
            let field = read_field(&a.input)?;
            io::write_field_csv(&field, &a.output)?;
            Ok(Record {
                inputs: field_files(&a.input)?,
                outputs: vec![a.output.clone()],
                ..Record::default()
            })
        }
        ("csv", "json") => {
            let name = match &a.name {
                Some(n) => n.clone(),
                None => a
                    .input
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "u".into()),
            };
            let field = io::read_field_csv(&a.input, &name)?;
            Ok(Record {
                inputs: vec![a.input.clone()],
                outputs: write_field(&field, &a.output)?,
                ..Record::default()
            })
        }
        (i, o) => Err(usage(format!("cannot convert .{i} to .{o}; use .json and .csv"))),
    }
}
