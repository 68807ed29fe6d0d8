mod args;
mod commands;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::Parser;
use pdestride::error::{Error, ErrorClass};
use pdestride::rng::RNG_SCHEME;
use pdestride::Exec;

use args::{Cli, Command};
use manifest::{Artifact, Manifest};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e.class() {
                ErrorClass::Usage => EXIT_USAGE,
                ErrorClass::Data => EXIT_DATA,
                ErrorClass::Numerical => EXIT_NUMERICAL,
            };
        }
        if cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return EXIT_DATA;
        }
    }
    EXIT_USAGE
}

fn thread_count(cli: &Cli) -> Result<Option<usize>> {
    if let Some(t) = cli.threads {
        return Ok(Some(t));
    }
    match std::env::var("PDESTRIDE_THREADS") {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Argument(format!("PDESTRIDE_THREADS must be a positive integer, got '{s}'")).into()),
        Err(_) => Ok(None),
    }
}

fn configure_threads(cli: &Cli) -> Result<usize> {
    if let Some(t) = thread_count(cli)? {
        if t == 0 {
            return Err(Error::Argument("--threads must be at least 1".into()).into());
        }
        // a second configuration in the same process (replay) keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    Ok(rayon::current_num_threads())
}

/// Parses and runs one command line; returns the process exit code.
fn run(argv: Vec<String>) -> u8 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if cli.verbose {
        "info"
    } else {
        "warn"
    }))
    .try_init();

    let result = match &cli.command {
        Command::Replay(a) => replay(&a.manifest),
        _ => execute(&cli, &argv),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli, argv: &[String]) -> Result<()> {
    let threads = configure_threads(cli)?;
    let start = Instant::now();
    let record = commands::run(&cli.command, Exec::Parallel)?;
    let hashes = |paths: &[PathBuf]| paths.iter().map(|p| Artifact::of(p)).collect::<Result<Vec<_>>>();
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: argv[1..].to_vec(),
        config: serde_json::to_value(&cli.command)?,
        seeds: record.seeds,
        rng: RNG_SCHEME.into(),
        threads,
        inputs: hashes(&record.inputs)?,
        outputs: hashes(&record.outputs)?,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let path = match (&cli.manifest, commands::main_output(&cli.command)) {
        (Some(p), _) => p.clone(),
        (None, Some(out)) => manifest::default_path(&out),
        (None, None) => return Ok(()),
    };
    pdestride::io::write_json(&manifest, &path).with_context(|| format!("writing manifest {}", path.display()))?;
    Ok(())
}

/// Checks the recorded inputs, re-runs the recorded command and compares
/// every output with its recorded hash.
fn replay(path: &Path) -> Result<()> {
    let recorded: Manifest = pdestride::io::read_json(path)?;
    for input in &recorded.inputs {
        let now = manifest::sha256_file(&input.path)?;
        if now != input.sha256 {
            return Err(Error::Format(format!(
                "input {} changed since {}",
                input.path.display(),
                path.display()
            ))
            .into());
        }
    }
    let mut argv = vec!["pdestride".to_string()];
    let mut args = recorded.command.iter();
    while let Some(a) = args.next() {
        if a == "--manifest" {
            args.next();
        } else if !a.starts_with("--manifest=") {
            argv.push(a.clone());
        }
    }
    argv.push("--manifest".into());
    argv.push(path.with_extension("replay.json").to_string_lossy().into_owned());
    let code = run(argv);
    if code != 0 {
        return Err(Error::Format(format!("replayed command exited with code {code}")).into());
    }
    let mut differing = Vec::new();
    for output in &recorded.outputs {
        if manifest::sha256_file(&output.path)? != output.sha256 {
            differing.push(output.path.display().to_string());
        }
    }
    if !differing.is_empty() {
        return Err(Error::Format(format!("replay changed {}", differing.join(", "))).into());
    }
    eprintln!("replay reproduced {} output(s) bitwise", recorded.outputs.len());
    Ok(())
}

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args().collect()))
}
