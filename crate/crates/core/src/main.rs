use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use qnetsim::output::{emit_csv, RunRecord};
use qnetsim::scenario::{
    fig3_table, load_presets, parse_scenario_file, run_experiment, Operation, Overrides, Scenario,
};
use qnetsim::Error;

const PRESET_ENV: &str = "QNETSIM_PRESETS";

#[derive(Parser, Debug)]
#[command(
    name = "qnetsim",
    version,
    about = "Charge qubits coupled to a quantum cavity"
)]
struct Cli {
    /// Scenario file; defaults to the preset directory.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory for CSV files.
    #[arg(long, global = true, value_name = "PATH", default_value = "out")]
    out: PathBuf,
    /// Override the seed of every scenario.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Override the number of time samples.
    #[arg(long, global = true, value_name = "N")]
    samples: Option<usize>,
    /// Maximum number of scenarios run concurrently.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Run only the scenario with this name.
    #[arg(long, global = true, value_name = "NAME")]
    name: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Eigenvalue tables.
    Eig,
    /// Time series of occupation probabilities.
    Evolve,
    /// Energy transfer coefficient for every detuning schedule.
    Fig3,
    /// Repeated qubit-1 measurement shots.
    Protocol,
    /// Entanglement entropy of the eigenstates.
    Entropy,
    /// Parse and validate scenarios without running them.
    Validate,
}

impl Command {
    fn operation(self) -> Option<Operation> {
        match self {
            Command::Eig => Some(Operation::Eig),
            Command::Evolve => Some(Operation::Evolve),
            Command::Fig3 => Some(Operation::Fig3),
            Command::Protocol => Some(Operation::Protocol),
            Command::Entropy => Some(Operation::Entropy),
            Command::Validate => None,
        }
    }
}

const CONFIG_ERROR: u8 = 1;
const NUMERIC_ERROR: u8 = 2;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_)
        | Error::ConstraintViolated(_)
        | Error::BadTimeRange { .. }
        | Error::BadTimeStep(_)
        | Error::OutOfCavity { .. }
        | Error::UnknownMode(_)
        | Error::Degenerate(_) => CONFIG_ERROR,
        _ => NUMERIC_ERROR,
    }
}

fn load(cli: &Cli) -> Result<Vec<Scenario>, String> {
    let sources = match &cli.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            vec![(path.display().to_string(), text)]
        }
        None => {
            let dir = std::env::var_os(PRESET_ENV).map(PathBuf::from);
            load_presets(dir.as_deref()).map_err(|e| e.to_string())?
        }
    };
    let mut all = Vec::new();
    for (label, text) in sources {
        let parsed = parse_scenario_file(&text).map_err(|e| format!("{label}: {e}"))?;
        all.extend(parsed);
    }
    let mut names = std::collections::HashSet::new();
    if let Some(dup) = all.iter().find(|s| !names.insert(s.name.clone())) {
        return Err(format!("scenario `{}`: duplicate scenario name", dup.name));
    }
    Ok(all)
}

fn select(cli: &Cli, all: Vec<Scenario>, op: Option<Operation>) -> Result<Vec<Scenario>, String> {
    let overrides = Overrides {
        seed: cli.seed,
        samples: cli.samples,
    };
    let chosen: Vec<Scenario> = all
        .into_iter()
        .filter(|s| op.is_none_or(|op| s.operation == op))
        .filter(|s| cli.name.as_ref().is_none_or(|n| &s.name == n))
        .map(|s| overrides.apply(&s))
        .collect();
    for s in &chosen {
        qnetsim::scenario::validate_scenario(s).map_err(|e| e.to_string())?;
    }
    if chosen.is_empty() {
        return Err("no matching scenarios".into());
    }
    Ok(chosen)
}

fn write(out: &Path, file: &str, record: &RunRecord) -> Result<(), String> {
    let path = out.join(file);
    emit_csv(record, &path).map_err(|e| format!("{}: {e}", path.display()))?;
    println!(
        "{}\t{} rows\t{:.3}s",
        path.display(),
        record.rows.len(),
        record.elapsed.as_secs_f64()
    );
    Ok(())
}

fn run(cli: &Cli) -> Result<(), (u8, String)> {
    let config_err = |m: String| (CONFIG_ERROR, m);
    let op = cli.command.operation();
    let scenarios = select(cli, load(cli).map_err(config_err)?, op).map_err(config_err)?;
    let Some(op) = op else {
        for s in &scenarios {
            println!(
                "ok\t{}\t{}\t{}",
                s.name,
                s.system.kind(),
                s.operation.as_str()
            );
        }
        return Ok(());
    };
    let jobs = cli.jobs.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| config_err(e.to_string()))?;
    let results: Vec<_> = pool.install(|| scenarios.par_iter().map(run_experiment).collect());

    let mut failure: Option<(u8, String)> = None;
    let mut records = Vec::new();
    for (s, result) in scenarios.iter().zip(results) {
        match result {
            Ok(record) => {
                write(&cli.out, &s.output_file(), &record).map_err(config_err)?;
                records.push(record);
            }
            Err(e) => {
                let code = exit_code(&e);
                eprintln!("error: scenario `{}`: {e}", s.name);
                if failure.as_ref().is_none_or(|(c, _)| code > *c) {
                    failure = Some((code, format!("scenario `{}` failed", s.name)));
                }
            }
        }
    }
    if op == Operation::Fig3 && !records.is_empty() {
        write(&cli.out, "fig3.csv", &fig3_table(&records)).map_err(config_err)?;
    }
    failure.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
