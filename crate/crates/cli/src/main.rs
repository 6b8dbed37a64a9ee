//! `secnet` command-line front end.
//!
//! Every run writes its outputs and a `manifest.json` (resolved arguments,
//! seed, worker count) into `--out`; `secnet replay --manifest` reruns it.
//!
//! Exit codes: 0 success, 2 usage, 3 unreadable input, 4 invalid
//! parameters, 5 computation failure, 6 unwritable output.

mod args;
mod commands;
mod error;

use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use secnet::experiment::Manifest;
use secnet::{Exec, Seed};

use args::{Cli, Command};
use commands::{Ctx, Outputs};
use error::{CliError, EXIT_USAGE};

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| CliError::Output { path, source })
}

fn dispatch(command: &mut Command, ctx: &Ctx) -> Result<Outputs, CliError> {
    match command {
        Command::Generate(a) => commands::generate(a, ctx),
        Command::Exact(a) => commands::exact(a, ctx),
        Command::Simulate(a) => commands::simulate_cmd(a, ctx),
        Command::Rare(a) => commands::rare(a, ctx),
        Command::Meanfield(a) => commands::meanfield(a, ctx),
        Command::Experiment(a) => commands::experiment(a, ctx),
        Command::Heatmap(a) => commands::heatmap(a, ctx),
        Command::Replay(_) => unreachable!("replay is resolved before dispatch"),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let workers = cli.workers.unwrap_or(0);
    let (mut command, seed) = match cli.command {
        Command::Replay(r) => {
            let manifest = Manifest::load(&r.manifest)
                .map_err(|source| CliError::Input { path: r.manifest.clone(), source })?;
            let command: Command = serde_json::from_value(manifest.config.clone()).map_err(|e| {
                CliError::Input { path: r.manifest.clone(), source: e.into() }
            })?;
            (command, cli.seed.map(Seed).unwrap_or(manifest.seed))
        }
        other => (other, cli.seed.map(Seed).unwrap_or_else(Seed::from_entropy)),
    };
    let ctx = Ctx { seed, exec: Exec::with_workers(workers), verbose: cli.verbose };
    ctx.log(format!("{} with seed {}", command.name(), seed.0));

    let outputs = dispatch(&mut command, &ctx)?;

    std::fs::create_dir_all(&cli.out).map_err(|source| CliError::Output { path: cli.out.clone(), source })?;
    for (name, contents) in &outputs {
        write_file(&cli.out, name, contents)?;
    }
    let config = serde_json::to_value(&command).expect("serialisable command");
    let mut manifest = Manifest::new(command.name(), seed, workers, config);
    manifest.outputs = outputs.into_iter().map(|(name, _)| name).collect();
    write_file(&cli.out, "manifest.json", &(manifest.to_json() + "\n"))?;
    ctx.log(format!("wrote {} files to {}", manifest.outputs.len() + 1, cli.out.display()));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("secnet: error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
