mod args;
mod commands;
mod manifest;
mod output;

use args::{Cli, CommandKind, CouplingCommand, TopCommand};
use clap::Parser;
use commands::{execute_in_dir, CmdError};
use manifest::Manifest;
use std::path::Path;

fn main() {
    init_workers();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    std::process::exit(run(cli, argv));
}

/// Worker count comes from the environment only; everything else is a flag.
fn init_workers() {
    if let Ok(v) = std::env::var("ENTPOT_WORKERS") {
        if let Ok(k) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
        }
    }
}

fn run(cli: Cli, argv: Vec<String>) -> i32 {
    match cli.command {
        TopCommand::Replay(ref replay) => match run_replay(&replay.manifest, &cli.out) {
            Ok(code) => code,
            Err(e) => {
                eprintln!("error: {}", e.message());
                e.exit_code()
            }
        },
        other => {
            let kind = match lower(other) {
                Ok(kind) => kind,
                Err(e) => {
                    eprintln!("error: {}", e.message());
                    return e.exit_code();
                }
            };
            execute(kind, &cli.out, cli.seed, argv)
        }
    }
}

fn lower(command: TopCommand) -> Result<CommandKind, CmdError> {
    Ok(match command {
        TopCommand::Coupling { action: CouplingCommand::Dump(a) } => CommandKind::Coupling(a),
        TopCommand::Energy(a) => CommandKind::Energy(a),
        TopCommand::Cumulants(a) => CommandKind::Cumulants(a),
        TopCommand::Sample(a) => CommandKind::Sample(a),
        TopCommand::Sweep(a) => CommandKind::Sweep(a),
        TopCommand::Anneal(a) => CommandKind::Anneal(a),
        TopCommand::Hysteresis(a) => CommandKind::Hysteresis(a),
        TopCommand::Overlap(a) => CommandKind::Overlap(a),
        TopCommand::Minimize(a) => CommandKind::Minimize(a),
        TopCommand::ScanFrustration(a) => CommandKind::ScanFrustration(a),
        TopCommand::Dyson(a) => CommandKind::Dyson(a),
        TopCommand::Replay(_) => {
            return Err(CmdError::Usage("replay cannot be nested".into()));
        }
    })
}

fn execute(kind: CommandKind, out_root: &Path, seed: Option<u64>, mut argv: Vec<String>) -> i32 {
    let seed = match seed {
        Some(s) => s,
        None => {
            let s: u64 = rand::random();
            argv.push("--seed".into());
            argv.push(s.to_string());
            s
        }
    };
    match execute_in_dir(&kind, out_root, seed) {
        Ok(run) => {
            let manifest = Manifest {
                command: kind.name().to_string(),
                argv,
                seed,
                version: env!("CARGO_PKG_VERSION").to_string(),
                timestamp_utc: chrono::Utc::now().to_rfc3339(),
                outputs: run.outputs,
            };
            if let Err(e) = manifest.save(&run.dir) {
                eprintln!("error: could not write manifest: {e}");
                return 1;
            }
            println!("run directory: {}", run.dir.display());
            0
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn run_replay(manifest_path: &Path, out_root: &Path) -> Result<i32, CmdError> {
    let manifest = Manifest::load(manifest_path)?;
    let mut full = vec!["entpot".to_string()];
    full.extend(manifest.argv.iter().cloned());
    let cli = Cli::try_parse_from(&full)
        .map_err(|e| CmdError::Usage(format!("recorded argv does not parse: {e}")))?;
    if matches!(cli.command, TopCommand::Replay(_)) {
        return Err(CmdError::Usage("recorded manifest is itself a replay".into()));
    }
    let kind = lower(cli.command)?;
    println!("replaying `{}` with seed {}", manifest.command, manifest.seed);
    Ok(execute(kind, out_root, Some(manifest.seed), manifest.argv))
}
