//! `sympidx run <scenario> --out <dir>`: runs a scenario file and writes
//! one JSON report per task plus optional CSV traces.

mod output;
mod scenario;
mod tasks;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use scenario::{Scenario, TraceKind};
use tasks::Status;

#[derive(Parser)]
#[command(name = "sympidx", version, about = "Maslov indices and index-form checks for linear Hamiltonian systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task of a scenario file.
    Run {
        scenario: PathBuf,
        /// Output directory for reports and traces.
        #[arg(long, env = "SYMPIDX_OUT")]
        out: PathBuf,
        /// Finest index-form mesh; coarser meshes halve it.
        #[arg(long)]
        mesh: Option<usize>,
        /// Inertia and rank tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// CSV trace to emit; may be repeated.
        #[arg(long, value_enum)]
        trace: Vec<TraceKind>,
    },
}

/// Input errors exit 1, failed numerics exit 1, expected-value mismatches exit 2.
fn run(path: PathBuf, out: PathBuf, mesh: Option<usize>, tol: Option<f64>, trace: Vec<TraceKind>) -> Result<u8> {
    let mut sc = Scenario::load(&path)?;
    if let Some(n) = mesh {
        let ladder: Vec<usize> = (0..4).rev().map(|k| n >> k).filter(|&m| m >= 4).collect();
        sc.options.agreeing_meshes = sc.options.agreeing_meshes.min(ladder.len());
        sc.options.meshes = ladder;
    }
    if let Some(t) = tol {
        sc.options.tol = t;
    }
    for k in trace {
        if !sc.options.traces.contains(&k) {
            sc.options.traces.push(k);
        }
    }
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    let outcomes = if let Some(block) = &sc.system {
        let sys = block.build()?;
        let outcomes = tasks::run_system(&sc, &sys);
        for &k in &sc.options.traces {
            let p = tasks::emit_trace(k, &sys, &sc.options, &out).with_context(|| format!("trace {}", k.name()))?;
            println!("trace {}", p.display());
        }
        outcomes
    } else {
        let m = sc.manifold.as_ref().expect("validated").build()?;
        tasks::run_manifold(&sc, &m, &out)?
    };

    let (mut failed, mut mismatched) = (false, false);
    for o in &outcomes {
        let file = out.join(format!("{}.json", o.task.name()));
        output::write_json(&file, &o.report)?;
        let status = match o.status {
            Status::Ok => "ok",
            Status::Mismatch => {
                mismatched = true;
                "MISMATCH"
            }
            Status::Error => {
                failed = true;
                "ERROR"
            }
        };
        let detail = o.report.get("error").and_then(|e| e.as_str()).unwrap_or("");
        println!("{:<15} {status:<8} {} {detail}", o.task.name(), file.display());
    }
    Ok(if failed { 1 } else if mismatched { 2 } else { 0 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scenario, out, mesh, tol, trace } => match run(scenario, out, mesh, tol, trace) {
            Ok(code) => ExitCode::from(code),
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        },
    }
}
