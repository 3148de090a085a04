//! `hypereg`: runs one pipeline stage on a JSON instance and writes a JSON
//! report. Exit codes: 0 certified, 1 violation, 2 input error, 3 budget
//! exhausted.

mod commands;
mod fail;
mod instance;
mod report;
mod verify;

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use commands::{CutnormArgs, DecomposeArgs, Global, PseudoArgs, RemoveArgs, ScheduleArgs, Session, ZnDemoArgs};
use verify::VerifyArgs;

#[derive(Parser, Debug)]
#[command(name = "hypereg", version, about = "Regularity, counting and removal certificates for weighted hypergraph systems")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cut norm of one edge function, with the cell attaining it.
    Cutnorm(CutnormArgs),
    /// Regularity decomposition of every edge function.
    Decompose(DecomposeArgs),
    /// Pseudorandomness of the instance family or of a cyclic AP family.
    CheckPseudo(PseudoArgs),
    /// Product density of the edge functions.
    Count,
    /// Relative removal: sets F_e with empty intersection.
    Remove(RemoveArgs),
    /// Progression counts inside a random majorant on Z_n.
    ZnDemo(ZnDemoArgs),
    /// The parameter schedules of the decomposition.
    Schedule(ScheduleArgs),
    /// Re-check a report from its witnesses.
    Verify(VerifyArgs),
}

impl Command {
    fn stage(&self) -> &'static str {
        match self {
            Command::Cutnorm(_) => "cutnorm",
            Command::Decompose(_) => "decompose",
            Command::CheckPseudo(_) => "check-pseudo",
            Command::Count => "count",
            Command::Remove(_) => "remove",
            Command::ZnDemo(_) => "zn-demo",
            Command::Schedule(_) => "schedule",
            Command::Verify(_) => "verify",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    if let Some(n) = g.threads {
        if n == 0 {
            eprintln!("input-error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        // Fails only if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let started = Instant::now();
    let mut session = Session::default();
    let outcome = match &cli.command {
        Command::Cutnorm(a) => commands::cutnorm(g, a, &mut session),
        Command::Decompose(a) => commands::decompose_cmd(g, a, &mut session),
        Command::CheckPseudo(a) => commands::check_pseudo(g, a, &mut session),
        Command::Count => commands::count(g, &mut session),
        Command::Remove(a) => commands::remove(g, a, &mut session),
        Command::ZnDemo(a) => commands::zn_demo(g, a, &mut session),
        Command::Schedule(a) => commands::schedule_cmd(g, a, &mut session),
        Command::Verify(a) => verify::verify(g, a, &mut session),
    };
    let stage = cli.command.stage();
    let (mut report, code) = report::assemble(stage, session.bytes.as_deref(), Value::Object(session.inputs), outcome);
    if !g.no_meta {
        report["meta"] = json!({
            "elapsedMs": started.elapsed().as_secs_f64() * 1e3,
            "threads": rayon::current_num_threads(),
            "version": env!("CARGO_PKG_VERSION"),
        });
    }
    let mut text = serde_json::to_string_pretty(&report).expect("reports are plain JSON");
    text.push('\n');
    let written = match &g.output {
        Some(path) => std::fs::write(path, &text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("input-error: {e}");
        return ExitCode::from(2);
    }
    let status = report["status"].as_str().unwrap_or("");
    match report["error"].as_str() {
        Some(msg) => eprintln!("{stage}: {status}: {msg}"),
        None => eprintln!("{stage}: {status}"),
    }
    ExitCode::from(code as u8)
}
