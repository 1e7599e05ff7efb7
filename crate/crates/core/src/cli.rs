//! Command-line driver.
//!
//! Exit codes: 0 success, 1 parse or type errors, 2 deadlock / timeout /
//! stuck evaluation, 64 usage errors.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::eval::{Evaluator, Outcome};
use crate::runtime::{render_trace, render_value, run_config, RunOptions, RunResult, TraceEvent};
use crate::syntax::{parse_program, parse_term, Term};
use crate::typeck::{check_program, check_term, render_errors, CheckedProgram};
use crate::types::Type;

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECTED: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "lcm", about = "Typecheck and run linear contextual programs with session types")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Typecheck a program.
    Check { file: PathBuf },
    /// Typecheck, then run `main` under the process scheduler.
    Run {
        file: PathBuf,
        #[command(flatten)]
        opts: RunFlags,
    },
    /// Evaluate a term in the scope of a program's definitions.
    Eval {
        file: PathBuf,
        #[arg(short = 'e', long = "expr")]
        term: String,
        #[command(flatten)]
        opts: RunFlags,
    },
}

#[derive(Args, Debug)]
struct RunFlags {
    /// Print one line per reduction step.
    #[arg(long)]
    trace_steps: bool,
    /// Write the communication trace to FILE.
    #[arg(long, value_name = "FILE")]
    trace_comm: Option<PathBuf>,
    #[arg(long, value_name = "N", default_value_t = 1_000_000)]
    max_steps: u64,
    #[arg(long, value_name = "N", default_value_t = 256, value_parser = clap::value_parser!(u64).range(1..))]
    quantum: u64,
}

/// What a command printed, split by stream, and its exit code.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `argv` (including the program name), runs the command and
/// prints its output. Returns the exit code.
pub fn main_cli(argv: Vec<String>) -> i32 {
    let out = run_cli(argv);
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    out.code
}

/// Like [`main_cli`] but captures output instead of printing it.
pub fn run_cli(argv: Vec<String>) -> CliOutput {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CliOutput {
                    code: EXIT_USAGE,
                    stderr: text,
                    ..Default::default()
                }
            } else {
                CliOutput {
                    code: EXIT_OK,
                    stdout: text,
                    ..Default::default()
                }
            };
        }
    };
    let mut out = CliOutput::default();
    out.code = match cli.command {
        Command::Check { file } => load(&file, &mut out).map_or_else(|c| c, |_| {
            out.stdout.push_str("ok\n");
            EXIT_OK
        }),
        Command::Run { file, opts } => match load(&file, &mut out) {
            Ok(p) => run(&p, &opts, &mut out),
            Err(c) => c,
        },
        Command::Eval { file, term, opts } => match load(&file, &mut out) {
            Ok(p) => eval(&p, &term, &opts, &mut out),
            Err(c) => c,
        },
    };
    out
}

fn load(path: &Path, out: &mut CliOutput) -> Result<CheckedProgram, i32> {
    let src = fs::read_to_string(path).map_err(|e| {
        let _ = writeln!(out.stderr, "cannot read {}: {e}", path.display());
        EXIT_USAGE
    })?;
    let program = parse_program(&src).map_err(|e| {
        let _ = writeln!(out.stderr, "{e}");
        EXIT_REJECTED
    })?;
    check_program(&program).map_err(|errs| {
        out.stderr.push_str(&render_errors(&errs));
        EXIT_REJECTED
    })
}

fn run(p: &CheckedProgram, opts: &RunFlags, out: &mut CliOutput) -> i32 {
    match p.defs.get("main") {
        Some((Type::Unit, _)) => {}
        Some((t, _)) => {
            let _ = writeln!(out.stderr, "TypeMismatch at 0:0 — `main` must have type `Unit`, found `{t}`");
            return EXIT_REJECTED;
        }
        None => {
            let _ = writeln!(out.stderr, "UnknownVariable at 0:0 — no `main` definition");
            return EXIT_REJECTED;
        }
    }
    let mut lines = String::new();
    let mut sink = |l: String| {
        lines.push_str(&l);
        lines.push('\n');
    };
    let (cfg, result) = run_config(
        Term::var("main"),
        p.bodies(),
        RunOptions {
            max_steps: opts.max_steps,
            quantum: opts.quantum,
        },
        if opts.trace_steps { Some(&mut sink) } else { None },
    );
    out.stdout.push_str(&lines);
    if let Some(path) = &opts.trace_comm {
        if let Err(e) = fs::write(path, render_trace(&cfg.trace)) {
            let _ = writeln!(out.stderr, "cannot write {}: {e}", path.display());
            return EXIT_USAGE;
        }
    }
    let count = |f: fn(&TraceEvent) -> bool| cfg.trace.iter().filter(|e| f(e)).count();
    let halted = count(|e| matches!(e, TraceEvent::Halted { .. }));
    let _ = writeln!(out.stdout, "result: {result}");
    let _ = writeln!(out.stdout, "threads: {} ({halted} halted)", cfg.threads.len());
    let _ = writeln!(
        out.stdout,
        "events: Sent {}, Selected {}, Closed {}, Spawned {}, Halted {halted}",
        count(|e| matches!(e, TraceEvent::Sent { .. })),
        count(|e| matches!(e, TraceEvent::Selected { .. })),
        count(|e| matches!(e, TraceEvent::Closed { .. })),
        count(|e| matches!(e, TraceEvent::Spawned { .. })),
    );
    let _ = writeln!(out.stdout, "steps: {}", cfg.steps);
    match result {
        RunResult::Success => EXIT_OK,
        other => {
            let _ = writeln!(out.stderr, "{other}");
            EXIT_RUNTIME
        }
    }
}

fn eval(p: &CheckedProgram, src: &str, opts: &RunFlags, out: &mut CliOutput) -> i32 {
    let term = match parse_term(src) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(out.stderr, "{e}");
            return EXIT_REJECTED;
        }
    };
    let term = match p.resolve_term(&term).and_then(|t| check_term(&p.globals(), &t, None).map(|_| t)) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(out.stderr, "{e}");
            return EXIT_REJECTED;
        }
    };
    let mut ev = Evaluator::new(p.bodies());
    let mut lines = String::new();
    let mut sink = |l: String| {
        lines.push_str(&l);
        lines.push('\n');
    };
    let outcome = ev.eval(term, opts.max_steps, if opts.trace_steps { Some(&mut sink) } else { None });
    out.stdout.push_str(&lines);
    match outcome {
        Outcome::Value(v) => {
            let _ = writeln!(out.stdout, "{}", render_value(&v));
            EXIT_OK
        }
        Outcome::Timeout(_) => {
            let _ = writeln!(out.stderr, "timeout: step budget exhausted");
            EXIT_RUNTIME
        }
        Outcome::CommRequired(req) => {
            let _ = writeln!(out.stderr, "session operation outside the runtime ({req:?}); use `run`");
            EXIT_RUNTIME
        }
        Outcome::Stuck(msg) => {
            let _ = writeln!(out.stderr, "stuck: {msg}");
            EXIT_RUNTIME
        }
    }
}
