//! `gradcap`: run, trace, explore and check `.gcap` programs.
//!
//! Exit codes: 0 clean finish, 1 usage/parse/validation error,
//! 2 capability violation, 3 uninitialised use, 4 deadlock, 5 step limit
//! or exploration budget, 6 any other fault. The lowest applicable code
//! wins.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gradcap_core::ast::validate_program;
use gradcap_core::runtime::{
    explore_exhaustive, run, ActorStatus, ExploreConfig, ExploreError, Exploration,
    OutcomeSummary, QueueDiscipline, RunConfig, RunOutcome, SchedulerPolicy, TerminalStatus,
    Termination,
};
use gradcap_core::{parse_program, FaultKind, Program};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "gradcap", version, about = "Interpreter for actor programs with gradual reference capabilities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a program and report how it ended.
    Run(RunArgs),
    /// Run a program and print one JSON line per step; same as `run --trace`.
    Trace(RunArgs),
    /// Explore every schedule; same as `run --schedule exhaustive`.
    Explore(RunArgs),
    /// Parse and validate a program without running it.
    Check(CheckArgs),
}

#[derive(Args, Debug)]
struct CheckArgs {
    input: PathBuf,
    /// Print diagnostics as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Schedule::RoundRobin)]
    schedule: Schedule,
    /// Seed for `--schedule random`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_steps: u64,
    /// Distinct states `exhaustive` may expand before giving up.
    #[arg(long, default_value_t = 200_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_states: u64,
    /// Print results as JSON.
    #[arg(long)]
    json: bool,
    /// Print one JSON line per step, then a one-line summary.
    #[arg(long)]
    trace: bool,
    /// Newest message first.
    #[arg(long)]
    literal_lifo: bool,
    /// Stop the whole run at the first fault.
    #[arg(long)]
    fail_fast: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Schedule {
    RoundRobin,
    Random,
    Exhaustive,
}

const EXIT_USAGE: u8 = 1;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    ExitCode::from(match cli.command {
        Command::Run(args) => dispatch(args),
        Command::Trace(args) => dispatch(RunArgs { trace: true, ..args }),
        Command::Explore(args) => dispatch(RunArgs { schedule: Schedule::Exhaustive, ..args }),
        Command::Check(args) => check(&args),
    })
}

fn load(path: &PathBuf) -> Result<Program, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_program(&text).map_err(|e| format!("{}:{e}", path.display()))
}

fn check(args: &CheckArgs) -> u8 {
    let program = match load(&args.input) {
        Ok(p) => p,
        Err(msg) => {
            eprintln!("{msg}");
            return EXIT_USAGE;
        }
    };
    let diags = validate_program(&program);
    if args.json {
        let list: Vec<_> = diags
            .iter()
            .map(|d| json!({"line": d.span.start.line, "column": d.span.start.column, "message": d.message}))
            .collect();
        println!("{}", json!({ "valid": diags.is_empty(), "diagnostics": list }));
    } else if diags.is_empty() {
        println!("ok");
    } else {
        for d in &diags {
            eprintln!("{}:{d}", args.input.display());
        }
    }
    if diags.is_empty() { 0 } else { EXIT_USAGE }
}

fn dispatch(args: RunArgs) -> u8 {
    let program = match load(&args.input) {
        Ok(p) => p,
        Err(msg) => {
            eprintln!("{msg}");
            return EXIT_USAGE;
        }
    };
    let diags = validate_program(&program);
    if !diags.is_empty() {
        for d in &diags {
            eprintln!("{}:{d}", args.input.display());
        }
        return EXIT_USAGE;
    }
    let queue = if args.literal_lifo { QueueDiscipline::LiteralLifo } else { QueueDiscipline::Fifo };
    match args.schedule {
        Schedule::Exhaustive => {
            if args.trace {
                eprintln!("--trace needs a single schedule; use round-robin or random");
                return EXIT_USAGE;
            }
            let config = ExploreConfig {
                max_steps: args.max_steps as usize,
                max_states: args.max_states as usize,
                queue,
                audit: false,
            };
            report_exploration(&args, explore_exhaustive(&program, &config))
        }
        Schedule::RoundRobin | Schedule::Random => {
            let policy = match args.schedule {
                Schedule::Random => SchedulerPolicy::SeededRandom(args.seed),
                _ => SchedulerPolicy::RoundRobin,
            };
            let config = RunConfig {
                policy,
                max_steps: args.max_steps as usize,
                queue,
                fail_fast: args.fail_fast,
                audit_moves: false,
            };
            let (outcome, trace) = run(&program, &config);
            let code = outcome_exit_code(&outcome);
            if args.trace {
                for event in &trace {
                    println!("{}", event.to_json_line());
                }
                if args.json {
                    println!("{}", json!({"termination": outcome.termination, "steps": outcome.steps, "exit_code": code}));
                } else {
                    println!("{} after {} steps, exit {code}", outcome.termination, outcome.steps);
                }
            } else if args.json {
                let mut doc = outcome.to_json();
                doc["exit_code"] = json!(code);
                println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
            } else {
                print_outcome(&outcome, code);
            }
            code
        }
    }
}

fn fault_code(kind: FaultKind) -> u8 {
    match kind {
        FaultKind::CapabilityViolation => 2,
        FaultKind::UninitializedUse => 3,
        _ => 6,
    }
}

fn termination_code(t: Termination) -> Option<u8> {
    match t {
        Termination::Deadlock => Some(4),
        Termination::StepLimit => Some(5),
        Termination::AllDone | Termination::FaultStop => None,
    }
}

fn lowest(codes: impl Iterator<Item = u8>) -> u8 {
    codes.min().unwrap_or(0)
}

fn outcome_exit_code(outcome: &RunOutcome) -> u8 {
    let faults = outcome.faults().into_iter().map(|(_, f)| fault_code(f.kind));
    lowest(faults.chain(termination_code(outcome.termination)))
}

fn summary_exit_code(s: &OutcomeSummary) -> u8 {
    let faults = s.actors.iter().filter_map(|(_, st)| match st {
        TerminalStatus::Faulted { kind, .. } => Some(fault_code(*kind)),
        _ => None,
    });
    lowest(faults.chain(termination_code(s.termination)))
}

fn exploration_exit_code(e: &Exploration) -> u8 {
    lowest(e.summaries.iter().map(summary_exit_code).filter(|c| *c != 0))
}

fn print_outcome(outcome: &RunOutcome, code: u8) {
    println!("{} after {} steps (exit {code})", outcome.termination, outcome.steps);
    for a in outcome.store.actors() {
        match &a.status {
            ActorStatus::Runnable => println!("  actor {}: runnable", a.id.0),
            ActorStatus::Blocked => println!("  actor {}: blocked in receive", a.id.0),
            ActorStatus::Done(v) => println!("  actor {}: done with {v}", a.id.0),
            ActorStatus::Faulted(f) => println!("  actor {}: {f}", a.id.0),
        }
    }
}

fn report_exploration(args: &RunArgs, result: Result<Exploration, ExploreError>) -> u8 {
    let exploration = match result {
        Ok(e) => e,
        Err(e) => {
            eprintln!("{e}");
            return 5;
        }
    };
    let code = exploration_exit_code(&exploration);
    if args.json {
        let outcomes: Vec<_> = exploration
            .summaries
            .iter()
            .map(|s| {
                let mut v = serde_json::to_value(s).expect("json");
                v["exit_code"] = json!(summary_exit_code(s));
                v
            })
            .collect();
        let doc = json!({
            "terminations": exploration.terminations(),
            "outcomes": outcomes,
            "states": exploration.states,
            "transitions": exploration.transitions,
            "exit_code": code,
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
    } else {
        println!(
            "{} distinct outcomes over {} states, {} transitions (exit {code})",
            exploration.summaries.len(),
            exploration.states,
            exploration.transitions
        );
        for s in &exploration.summaries {
            let actors: Vec<String> = s
                .actors
                .iter()
                .map(|(id, st)| match st {
                    TerminalStatus::Faulted { kind, line, column } => {
                        format!("{}: {kind} at {line}:{column}", id.0)
                    }
                    other => format!("{}: {}", id.0, format!("{other:?}").to_lowercase()),
                })
                .collect();
            println!("  {} [{}]", s.termination, actors.join(", "));
        }
    }
    code
}
