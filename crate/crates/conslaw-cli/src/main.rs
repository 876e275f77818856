//! `conslaw` — reproducible experiments on conserved quantities of network
//! training dynamics: exact law counts, gradient-flow and sign-flow
//! trajectories, SGD/sign-descent step-size sweeps, and span probes.
//!
//! Every run reads one JSON config (flags override fields, `CONSLAW_SEED`
//! fills in a missing seed) and writes a manifest plus CSV/JSON artifacts.
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use conslaw_cli::cmd;
use conslaw_cli::error::Result;

#[derive(Parser)]
#[command(name = "conslaw", version, about = "Conservation-law experiments for training dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Count exact conservation laws per block and compare with the catalog
    CountLaws(cmd::count_laws::CountLawsArgs),
    /// Evaluate every catalog law at a parameter point
    EvalLaws(cmd::eval_laws::EvalLawsArgs),
    /// Integrate gradient flow (optional weight decay) and report drift
    Flow(cmd::flow::FlowArgs),
    /// Integrate the sign flow on a two-layer linear or attention block
    AdamFlow(cmd::adam_flow::AdamFlowArgs),
    /// Sweep SGD over step sizes and seeds; fit drift exponents
    SgdSweep(cmd::sgd_sweep::SgdSweepArgs),
    /// Sweep sign descent over step sizes and seeds
    AdamSweep(cmd::adam_sweep::AdamSweepArgs),
    /// Probe the dimension of a sampled gradient span
    Span(cmd::span::SpanArgs),
    /// Rank of the four-parameter residual example on its domain
    M1Example(cmd::m1_example::M1ExampleArgs),
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Cmd::CountLaws(a) => cmd::count_laws::run(a),
        Cmd::EvalLaws(a) => cmd::eval_laws::run(a),
        Cmd::Flow(a) => cmd::flow::run(a),
        Cmd::AdamFlow(a) => cmd::adam_flow::run(a),
        Cmd::SgdSweep(a) => cmd::sgd_sweep::run(a),
        Cmd::AdamSweep(a) => cmd::adam_sweep::run(a),
        Cmd::Span(a) => cmd::span::run(a),
        Cmd::M1Example(a) => cmd::m1_example::run(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help / --version print to stdout and succeed; real parse
            // errors are configuration errors.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
