//! `ranwire`: random architecture generation and analysis, lemma
//! verification, and training of randomly wired GNNs.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure
//! or a failed verification row.

mod arch_cmd;
mod error;
mod io;
mod lemmas_cmd;
mod run_cmd;
mod settings;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "ranwire", version, about = "Randomly wired graph neural networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a random architecture DAG.
    Gen(arch_cmd::GenFlags),
    /// Path-length histograms, radius distributions and per-DAG statistics.
    Analyze(arch_cmd::AnalyzeFlags),
    /// Check the closed-form path statistics against brute-force oracles.
    VerifyLemmas(lemmas_cmd::VerifyFlags),
    /// Generate the synthetic k-hop regression dataset.
    MakeData(run_cmd::MakeDataFlags),
    /// Train a randomly wired GNN.
    Train(run_cmd::TrainFlags),
    /// Evaluate a checkpoint on a dataset split.
    Eval(run_cmd::EvalFlags),
    /// MonteCarlo DropPath predictions from a checkpoint.
    McInfer(run_cmd::McInferFlags),
    /// Train and evaluate across one axis of values and several seeds.
    Sweep(run_cmd::SweepFlags),
}

fn echoed<S: Serialize>(name: &str, settings: S) -> Result<S, CliError> {
    eprintln!("# ranwire {name}, resolved config");
    eprint!("{}", settings::echo(&settings)?);
    eprintln!("# end config");
    Ok(settings)
}

fn run(cmd: &Command) -> Result<(), CliError> {
    match cmd {
        Command::Gen(f) => arch_cmd::gen(&echoed("gen", arch_cmd::gen_settings(f)?)?),
        Command::Analyze(f) => arch_cmd::analyze(&echoed("analyze", arch_cmd::analyze_settings(f)?)?),
        Command::VerifyLemmas(f) => lemmas_cmd::verify(&echoed("verify-lemmas", lemmas_cmd::verify_settings(f)?)?),
        Command::MakeData(f) => run_cmd::make_data(&echoed("make-data", run_cmd::make_data_settings(f)?)?),
        Command::Train(f) => run_cmd::train_cmd(&echoed("train", run_cmd::train_settings(f)?)?),
        Command::Eval(f) => run_cmd::eval_cmd(&echoed("eval", run_cmd::eval_settings(f)?)?),
        Command::McInfer(f) => run_cmd::mc_infer_cmd(&echoed("mc-infer", run_cmd::mc_infer_settings(f)?)?),
        Command::Sweep(f) => run_cmd::sweep_cmd(&echoed("sweep", run_cmd::sweep_settings(f)?)?),
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("RANWIRE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("RANWIRE_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = configure_threads().and_then(|()| run(&cli.command)) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
