//! `verify-lemmas`.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use ranwire_core::lemmas::{verify_lemmas, LemmaOptions, LemmaReport};

use crate::error::CliError;
use crate::io::emit;
use crate::settings::resolve;

#[derive(Args, Serialize, Debug)]
#[serde(rename_all = "kebab-case")]
pub struct VerifyFlags {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Largest L checked (at most 7).
    #[arg(long)]
    pub max_nodes: Option<usize>,
    /// Comma-separated edge probabilities.
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    /// Absolute tolerance for the exact rows.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte-Carlo samples (mean-of-ratio and DropPath rows).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Comma-separated DropPath probabilities.
    #[arg(long, value_delimiter = ',')]
    pub pdrop: Option<Vec<f64>>,
    /// Random linear models per (L, p) for the decomposition rows.
    #[arg(long)]
    pub decomposition_seeds: Option<u64>,
    /// Report CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case", default)]
pub struct VerifySettings {
    pub max_nodes: usize,
    pub p: Vec<f64>,
    pub tolerance: f64,
    pub seed: u64,
    pub samples: usize,
    pub pdrop: Vec<f64>,
    pub decomposition_seeds: u64,
    pub out: Option<PathBuf>,
}

impl Default for VerifySettings {
    fn default() -> Self {
        let o = LemmaOptions::default();
        VerifySettings {
            max_nodes: o.max_nodes,
            p: o.ps,
            tolerance: o.tolerance,
            seed: o.seed,
            samples: o.samples,
            pdrop: o.p_drops,
            decomposition_seeds: o.decomposition_seeds,
            out: None,
        }
    }
}

pub fn verify_settings(flags: &VerifyFlags) -> Result<VerifySettings, CliError> {
    resolve(flags, flags.config.as_deref())
}

pub fn verify(s: &VerifySettings) -> Result<(), CliError> {
    let opts = LemmaOptions {
        max_nodes: s.max_nodes,
        ps: s.p.clone(),
        tolerance: s.tolerance,
        seed: s.seed,
        p_drops: s.pdrop.clone(),
        samples: s.samples,
        decomposition_seeds: s.decomposition_seeds,
    };
    let report = verify_lemmas(&opts)?;
    emit(s.out.as_deref(), &report.to_csv())?;
    eprintln!("{report}");
    match report.first_failure() {
        None => Ok(()),
        Some(row) => Err(CliError::Check(format!(
            "first failing row:\n{}",
            LemmaReport::format_row(row)
        ))),
    }
}
