//! `gen` and `analyze`.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use ranwire_core::arch::{deserialize, embed_sequential_path, generate_er_dag, serialize, ArchDag};
use ranwire_core::dist::{averaged_histogram, histogram_table, radius_table, DistributionTable};
use ranwire_core::lemmas::arch_lemma_rows;
use ranwire_core::paths::{parse_edge_weights, uniform_weights};

use crate::error::CliError;
use crate::io::{emit, read_text};
use crate::settings::{parse_switch, resolve};

#[derive(Args, Serialize, Debug)]
#[serde(rename_all = "kebab-case")]
pub struct GenFlags {
    /// TOML file with the same keys as the flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Number of architecture nodes L.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Edge probability.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Embed the sequential path 1 → 2 → … → L (on/off).
    #[arg(long, value_parser = parse_switch, num_args = 0..=1, default_missing_value = "on")]
    pub sequential: Option<bool>,
    /// Output file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case", default)]
pub struct GenSettings {
    pub nodes: usize,
    pub p: f64,
    pub seed: u64,
    pub sequential: bool,
    pub out: Option<PathBuf>,
}

impl Default for GenSettings {
    fn default() -> Self {
        GenSettings {
            nodes: 8,
            p: 0.6,
            seed: 0,
            sequential: false,
            out: None,
        }
    }
}

pub fn gen_settings(flags: &GenFlags) -> Result<GenSettings, CliError> {
    resolve(flags, flags.config.as_deref())
}

pub fn gen(s: &GenSettings) -> Result<(), CliError> {
    let mut dag = generate_er_dag(s.nodes, s.p, s.seed)?;
    if s.sequential {
        dag = embed_sequential_path(&dag)?;
    }
    emit(s.out.as_deref(), &serialize(&dag))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum StatKind {
    /// Per-length path counts.
    Hist,
    /// Receptive-field radius distribution.
    Rho,
    /// Observed path statistics next to their expectations.
    Lemmas,
}

#[derive(Args, Serialize, Debug)]
#[serde(rename_all = "kebab-case")]
pub struct AnalyzeFlags {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Architecture file written by `gen`.
    #[arg(long)]
    pub arch: Option<PathBuf>,
    /// `i j w` lines; defaults to weight 1 on every edge.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub stat: Option<StatKind>,
    /// Divide the radius distribution by its total.
    #[arg(long, value_parser = parse_switch, num_args = 0..=1, default_missing_value = "on")]
    pub normalized: Option<bool>,
    /// Without `--arch`: average histograms over sampled DAGs with this L.
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Number of sampled DAGs.
    #[arg(long)]
    pub seeds: Option<u64>,
    /// First generator seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV output (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// SVG bar chart of the table.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case", default)]
pub struct AnalyzeSettings {
    pub arch: Option<PathBuf>,
    pub weights: Option<PathBuf>,
    pub stat: StatKind,
    pub normalized: bool,
    pub nodes: usize,
    pub p: f64,
    pub seeds: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

impl Default for AnalyzeSettings {
    fn default() -> Self {
        AnalyzeSettings {
            arch: None,
            weights: None,
            stat: StatKind::Hist,
            normalized: false,
            nodes: 8,
            p: 0.6,
            seeds: 100,
            seed: 0,
            out: None,
            svg: None,
        }
    }
}

fn load_arch(path: &std::path::Path) -> Result<ArchDag, CliError> {
    deserialize(&read_text(path)?).map_err(CliError::data)
}

pub fn analyze_settings(flags: &AnalyzeFlags) -> Result<AnalyzeSettings, CliError> {
    resolve(flags, flags.config.as_deref())
}

pub fn analyze(s: &AnalyzeSettings) -> Result<(), CliError> {
    let Some(arch) = &s.arch else {
        if s.stat != StatKind::Hist {
            return Err(CliError::Usage("without --arch only --stat hist is available".into()));
        }
        let table = averaged_histogram(s.nodes, s.p, s.seeds, s.seed)?;
        let title = format!("mean path length distribution, L={}, p={}, {} DAGs", s.nodes, s.p, s.seeds);
        return write_table(s, &table, &title);
    };
    let dag = load_arch(arch)?;
    match s.stat {
        StatKind::Hist => {
            let title = format!("path length distribution, L={}", dag.num_nodes());
            write_table(s, &histogram_table(&dag)?, &title)
        }
        StatKind::Rho => {
            let weights = match &s.weights {
                Some(path) => parse_edge_weights(&read_text(path)?).map_err(CliError::data)?,
                None => uniform_weights(&dag, 1.0),
            };
            let title = format!("receptive field radius distribution, L={}", dag.num_nodes());
            write_table(s, &radius_table(&dag, &weights, s.normalized)?, &title)
        }
        StatKind::Lemmas => {
            if s.svg.is_some() {
                return Err(CliError::Usage("--svg applies to hist and rho".into()));
            }
            emit(s.out.as_deref(), &arch_lemma_rows(&dag)?.to_csv())
        }
    }
}

fn write_table(s: &AnalyzeSettings, table: &DistributionTable, title: &str) -> Result<(), CliError> {
    emit(s.out.as_deref(), &table.to_csv())?;
    if let Some(svg) = &s.svg {
        emit(Some(svg), &table.to_svg(title))?;
    }
    Ok(())
}
