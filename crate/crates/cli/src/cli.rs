use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use kapitza_core::measurement::{Hypothesis, Stages};
use kapitza_core::params::ProbeLevel;

use crate::config::Format;

#[derive(Debug, Parser)]
#[command(name = "kapitza", version, about = "Pump and probe simulations of Kapitza-Dirac diffraction on three-level atoms")]
pub struct Cli {
    /// TOML configuration; every key is optional.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Master seed; overrides `protocol.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    pub svg: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Momentum distribution after the pump stage(s).
    Pump,
    /// Probe absorption spectrum of the pumped atoms.
    Spectrum {
        #[arg(long, value_enum)]
        formula: Option<FormulaChoice>,
        #[arg(long, value_enum)]
        level: Option<LevelChoice>,
    },
    /// Seeded few-atom realizations, one directory per hypothesis cell.
    Scenario {
        /// Cell name such as `sup+collapse`; repeatable, default all four.
        #[arg(long = "hypothesis", value_parser = parse_cell)]
        hypotheses: Vec<Hypothesis>,
        #[arg(long, value_enum)]
        protocol: Option<ProtocolChoice>,
        #[arg(long)]
        realizations: Option<usize>,
        /// Write every realization spectrum, not only its digest.
        #[arg(long)]
        spectra: bool,
    },
    /// Classify scenario output: one cell directory or a parent of several.
    Classify {
        input: PathBuf,
        #[arg(long, value_enum)]
        protocol: Option<ProtocolChoice>,
    },
    /// Pump and spectrum for each value of one parameter.
    Sweep {
        /// Dotted key such as `pump.zeta_1`, or `zeta` / `tau2`.
        #[arg(long)]
        param: String,
        #[arg(long, required = true, num_args = 0.., value_delimiter = ',')]
        values: Vec<String>,
    },
}

fn parse_cell(s: &str) -> Result<Hypothesis, String> {
    s.parse().map_err(|e: kapitza_core::Error| e.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormulaChoice {
    Full,
    Diagonal,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LevelChoice {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    Both,
}

impl From<LevelChoice> for ProbeLevel {
    fn from(c: LevelChoice) -> Self {
        match c {
            LevelChoice::One => ProbeLevel::One,
            LevelChoice::Two => ProbeLevel::Two,
            LevelChoice::Both => ProbeLevel::Both,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProtocolChoice {
    Standing,
    Travel,
}

impl From<ProtocolChoice> for Stages {
    fn from(c: ProtocolChoice) -> Self {
        match c {
            ProtocolChoice::Standing => Stages::StandingOnly,
            ProtocolChoice::Travel => Stages::StandingThenTraveling,
        }
    }
}
