//! `epec`: batch front end for election polarization and competitiveness
//! metrics. Every command writes its tables plus a `manifest.json` under
//! `<out>/<command>/<label>/`; failures exit 1 with a JSON error on stderr.

mod commands;
mod output;
mod tables;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use epec::analysis::RobustnessProtocol;
use epec::model::AggregationLevel;
use epec::pipeline::TopN;
use serde_json::json;

use output::OutputArgs;

#[derive(Debug, Parser)]
#[command(name = "epec", version, about = "Election polarization (EP) and competitiveness (EC) from disaggregated results")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Abstentions {
    /// Drop abstention, blank and null rows.
    Exclude,
    /// Keep them as extra antagonists.
    AsCandidates,
}

/// How to turn a results file into a vote matrix.
#[derive(Debug, Clone, Args)]
pub struct CurationArgs {
    /// Results file in the unified schema (.csv or .csv.gz).
    #[arg(long)]
    pub input: PathBuf,
    /// Unit level: `unit`, `national`, or a polling-id prefix depth.
    #[arg(long, default_value = "unit")]
    pub level: AggregationLevel,
    /// Candidates kept by national vote (`all` or a count >= 2); the rest are pooled.
    #[arg(long)]
    pub top_n: Option<TopN>,
    /// Country preset for --top-n (us = 2, chile = 4, france = 8).
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, value_enum, default_value = "exclude")]
    pub abstentions: Abstentions,
    /// Label of the pooled candidate.
    #[arg(long, default_value = "other")]
    pub other_label: String,
    /// Separator between polling-id levels.
    #[arg(long, default_value = "|")]
    pub separator: char,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// National, per-candidate and per-region EP/EC with classical measures.
    Compute(ComputeArgs),
    /// Generate a seeded synthetic election.
    Synth(SynthArgs),
    /// Correlate regional EP/EC across curation variants.
    Robustness(RobustnessArgs),
    /// Label states SWING or PARTISAN from their last four presidential winners.
    ClassifySwing(SwingArgs),
    /// Partisan-strength gap between parties per region and year.
    MassPolarization(MassArgs),
    /// Join panel EP/EC with covariates into a standardized regression table.
    Export(ExportArgs),
    /// Check a results file against the schema invariants.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    #[command(flatten)]
    pub curation: CurationArgs,
    /// Location file joined on polling_id; mismatches are reported as warnings.
    #[arg(long)]
    pub location: Option<PathBuf>,
    /// Prefix depth of the regions in regions.csv (skipped when not coarser than --level).
    #[arg(long, default_value_t = 1)]
    pub region_level: usize,
    /// Esteban-Ray alpha values.
    #[arg(long, value_delimiter = ',', default_value = "0.25,1")]
    pub alpha: Vec<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of candidates.
    #[arg(long, default_value_t = 2)]
    pub candidates: usize,
    /// Gaussian means of the first candidates-1 shares.
    #[arg(long, value_delimiter = ',', required = true)]
    pub mu: Vec<f64>,
    /// Standard deviations, one per mean, within [0, 0.25].
    #[arg(long, value_delimiter = ',', required = true)]
    pub sigma: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub units: usize,
    #[arg(long, default_value_t = 100)]
    pub votes_per_unit: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    #[command(subcommand)]
    pub protocol: RobustnessCommand,
}

#[derive(Debug, Args)]
pub struct RegionalArgs {
    #[command(flatten)]
    pub curation: CurationArgs,
    /// Prefix depth of the regions being correlated.
    #[arg(long, default_value_t = 1)]
    pub region_level: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Subcommand)]
pub enum RobustnessCommand {
    /// Top-n curation against all candidates for n = 2..max-n.
    TopN {
        #[command(flatten)]
        regional: RegionalArgs,
        #[arg(long, default_value_t = 8)]
        max_n: usize,
    },
    /// Units at a fine level against units at a coarse level.
    Aggregation {
        #[command(flatten)]
        regional: RegionalArgs,
        /// Fine unit level.
        #[arg(long, default_value = "unit")]
        fine: AggregationLevel,
        /// Coarse unit level; must be finer than the regions.
        #[arg(long)]
        coarse: AggregationLevel,
    },
    /// Pseudo-rows excluded against pseudo-rows as candidates.
    Abstentions {
        #[command(flatten)]
        regional: RegionalArgs,
    },
    /// All candidates against the top ceil(ENP).
    Enp {
        #[command(flatten)]
        regional: RegionalArgs,
    },
    /// Two precomputed regional tables (region,ep,ec), e.g. two rounds or two elections.
    Pairs {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value = "ROUNDS")]
        protocol: RobustnessProtocol,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Args)]
pub struct SwingArgs {
    /// CSV with a `state` column and four winner columns, oldest first.
    /// Defaults to the built-in 2008-2020 presidential table.
    #[arg(long)]
    pub winners: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct MassArgs {
    /// Survey CSV with columns region, year, pid7, weight.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Panel metrics CSV with columns region, year, ep, ec.
    #[arg(long)]
    pub metrics: PathBuf,
    /// Covariates CSV with columns region, year and numeric covariates.
    #[arg(long)]
    pub covariates: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn error_json(err: &anyhow::Error) -> serde_json::Value {
    let mut kind = "error";
    let mut rows = Vec::new();
    if let Some(e) = err.downcast_ref::<epec::PipelineError>() {
        kind = "pipeline";
        rows = e
            .row_errors()
            .iter()
            .map(|r| json!({ "line": r.line, "message": r.to_string() }))
            .collect();
    } else if let Some(e) = err.downcast_ref::<epec::AnalysisError>() {
        kind = "analysis";
        if let epec::AnalysisError::Pipeline(p) = e {
            rows = p
                .row_errors()
                .iter()
                .map(|r| json!({ "line": r.line, "message": r.to_string() }))
                .collect();
        }
    } else if err.downcast_ref::<epec::SynthError>().is_some() {
        kind = "invalid_spec";
    } else if let Some(e) = err.downcast_ref::<tables::TableError>() {
        kind = "table";
        rows = e
            .rows
            .iter()
            .map(|(line, msg)| json!({ "line": line, "message": format!("line {line}: {msg}") }))
            .collect();
    }
    let mut out = json!({ "error": kind, "message": format!("{err:#}") });
    if !rows.is_empty() {
        out["rows"] = rows.into();
    }
    out
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compute(a) => commands::compute(&argv, a),
        Command::Synth(a) => commands::synth(&argv, a),
        Command::Robustness(a) => commands::robustness(&argv, a.protocol),
        Command::ClassifySwing(a) => commands::classify_swing(&argv, a),
        Command::MassPolarization(a) => commands::mass_polarization(&argv, a),
        Command::Export(a) => commands::export(&argv, a),
        Command::Validate(a) => commands::validate(&argv, a),
    };
    match result {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}", error_json(&err));
            ExitCode::FAILURE
        }
    }
}
