//! `dronecell`: run the cellular drone-detection experiments stage by stage.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::ExperimentConfig;
use crate::output::{Manifest, Run};

/// Exit status for runtime errors. Usage errors exit with 64; `gate` uses 0, 1
/// and 2 for its verdicts.
const EXIT_ERROR: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "dronecell", version, about = "Cellular-network drone detection experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Experiment config (JSON). Built-in defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for simulation (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
struct LayoutArgs {
    /// Rings of sites around the center site.
    #[arg(long)]
    rings: Option<i64>,
    /// Inter-site distance in meters.
    #[arg(long)]
    isd_m: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ModelKind {
    Logistic,
    Tree,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the hexagonal cell layout to layout.csv.
    Layout(LayoutArgs),
    /// Drop UEs, compute radio samples and write dataset.csv and radio_samples.csv.
    Simulate {
        #[command(flatten)]
        layout: LayoutArgs,
        /// Indoor terrestrial UEs.
        #[arg(long)]
        indoor: Option<usize>,
        /// Outdoor terrestrial UEs.
        #[arg(long)]
        outdoor: Option<usize>,
        /// Aerial UEs at each height.
        #[arg(long)]
        aerial_per_height: Option<usize>,
        /// Aerial heights in meters, comma separated.
        #[arg(long, value_delimiter = ',')]
        heights: Option<Vec<f64>>,
    },
    /// Split a dataset, train a classifier and write model_<kind>.json and metrics_<kind>.json.
    Train {
        /// Dataset CSV (default: <out>/dataset.csv).
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long, value_enum)]
        model: ModelKind,
        /// Share of each (label, height-bin) stratum used for training.
        #[arg(long)]
        train_fraction: Option<f64>,
        /// Tree: maximum depth.
        #[arg(long)]
        max_depth: Option<usize>,
        /// Tree: minimum samples per leaf.
        #[arg(long)]
        min_leaf: Option<usize>,
        /// Logistic: gradient-descent step size.
        #[arg(long)]
        learning_rate: Option<f64>,
        /// Logistic: iteration cap.
        #[arg(long)]
        max_iters: Option<usize>,
        /// Logistic: stop when every gradient component is below this.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Logistic: L2 penalty on the weights.
        #[arg(long)]
        l2: Option<f64>,
    },
    /// Evaluate a model on a grid of raw features and write grid_<kind>.csv.
    Grid {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        rsrp_std_min: Option<f64>,
        #[arg(long)]
        rsrp_std_max: Option<f64>,
        #[arg(long)]
        rsrp_std_steps: Option<usize>,
        #[arg(long)]
        rssi_min: Option<f64>,
        #[arg(long)]
        rssi_max: Option<f64>,
        #[arg(long)]
        rssi_steps: Option<usize>,
    },
    /// Score a model on a whole dataset and write evaluation_<kind>.json.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        /// Dataset CSV (default: <out>/dataset.csv).
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Predict drone when the probability is at least this.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Check observed KPIs against an application's requirements and write gate_report.json.
    /// Exit status: 0 pass, 1 fail, 2 pass with unknown dimensions.
    Gate {
        /// Application name from the requirement registry.
        #[arg(long)]
        application: String,
        /// KPI report JSON.
        #[arg(long, conflicts_with = "trial", required_unless_present = "trial")]
        kpis: Option<PathBuf>,
        /// Trial log CSV; each height bin's medians are gated.
        #[arg(long)]
        trial: Option<PathBuf>,
        /// Gate only the trial bin with this upper edge in meters.
        #[arg(long, requires = "trial")]
        bin: Option<f64>,
        /// Alternative requirement registry JSON.
        #[arg(long)]
        registry: Option<PathBuf>,
    },
    /// Summarize a trial log per height bin; writes trial_summary.json and trial_summary.csv.
    Trial {
        #[arg(long)]
        log: PathBuf,
        /// Upper bin edges in meters, comma separated.
        #[arg(long, value_delimiter = ',')]
        bins: Option<Vec<f64>>,
    },
    /// Train a tree by exhaustive split enumeration on the whole dataset; writes oracle_tree.json.
    OracleTree {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        max_depth: Option<usize>,
        #[arg(long)]
        min_leaf: Option<usize>,
    },
    /// Generate a synthetic trial log (trial_log.csv). Not measured data.
    SynthTrial {
        /// Records per height.
        #[arg(long)]
        per_height: Option<usize>,
        /// Heights in meters, comma separated.
        #[arg(long, value_delimiter = ',')]
        heights: Option<Vec<f64>>,
    },
    /// Look up reference 5G rates and the calibrated peak-rate estimate; writes rates.json.
    Rates {
        #[arg(long)]
        fc_ghz: f64,
        #[arg(long)]
        radius_m: f64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Layout(_) => "layout",
            Command::Simulate { .. } => "simulate",
            Command::Train { .. } => "train",
            Command::Grid { .. } => "grid",
            Command::Evaluate { .. } => "evaluate",
            Command::Gate { .. } => "gate",
            Command::Trial { .. } => "trial",
            Command::OracleTree { .. } => "oracle-tree",
            Command::SynthTrial { .. } => "synth-trial",
            Command::Rates { .. } => "rates",
        }
    }
}

fn resolve(common: &Common) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { EXIT_USAGE } else { 0 });
        }
    };

    if let Some(n) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERROR);
        }
    }

    let name = cli.command.name();
    let mut run = Run::default();
    let (cfg, result) = match resolve(&cli.common) {
        Ok(mut cfg) => {
            let r = commands::dispatch(&cli.command, &mut cfg, &mut run);
            (Some(cfg), r)
        }
        Err(e) => (None, Err(e)),
    };

    let out_dir = cfg
        .as_ref()
        .map(|c| c.output_dir.clone())
        .or_else(|| cli.common.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        subcommand: name.to_string(),
        seed: cfg.as_ref().map_or(cli.common.seed.unwrap_or_default(), |c| c.seed),
        config_sha256: cfg.as_ref().map(|c| c.hash()).unwrap_or_default(),
        config: cfg.as_ref().map_or(serde_json::Value::Null, |c| serde_json::to_value(c).expect("config serializes")),
        inputs: Run::digests(&run.inputs),
        outputs: Run::digests(&run.outputs),
        status: if result.is_ok() { "ok" } else { "error" },
        error: result.as_ref().err().map(|e| format!("{e:#}")),
    };
    let manifest_path = out_dir.join(format!("{name}.manifest.json"));
    if let Err(e) = output::write_json(&manifest_path, &manifest) {
        eprintln!("warning: could not write run manifest {}: {e:#}", manifest_path.display());
    }

    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
