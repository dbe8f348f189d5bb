//! `recession`: builds the unemployment and vacancy dataset, nowcasts the
//! recession probability, backtests and calibrates the threshold rules, and
//! exports plot-ready series.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use recession_core::Month;

use crate::commands::Export;
use crate::config::{Format, RunConfig, Settings};
use crate::report::Render;

#[derive(Parser)]
#[command(name = "recession", version, about = "Recession detection from unemployment and vacancy rates")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

/// Thresholds are given in percentage points (0.3 means 0.3pp).
#[derive(Args)]
struct GlobalArgs {
    /// Directory holding the source tables and recession calendar [default: data]
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    /// First month of the analysis span (YYYY-MM)
    #[arg(long, global = true)]
    start: Option<Month>,
    /// Last month of the analysis span; also the nowcast month (YYYY-MM)
    #[arg(long, global = true)]
    end: Option<Month>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Lower threshold of the two-sided rule, pp [default: 0.3]
    #[arg(long, global = true)]
    rule_low: Option<f64>,
    /// Upper threshold of the two-sided rule, pp [default: 0.8]
    #[arg(long, global = true)]
    rule_high: Option<f64>,
    /// Minimum-indicator dating threshold, pp [default: 0.3]
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// Unemployment-indicator dating threshold, pp [default: 0.5]
    #[arg(long, global = true)]
    sahm_threshold: Option<f64>,
    /// Months before an official start in which a detection still counts [default: 3]
    #[arg(long, global = true)]
    early_window: Option<u32>,
    /// Read remote series from the cache only
    #[arg(long, global = true)]
    offline: bool,
    /// Count a month as above a threshold only when strictly greater
    #[arg(long, global = true)]
    strict: bool,
    /// TOML configuration file (also RECESSION_CONFIG)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the unified monthly dataset (u, v, u_bar, v_bar) with a provenance manifest
    BuildData {
        /// Build 1960 onward from the modern sources only
        #[arg(long)]
        modern_only: bool,
        /// Month at which the historical help-wanted index is scaled to the vacancy rate
        #[arg(long)]
        metlife_anchor: Option<Month>,
        /// Output directory [default: <data-dir>/build]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Latest indicator values, classification and recession probability
    Nowcast,
    /// Detected starts, delays and false signals for both threshold rules
    Backtest,
    /// Grid search for the lowest and highest admissible thresholds
    Calibrate {
        /// Grid step in pp
        #[arg(long, default_value_t = 0.1)]
        grid_step: f64,
    },
    /// Write month-indexed series and recession intervals for plotting
    Export {
        #[arg(value_enum, required = true, num_args = 1..)]
        which: Vec<Export>,
        /// Output directory
        #[arg(long, default_value = "export")]
        out: PathBuf,
    },
    /// Download source series into the local cache
    Fetch {
        /// Series ids [default: UNEMPLOY CLF16OV JTSJOL]
        series: Vec<String>,
        /// Also replace the matching tables in the data directory
        #[arg(long)]
        install: bool,
        /// Cache directory [default: <data-dir>/cache]
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        /// Endpoint base URL (also RECESSION_BASE_URL)
        #[arg(long)]
        base_url: Option<String>,
    },
}

impl GlobalArgs {
    fn settings(&self) -> Settings {
        Settings {
            data_dir: self.data_dir.clone(),
            start: self.start,
            end: self.end,
            format: self.format,
            rule_low: self.rule_low,
            rule_high: self.rule_high,
            threshold: self.threshold,
            sahm_threshold: self.sahm_threshold,
            early_window: self.early_window,
            offline: self.offline.then_some(true),
            strict: self.strict.then_some(true),
            ..Settings::default()
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let env = |key: &str| std::env::var(key).ok();
    let mut flags = cli.global.settings();
    if let Command::Fetch { cache_dir, base_url, .. } = &cli.command {
        flags.cache_dir = cache_dir.clone();
        flags.base_url = base_url.clone();
    }
    let file = match cli.global.config.clone().or_else(|| env("RECESSION_CONFIG").map(PathBuf::from)) {
        Some(path) => Settings::from_file(&path)?,
        None => Settings::default(),
    };
    RunConfig::resolve(flags.over(file.over(Settings::from_env(env)?)))
}

fn run(cli: Cli) -> Result<String> {
    let config = resolve(&cli)?;
    let format = config.format;
    Ok(match &cli.command {
        Command::BuildData {
            modern_only,
            metlife_anchor,
            out,
        } => {
            let out = out.clone().unwrap_or_else(|| config.data_dir.join("build"));
            commands::build_data(&config, *modern_only, *metlife_anchor, &out)?.render(format)
        }
        Command::Nowcast => commands::nowcast(&config)?.render(format),
        Command::Backtest => commands::backtest(&config)?.render(format),
        Command::Calibrate { grid_step } => commands::calibrate(&config, *grid_step)?.render(format),
        Command::Export { which, out } => commands::export(&config, which, out)?.render(format),
        Command::Fetch { series, install, .. } => commands::fetch(&config, series, *install)?.render(format),
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(output) => {
            print!("{output}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
