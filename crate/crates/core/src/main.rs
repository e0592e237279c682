use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use monotrack::cli::{self, DetectionSource, Dropout, RunConfig};
use monotrack::tracker::FilterKind;

#[derive(Parser)]
#[command(name = "monotrack", version, about = "Monocular pedestrian tracking and filter consistency evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track selected objects and write estimates, metrics and a summary.
    Run {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
        /// Feed simulated detections instead of the sequence's detection file.
        #[arg(long)]
        simulate: bool,
    },
    /// Write simulated detection files, one per trial.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Run the filters on detection files written by `simulate`.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Directory holding `track_<id>/trial_<n>.txt`.
        #[arg(long)]
        trials_dir: PathBuf,
    },
    /// Print a summary of the selected tracks.
    Inspect {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// MOT sequence directory.
    #[arg(long)]
    seq: Option<PathBuf>,
    /// Object id to track; repeat for several.
    #[arg(long = "track-id")]
    track_ids: Vec<i64>,
    /// Filter to run; repeat for several.
    #[arg(long = "filter", value_enum)]
    filters: Vec<FilterArg>,
    /// Output directory.
    #[arg(long, env = "MONOTRACK_OUT_DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    dropout: Option<DropoutArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FilterArg {
    Kf2d,
    Bot,
    Ukf3d,
}

impl From<FilterArg> for FilterKind {
    fn from(f: FilterArg) -> Self {
        match f {
            FilterArg::Kf2d => FilterKind::Kf2d,
            FilterArg::Bot => FilterKind::Bot,
            FilterArg::Ukf3d => FilterKind::Ukf3d,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DropoutArg {
    Real,
    None,
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seq) = &self.seq {
            cfg.sequence.dir = Some(seq.clone());
        }
        if !self.track_ids.is_empty() {
            cfg.sequence.track_ids = self.track_ids.clone();
        }
        if !self.filters.is_empty() {
            cfg.filters.selected = self.filters.iter().map(|&f| f.into()).collect();
        }
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        Ok(cfg)
    }
}

impl SimArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(t) = self.trials {
            cfg.sim.trials = t;
        }
        if let Some(s) = self.seed {
            cfg.sim.seed = s;
        }
        if let Some(d) = self.dropout {
            cfg.sim.dropout = match d {
                DropoutArg::Real => Dropout::Real,
                DropoutArg::None => Dropout::None,
            };
        }
    }
}

fn report(outcome: &cli::Outcome) -> i32 {
    for track in &outcome.tracks {
        for f in &track.filters {
            let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
            println!(
                "track {} {}: median rmse {} anees {} ({} trials, {} failed)",
                track.track_id,
                f.filter,
                fmt(f.median_rmse_2d),
                fmt(f.median_anees_2d),
                f.trials,
                f.failed_trials
            );
            if let Some(e) = &f.error {
                eprintln!("track {} {}: {e}", track.track_id, f.filter);
            }
        }
    }
    outcome.exit_code()
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run { common, sim, simulate } => {
            let mut cfg = common.config()?;
            sim.apply(&mut cfg);
            let source = if simulate {
                DetectionSource::Simulated
            } else {
                DetectionSource::Real
            };
            let outcome = cli::run(&cfg, &source).context("run failed")?;
            Ok(report(&outcome))
        }
        Command::Simulate { common, sim } => {
            let mut cfg = common.config()?;
            sim.apply(&mut cfg);
            let files = cli::simulate(&cfg).context("simulation failed")?;
            println!("wrote {} detection files", files.len());
            Ok(0)
        }
        Command::Evaluate { common, trials_dir } => {
            let cfg = common.config()?;
            let outcome = cli::run(&cfg, &DetectionSource::Files(trials_dir)).context("evaluation failed")?;
            Ok(report(&outcome))
        }
        Command::Inspect { common } => {
            let cfg = common.config()?;
            print!("{}", cli::inspect(&cfg)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    // Usage errors are configuration errors: exit 1, keeping 2 for partial track failures.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(u8::from(e.use_stderr()));
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
