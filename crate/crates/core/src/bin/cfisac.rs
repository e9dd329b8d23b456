use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cellfree_isac::harness::{parse_modes, run_cdf, run_experiment, run_region, ExperimentConfig};
use cellfree_isac::Error;

#[derive(Parser)]
#[command(name = "cfisac", version, about = "Cell-free ISAC power-control experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-drop rates, SNRs and allocations of every mode (drops.csv).
    Run(Common),
    /// Communication-sensing region sweep (region.csv).
    Region(Common),
    /// Empirical CDFs of UE and sensing rates (cdf.csv).
    Cdf(Common),
}

#[derive(Args)]
struct Common {
    /// TOML file with [scenario] and [experiment] tables.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of drops; overrides the config.
    #[arg(long)]
    drops: Option<usize>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of upc,jopc_cp,jopc_sp,sopc.
    #[arg(long)]
    mode: Option<String>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        let e = &mut config.experiment;
        if let Some(seed) = self.seed {
            e.master_seed = seed;
        }
        if let Some(n) = self.drops {
            e.n_drops = n;
        }
        if let Some(out) = &self.out {
            e.output_dir = out.clone();
        }
        if let Some(list) = &self.mode {
            e.modes = parse_modes(list)?;
        }
        config.validate()?;
        Ok(config)
    }
}

fn execute(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Run(c) => {
            let config = c.resolve()?;
            let out = run_experiment(&config)?;
            let failed = out
                .records
                .iter()
                .filter(|r| r.error.is_some() || r.modes.iter().any(|m| m.error.is_some()))
                .count();
            let secs: f64 = out.records.iter().map(|r| r.elapsed.as_secs_f64()).sum();
            eprintln!(
                "{} drops ({failed} with errors), {secs:.1} s of drop time; wrote {}",
                out.records.len(),
                out.csv.display()
            );
        }
        Command::Region(c) => {
            let config = c.resolve()?;
            let out = run_region(&config)?;
            let r = &out.region;
            eprintln!(
                "{} joint and {} separate points; wrote {}",
                r.joint.len(),
                r.separate.len(),
                out.csv.display()
            );
        }
        Command::Cdf(c) => {
            let config = c.resolve()?;
            let out = run_cdf(&config)?;
            for s in &out.samples {
                eprintln!("{:>8}: {} drops with optimal status", s.mode.as_str(), s.drops_used);
            }
            eprintln!("wrote {}", out.csv.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cfisac: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 2,
                Error::Io { .. } => 3,
                _ => 1,
            })
        }
    }
}
