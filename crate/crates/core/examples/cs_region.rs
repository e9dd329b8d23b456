//! Communication-sensing region at desk scale.
//!
//!     cargo run --release --example cs_region -- [config.toml] [n_drops]

use std::path::PathBuf;

use cellfree_isac::harness::{cs_region, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args.next().map(PathBuf::from).unwrap_or_else(|| "configs/desk.toml".into());
    let mut config = ExperimentConfig::from_file(&path)?;
    if let Some(n) = args.next() {
        config.experiment.n_drops = n.parse()?;
    }
    let start = std::time::Instant::now();
    let region = cs_region(&config)?;
    println!("{} drops in {:.1?}", config.experiment.n_drops, start.elapsed());

    println!("{:>8} {:>8} {:>14} {:>14} {:>9}", "mode", "level", "rate [Mb/s]", "sensing [Mb/s]", "feasible");
    let points = region.upc.iter().chain(&region.joint).chain(&region.separate);
    for p in points {
        println!(
            "{:>8} {:>8.2} {:>14.4} {:>14.4} {:>9}",
            p.mode.as_str(),
            p.level,
            p.rate / 1e6,
            p.sensing_rate / 1e6,
            p.feasible_drops
        );
    }
    let lagging = region.undominated_separate(2e-3);
    println!("S-OPC points not dominated by a joint point: {}", lagging.len());
    Ok(())
}
