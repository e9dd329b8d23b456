//! Empirical CDFs of the UE rate over desk-scale drops for every mode.
//!
//!     cargo run --release --example rate_cdf -- [n_drops]

use cellfree_isac::harness::{empirical_cdf, pool_samples, quantile, simulate_drops, ExperimentConfig, ModeName};
use cellfree_isac::ScenarioConfig;

fn main() -> cellfree_isac::Result<()> {
    let n_drops = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let mut config = ExperimentConfig {
        scenario: ScenarioConfig {
            num_aps: 8,
            num_ues: 8,
            num_regions: 2,
            antennas: 2,
            tau_p: 4,
            l_serve: 3,
            l_tx_sense: 3,
            beam_mc_samples: 200,
            ..ScenarioConfig::default()
        },
        ..Default::default()
    };
    config.experiment.n_drops = n_drops;
    config.experiment.master_seed = 42;
    let records = simulate_drops(&config)?;

    println!("{:>8} {:>6} {:>12} {:>12} {:>12}", "mode", "drops", "10% [Mb/s]", "50% [Mb/s]", "90% [Mb/s]");
    for mode in ModeName::ALL {
        let s = pool_samples(&records, mode);
        if s.rates.is_empty() {
            continue;
        }
        let q = |p| quantile(&s.rates, p).map(|v| v / 1e6);
        println!("{:>8} {:>6} {:>12.3} {:>12.3} {:>12.3}", mode.as_str(), s.drops_used, q(0.1)?, q(0.5)?, q(0.9)?);
    }

    // coarse text rendering of the J-OPC comm-prioritized CDF
    let s = pool_samples(&records, ModeName::JopcCp);
    let cdf = empirical_cdf(&s.rates)?;
    for (x, p) in cdf.iter().step_by((cdf.len() / 10).max(1)) {
        println!("{:8.3} Mb/s {:5.2} {}", x / 1e6, p, "#".repeat((p * 40.0) as usize));
    }
    Ok(())
}
