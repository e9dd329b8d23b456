//! Compares uniform power control with the joint and orthogonal designs on
//! one drop.
//!
//!     cargo run --release --example power_control -- [seed]

use cellfree_isac::power::{jopc, sopc, upc, QosProblemSpec, Settings};
use cellfree_isac::{Network, ScenarioConfig};

fn min(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn main() -> cellfree_isac::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let cfg = ScenarioConfig {
        num_aps: 8,
        num_ues: 8,
        num_regions: 2,
        antennas: 2,
        tau_p: 4,
        l_serve: 3,
        l_tx_sense: 3,
        ..ScenarioConfig::default()
    };
    let net = Network::build(&cfg, seed)?;

    let base = upc(&net.scenario);
    let base_sinr = min(&net.sinr(&base));
    let base_snr = min(&net.sensing_snr(&base));
    println!("UPC               min SINR {base_sinr:10.4e}  min eff. SNR {base_snr:10.4e}");

    let cp = jopc(&net, &QosProblemSpec::comm_prioritized(base_snr))?;
    println!(
        "J-OPC comm-first  min SINR {:10.4e}  min eff. SNR {:10.4e}  [{} , {} trace points]",
        cp.objective,
        min(&net.sensing_snr(&cp.allocation)),
        cp.status.as_str(),
        cp.trace.len()
    );
    let sp = jopc(&net, &QosProblemSpec::sensing_prioritized(base_sinr))?;
    println!(
        "J-OPC sense-first min SINR {:10.4e}  min eff. SNR {:10.4e}  [{} , {} trace points]",
        min(&net.sinr(&sp.allocation)),
        sp.objective,
        sp.status.as_str(),
        sp.trace.len()
    );

    for t in [0.2, 0.5] {
        let r = sopc(&net, t, &Settings::default())?;
        println!(
            "S-OPC T = {t}      min rate {:8.3} Mbit/s  min sensing rate {:8.3} Mbit/s",
            min(&r.rates(&net)?) / 1e6,
            min(&r.sensing_rates(&net)) / 1e6
        );
    }
    let rates = net.rates(&cp.allocation);
    println!("J-OPC comm-first  min rate {:8.3} Mbit/s", min(&rates) / 1e6);
    Ok(())
}
