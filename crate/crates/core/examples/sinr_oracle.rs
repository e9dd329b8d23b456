//! Closed-form downlink SINR against a Monte Carlo use-and-then-forget
//! estimate on a four-AP drop.
//!
//!     cargo run --release --example sinr_oracle -- [blocks]

use cellfree_isac::comm::uatf_monte_carlo_oracle;
use cellfree_isac::power::upc;
use cellfree_isac::rng::{stream_rng, Stream};
use cellfree_isac::{Network, ScenarioConfig};

fn main() -> cellfree_isac::Result<()> {
    let blocks = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50_000);
    let cfg = ScenarioConfig {
        num_aps: 4,
        n_rx_aps: Some(1),
        num_ues: 3,
        num_regions: 1,
        antennas: 2,
        tau_p: 3,
        l_serve: 2,
        l_tx_sense: 3,
        ..ScenarioConfig::default()
    };
    let net = Network::build(&cfg, 3)?;
    let alloc = upc(&net.scenario);
    let mut rng = stream_rng(3, 0, Stream::Oracle);
    let closed = net.sinr(&alloc);
    let mc = uatf_monte_carlo_oracle(
        &net.scenario,
        &alloc,
        &net.sampler,
        &net.estimation,
        net.noise_power,
        true,
        blocks,
        &mut rng,
    );
    println!("{blocks} coherence blocks, uniform power");
    for (k, (a, b)) in closed.iter().zip(&mc).enumerate() {
        println!("UE {k}: closed form {a:.5}  oracle {b:.5}  rel. diff {:+.3}%", 100.0 * (b - a) / a);
    }
    Ok(())
}
