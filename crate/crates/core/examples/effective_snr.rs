//! Effective sensing SNR from the quadratic form against simulated echo
//! energy, while shifting power from the data stream to the sensing beam.
//!
//!     cargo run --release --example effective_snr

use cellfree_isac::rng::{stream_rng, Stream};
use cellfree_isac::sensing::effective_snr_monte_carlo;
use cellfree_isac::{Network, ScenarioConfig};

fn main() -> cellfree_isac::Result<()> {
    let cfg = ScenarioConfig {
        num_aps: 3,
        n_rx_aps: Some(1),
        num_ues: 2,
        num_regions: 1,
        antennas: 2,
        tau_p: 2,
        l_serve: 2,
        l_tx_sense: 2,
        ..ScenarioConfig::default()
    };
    let net = Network::build(&cfg, 5)?;
    let sc = &net.scenario;
    let mut rng = stream_rng(5, 0, Stream::Oracle);
    println!("sensing share   closed form   Monte Carlo");
    for share in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let mut alloc = net.empty_allocation();
        for t in 0..sc.num_tx() {
            let p = sc.power_budget(t);
            let users = &sc.users.served_by[t];
            let beams = &sc.targets.beams[t];
            for &k in users {
                alloc.set_zeta(k, t, ((1.0 - share) * p / users.len() as f64).sqrt());
            }
            for &i in beams {
                alloc.set_nu(i, t, (share * p / beams.len() as f64).sqrt());
            }
        }
        let closed = net.sensing_snr(&alloc)[0];
        let mc = effective_snr_monte_carlo(sc, &net.geometry, &net.estimation, &net.sampler, &alloc, 0, 20_000, &mut rng)?;
        println!("{share:13.2}   {closed:11.4e}   {mc:11.4e}");
    }
    Ok(())
}
