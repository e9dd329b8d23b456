//! GLRT detection and false-alarm rates for one region under uniform power
//! control, scaled down to show the detection curve.
//!
//!     cargo run --release --example glrt_detection -- [trials]

use cellfree_isac::power::upc;
use cellfree_isac::rng::{stream_rng, Stream};
use cellfree_isac::sensing::simulate_detection;
use cellfree_isac::{Network, ScenarioConfig};

fn main() -> cellfree_isac::Result<()> {
    let trials = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2_000);
    let cfg = ScenarioConfig {
        num_aps: 4,
        n_rx_aps: Some(1),
        num_ues: 3,
        num_regions: 1,
        antennas: 2,
        tau_p: 3,
        l_serve: 2,
        l_tx_sense: 3,
        tau_s: 10,
        ..ScenarioConfig::default()
    };
    let net = Network::build(&cfg, 9)?;
    let base = upc(&net.scenario);
    let mut rng = stream_rng(9, 0, Stream::Noise);
    let p_fa = 0.01;
    println!("power scale   eff. SNR      P_d      P_fa   mean rx SNR");
    for scale_db in [-40.0, -30.0, -20.0, -10.0, 0.0] {
        let alloc = base.scaled(10f64.powf(scale_db / 20.0));
        let snr = net.sensing_snr(&alloc)[0];
        let r = simulate_detection(
            &net.scenario,
            &net.geometry,
            &net.estimation,
            &net.sampler,
            &alloc,
            0,
            p_fa,
            trials,
            &mut rng,
        )?;
        println!(
            "{scale_db:8.0} dB   {snr:9.3e}   {:6.3}   {:6.4}   {:9.3e}",
            r.detection, r.false_alarm, r.mean_receive_snr
        );
    }
    Ok(())
}
