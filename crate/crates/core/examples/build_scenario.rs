//! Draws one paper-scale drop and prints its layout and associations.
//!
//!     cargo run --example build_scenario -- [seed]

use cellfree_isac::scenario::{path_loss_db, LinkKind};
use cellfree_isac::{Scenario, ScenarioConfig};

fn main() -> cellfree_isac::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let cfg = ScenarioConfig::default();
    let sc = Scenario::build(&cfg, seed)?;
    println!(
        "{} APs ({} tx, {} rx), {} UEs, {} regions, {} antennas, noise {:.3e} W",
        cfg.num_aps,
        sc.num_tx(),
        sc.num_rx(),
        sc.num_ues(),
        sc.num_regions(),
        sc.antennas(),
        cfg.noise_power()
    );
    for (r, &ap) in sc.rx_aps.iter().enumerate() {
        let p = sc.ap_positions[ap];
        println!("rx {r}: AP {ap} at ({:6.1}, {:6.1})", p.x, p.y);
    }
    for (k, serving) in sc.users.serving.iter().enumerate() {
        let p = sc.ue_positions[k];
        println!("UE {k:2} at ({:6.1}, {:6.1}) served by tx {serving:?}", p.x, p.y);
    }
    for i in 0..sc.num_regions() {
        let c = sc.radar_cells[i];
        println!(
            "region {i}: cell ({:6.1}, {:6.1}, {:5.1}) lit by tx {:?}, observed by rx {:?}",
            c.x, c.y, c.z, sc.targets.tx[i], sc.targets.rx[i]
        );
    }
    for d in [10.0, 100.0, 500.0] {
        println!(
            "path loss at {d:5} m: NLOS {:6.1} dB, LOS {:6.1} dB",
            path_loss_db(d, LinkKind::NlosAccess, cfg.carrier_frequency),
            path_loss_db(d, LinkKind::LosTarget, cfg.carrier_frequency)
        );
    }
    Ok(())
}
