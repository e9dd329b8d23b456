#![allow(dead_code)]

pub mod socp_cases;

use cellfree_isac::{Network, PowerAllocation, ScenarioConfig};
use rand::Rng;

/// Four APs (three transmit, one receive), three UEs, two antennas, one
/// sensing region, three pilots.
pub fn small_config() -> ScenarioConfig {
    ScenarioConfig {
        num_aps: 4,
        n_rx_aps: Some(1),
        num_ues: 3,
        num_regions: 1,
        antennas: 2,
        tau_p: 3,
        l_serve: 2,
        l_tx_sense: 3,
        ..ScenarioConfig::default()
    }
}

/// Two transmit APs, one receive AP, two UEs, one region.
pub fn two_tx_config() -> ScenarioConfig {
    ScenarioConfig {
        num_aps: 3,
        n_rx_aps: Some(1),
        num_ues: 2,
        num_regions: 1,
        antennas: 2,
        tau_p: 2,
        l_serve: 2,
        l_tx_sense: 2,
        ..ScenarioConfig::default()
    }
}

/// Eight APs, eight UEs, two antennas, two regions.
pub fn desk_config() -> ScenarioConfig {
    ScenarioConfig {
        num_aps: 8,
        num_ues: 8,
        num_regions: 2,
        antennas: 2,
        tau_p: 4,
        l_serve: 3,
        l_tx_sense: 3,
        beam_mc_samples: 200,
        ..ScenarioConfig::default()
    }
}

/// Random allocation respecting structural zeros and budgets; each AP uses
/// a random fraction of its budget and entries are occasionally zero.
pub fn random_allocation<R: Rng + ?Sized>(net: &Network, rng: &mut R) -> PowerAllocation {
    let sc = &net.scenario;
    let mut alloc = net.empty_allocation();
    for t in 0..sc.num_tx() {
        let users = &sc.users.served_by[t];
        let beams = &sc.targets.beams[t];
        let mut w: Vec<f64> = (0..users.len() + beams.len())
            .map(|_| if rng.random::<f64>() < 0.15 { 0.0 } else { rng.random::<f64>() })
            .collect();
        let total: f64 = w.iter().sum();
        if total == 0.0 {
            continue;
        }
        let budget = sc.power_budget(t) * rng.random_range(0.05..1.0);
        w.iter_mut().for_each(|x| *x *= budget / total);
        for (j, &k) in users.iter().enumerate() {
            alloc.set_zeta(k, t, w[j].sqrt());
        }
        for (j, &i) in beams.iter().enumerate() {
            alloc.set_nu(i, t, w[users.len() + j].sqrt());
        }
    }
    alloc
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
