//! Network geometry: AP/UE placement, sensing regions, AP roles and the
//! user-centric / target-centric association sets.
//!
//! Transmit APs are addressed by their *tx index* (position in
//! [`Scenario::tx_aps`]) everywhere outside this module; receive APs by their
//! *rx index* in [`Scenario::rx_aps`].

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CVector, C64};
use crate::rng::{stream_rng, Stream};

/// Scenario parameters. Distances in meters, powers in watts, frequencies in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Side of the square deployment area.
    pub area_side: f64,
    #[serde(alias = "M")]
    pub num_aps: usize,
    #[serde(alias = "K")]
    pub num_ues: usize,
    #[serde(alias = "S")]
    pub num_regions: usize,
    #[serde(alias = "N")]
    pub antennas: usize,
    #[serde(alias = "P_m")]
    pub ap_power: f64,
    #[serde(alias = "bandwidth_B")]
    pub bandwidth: f64,
    #[serde(alias = "carrier_f_c")]
    pub carrier_frequency: f64,
    /// Noise power spectral density in dBm/Hz.
    #[serde(alias = "noise_density_N0")]
    pub noise_density_dbm: f64,
    pub tau_c: usize,
    pub tau_p: usize,
    pub tau_s: usize,
    /// RCS variance in dBsm.
    #[serde(alias = "sigma_alpha_sq")]
    pub rcs_variance_dbsm: f64,
    /// Number of receive-only APs. `None` means one per sensing region.
    pub n_rx_aps: Option<usize>,
    #[serde(alias = "L_serve")]
    pub l_serve: usize,
    #[serde(alias = "L_tx_sense")]
    pub l_tx_sense: usize,
    pub ue_height: f64,
    pub ap_height: f64,
    /// Inclusive range of target heights.
    pub target_height: [f64; 2],
    /// Uplink pilot power.
    pub pilot_power: f64,
    /// Angular spread of the local-scattering model, degrees.
    pub angular_spread_deg: f64,
    /// Width of the Gaussian RCS angle-of-view kernel, degrees.
    pub view_width_deg: f64,
    /// Positions drawn per (region, AP) for the sensing-beam covariance.
    pub beam_mc_samples: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            area_side: (0.5e6f64).sqrt(),
            num_aps: 16,
            num_ues: 16,
            num_regions: 4,
            antennas: 4,
            ap_power: 2.0,
            bandwidth: 20e6,
            carrier_frequency: 2e9,
            noise_density_dbm: -174.0,
            tau_c: 50,
            tau_p: 8,
            tau_s: 50,
            rcs_variance_dbsm: 10.0,
            n_rx_aps: None,
            l_serve: 4,
            l_tx_sense: 4,
            ue_height: 1.65,
            ap_height: 10.0,
            target_height: [20.0, 100.0],
            pilot_power: 0.1,
            angular_spread_deg: 15.0,
            view_width_deg: 20.0,
            beam_mc_samples: 1000,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn rx_count(&self) -> usize {
        self.n_rx_aps.unwrap_or(self.num_regions)
    }

    pub fn tx_count(&self) -> usize {
        self.num_aps.saturating_sub(self.rx_count())
    }

    /// Thermal noise power `N0 * B` in watts.
    pub fn noise_power(&self) -> f64 {
        10f64.powf((self.noise_density_dbm - 30.0) / 10.0) * self.bandwidth
    }

    /// RCS variance in m^2.
    pub fn rcs_variance(&self) -> f64 {
        10f64.powf(self.rcs_variance_dbsm / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        let positive_counts = [
            ("num_aps", self.num_aps),
            ("num_ues", self.num_ues),
            ("num_regions", self.num_regions),
            ("antennas", self.antennas),
            ("tau_c", self.tau_c),
            ("tau_p", self.tau_p),
            ("tau_s", self.tau_s),
            ("l_serve", self.l_serve),
            ("l_tx_sense", self.l_tx_sense),
            ("beam_mc_samples", self.beam_mc_samples),
        ];
        for (name, v) in positive_counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        let positive_reals = [
            ("area_side", self.area_side),
            ("ap_power", self.ap_power),
            ("bandwidth", self.bandwidth),
            ("carrier_frequency", self.carrier_frequency),
            ("pilot_power", self.pilot_power),
            ("view_width_deg", self.view_width_deg),
        ];
        for (name, v) in positive_reals {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive and finite")));
            }
        }
        if !(self.angular_spread_deg.is_finite() && self.angular_spread_deg >= 0.0) {
            return Err(Error::Config("angular_spread_deg must be non-negative".into()));
        }
        if self.tau_p >= self.tau_c {
            return Err(Error::Config(format!(
                "tau_p ({}) must be smaller than tau_c ({})",
                self.tau_p, self.tau_c
            )));
        }
        if self.tau_s > self.tau_c {
            return Err(Error::Config(format!(
                "tau_s ({}) must not exceed tau_c ({})",
                self.tau_s, self.tau_c
            )));
        }
        let rx = self.rx_count();
        if rx == 0 {
            return Err(Error::Config("at least one receive AP is required".into()));
        }
        if rx >= self.num_aps {
            return Err(Error::Config(format!(
                "{rx} receive APs leave no transmit AP out of {}",
                self.num_aps
            )));
        }
        let tx = self.tx_count();
        if self.l_serve > tx {
            return Err(Error::Config(format!(
                "l_serve ({}) exceeds the number of transmit APs ({tx})",
                self.l_serve
            )));
        }
        if self.l_tx_sense > tx {
            return Err(Error::Config(format!(
                "l_tx_sense ({}) exceeds the number of transmit APs ({tx})",
                self.l_tx_sense
            )));
        }
        let [lo, hi] = self.target_height;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config("target_height must be an ordered pair".into()));
        }
        if !(self.ue_height.is_finite() && self.ap_height.is_finite()) {
            return Err(Error::Config("heights must be finite".into()));
        }
        Ok(())
    }
}

/// A point in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2)).sqrt()
    }

    pub fn ground_distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Azimuth and elevation of `target` as seen from `self`.
    pub fn angles_to(&self, target: &Position) -> (f64, f64) {
        let dx = target.x - self.x;
        let dy = target.y - self.y;
        let dz = target.z - self.z;
        (dy.atan2(dx), dz.atan2(dx.hypot(dy)))
    }
}

/// Axis-aligned rectangle of the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        )
    }
}

/// Splits a square of side `side` into `count` equal rectangles on a grid
/// with as close to square cells as the factorization of `count` allows.
pub fn region_grid(side: f64, count: usize) -> Vec<Rect> {
    let rows = (1..=count)
        .filter(|r| count % r == 0 && r * r <= count)
        .max()
        .unwrap_or(1);
    let cols = count / rows;
    let (w, h) = (side / cols as f64, side / rows as f64);
    let mut out = Vec::with_capacity(count);
    for r in 0..rows {
        for c in 0..cols {
            out.push(Rect {
                x_min: c as f64 * w,
                x_max: (c + 1) as f64 * w,
                y_min: r as f64 * h,
                y_max: (r + 1) as f64 * h,
            });
        }
    }
    out
}

/// Half-wavelength uniform linear array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformLinearArray {
    pub elements: usize,
}

impl UniformLinearArray {
    pub fn new(elements: usize) -> Self {
        Self { elements }
    }

    /// Array response `exp(j pi n sin(az) cos(el))`, `n = 0..N-1`.
    pub fn steering(&self, azimuth: f64, elevation: f64) -> CVector {
        steering_vector(self.elements, azimuth, elevation)
    }

    /// Response toward `target` from an array located at `origin`.
    pub fn steering_toward(&self, origin: &Position, target: &Position) -> CVector {
        let (az, el) = origin.angles_to(target);
        self.steering(az, el)
    }
}

pub fn steering_vector(n: usize, azimuth: f64, elevation: f64) -> CVector {
    let phase = PI * azimuth.sin() * elevation.cos();
    CVector::from_fn(n, |i, _| C64::from_polar(1.0, phase * i as f64))
}

/// Propagation condition of a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    /// AP-UE access link, urban-micro NLOS.
    NlosAccess,
    /// AP-target link, urban-micro LOS.
    LosTarget,
}

/// Path loss in dB at 3-D distance `d` meters.
pub fn path_loss_db(d: f64, kind: LinkKind, carrier_frequency: f64) -> f64 {
    let fc_ghz = carrier_frequency / 1e9;
    match kind {
        LinkKind::NlosAccess => 36.7 * d.log10() + 22.7 + 26.0 * fc_ghz.log10(),
        LinkKind::LosTarget => 22.0 * d.log10() + 28.0 + 20.0 * fc_ghz.log10(),
    }
}

/// Linear large-scale power gain between two positions.
pub fn large_scale_gain(
    tx: &Position,
    rx: &Position,
    kind: LinkKind,
    carrier_frequency: f64,
) -> Result<f64> {
    let d = tx.distance(rx);
    if !(d > 0.0) {
        return Err(Error::Domain(format!(
            "large-scale gain undefined at distance {d}"
        )));
    }
    Ok(10f64.powf(-path_loss_db(d, kind, carrier_frequency) / 10.0))
}

/// Transmit/receive role of an AP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ApRole {
    Transmit,
    Receive,
}

/// User-centric association, indices are tx indices.
#[derive(Debug, Clone, PartialEq)]
pub struct UserAssociation {
    /// `M_k`: serving transmit APs of each UE, ascending.
    pub serving: Vec<Vec<usize>>,
    /// `K_m`: UEs served by each transmit AP, ascending.
    pub served_by: Vec<Vec<usize>>,
}

/// Target-centric association.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetAssociation {
    /// `M_p^tx` per region (tx indices), ascending.
    pub tx: Vec<Vec<usize>>,
    /// `M_p^rx` per region (rx indices).
    pub rx: Vec<Vec<usize>>,
    /// `S_m`: regions illuminated by each transmit AP, ascending.
    pub beams: Vec<Vec<usize>>,
}

/// Picks `L` transmit APs with the largest gain for every UE.
///
/// `gains[k][t]` is the large-scale gain between UE `k` and tx AP `t`.
/// Ties go to the lower tx index.
pub fn associate_users(gains: &[Vec<f64>], l_serve: usize) -> Result<UserAssociation> {
    let n_tx = gains.first().map_or(0, Vec::len);
    if l_serve == 0 || l_serve > n_tx {
        return Err(Error::Config(format!(
            "cannot serve each UE with {l_serve} of {n_tx} transmit APs"
        )));
    }
    let mut served_by = vec![Vec::new(); n_tx];
    let mut serving = Vec::with_capacity(gains.len());
    for (k, row) in gains.iter().enumerate() {
        if row.len() != n_tx || row.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::Domain(format!(
                "UE {k} has non-positive or missing large-scale gains"
            )));
        }
        let mut order: Vec<usize> = (0..n_tx).collect();
        order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        let mut chosen = order[..l_serve].to_vec();
        chosen.sort_unstable();
        for &t in &chosen {
            served_by[t].push(k);
        }
        serving.push(chosen);
    }
    Ok(UserAssociation { serving, served_by })
}

/// Associates each radar cell with its nearest receive AP and the
/// `l_tx_sense` nearest transmit APs (3-D distance, ties to lower index).
pub fn associate_targets(
    tx_positions: &[Position],
    rx_positions: &[Position],
    cells: &[Position],
    l_tx_sense: usize,
) -> Result<TargetAssociation> {
    if rx_positions.is_empty() {
        return Err(Error::Config("no receive AP available".into()));
    }
    if l_tx_sense == 0 || l_tx_sense > tx_positions.len() {
        return Err(Error::Config(format!(
            "cannot sense with {l_tx_sense} of {} transmit APs",
            tx_positions.len()
        )));
    }
    let mut beams = vec![Vec::new(); tx_positions.len()];
    let mut tx = Vec::with_capacity(cells.len());
    let mut rx = Vec::with_capacity(cells.len());
    for (i, cell) in cells.iter().enumerate() {
        let nearest_rx = (0..rx_positions.len())
            .min_by(|&a, &b| {
                rx_positions[a]
                    .distance(cell)
                    .total_cmp(&rx_positions[b].distance(cell))
                    .then(a.cmp(&b))
            })
            .expect("non-empty");
        rx.push(vec![nearest_rx]);
        let mut order: Vec<usize> = (0..tx_positions.len()).collect();
        order.sort_by(|&a, &b| {
            tx_positions[a]
                .distance(cell)
                .total_cmp(&tx_positions[b].distance(cell))
                .then(a.cmp(&b))
        });
        let mut chosen = order[..l_tx_sense].to_vec();
        chosen.sort_unstable();
        for &t in &chosen {
            beams[t].push(i);
        }
        tx.push(chosen);
    }
    Ok(TargetAssociation { tx, rx, beams })
}

/// Chooses `count` APs spreading them as far apart as possible: greedy
/// farthest-point selection tried from every starting AP, keeping the set
/// with the largest minimum pairwise ground distance.
pub fn select_receive_aps(positions: &[Position], count: usize) -> Vec<usize> {
    let n = positions.len();
    if count == 0 || n == 0 {
        return Vec::new();
    }
    if count >= n {
        return (0..n).collect();
    }
    if count == 1 {
        // A single collector sits closest to the centroid.
        let cx = positions.iter().map(|p| p.x).sum::<f64>() / n as f64;
        let cy = positions.iter().map(|p| p.y).sum::<f64>() / n as f64;
        let c = Position::new(cx, cy, 0.0);
        let best = (0..n)
            .min_by(|&a, &b| {
                positions[a]
                    .ground_distance(&c)
                    .total_cmp(&positions[b].ground_distance(&c))
                    .then(a.cmp(&b))
            })
            .expect("non-empty");
        return vec![best];
    }
    let mut best_set = Vec::new();
    let mut best_score = f64::NEG_INFINITY;
    for start in 0..n {
        let mut chosen = vec![start];
        let mut min_dist: Vec<f64> = positions
            .iter()
            .map(|p| p.ground_distance(&positions[start]))
            .collect();
        while chosen.len() < count {
            let next = (0..n)
                .filter(|j| !chosen.contains(j))
                .max_by(|&a, &b| min_dist[a].total_cmp(&min_dist[b]).then(b.cmp(&a)))
                .expect("candidates remain");
            chosen.push(next);
            for j in 0..n {
                min_dist[j] = min_dist[j].min(positions[j].ground_distance(&positions[next]));
            }
        }
        let mut score = f64::INFINITY;
        for a in 0..chosen.len() {
            for b in a + 1..chosen.len() {
                score = score.min(positions[chosen[a]].ground_distance(&positions[chosen[b]]));
            }
        }
        if score > best_score {
            best_score = score;
            chosen.sort_unstable();
            best_set = chosen;
        }
    }
    best_set
}

/// One network drop.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub seed: u64,
    pub ap_positions: Vec<Position>,
    pub ap_roles: Vec<ApRole>,
    /// Global AP ids of the transmit APs; position = tx index.
    pub tx_aps: Vec<usize>,
    /// Global AP ids of the receive APs; position = rx index.
    pub rx_aps: Vec<usize>,
    pub ue_positions: Vec<Position>,
    pub regions: Vec<Rect>,
    /// Inspected radar cell `p_i` of each region.
    pub radar_cells: Vec<Position>,
    /// `ue_gains[k][t]`: NLOS large-scale gain of UE `k` to tx AP `t`.
    pub ue_gains: Vec<Vec<f64>>,
    pub users: UserAssociation,
    pub targets: TargetAssociation,
}

impl Scenario {
    /// Builds a drop from `config`; identical `(config, seed)` gives an
    /// identical scenario.
    pub fn build(config: &ScenarioConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = stream_rng(seed, 0, Stream::Scenario);
        let side = config.area_side;
        let ap_positions: Vec<Position> = (0..config.num_aps)
            .map(|_| {
                Position::new(
                    rng.random::<f64>() * side,
                    rng.random::<f64>() * side,
                    config.ap_height,
                )
            })
            .collect();
        let ue_positions: Vec<Position> = (0..config.num_ues)
            .map(|_| {
                Position::new(
                    rng.random::<f64>() * side,
                    rng.random::<f64>() * side,
                    config.ue_height,
                )
            })
            .collect();
        let regions = region_grid(side, config.num_regions);
        let [h_lo, h_hi] = config.target_height;
        let radar_cells: Vec<Position> = regions
            .iter()
            .map(|r| {
                Position::new(
                    r.x_min + rng.random::<f64>() * (r.x_max - r.x_min),
                    r.y_min + rng.random::<f64>() * (r.y_max - r.y_min),
                    h_lo + rng.random::<f64>() * (h_hi - h_lo),
                )
            })
            .collect();

        let rx_aps = select_receive_aps(&ap_positions, config.rx_count());
        let tx_aps: Vec<usize> = (0..config.num_aps).filter(|m| !rx_aps.contains(m)).collect();
        let ap_roles = (0..config.num_aps)
            .map(|m| {
                if rx_aps.contains(&m) {
                    ApRole::Receive
                } else {
                    ApRole::Transmit
                }
            })
            .collect();

        let ue_gains = ue_positions
            .iter()
            .map(|ue| {
                tx_aps
                    .iter()
                    .map(|&m| {
                        large_scale_gain(
                            &ap_positions[m],
                            ue,
                            LinkKind::NlosAccess,
                            config.carrier_frequency,
                        )
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let users = associate_users(&ue_gains, config.l_serve)?;

        let tx_pos: Vec<Position> = tx_aps.iter().map(|&m| ap_positions[m]).collect();
        let rx_pos: Vec<Position> = rx_aps.iter().map(|&m| ap_positions[m]).collect();
        let targets = associate_targets(&tx_pos, &rx_pos, &radar_cells, config.l_tx_sense)?;

        Ok(Self {
            config: config.clone(),
            seed,
            ap_positions,
            ap_roles,
            tx_aps,
            rx_aps,
            ue_positions,
            regions,
            radar_cells,
            ue_gains,
            users,
            targets,
        })
    }

    pub fn num_tx(&self) -> usize {
        self.tx_aps.len()
    }

    pub fn num_rx(&self) -> usize {
        self.rx_aps.len()
    }

    pub fn num_ues(&self) -> usize {
        self.ue_positions.len()
    }

    pub fn num_regions(&self) -> usize {
        self.regions.len()
    }

    pub fn antennas(&self) -> usize {
        self.config.antennas
    }

    pub fn array(&self) -> UniformLinearArray {
        UniformLinearArray::new(self.config.antennas)
    }

    pub fn tx_position(&self, t: usize) -> Position {
        self.ap_positions[self.tx_aps[t]]
    }

    pub fn rx_position(&self, r: usize) -> Position {
        self.ap_positions[self.rx_aps[r]]
    }

    /// Per-AP power budget `P_m` (identical for every transmit AP).
    pub fn power_budget(&self, _t: usize) -> f64 {
        self.config.ap_power
    }

    /// Checks the mutual consistency of all association structures.
    pub fn check_consistency(&self) -> Result<()> {
        let n_tx = self.num_tx();
        for k in 0..self.num_ues() {
            for t in 0..n_tx {
                let a = self.users.serving[k].contains(&t);
                let b = self.users.served_by[t].contains(&k);
                if a != b {
                    return Err(Error::Numerical(format!(
                        "user association mismatch at UE {k}, tx AP {t}"
                    )));
                }
            }
        }
        for i in 0..self.num_regions() {
            for t in 0..n_tx {
                let a = self.targets.tx[i].contains(&t);
                let b = self.targets.beams[t].contains(&i);
                if a != b {
                    return Err(Error::Numerical(format!(
                        "target association mismatch at region {i}, tx AP {t}"
                    )));
                }
            }
            if self.targets.rx[i].iter().any(|&r| r >= self.num_rx()) {
                return Err(Error::Numerical(format!("region {i} has an unknown rx AP")));
            }
        }
        if self.tx_aps.len() + self.rx_aps.len() != self.config.num_aps {
            return Err(Error::Numerical("AP roles do not partition the APs".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ScenarioConfig {
        ScenarioConfig {
            num_aps: 8,
            num_ues: 6,
            num_regions: 2,
            antennas: 2,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn broadside_steering_is_all_ones() {
        let a = steering_vector(4, 0.0, 0.0);
        for z in a.iter() {
            assert!((z - C64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn endfire_two_elements() {
        let a = steering_vector(2, PI / 2.0, 0.0);
        assert!((a[0] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((a[1] - C64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn steering_norm_is_n() {
        for &(az, el) in &[(0.3, 0.1), (-2.0, 1.2), (3.0, -0.4)] {
            let a = steering_vector(4, az, el);
            assert!((a.norm_squared() - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn nlos_doubling_slope() {
        let o = Position::new(0.0, 0.0, 0.0);
        let g1 = large_scale_gain(&o, &Position::new(50.0, 0.0, 0.0), LinkKind::NlosAccess, 2e9)
            .unwrap();
        let g2 = large_scale_gain(&o, &Position::new(100.0, 0.0, 0.0), LinkKind::NlosAccess, 2e9)
            .unwrap();
        assert!((g2 / g1 - 2f64.powf(-3.67)).abs() < 1e-12);
    }

    #[test]
    fn zero_distance_is_domain_error() {
        let o = Position::new(1.0, 2.0, 3.0);
        assert!(matches!(
            large_scale_gain(&o, &o, LinkKind::LosTarget, 2e9),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn gain_is_monotone_and_finite() {
        let o = Position::new(0.0, 0.0, 0.0);
        let mut prev = f64::INFINITY;
        for d in [1.0, 5.0, 10.0, 100.0, 1000.0] {
            for kind in [LinkKind::NlosAccess, LinkKind::LosTarget] {
                let g = large_scale_gain(&o, &Position::new(d, 0.0, 0.0), kind, 2e9).unwrap();
                assert!(g.is_finite() && g > 0.0);
            }
            let g = large_scale_gain(&o, &Position::new(d, 0.0, 0.0), LinkKind::LosTarget, 2e9)
                .unwrap();
            assert!(g <= prev);
            prev = g;
        }
    }

    #[test]
    fn user_association_picks_top_gains() {
        let gains = vec![vec![3.0, 1.0, 2.0]];
        let a = associate_users(&gains, 2).unwrap();
        assert_eq!(a.serving[0], vec![0, 2]);
        assert_eq!(a.served_by, vec![vec![0], vec![], vec![0]]);
        let full = associate_users(&gains, 3).unwrap();
        assert_eq!(full.serving[0], vec![0, 1, 2]);
        assert!(matches!(associate_users(&gains, 4), Err(Error::Config(_))));
    }

    #[test]
    fn single_receive_ap_serves_every_region() {
        let tx = vec![
            Position::new(0.0, 0.0, 10.0),
            Position::new(100.0, 0.0, 10.0),
            Position::new(0.0, 100.0, 10.0),
        ];
        let rx = vec![Position::new(50.0, 50.0, 10.0)];
        let cells = vec![Position::new(10.0, 10.0, 30.0), Position::new(90.0, 90.0, 30.0)];
        let a = associate_targets(&tx, &rx, &cells, 2).unwrap();
        assert_eq!(a.rx, vec![vec![0], vec![0]]);
        assert_eq!(a.tx[0], vec![0, 1]);
    }

    #[test]
    fn coincident_receive_ap_is_selected() {
        let tx = vec![Position::new(0.0, 0.0, 10.0)];
        let rx = vec![Position::new(500.0, 0.0, 10.0), Position::new(40.0, 60.0, 10.0)];
        let cells = vec![Position::new(40.0, 60.0, 50.0)];
        let a = associate_targets(&tx, &rx, &cells, 1).unwrap();
        assert_eq!(a.rx[0], vec![1]);
    }

    #[test]
    fn two_ap_partition() {
        let cfg = ScenarioConfig {
            num_aps: 2,
            num_ues: 1,
            num_regions: 1,
            n_rx_aps: Some(1),
            l_serve: 1,
            l_tx_sense: 1,
            ..ScenarioConfig::default()
        };
        let s = Scenario::build(&cfg, 5).unwrap();
        assert_eq!(s.tx_aps.len(), 1);
        assert_eq!(s.rx_aps.len(), 1);
        assert_ne!(s.tx_aps[0], s.rx_aps[0]);
        s.check_consistency().unwrap();
    }

    #[test]
    fn build_is_deterministic() {
        let cfg = small_config();
        assert_eq!(Scenario::build(&cfg, 11).unwrap(), Scenario::build(&cfg, 11).unwrap());
        assert_ne!(
            Scenario::build(&cfg, 11).unwrap().ap_positions,
            Scenario::build(&cfg, 12).unwrap().ap_positions
        );
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = small_config();
        cfg.l_serve = 7;
        assert!(matches!(Scenario::build(&cfg, 0), Err(Error::Config(_))));
        let mut cfg = small_config();
        cfg.num_ues = 0;
        assert!(matches!(Scenario::build(&cfg, 0), Err(Error::Config(_))));
        let mut cfg = small_config();
        cfg.tau_p = cfg.tau_c;
        assert!(matches!(Scenario::build(&cfg, 0), Err(Error::Config(_))));
    }

    #[test]
    fn region_grid_tiles_area() {
        for s in 1..=9 {
            let rects = region_grid(100.0, s);
            assert_eq!(rects.len(), s);
            let total: f64 = rects.iter().map(Rect::area).sum();
            assert!((total - 1e4).abs() < 1e-9);
        }
        let four = region_grid(2.0, 4);
        assert!(four.iter().all(|r| (r.area() - 1.0).abs() < 1e-12));
    }
}
