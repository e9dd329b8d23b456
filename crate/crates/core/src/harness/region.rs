use std::path::PathBuf;

use super::config::{db_to_linear, ExperimentConfig, ModeName};
use super::experiment::{chunked_drops, drop_seed};
use super::output::{prepare_output_dir, write_manifest, LongCsv, Row};
use super::stats::quantile;
use crate::comm::{achievable_rate, closed_form_sinr};
use crate::error::Result;
use crate::network::Network;
use crate::power::{jopc, optimize, upc, OptimizationStatus, QosProblemSpec, Settings};
use crate::sensing::sensing_rate;

/// Per-drop outcome of one threshold level or time share.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelOutcome {
    pub status: String,
    /// Smallest UE rate.
    pub min_rate: f64,
    /// Smallest region sensing rate.
    pub min_sensing_rate: f64,
}

impl LevelOutcome {
    fn error(message: String) -> Self {
        Self {
            status: format!("error: {message}"),
            min_rate: 0.0,
            min_sensing_rate: 0.0,
        }
    }

    pub fn feasible(&self) -> bool {
        self.status == OptimizationStatus::Optimal.as_str()
    }
}

/// Everything the region sweep computes on one drop. Each vector is indexed
/// like the corresponding grid; empty when the mode is not requested.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionDrop {
    pub drop_id: usize,
    pub error: Option<String>,
    pub upc: Option<LevelOutcome>,
    pub comm_prioritized: Vec<LevelOutcome>,
    pub sensing_prioritized: Vec<LevelOutcome>,
    pub time_sharing: Vec<LevelOutcome>,
}

/// One point of the communication-sensing region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionPoint {
    pub mode: ModeName,
    /// Threshold in dB for the joint designs, time share for S-OPC.
    pub level: f64,
    pub rate: f64,
    pub sensing_rate: f64,
    pub feasible_drops: usize,
}

impl RegionPoint {
    /// Weak dominance with relative slack `tol` on both coordinates.
    pub fn dominates(&self, other: &RegionPoint, tol: f64) -> bool {
        self.rate >= other.rate * (1.0 - tol) && self.sensing_rate >= other.sensing_rate * (1.0 - tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionResult {
    pub drops: Vec<RegionDrop>,
    pub upc: Option<RegionPoint>,
    /// Comm-prioritized points followed by sensing-prioritized points, each
    /// in grid order; levels with fewer than half the drops feasible are left out.
    pub joint: Vec<RegionPoint>,
    pub separate: Vec<RegionPoint>,
}

impl RegionResult {
    /// Joint points not weakly dominated by another joint point, sorted by
    /// increasing rate.
    pub fn joint_front(&self) -> Vec<RegionPoint> {
        let mut front: Vec<RegionPoint> = self
            .joint
            .iter()
            .filter(|p| {
                !self.joint.iter().any(|q| {
                    q.dominates(p, 0.0) && (q.rate > p.rate || q.sensing_rate > p.sensing_rate)
                })
            })
            .cloned()
            .collect();
        front.sort_by(|a, b| a.rate.total_cmp(&b.rate));
        front.dedup_by(|a, b| a.rate == b.rate && a.sensing_rate == b.sensing_rate);
        front
    }

    /// S-OPC points that no joint point weakly dominates within `tol`.
    pub fn undominated_separate(&self, tol: f64) -> Vec<&RegionPoint> {
        self.separate
            .iter()
            .filter(|s| !self.joint.iter().any(|j| j.dominates(s, tol)))
            .collect()
    }
}

fn min(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::INFINITY, f64::min)
}

fn joint_outcome(net: &Network, spec: QosProblemSpec) -> LevelOutcome {
    match jopc(net, &spec) {
        Ok(r) => LevelOutcome {
            status: r.status.as_str().to_string(),
            min_rate: min(net.rates(&r.allocation)),
            min_sensing_rate: min(net.sensing_rates(&r.allocation)),
        },
        Err(e) => LevelOutcome::error(e.to_string()),
    }
}

/// The comm-only and sensing-only designs do not depend on `T`, so they are
/// solved once and scaled by `1 − T` and `T`.
fn separate_outcomes(net: &Network, grid: &[f64], settings: &Settings) -> Vec<LevelOutcome> {
    let cfg = &net.scenario.config;
    let need_comm = grid.iter().any(|&t| t < 1.0);
    let need_sensing = grid.iter().any(|&t| t > 0.0);
    let comm = need_comm.then(|| -> Result<(OptimizationStatus, f64)> {
        let r = optimize(net, &QosProblemSpec::comm_only(0.5).with_settings(*settings))?;
        let coefficients = net.sinr_without_sensing()?;
        let rate = min(closed_form_sinr(&r.allocation, &coefficients)
            .into_iter()
            .map(|g| achievable_rate(g, cfg.tau_c, cfg.tau_p, cfg.bandwidth)));
        Ok((r.status, rate))
    });
    let sensing = need_sensing.then(|| -> Result<(OptimizationStatus, f64)> {
        let r = optimize(net, &QosProblemSpec::sensing_only(0.5).with_settings(*settings))?;
        // full block: τ_s = τ_c, scaled by T below
        let rate = min(net.sensing_snr(&r.allocation).into_iter().map(|g| sensing_rate(g, cfg.tau_c, cfg.tau_c, cfg.bandwidth)));
        Ok((r.status, rate))
    });
    grid.iter()
        .map(|&t| {
            let mut status = OptimizationStatus::Optimal;
            let mut out = LevelOutcome {
                status: String::new(),
                min_rate: 0.0,
                min_sensing_rate: 0.0,
            };
            if t < 1.0 {
                match comm.as_ref().expect("comm design solved") {
                    Ok((s, rate)) => {
                        out.min_rate = (1.0 - t) * rate;
                        if *s != OptimizationStatus::Optimal {
                            status = *s;
                        }
                    }
                    Err(e) => return LevelOutcome::error(e.to_string()),
                }
            }
            if t > 0.0 {
                match sensing.as_ref().expect("sensing design solved") {
                    Ok((s, rate)) => {
                        out.min_sensing_rate = t * rate;
                        if *s != OptimizationStatus::Optimal {
                            status = *s;
                        }
                    }
                    Err(e) => return LevelOutcome::error(e.to_string()),
                }
            }
            out.status = status.as_str().to_string();
            out
        })
        .collect()
}

/// Runs every requested design of the region sweep on drop `drop_id`.
pub fn region_drop(config: &ExperimentConfig, drop_id: usize) -> RegionDrop {
    let e = &config.experiment;
    let settings = config.settings();
    let mut out = RegionDrop {
        drop_id,
        error: None,
        upc: None,
        comm_prioritized: Vec::new(),
        sensing_prioritized: Vec::new(),
        time_sharing: Vec::new(),
    };
    let net = match Network::build(&config.scenario, drop_seed(e.master_seed, drop_id)) {
        Ok(net) => net,
        Err(err) => {
            out.error = Some(err.to_string());
            return out;
        }
    };
    if config.has_mode(ModeName::Upc) {
        let a = upc(&net.scenario);
        out.upc = Some(LevelOutcome {
            status: OptimizationStatus::Optimal.as_str().to_string(),
            min_rate: min(net.rates(&a)),
            min_sensing_rate: min(net.sensing_rates(&a)),
        });
    }
    if config.has_mode(ModeName::JopcCp) {
        out.comm_prioritized = e
            .snr_grid_db
            .iter()
            .map(|&db| joint_outcome(&net, QosProblemSpec::comm_prioritized(db_to_linear(db)).with_settings(settings)))
            .collect();
    }
    if config.has_mode(ModeName::JopcSp) {
        out.sensing_prioritized = e
            .sinr_grid_db
            .iter()
            .map(|&db| joint_outcome(&net, QosProblemSpec::sensing_prioritized(db_to_linear(db)).with_settings(settings)))
            .collect();
    }
    if config.has_mode(ModeName::Sopc) {
        out.time_sharing = separate_outcomes(&net, &e.time_share_grid, &settings);
    }
    out
}

/// Boundary point of one level: quantiles over the feasible drops, or
/// `None` when fewer than half of all drops are feasible.
pub fn aggregate_level(
    mode: ModeName,
    level: f64,
    outcomes: &[&LevelOutcome],
    n_drops: usize,
    q: f64,
) -> Result<Option<RegionPoint>> {
    let feasible: Vec<&&LevelOutcome> = outcomes.iter().filter(|o| o.feasible()).collect();
    if feasible.is_empty() || 2 * feasible.len() < n_drops {
        return Ok(None);
    }
    let rates: Vec<f64> = feasible.iter().map(|o| o.min_rate).collect();
    let sensing: Vec<f64> = feasible.iter().map(|o| o.min_sensing_rate).collect();
    Ok(Some(RegionPoint {
        mode,
        level,
        rate: quantile(&rates, q)?,
        sensing_rate: quantile(&sensing, q)?,
        feasible_drops: feasible.len(),
    }))
}

/// Reduces per-drop outcomes to region points.
pub fn summarize_region(config: &ExperimentConfig, drops: Vec<RegionDrop>) -> Result<RegionResult> {
    let e = &config.experiment;
    let n = drops.len();
    let q = e.quantile;
    let upc_outcomes: Vec<&LevelOutcome> = drops.iter().filter_map(|d| d.upc.as_ref()).collect();
    let upc = if config.has_mode(ModeName::Upc) {
        aggregate_level(ModeName::Upc, 0.0, &upc_outcomes, n, q)?
    } else {
        None
    };
    let branch = |mode: ModeName, grid: &[f64], pick: fn(&RegionDrop) -> &Vec<LevelOutcome>| -> Result<Vec<RegionPoint>> {
        let mut points = Vec::new();
        if !config.has_mode(mode) {
            return Ok(points);
        }
        for (j, &level) in grid.iter().enumerate() {
            let outcomes: Vec<&LevelOutcome> = drops.iter().filter_map(|d| pick(d).get(j)).collect();
            if let Some(p) = aggregate_level(mode, level, &outcomes, n, q)? {
                points.push(p);
            }
        }
        Ok(points)
    };
    let mut joint = branch(ModeName::JopcCp, &e.snr_grid_db, |d| &d.comm_prioritized)?;
    joint.extend(branch(ModeName::JopcSp, &e.sinr_grid_db, |d| &d.sensing_prioritized)?);
    let separate = branch(ModeName::Sopc, &e.time_share_grid, |d| &d.time_sharing)?;
    Ok(RegionResult {
        drops,
        upc,
        joint,
        separate,
    })
}

/// Region sweep over all drops, in memory.
pub fn cs_region(config: &ExperimentConfig) -> Result<RegionResult> {
    config.validate()?;
    let mut drops = Vec::with_capacity(config.experiment.n_drops);
    chunked_drops(config.experiment.n_drops, |d| region_drop(config, d), |chunk| {
        drops.extend(chunk);
        Ok(())
    })?;
    summarize_region(config, drops)
}

fn level_rows(drop: &RegionDrop) -> Vec<Row> {
    let d = Some(drop.drop_id);
    let mut rows = Vec::new();
    if let Some(e) = &drop.error {
        rows.push(Row::text(d, "", "drop", "status", "error"));
        rows.push(Row::text(d, "", "drop", "error", e));
        return rows;
    }
    let mut push = |mode: ModeName, entity: String, o: &LevelOutcome| {
        rows.push(Row::text(d, mode.as_str(), entity.clone(), "status", &o.status));
        rows.push(Row::number(d, mode.as_str(), entity.clone(), "min_rate", o.min_rate));
        rows.push(Row::number(d, mode.as_str(), entity, "min_sensing_rate", o.min_sensing_rate));
    };
    if let Some(o) = &drop.upc {
        push(ModeName::Upc, "level".into(), o);
    }
    for (j, o) in drop.comm_prioritized.iter().enumerate() {
        push(ModeName::JopcCp, format!("level{j}"), o);
    }
    for (j, o) in drop.sensing_prioritized.iter().enumerate() {
        push(ModeName::JopcSp, format!("level{j}"), o);
    }
    for (j, o) in drop.time_sharing.iter().enumerate() {
        push(ModeName::Sopc, format!("level{j}"), o);
    }
    rows
}

fn point_rows(p: &RegionPoint, entity: String) -> Vec<Row> {
    let mode = p.mode.as_str();
    vec![
        Row::number(None, mode, entity.clone(), "level", p.level),
        Row::number(None, mode, entity.clone(), "rate_quantile", p.rate),
        Row::number(None, mode, entity.clone(), "sensing_rate_quantile", p.sensing_rate),
        Row::number(None, mode, entity, "feasible_drops", p.feasible_drops as f64),
    ]
}

/// Files written by [`run_region`].
#[derive(Debug, Clone)]
pub struct RegionOutput {
    pub region: RegionResult,
    pub csv: PathBuf,
    pub manifest: PathBuf,
}

/// Region sweep streamed to `<output_dir>/region.csv`: per-drop rows keyed
/// by `level<j>` (grid index) as drops complete, then one block of
/// boundary-point rows with an empty `drop_id`.
pub fn run_region(config: &ExperimentConfig) -> Result<RegionOutput> {
    config.validate()?;
    let dir = &config.experiment.output_dir;
    prepare_output_dir(dir)?;
    let manifest = write_manifest(dir, "region", config)?;
    let mut csv = LongCsv::create(&dir.join("region.csv"))?;
    let mut drops = Vec::with_capacity(config.experiment.n_drops);
    chunked_drops(config.experiment.n_drops, |d| region_drop(config, d), |chunk| {
        for d in &chunk {
            csv.write(&level_rows(d))?;
        }
        drops.extend(chunk);
        Ok(())
    })?;
    let region = summarize_region(config, drops)?;
    let e = &config.experiment;
    let index = |grid: &[f64], level: f64| grid.iter().position(|&g| g == level).unwrap_or(0);
    let mut rows = Vec::new();
    if let Some(p) = &region.upc {
        rows.extend(point_rows(p, "level".into()));
    }
    for p in region.joint.iter().chain(&region.separate) {
        let grid = match p.mode {
            ModeName::JopcCp => &e.snr_grid_db,
            ModeName::JopcSp => &e.sinr_grid_db,
            _ => &e.time_share_grid,
        };
        rows.extend(point_rows(p, format!("level{}", index(grid, p.level))));
    }
    csv.write(&rows)?;
    Ok(RegionOutput {
        region,
        csv: csv.path().to_path_buf(),
        manifest,
    })
}
