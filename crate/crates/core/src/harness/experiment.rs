use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use super::config::{db_to_linear, ExperimentConfig, ModeName};
use super::output::{prepare_output_dir, write_manifest, LongCsv, Row};
use crate::comm::{closed_form_sinr, PowerAllocation};
use crate::error::Result;
use crate::network::Network;
use crate::power::{jopc, sopc, upc, OptimizationStatus, QosProblemSpec};
use crate::rng::{derive_seed, stream_rng, Stream};
use crate::sensing::region_workspace;

/// Scenario seed of drop `drop_id`.
pub fn drop_seed(master_seed: u64, drop_id: usize) -> u64 {
    derive_seed(master_seed, drop_id as u64, Stream::Scenario)
}

/// Outcome of one allocation strategy on one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeRecord {
    pub mode: ModeName,
    /// `optimal`, `infeasible_at_threshold`, `not_converged` or `error`.
    pub status: String,
    pub error: Option<String>,
    /// Optimized level (min SINR or min effective SNR) of the joint designs.
    pub objective: Option<f64>,
    /// One allocation per time phase: `[joint]`, or `[comm, sensing]` for S-OPC.
    pub allocations: Vec<PowerAllocation>,
    pub rates: Vec<f64>,
    pub sinr: Vec<f64>,
    pub effective_snr: Vec<f64>,
    pub sensing_rates: Vec<f64>,
    pub receive_snr: Vec<f64>,
    pub elapsed: Duration,
}

impl ModeRecord {
    fn failed(mode: ModeName, message: String, elapsed: Duration) -> Self {
        Self {
            mode,
            status: "error".into(),
            error: Some(message),
            objective: None,
            allocations: Vec::new(),
            rates: Vec::new(),
            sinr: Vec::new(),
            effective_snr: Vec::new(),
            sensing_rates: Vec::new(),
            receive_snr: Vec::new(),
            elapsed,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == OptimizationStatus::Optimal.as_str()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropRecord {
    pub drop_id: usize,
    pub seed: u64,
    /// Set when the drop itself could not be built.
    pub error: Option<String>,
    pub modes: Vec<ModeRecord>,
    pub elapsed: Duration,
}

impl DropRecord {
    pub fn mode(&self, mode: ModeName) -> Option<&ModeRecord> {
        self.modes.iter().find(|m| m.mode == mode)
    }

    /// Long-format rows; wall-clock timing is left out so that identical
    /// inputs give identical bytes.
    pub fn rows(&self) -> Vec<Row> {
        let d = Some(self.drop_id);
        let mut rows = Vec::new();
        if let Some(e) = &self.error {
            rows.push(Row::text(d, "", "drop", "status", "error"));
            rows.push(Row::text(d, "", "drop", "error", e));
            return rows;
        }
        for m in &self.modes {
            let name = m.mode.as_str();
            rows.push(Row::text(d, name, "drop", "status", &m.status));
            if let Some(e) = &m.error {
                rows.push(Row::text(d, name, "drop", "error", e));
            }
            if let Some(obj) = m.objective {
                rows.push(Row::number(d, name, "drop", "objective", obj));
            }
            for (k, (r, g)) in m.rates.iter().zip(&m.sinr).enumerate() {
                rows.push(Row::number(d, name, format!("ue{k}"), "rate", *r));
                rows.push(Row::number(d, name, format!("ue{k}"), "sinr", *g));
            }
            for (i, (snr, rate)) in m.effective_snr.iter().zip(&m.sensing_rates).enumerate() {
                rows.push(Row::number(d, name, format!("region{i}"), "effective_snr", *snr));
                rows.push(Row::number(d, name, format!("region{i}"), "sensing_rate", *rate));
            }
            for (i, snr) in m.receive_snr.iter().enumerate() {
                rows.push(Row::number(d, name, format!("region{i}"), "receive_snr", *snr));
            }
            for a in &m.allocations {
                for t in 0..a.n_tx() {
                    for k in 0..a.n_ues() {
                        if a.zeta(k, t) > 0.0 {
                            rows.push(Row::number(d, name, format!("ap{t}/ue{k}"), "eta", a.eta(k, t)));
                        }
                    }
                    for i in 0..a.n_regions() {
                        if a.nu(i, t) > 0.0 {
                            rows.push(Row::number(d, name, format!("ap{t}/region{i}"), "mu", a.mu(i, t)));
                        }
                    }
                }
            }
        }
        rows
    }
}

/// GLRT receive SNR of every region for one channel and symbol realization.
/// Regions that no transmit energy reaches get 0.
pub fn receive_snr<R: Rng + ?Sized>(net: &Network, alloc: &PowerAllocation, rng: &mut R) -> Result<Vec<f64>> {
    let sc = &net.scenario;
    let present = vec![true; sc.num_regions()];
    let real = net.sampler.sample(&present, rng);
    (0..sc.num_regions())
        .map(|i| {
            let (_, ws) = region_workspace(
                sc,
                &net.geometry,
                &net.estimation,
                alloc,
                &real,
                i,
                sc.config.tau_s,
                net.noise_power,
                rng,
            )?;
            if ws.total_rank() == 0 {
                Ok(0.0)
            } else {
                ws.receive_snr(net.geometry.rcs_covariance(i, 0))
            }
        })
        .collect()
}

fn evaluate_mode(net: &Network, config: &ExperimentConfig, mode: ModeName, seed: u64) -> Result<ModeRecord> {
    let e = &config.experiment;
    let settings = config.settings();
    let start = Instant::now();
    let mut rng = stream_rng(seed, mode as u64, Stream::Symbols);
    let joint = |alloc: PowerAllocation, status: &str, objective: Option<f64>, rng: &mut _| -> Result<ModeRecord> {
        Ok(ModeRecord {
            mode,
            status: status.to_string(),
            error: None,
            objective,
            rates: net.rates(&alloc),
            sinr: net.sinr(&alloc),
            effective_snr: net.sensing_snr(&alloc),
            sensing_rates: net.sensing_rates(&alloc),
            receive_snr: receive_snr(net, &alloc, rng)?,
            allocations: vec![alloc],
            elapsed: Duration::ZERO,
        })
    };
    let mut record = match mode {
        ModeName::Upc => joint(upc(&net.scenario), OptimizationStatus::Optimal.as_str(), None, &mut rng)?,
        ModeName::JopcCp | ModeName::JopcSp => {
            let spec = if mode == ModeName::JopcCp {
                QosProblemSpec::comm_prioritized(db_to_linear(e.snr_floor_db))
            } else {
                QosProblemSpec::sensing_prioritized(db_to_linear(e.sinr_floor_db))
            };
            let r = jopc(net, &spec.with_settings(settings))?;
            joint(r.allocation, r.status.as_str(), Some(r.objective), &mut rng)?
        }
        ModeName::Sopc => {
            let r = sopc(net, e.time_share, &settings)?;
            let status = [r.comm.status, r.sensing.status]
                .into_iter()
                .find(|s| *s != OptimizationStatus::Optimal)
                .unwrap_or(OptimizationStatus::Optimal);
            let no_leakage = net.sinr_without_sensing()?;
            ModeRecord {
                mode,
                status: status.as_str().to_string(),
                error: None,
                objective: None,
                rates: r.rates(net)?,
                sinr: closed_form_sinr(&r.comm.allocation, &no_leakage),
                effective_snr: net.sensing_snr(&r.sensing.allocation),
                sensing_rates: r.sensing_rates(net),
                receive_snr: receive_snr(net, &r.sensing.allocation, &mut rng)?,
                allocations: vec![r.comm.allocation, r.sensing.allocation],
                elapsed: Duration::ZERO,
            }
        }
    };
    record.elapsed = start.elapsed();
    Ok(record)
}

/// Builds drop `drop_id` and evaluates every configured mode on it. Errors
/// are recorded in the returned record.
pub fn simulate_drop(config: &ExperimentConfig, drop_id: usize) -> DropRecord {
    let start = Instant::now();
    let seed = drop_seed(config.experiment.master_seed, drop_id);
    let mut modes_sorted = config.experiment.modes.clone();
    modes_sorted.sort();
    modes_sorted.dedup();
    let net = match Network::build(&config.scenario, seed) {
        Ok(net) => net,
        Err(e) => {
            return DropRecord {
                drop_id,
                seed,
                error: Some(e.to_string()),
                modes: Vec::new(),
                elapsed: start.elapsed(),
            }
        }
    };
    let modes = modes_sorted
        .into_iter()
        .map(|mode| {
            let t = Instant::now();
            evaluate_mode(&net, config, mode, seed).unwrap_or_else(|e| ModeRecord::failed(mode, e.to_string(), t.elapsed()))
        })
        .collect();
    DropRecord {
        drop_id,
        seed,
        error: None,
        modes,
        elapsed: start.elapsed(),
    }
}

/// Evaluates drops `0..n` on the rayon pool in chunks, handing each chunk
/// to `sink` in drop order as soon as it is complete.
pub(crate) fn chunked_drops<T, F, S>(n: usize, work: F, mut sink: S) -> Result<()>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
    S: FnMut(Vec<T>) -> Result<()>,
{
    let chunk = 4 * rayon::current_num_threads().max(1);
    let mut next = 0;
    while next < n {
        let end = (next + chunk).min(n);
        let done: Vec<T> = (next..end).into_par_iter().map(&work).collect();
        sink(done)?;
        next = end;
    }
    Ok(())
}

/// All drops of `config` in memory, without touching the file system.
pub fn simulate_drops(config: &ExperimentConfig) -> Result<Vec<DropRecord>> {
    config.validate()?;
    let mut records = Vec::with_capacity(config.experiment.n_drops);
    chunked_drops(config.experiment.n_drops, |d| simulate_drop(config, d), |chunk| {
        records.extend(chunk);
        Ok(())
    })?;
    Ok(records)
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<DropRecord>,
    pub csv: PathBuf,
    pub manifest: PathBuf,
}

/// Runs every drop and streams the records to `<output_dir>/drops.csv`.
/// The output directory is checked before any drop is computed.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let dir = &config.experiment.output_dir;
    prepare_output_dir(dir)?;
    let manifest = write_manifest(dir, "run", config)?;
    let mut csv = LongCsv::create(&dir.join("drops.csv"))?;
    let mut records = Vec::with_capacity(config.experiment.n_drops);
    chunked_drops(config.experiment.n_drops, |d| simulate_drop(config, d), |chunk| {
        for r in &chunk {
            csv.write(&r.rows())?;
        }
        records.extend(chunk);
        Ok(())
    })?;
    Ok(RunOutput {
        records,
        csv: csv.path().to_path_buf(),
        manifest,
    })
}
