use std::path::PathBuf;

use super::config::{ExperimentConfig, ModeName};
use super::experiment::{chunked_drops, simulate_drop, DropRecord};
use super::output::{prepare_output_dir, write_manifest, LongCsv, Row};
use super::stats::{empirical_cdf, quantile};
use crate::error::Result;

/// Pooled per-UE rates and per-region sensing rates of one mode over the
/// drops where that mode ended `optimal`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSamples {
    pub mode: ModeName,
    pub rates: Vec<f64>,
    pub sensing_rates: Vec<f64>,
    pub drops_used: usize,
}

pub fn pool_samples(records: &[DropRecord], mode: ModeName) -> ModeSamples {
    let mut out = ModeSamples {
        mode,
        rates: Vec::new(),
        sensing_rates: Vec::new(),
        drops_used: 0,
    };
    for m in records.iter().filter_map(|r| r.mode(mode)).filter(|m| m.is_optimal()) {
        out.rates.extend_from_slice(&m.rates);
        out.sensing_rates.extend_from_slice(&m.sensing_rates);
        out.drops_used += 1;
    }
    out
}

fn cdf_rows(mode: &str, metric: &str, values: &[f64], q: f64) -> Result<Vec<Row>> {
    if values.is_empty() {
        return Ok(Vec::new());
    }
    let mut rows = Vec::new();
    for (j, (x, p)) in empirical_cdf(values)?.into_iter().enumerate() {
        rows.push(Row::number(None, mode, format!("p{j}"), metric, x));
        rows.push(Row::number(None, mode, format!("p{j}"), &format!("{metric}_cdf"), p));
    }
    rows.push(Row::number(None, mode, "all", &format!("{metric}_quantile"), quantile(values, q)?));
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct CdfOutput {
    pub records: Vec<DropRecord>,
    pub samples: Vec<ModeSamples>,
    pub csv: PathBuf,
    pub manifest: PathBuf,
}

/// Runs the drops of `config` and writes the empirical CDFs of the UE rate
/// and of the sensing rate of every mode to `<output_dir>/cdf.csv`.
pub fn run_cdf(config: &ExperimentConfig) -> Result<CdfOutput> {
    config.validate()?;
    let dir = &config.experiment.output_dir;
    prepare_output_dir(dir)?;
    let manifest = write_manifest(dir, "cdf", config)?;
    let mut csv = LongCsv::create(&dir.join("cdf.csv"))?;
    let mut records = Vec::with_capacity(config.experiment.n_drops);
    chunked_drops(config.experiment.n_drops, |d| simulate_drop(config, d), |chunk| {
        records.extend(chunk);
        Ok(())
    })?;
    let mut modes = config.experiment.modes.clone();
    modes.sort();
    modes.dedup();
    let q = config.experiment.quantile;
    let mut samples = Vec::new();
    for mode in modes {
        let s = pool_samples(&records, mode);
        let mut rows = vec![Row::number(None, mode.as_str(), "all", "drops_used", s.drops_used as f64)];
        rows.extend(cdf_rows(mode.as_str(), "rate", &s.rates, q)?);
        rows.extend(cdf_rows(mode.as_str(), "sensing_rate", &s.sensing_rates, q)?);
        csv.write(&rows)?;
        samples.push(s);
    }
    Ok(CdfOutput {
        records,
        samples,
        csv: csv.path().to_path_buf(),
        manifest,
    })
}
