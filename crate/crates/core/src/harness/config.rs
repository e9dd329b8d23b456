use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::power::Settings;
use crate::scenario::ScenarioConfig;

/// Allocation strategy evaluated per drop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Upc,
    JopcCp,
    JopcSp,
    Sopc,
}

impl ModeName {
    pub const ALL: [ModeName; 4] = [ModeName::Upc, ModeName::JopcCp, ModeName::JopcSp, ModeName::Sopc];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModeName::Upc => "upc",
            ModeName::JopcCp => "jopc_cp",
            ModeName::JopcSp => "jopc_sp",
            ModeName::Sopc => "sopc",
        }
    }
}

impl fmt::Display for ModeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModeName::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown mode {s:?}; expected one of upc, jopc_cp, jopc_sp, sopc")))
    }
}

/// Parses a comma-separated mode list such as `upc,jopc_cp`.
pub fn parse_modes(list: &str) -> Result<Vec<ModeName>> {
    let mut modes = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(ModeName::from_str)
        .collect::<Result<Vec<_>>>()?;
    modes.sort();
    modes.dedup();
    if modes.is_empty() {
        return Err(Error::Config("empty mode list".into()));
    }
    Ok(modes)
}

/// Experiment keys. Thresholds are in dB; `-inf` means no floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub n_drops: usize,
    pub master_seed: u64,
    pub modes: Vec<ModeName>,
    /// Effective-SNR floor of `jopc_cp` in `run` and `cdf`.
    pub snr_floor_db: f64,
    /// SINR floor of `jopc_sp` in `run` and `cdf`.
    pub sinr_floor_db: f64,
    /// Sensing share of `sopc` in `run` and `cdf`.
    pub time_share: f64,
    /// Effective-SNR floors swept by `region` for `jopc_cp`.
    pub snr_grid_db: Vec<f64>,
    /// SINR floors swept by `region` for `jopc_sp`.
    pub sinr_grid_db: Vec<f64>,
    /// Sensing shares swept by `region` for `sopc`.
    #[serde(alias = "T_grid")]
    pub time_share_grid: Vec<f64>,
    pub quantile: f64,
    pub output_dir: PathBuf,
    pub bisection_tol: f64,
    pub sca_tol: f64,
    pub sca_max_iters: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        let settings = Settings::default();
        Self {
            n_drops: 100,
            master_seed: 0,
            modes: ModeName::ALL.to_vec(),
            snr_floor_db: f64::NEG_INFINITY,
            sinr_floor_db: f64::NEG_INFINITY,
            time_share: 0.5,
            snr_grid_db: vec![f64::NEG_INFINITY, -40.0, -37.0, -34.0, -31.0, -28.0],
            sinr_grid_db: vec![f64::NEG_INFINITY, -15.0, -12.0, -9.0, -6.0, -3.0],
            time_share_grid: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            quantile: 0.1,
            output_dir: PathBuf::from("results"),
            bisection_tol: settings.bisection_tol,
            sca_tol: settings.sca_tol,
            sca_max_iters: settings.sca_max_iters,
        }
    }
}

/// Full configuration file: a `[scenario]` table with [`ScenarioConfig`]
/// keys and an `[experiment]` table with [`ExperimentSection`] keys.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub experiment: ExperimentSection,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn settings(&self) -> Settings {
        Settings {
            bisection_tol: self.experiment.bisection_tol,
            sca_tol: self.experiment.sca_tol,
            sca_max_iters: self.experiment.sca_max_iters,
            ..Settings::default()
        }
    }

    pub fn has_mode(&self, mode: ModeName) -> bool {
        self.experiment.modes.contains(&mode)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        let e = &self.experiment;
        if e.n_drops == 0 {
            return Err(Error::Config("n_drops must be at least 1".into()));
        }
        if e.modes.is_empty() {
            return Err(Error::Config("modes must not be empty".into()));
        }
        if !(e.quantile > 0.0 && e.quantile < 1.0) {
            return Err(Error::Config(format!("quantile must lie in (0, 1), got {}", e.quantile)));
        }
        let share_ok = |t: f64| (0.0..=1.0).contains(&t);
        if !share_ok(e.time_share) {
            return Err(Error::Config(format!("time_share {} outside [0, 1]", e.time_share)));
        }
        if let Some(t) = e.time_share_grid.iter().find(|t| !share_ok(**t)) {
            return Err(Error::Config(format!("time_share_grid entry {t} outside [0, 1]")));
        }
        let floor_ok = |db: f64| db == f64::NEG_INFINITY || db.is_finite();
        for (name, v) in [("snr_floor_db", e.snr_floor_db), ("sinr_floor_db", e.sinr_floor_db)] {
            if !floor_ok(v) {
                return Err(Error::Config(format!("{name} must be finite or -inf")));
            }
        }
        for (name, grid, mode) in [
            ("snr_grid_db", &e.snr_grid_db, ModeName::JopcCp),
            ("sinr_grid_db", &e.sinr_grid_db, ModeName::JopcSp),
        ] {
            if grid.iter().any(|v| !floor_ok(*v)) {
                return Err(Error::Config(format!("{name} entries must be finite or -inf")));
            }
            if grid.is_empty() && self.has_mode(mode) {
                return Err(Error::Config(format!("{name} is empty but mode {mode} is requested")));
            }
        }
        if e.time_share_grid.is_empty() && self.has_mode(ModeName::Sopc) {
            return Err(Error::Config("time_share_grid is empty but mode sopc is requested".into()));
        }
        if !(e.bisection_tol > 0.0 && e.bisection_tol < 1.0) {
            return Err(Error::Config("bisection_tol must lie in (0, 1)".into()));
        }
        if !(e.sca_tol > 0.0) || e.sca_max_iters == 0 {
            return Err(Error::Config("sca_tol and sca_max_iters must be positive".into()));
        }
        Ok(())
    }
}
