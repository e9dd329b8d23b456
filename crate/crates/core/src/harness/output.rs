use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

/// One long-format row. `drop_id` is empty for rows aggregated over drops.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub drop_id: Option<usize>,
    pub mode: String,
    pub entity_id: String,
    pub metric: String,
    pub value: String,
}

impl Row {
    pub fn number(drop_id: Option<usize>, mode: &str, entity: impl Into<String>, metric: &str, value: f64) -> Self {
        Self {
            drop_id,
            mode: mode.to_string(),
            entity_id: entity.into(),
            metric: metric.to_string(),
            // shortest round-trip form, stable across runs and platforms
            value: format!("{value:?}"),
        }
    }

    pub fn text(drop_id: Option<usize>, mode: &str, entity: impl Into<String>, metric: &str, value: &str) -> Self {
        Self {
            drop_id,
            mode: mode.to_string(),
            entity_id: entity.into(),
            metric: metric.to_string(),
            value: value.to_string(),
        }
    }
}

/// Append-only CSV with header `drop_id,mode,entity_id,metric,value`.
/// Every [`LongCsv::write`] call is flushed, so a crashed run leaves a
/// readable prefix.
pub struct LongCsv {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl LongCsv {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut writer = csv::Writer::from_writer(BufWriter::new(file));
        writer
            .write_record(["drop_id", "mode", "entity_id", "metric", "value"])
            .map_err(|e| csv_error(path, e))?;
        let mut out = Self {
            path: path.to_path_buf(),
            writer,
        };
        out.flush()?;
        Ok(out)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write(&mut self, rows: &[Row]) -> Result<()> {
        for row in rows {
            let drop = row.drop_id.map(|d| d.to_string()).unwrap_or_default();
            self.writer
                .write_record([drop.as_str(), &row.mode, &row.entity_id, &row.metric, &row.value])
                .map_err(|e| csv_error(&self.path, e))?;
        }
        self.flush()
    }

    fn flush(&mut self) -> Result<()> {
        self.writer.flush().map_err(|e| Error::io(&self.path, e))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Numerical(format!("CSV encoding failed: {other:?}")),
    }
}

/// Creates `dir` and checks that it accepts files.
pub fn prepare_output_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".write-probe");
    File::create(&probe).map_err(|e| Error::io(&probe, e))?;
    std::fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

/// Writes `manifest.toml`: the command, the crate version and the fully
/// resolved configuration including the master seed.
pub fn write_manifest(dir: &Path, command: &str, config: &ExperimentConfig) -> Result<PathBuf> {
    let path = dir.join("manifest.toml");
    let mut text = String::new();
    text.push_str(&format!("command = {command:?}\n"));
    text.push_str(&format!("crate_version = {:?}\n\n", env!("CARGO_PKG_VERSION")));
    text.push_str(&config.to_toml_string()?);
    let mut file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    file.write_all(text.as_bytes()).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
