//! Command configuration: a TOML file with the tables `system`, `em`,
//! `train` and `gnn`, layered over a preset and then overridden by flags.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{Preset, SystemConfig};
use crate::gmm::EmConfig;
use crate::gnn::{GnnConfig, LrSchedule, TrainConfig};

const SECTIONS: [&str; 4] = ["system", "em", "train", "gnn"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmSection {
    pub max_iters: usize,
    pub tol: f64,
    pub floor_rel: f64,
}

impl Default for EmSection {
    fn default() -> Self {
        let d = EmConfig::new(1);
        Self {
            max_iters: d.max_iters,
            tol: d.tol,
            floor_rel: d.floor_rel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub snr_db: [f64; 2],
    pub regroup_users: bool,
    pub schedule: LrSchedule,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            epochs: d.epochs,
            batch_size: d.batch_size,
            learning_rate: d.learning_rate,
            snr_db: d.snr_db,
            regroup_users: d.regroup_users,
            schedule: d.schedule,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GnnSection {
    pub hidden: Vec<usize>,
    pub alpha: Option<f64>,
    pub beta: f64,
    pub prelu_slope: f64,
}

impl Default for GnnSection {
    fn default() -> Self {
        let d = GnnConfig::new(1, vec![128; 5]);
        Self {
            hidden: d.hidden,
            alpha: d.alpha,
            beta: d.beta,
            prelu_slope: d.prelu_slope,
        }
    }
}

/// Fully resolved and validated configuration of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub system: SystemConfig,
    pub em: EmSection,
    pub train: TrainSection,
    pub gnn: GnnSection,
    /// Working directory holding datasets, models and reports.
    pub out: PathBuf,
    pub preset: Option<Preset>,
}

/// Flag values that override file keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
}

fn section<T: for<'de> Deserialize<'de> + Default>(table: &toml::Table, name: &str, path: &Path) -> Result<T> {
    match table.get(name) {
        None => Ok(T::default()),
        Some(v) => v
            .clone()
            .try_into()
            .map_err(|e| Error::format(path, format!("[{name}]: {e}"))),
    }
}

impl CliConfig {
    /// Base system is the preset if given, otherwise the full-scale setup.
    /// Keys of the file's `[system]` table replace the base one by one.
    pub fn load(file: Option<&Path>, preset: Option<Preset>, out: PathBuf, overrides: &Overrides) -> Result<Self> {
        let base = preset.map_or_else(SystemConfig::full_scale, Preset::system);
        let (table, path) = match file {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                let t: toml::Table = toml::from_str(&text).map_err(|e| Error::format(p, e))?;
                (t, p.to_path_buf())
            }
            None => (toml::Table::new(), PathBuf::new()),
        };
        if let Some(k) = table.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
            return Err(Error::format(
                &path,
                format!("unknown table `{k}`; expected one of {}", SECTIONS.join(", ")),
            ));
        }
        let mut system = toml::Table::try_from(&base).map_err(|e| Error::format(&path, e))?;
        if let Some(v) = table.get("system") {
            let over = v
                .as_table()
                .ok_or_else(|| Error::format(&path, "`system` must be a table"))?;
            for (k, v) in over {
                system.insert(k.clone(), v.clone());
            }
        }
        let mut system: SystemConfig = toml::Value::Table(system)
            .try_into()
            .map_err(|e| Error::format(&path, format!("[system]: {e}")))?;
        if let Some(seed) = overrides.seed {
            system.seed = seed;
        }
        let config = Self {
            system,
            em: section(&table, "em", &path)?,
            train: section(&table, "train", &path)?,
            gnn: section(&table, "gnn", &path)?,
            out,
            preset,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.em_config().validate()?;
        self.train_config().validate()?;
        let g = self.gnn_config();
        if g.hidden.contains(&0) {
            return Err(Error::invalid("hidden widths must be positive"));
        }
        if !(g.beta >= 0.0) || g.alpha.is_some_and(|a| !(a >= 0.0)) {
            return Err(Error::invalid("alpha and beta must be nonnegative"));
        }
        Ok(())
    }

    pub fn em_config(&self) -> EmConfig {
        EmConfig {
            components: self.system.components(),
            max_iters: self.em.max_iters,
            tol: self.em.tol,
            floor_rel: self.em.floor_rel,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.train.epochs,
            batch_size: self.train.batch_size,
            learning_rate: self.train.learning_rate,
            snr_db: self.train.snr_db,
            power: self.system.power,
            seed: self.system.stream_seed(crate::eval::Stream::Training),
            regroup_users: self.train.regroup_users,
            schedule: self.train.schedule,
        }
    }

    pub fn gnn_config(&self) -> GnnConfig {
        GnnConfig {
            antennas: self.system.geometry.antennas(),
            hidden: self.gnn.hidden.clone(),
            alpha: self.gnn.alpha,
            beta: self.gnn.beta,
            prelu_slope: self.gnn.prelu_slope,
        }
    }
}
