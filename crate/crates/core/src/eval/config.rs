use std::fmt;
use std::str::FromStr;

use log::info;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channels::{
    generate_dataset, generate_scenarios, normalize_dataset, scale_scenarios, ArrayGeometry, ClusterSampler,
    Scenario,
};
use crate::error::{Error, Result};
use crate::linalg::{derive_seed, seeded_rng, CVector};

/// System and experiment parameters shared by every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub geometry: ArrayGeometry,
    #[serde(default = "default_power")]
    pub power: f64,
    /// Evaluation SNR grid in dB (`sigma^2 = rho 10^(-SNR/10)`).
    pub snr_db: Vec<f64>,
    /// Pilot count `n_p`.
    pub pilots: usize,
    /// Feedback bits `B`, `K = 2^B`.
    pub bits: u32,
    /// Evaluation user counts.
    pub users: Vec<usize>,
    /// User count of the training and validation scenarios.
    pub train_users: usize,
    pub train_scenarios: usize,
    pub val_scenarios: usize,
    pub test_scenarios: usize,
    /// Size `M` of the channel set used to fit the mixture.
    pub gmm_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sampler: ClusterSampler,
    #[serde(default = "default_iters")]
    pub swmmse_iters: usize,
    #[serde(default = "default_iters")]
    pub iwmmse_iters: usize,
    #[serde(default = "default_tol")]
    pub iwmmse_tol: f64,
}

fn default_power() -> f64 {
    1.0
}
fn default_iters() -> usize {
    300
}
fn default_tol() -> f64 {
    1e-6
}

/// Independent RNG streams derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    GmmData,
    TrainData,
    ValData,
    TestData,
    EmInit,
    Training,
    Evaluation,
}

impl Stream {
    fn index(self) -> u64 {
        match self {
            Stream::GmmData => 10,
            Stream::TrainData => 11,
            Stream::ValData => 12,
            Stream::TestData => 13,
            Stream::EmInit => 14,
            Stream::Training => 15,
            Stream::Evaluation => 16,
        }
    }
}

impl SystemConfig {
    /// Full-scale setup: ULA, N = 64, 16 users, B = 6, n_p = 16, 10 dB.
    pub fn full_scale() -> Self {
        Self {
            geometry: ArrayGeometry::ula(64),
            power: 1.0,
            snr_db: vec![10.0],
            pilots: 16,
            bits: 6,
            users: vec![16],
            train_users: 16,
            train_scenarios: 2400,
            val_scenarios: 300,
            test_scenarios: 500,
            gmm_samples: 100_000,
            seed: 0,
            sampler: ClusterSampler::default(),
            swmmse_iters: 300,
            iwmmse_iters: 300,
            iwmmse_tol: 1e-6,
        }
    }

    /// Desk-scale testbed: ULA, N = 16, J = 4, B = 4, n_p = 4.
    pub fn desk() -> Self {
        Self {
            geometry: ArrayGeometry::ula(16),
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            pilots: 4,
            bits: 4,
            users: vec![4],
            train_users: 4,
            train_scenarios: 400,
            val_scenarios: 100,
            test_scenarios: 200,
            gmm_samples: 20_000,
            ..Self::full_scale()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.sampler.validate()?;
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(Error::invalid(format!("power must be positive, got {}", self.power)));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("SNR grid must be nonempty and finite"));
        }
        let n = self.geometry.antennas();
        if self.pilots == 0 || self.pilots > n {
            return Err(Error::invalid(format!("pilots must be in 1..={n}, got {}", self.pilots)));
        }
        if self.bits > 16 {
            return Err(Error::invalid(format!("at most 16 feedback bits are supported, got {}", self.bits)));
        }
        if self.users.is_empty() || self.users.contains(&0) || self.train_users == 0 {
            return Err(Error::invalid("user counts must be positive"));
        }
        for (name, v) in [
            ("train_scenarios", self.train_scenarios),
            ("val_scenarios", self.val_scenarios),
            ("test_scenarios", self.test_scenarios),
            ("gmm_samples", self.gmm_samples),
            ("swmmse_iters", self.swmmse_iters),
            ("iwmmse_iters", self.iwmmse_iters),
        ] {
            if v == 0 {
                return Err(Error::invalid(format!("{name} must be at least 1")));
            }
        }
        if self.gmm_samples < self.components() {
            return Err(Error::invalid("gmm_samples must be at least the component count"));
        }
        if !(self.iwmmse_tol >= 0.0) {
            return Err(Error::invalid("iwmmse_tol must be >= 0"));
        }
        Ok(())
    }

    pub fn components(&self) -> usize {
        1 << self.bits
    }

    pub fn max_users(&self) -> usize {
        self.users.iter().copied().max().unwrap_or(0)
    }

    pub fn noise_variance(&self, snr_db: f64) -> f64 {
        self.power * 10f64.powf(-snr_db / 10.0)
    }

    pub fn stream_seed(&self, stream: Stream) -> u64 {
        derive_seed(self.seed, stream.index())
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Named grids for the evaluation command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Sum-rate over the user count at 10 dB, n_p = 16, B = 6.
    Fig2,
    /// Sum-rate over SNR at J = 16, n_p = 8, B = 6.
    Fig3a,
    /// Sum-rate over SNR at J = 16, n_p = 16, B = 6.
    Fig3b,
    /// Desk-scale testbed.
    Desk,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Fig2, Preset::Fig3a, Preset::Fig3b, Preset::Desk];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig3a => "fig3a",
            Preset::Fig3b => "fig3b",
            Preset::Desk => "desk",
        }
    }

    pub fn system(self) -> SystemConfig {
        let full = SystemConfig::full_scale();
        let snr_sweep = vec![0.0, 5.0, 10.0, 15.0, 20.0];
        match self {
            Preset::Fig2 => SystemConfig {
                users: vec![4, 8, 12, 16],
                ..full
            },
            Preset::Fig3a => SystemConfig {
                pilots: 8,
                snr_db: snr_sweep,
                ..full
            },
            Preset::Fig3b => SystemConfig {
                snr_db: snr_sweep,
                ..full
            },
            Preset::Desk => SystemConfig::desk(),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .iter()
            .copied()
            .find(|p| p.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown preset `{s}`; valid presets: fig2, fig3a, fig3b, desk"
                ))
            })
    }
}

/// All generated sets of one experiment.
#[derive(Debug, Clone)]
pub struct Datasets {
    /// The set `H` used to fit the mixture.
    pub gmm: Vec<CVector>,
    pub train: Vec<Scenario>,
    pub val: Vec<Scenario>,
    /// Test scenarios with `max(users)` users each.
    pub test: Vec<Scenario>,
    /// Global factor making the empirical `E|h|^2` of `H` equal `N`,
    /// applied to every set.
    pub scale: f64,
}

/// Generates every set from its own seed stream and normalizes all of them
/// with the scale measured on the mixture training set.
pub fn generate_datasets(config: &SystemConfig) -> Result<Datasets> {
    config.validate()?;
    let g = &config.geometry;
    let n = g.antennas();
    let sampler = &config.sampler;
    let mut gmm = generate_dataset(
        g,
        config.gmm_samples,
        sampler,
        &mut seeded_rng(config.stream_seed(Stream::GmmData)),
    )?;
    let scale = normalize_dataset(&mut gmm, n)?;
    let mut sets = [
        (Stream::TrainData, config.train_scenarios, config.train_users),
        (Stream::ValData, config.val_scenarios, config.train_users),
        (Stream::TestData, config.test_scenarios, config.max_users()),
    ]
    .iter()
    .map(|&(stream, count, users)| {
        let mut s = generate_scenarios(g, count, users, sampler, &mut seeded_rng(config.stream_seed(stream)))?;
        scale_scenarios(&mut s, scale);
        Ok(s)
    })
    .collect::<Result<Vec<_>>>()?;
    let test = sets.pop().expect("three sets");
    let val = sets.pop().expect("three sets");
    let train = sets.pop().expect("three sets");
    info!(
        "generated M = {}, D = {}, D_val = {}, D_test = {} (scale {scale:.6})",
        gmm.len(),
        train.len(),
        val.len(),
        test.len()
    );
    Ok(Datasets {
        gmm,
        train,
        val,
        test,
        scale,
    })
}
