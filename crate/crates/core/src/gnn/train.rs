use std::path::Path;

use log::{error, info};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::GnnModel;
use super::network::{batch_gradient, forward, TrainingSample};
use super::optim::Adam;
use crate::channels::Scenario;
use crate::error::{Error, Result};
use crate::gmm::{GmmModel, ProjectedGmm};
use crate::linalg::{derive_seed, seeded_rng, CVector};
use crate::pilots::{observe, PilotMatrix};
use crate::rate::sum_rate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    /// Training SNR range in dB, sampled uniformly per presentation.
    #[serde(default = "default_snr")]
    pub snr_db: [f64; 2],
    #[serde(default = "default_power")]
    pub power: f64,
    #[serde(default)]
    pub seed: u64,
    /// Regroup the training users into fresh scenarios every epoch.
    #[serde(default)]
    pub regroup_users: bool,
    #[serde(default)]
    pub schedule: LrSchedule,
}

/// Per-epoch learning-rate schedule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LrSchedule {
    #[default]
    Constant,
    /// Half-cosine decay from the initial rate to zero over all epochs.
    Cosine,
}

impl LrSchedule {
    /// Rate used during `epoch` (1-based) of `epochs`.
    pub fn rate(self, initial: f64, epoch: usize, epochs: usize) -> f64 {
        match self {
            LrSchedule::Constant => initial,
            LrSchedule::Cosine => {
                let t = (epoch - 1) as f64 / epochs as f64;
                0.5 * initial * (1.0 + (std::f64::consts::PI * t).cos())
            }
        }
    }
}

fn default_epochs() -> usize {
    500
}
fn default_batch() -> usize {
    100
}
fn default_lr() -> f64 {
    1e-3
}
fn default_snr() -> [f64; 2] {
    [0.0, 20.0]
}
fn default_power() -> f64 {
    1.0
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: default_epochs(),
            batch_size: default_batch(),
            learning_rate: default_lr(),
            snr_db: default_snr(),
            power: default_power(),
            seed: 0,
            regroup_users: false,
            schedule: LrSchedule::Constant,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::invalid("epochs and batch size must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        let [lo, hi] = self.snr_db;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::invalid(format!("invalid SNR range [{lo}, {hi}]")));
        }
        if !(self.power > 0.0) {
            return Err(Error::invalid("transmit power must be positive"));
        }
        Ok(())
    }
}

pub fn noise_variance_from_snr_db(snr_db: f64, power: f64) -> f64 {
    power * 10f64.powf(-snr_db / 10.0)
}

/// Where the per-user statistics handed to the network come from.
#[derive(Debug, Clone, Copy)]
pub enum StatisticsSource<'a> {
    /// True covariance first rows.
    Genie,
    /// GMM component selected from perfect CSI.
    GmmCsi(&'a GmmModel),
    /// GMM component selected from a fresh noisy pilot observation.
    GmmObservation {
        model: &'a GmmModel,
        pilots: &'a PilotMatrix,
    },
}

/// Precomputed state for turning scenarios into network inputs.
pub struct StatisticsResolver<'a> {
    source: StatisticsSource<'a>,
    component_rows: Vec<CVector>,
    projected: Option<ProjectedGmm>,
}

impl<'a> StatisticsResolver<'a> {
    pub fn new(source: StatisticsSource<'a>) -> Result<Self> {
        let (component_rows, projected) = match source {
            StatisticsSource::Genie => (Vec::new(), None),
            StatisticsSource::GmmCsi(m) => ((0..m.components()).map(|k| m.first_row(k)).collect(), None),
            StatisticsSource::GmmObservation { model, pilots } => (
                (0..model.components()).map(|k| model.first_row(k)).collect(),
                Some(ProjectedGmm::new(model, &pilots.matrix)?),
            ),
        };
        Ok(Self {
            source,
            component_rows,
            projected,
        })
    }

    pub fn source(&self) -> StatisticsSource<'a> {
        self.source
    }

    /// Feedback indices, if the source uses feedback.
    pub fn feedback<R: Rng + ?Sized>(
        &self,
        scenario: &Scenario,
        noise_variance: f64,
        rng: &mut R,
    ) -> Result<Option<Vec<usize>>> {
        match self.source {
            StatisticsSource::Genie => Ok(None),
            StatisticsSource::GmmCsi(m) => scenario
                .users
                .iter()
                .map(|u| m.feedback_index_csi(&u.channel))
                .collect::<Result<Vec<_>>>()
                .map(Some),
            StatisticsSource::GmmObservation { pilots, .. } => {
                let cache = self
                    .projected
                    .as_ref()
                    .expect("projection built for observation source")
                    .with_noise(noise_variance)?;
                scenario
                    .users
                    .iter()
                    .map(|u| {
                        let obs = observe(pilots, &u.channel, noise_variance, rng)?;
                        cache.feedback_index(&obs.y)
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(Some)
            }
        }
    }

    pub fn rows<R: Rng + ?Sized>(
        &self,
        scenario: &Scenario,
        noise_variance: f64,
        rng: &mut R,
    ) -> Result<Vec<CVector>> {
        Ok(match self.feedback(scenario, noise_variance, rng)? {
            None => scenario.first_rows(),
            Some(idx) => idx.iter().map(|&k| self.component_rows[k].clone()).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_rate: f64,
    pub val_rate: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingLog {
    /// Validation rate of the untrained model (epoch 0).
    pub initial_val_rate: f64,
    pub records: Vec<EpochRecord>,
    /// Epoch of the returned model; 0 means the initial model was kept.
    pub best_epoch: usize,
    pub best_val_rate: f64,
}

impl TrainingLog {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::format(path, e))?;
        for r in &self.records {
            w.serialize(r).map_err(|e| Error::format(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

struct ValidationItem {
    rows: Vec<CVector>,
    channels: Vec<CVector>,
    noise_variance: f64,
}

fn validation_rate(model: &GnnModel, items: &[ValidationItem], power: f64) -> f64 {
    if items.is_empty() {
        return f64::NAN;
    }
    let rates: Vec<f64> = items
        .par_iter()
        .map(|it| match forward(model, &it.rows, power) {
            Ok(v) => sum_rate(&it.channels, &v.v, it.noise_variance),
            Err(_) => f64::NAN,
        })
        .collect();
    rates.iter().sum::<f64>() / rates.len() as f64
}

fn check_scenarios(set: &[Scenario], antennas: usize, what: &'static str) -> Result<()> {
    if set.is_empty() {
        return Err(Error::invalid(format!("{what} set is empty")));
    }
    let users = set[0].user_count();
    for s in set {
        if s.user_count() != users || users == 0 {
            return Err(Error::invalid(format!("{what} scenarios must share one nonzero user count")));
        }
        if s.users.iter().any(|u| u.channel.len() != antennas) {
            return Err(Error::DimensionMismatch {
                what: "channel length",
                expected: antennas,
                actual: s.users[0].channel.len(),
            });
        }
    }
    Ok(())
}

/// Redistributes the users of all scenarios over new scenarios of the same
/// size, uniformly at random.
pub fn regroup_users<R: Rng + ?Sized>(scenarios: &[Scenario], rng: &mut R) -> Vec<Scenario> {
    let users = scenarios.first().map_or(1, Scenario::user_count).max(1);
    let mut pool: Vec<_> = scenarios.iter().flat_map(|s| s.users.iter().cloned()).collect();
    pool.shuffle(rng);
    pool.chunks(users).map(|c| Scenario { users: c.to_vec() }).collect()
}

/// Adam on the mean negative sum-rate. Returns the parameters with the best
/// validation sum-rate seen (the initial model included).
pub fn train(
    mut model: GnnModel,
    train_set: &[Scenario],
    val_set: &[Scenario],
    source: StatisticsSource<'_>,
    config: &TrainConfig,
) -> Result<(GnnModel, TrainingLog)> {
    config.validate()?;
    check_scenarios(train_set, model.antennas(), "training")?;
    check_scenarios(val_set, model.antennas(), "validation")?;
    let resolver = StatisticsResolver::new(source)?;
    let [lo, hi] = config.snr_db;
    let draw_noise = |rng: &mut rand_chacha::ChaCha8Rng| {
        let snr = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        noise_variance_from_snr_db(snr, config.power)
    };

    let mut val_rng = seeded_rng(derive_seed(config.seed, 1));
    let val_items = val_set
        .iter()
        .map(|s| {
            let noise_variance = draw_noise(&mut val_rng);
            Ok(ValidationItem {
                rows: resolver.rows(s, noise_variance, &mut val_rng)?,
                channels: s.channels(),
                noise_variance,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let initial = validation_rate(&model, &val_items, config.power);
    if !initial.is_finite() {
        return Err(Error::Diverged { epoch: 0 });
    }
    info!("epoch 0: validation sum-rate {initial:.4}");
    let mut log = TrainingLog {
        initial_val_rate: initial,
        records: Vec::with_capacity(config.epochs),
        best_epoch: 0,
        best_val_rate: initial,
    };
    let mut best = model.clone();
    let mut params = model.parameters();
    let mut adam = Adam::new(params.len(), config.learning_rate);
    let mut rng = seeded_rng(derive_seed(config.seed, 2));
    let mut epoch_set: Vec<Scenario> = train_set.to_vec();
    let mut channels: Vec<Vec<CVector>> = epoch_set.iter().map(Scenario::channels).collect();
    let mut order: Vec<usize> = (0..epoch_set.len()).collect();

    for epoch in 1..=config.epochs {
        adam.learning_rate = config.schedule.rate(config.learning_rate, epoch, config.epochs);
        if config.regroup_users {
            epoch_set = regroup_users(train_set, &mut rng);
            channels = epoch_set.iter().map(Scenario::channels).collect();
        }
        order.shuffle(&mut rng);
        let mut rate_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let inputs = batch
                .iter()
                .map(|&i| {
                    let noise_variance = draw_noise(&mut rng);
                    let rows = resolver.rows(&epoch_set[i], noise_variance, &mut rng)?;
                    Ok((i, rows, noise_variance))
                })
                .collect::<Result<Vec<_>>>()?;
            let samples: Vec<TrainingSample<'_>> = inputs
                .iter()
                .map(|(i, rows, nv)| TrainingSample {
                    first_rows: rows,
                    channels: &channels[*i],
                    noise_variance: *nv,
                })
                .collect();
            let g = batch_gradient(&model, &samples, config.power)?;
            rate_sum += g.mean_rate * batch.len() as f64;
            adam.update(&mut params, &g.gradient);
            model.set_parameters(&params)?;
        }
        let train_rate = rate_sum / epoch_set.len() as f64;
        let val_rate = validation_rate(&model, &val_items, config.power);
        log.records.push(EpochRecord {
            epoch,
            train_rate,
            val_rate,
            lr: adam.learning_rate,
        });
        if !val_rate.is_finite() {
            error!("training diverged at epoch {epoch}; log so far: {:?}", log.records);
            return Err(Error::Diverged { epoch });
        }
        info!("epoch {epoch}: train sum-rate {train_rate:.4}, validation sum-rate {val_rate:.4}");
        if val_rate > log.best_val_rate {
            log.best_val_rate = val_rate;
            log.best_epoch = epoch;
            best = model.clone();
        }
    }
    Ok((best, log))
}
