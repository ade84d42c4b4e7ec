//! End-to-end precoder design chains for one scenario.

use std::collections::BTreeMap;

use rand::Rng;

use super::method::{Method, MethodKind};
use super::SystemConfig;
use crate::baselines::{build_dft_codebook, dft_feedback, iwmmse, ls_estimate, swmmse, ChannelSampler, Codebook};
use crate::channels::Scenario;
use crate::error::{Error, Result};
use crate::gmm::{GmmModel, ObservationCache};
use crate::gnn::{forward, GnnModel};
use crate::linalg::{derive_seed, seeded_rng, CVector};
use crate::pilots::{build_pilot_matrix, observe, PilotMatrix};
use crate::rate::{sum_rate, PrecoderMatrix};

/// Trained artifacts the methods draw on.
#[derive(Debug, Clone, Default)]
pub struct Models {
    pub gmm: Option<GmmModel>,
    pub gnn_genie: Option<GnnModel>,
    pub gnn_gmm_h: Option<GnnModel>,
    /// Observation-feedback networks keyed by the pilot count they were
    /// trained with.
    pub gnn_gmm_y: BTreeMap<usize, GnnModel>,
}

impl Models {
    /// Content hashes of every loaded model, keyed by role.
    pub fn hashes(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        if let Some(m) = &self.gmm {
            out.insert("gmm".into(), m.content_hash());
        }
        if let Some(m) = &self.gnn_genie {
            out.insert("gnn-genie".into(), m.content_hash());
        }
        if let Some(m) = &self.gnn_gmm_h {
            out.insert("gnn-gmm-h".into(), m.content_hash());
        }
        for (n_p, m) in &self.gnn_gmm_y {
            out.insert(format!("gnn-gmm-y@np{n_p}"), m.content_hash());
        }
        out
    }

    fn gmm(&self) -> Result<&GmmModel> {
        self.gmm
            .as_ref()
            .ok_or_else(|| Error::MissingModel("GMM prior (fit-gmm output)".into()))
    }

    fn gnn_for(&self, kind: MethodKind, pilots: usize) -> Result<&GnnModel> {
        let found = match kind {
            MethodKind::GnnGenie => self.gnn_genie.as_ref(),
            MethodKind::GnnGmmH => self.gnn_gmm_h.as_ref(),
            MethodKind::GnnGmmY => self.gnn_gmm_y.get(&pilots),
            _ => None,
        };
        found.ok_or_else(|| {
            Error::MissingModel(match kind {
                MethodKind::GnnGmmY => format!("GNN trained on GMM feedback from {pilots} pilots"),
                other => format!("GNN for {}", other.name()),
            })
        })
    }

    /// Fails with `MissingModel` unless every method can run.
    pub fn check(&self, methods: &[Method], pilots: usize) -> Result<()> {
        for m in methods {
            if m.kind.needs_gmm() {
                self.gmm()?;
            }
            if m.kind.is_gnn() {
                self.gnn_for(m.kind, pilots)?;
            }
        }
        Ok(())
    }
}

/// Per-(J, SNR) state shared by every scenario at that grid point.
pub struct PointContext<'a> {
    pub config: &'a SystemConfig,
    pub models: &'a Models,
    pub snr_db: f64,
    pub noise_variance: f64,
    pub pilots: PilotMatrix,
    pub codebook: Codebook,
    observation: Option<ObservationCache>,
    component_rows: Vec<CVector>,
    component_samplers: Vec<ChannelSampler>,
}

impl<'a> PointContext<'a> {
    pub fn new(config: &'a SystemConfig, models: &'a Models, snr_db: f64) -> Result<Self> {
        let noise_variance = config.noise_variance(snr_db);
        let pilots = build_pilot_matrix(&config.geometry, config.pilots, config.power)?;
        let codebook = build_dft_codebook(&config.geometry, config.bits)?;
        let (observation, component_rows, component_samplers) = match &models.gmm {
            Some(gmm) => {
                if gmm.antennas() != config.geometry.antennas() {
                    return Err(Error::DimensionMismatch {
                        what: "GMM antenna count",
                        expected: config.geometry.antennas(),
                        actual: gmm.antennas(),
                    });
                }
                (
                    Some(ObservationCache::new(gmm, &pilots, noise_variance)?),
                    (0..gmm.components()).map(|k| gmm.first_row(k)).collect(),
                    gmm.covariances()
                        .iter()
                        .map(|c| ChannelSampler::new(c.clone()))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            None => (None, Vec::new(), Vec::new()),
        };
        Ok(Self {
            config,
            models,
            snr_db,
            noise_variance,
            pilots,
            codebook,
            observation,
            component_rows,
            component_samplers,
        })
    }

    fn observation(&self) -> Result<&ObservationCache> {
        self.observation
            .as_ref()
            .ok_or_else(|| Error::MissingModel("GMM prior (fit-gmm output)".into()))
    }
}

/// Random quantities of one scenario at one SNR, shared by every method.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDraws {
    /// Pilot observation of each user.
    pub observations: Vec<CVector>,
    /// Seed for the stochastic WMMSE channel draws.
    pub stochastic_seed: u64,
}

impl ScenarioDraws {
    /// Draws depend on (evaluation seed, SNR, scenario index, user index) but
    /// not on the user count, so truncated scenarios see the same noise.
    pub fn new(ctx: &PointContext<'_>, scenario: &Scenario, index: usize, base_seed: u64) -> Result<Self> {
        let point = derive_seed(base_seed, ctx.snr_db.to_bits());
        let scen = derive_seed(point, index as u64);
        let observations = scenario
            .users
            .iter()
            .enumerate()
            .map(|(j, u)| {
                let mut rng = seeded_rng(derive_seed(scen, j as u64));
                observe(&ctx.pilots, &u.channel, ctx.noise_variance, &mut rng).map(|o| o.y)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            observations,
            stochastic_seed: derive_seed(scen, u64::MAX),
        })
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub precoders: PrecoderMatrix,
    /// Sum-rate on the scenario's true channels.
    pub rate: f64,
    /// Feedback indices, for methods that use feedback.
    pub feedback: Option<Vec<usize>>,
}

fn samplers_from(ctx: &PointContext<'_>, idx: &[usize]) -> Vec<ChannelSampler> {
    idx.iter().map(|&k| ctx.component_samplers[k].clone()).collect()
}

fn run_swmmse<R: Rng>(
    ctx: &PointContext<'_>,
    samplers: &[ChannelSampler],
    iters: usize,
    rng: &mut R,
) -> Result<PrecoderMatrix> {
    swmmse(samplers, ctx.config.power, ctx.noise_variance, iters, rng)
}

/// Runs one method's full chain on one scenario.
///
/// For the observation-feedback network the chain is: pilot observation,
/// MAP component index per user, first row of that component's covariance,
/// feature extraction, and the network forward pass.
pub fn run_pipeline(
    method: &Method,
    scenario: &Scenario,
    draws: &ScenarioDraws,
    ctx: &PointContext<'_>,
) -> Result<PipelineOutput> {
    let users = scenario.user_count();
    if draws.observations.len() != users {
        return Err(Error::DimensionMismatch {
            what: "observation count",
            expected: users,
            actual: draws.observations.len(),
        });
    }
    let cfg = ctx.config;
    let n = cfg.geometry.antennas();
    if let Some(u) = scenario.users.iter().find(|u| u.channel.len() != n) {
        return Err(Error::DimensionMismatch {
            what: "channel length",
            expected: n,
            actual: u.channel.len(),
        });
    }
    let power = cfg.power;
    let swmmse_iters = method.max_iters.unwrap_or(cfg.swmmse_iters);
    let iwmmse_iters = method.max_iters.unwrap_or(cfg.iwmmse_iters);
    let mut rng = seeded_rng(draws.stochastic_seed);
    let csi_feedback = || -> Result<Vec<usize>> {
        let gmm = ctx.models.gmm()?;
        scenario.users.iter().map(|u| gmm.feedback_index_csi(&u.channel)).collect()
    };
    let obs_feedback = || -> Result<Vec<usize>> {
        let cache = ctx.observation()?;
        draws.observations.iter().map(|y| cache.feedback_index(y)).collect()
    };
    let rows_of = |idx: &[usize]| -> Vec<CVector> { idx.iter().map(|&k| ctx.component_rows[k].clone()).collect() };

    let (precoders, feedback) = match method.kind {
        MethodKind::GnnGenie => {
            let model = ctx.models.gnn_for(method.kind, cfg.pilots)?;
            (forward(model, &scenario.first_rows(), power)?, None)
        }
        MethodKind::SwmmseGenie => {
            let samplers = (0..users)
                .map(|j| ChannelSampler::new(scenario.genie_covariance(&cfg.geometry, j)?))
                .collect::<Result<Vec<_>>>()?;
            (run_swmmse(ctx, &samplers, swmmse_iters, &mut rng)?, None)
        }
        MethodKind::GnnGmmH | MethodKind::GnnGmmY => {
            let idx = if method.kind == MethodKind::GnnGmmH {
                csi_feedback()?
            } else {
                obs_feedback()?
            };
            let model = ctx.models.gnn_for(method.kind, cfg.pilots)?;
            (forward(model, &rows_of(&idx), power)?, Some(idx))
        }
        MethodKind::SwmmseGmmH | MethodKind::SwmmseGmmY => {
            let idx = if method.kind == MethodKind::SwmmseGmmH {
                csi_feedback()?
            } else {
                obs_feedback()?
            };
            let samplers = samplers_from(ctx, &idx);
            (run_swmmse(ctx, &samplers, swmmse_iters, &mut rng)?, Some(idx))
        }
        MethodKind::IwmmseDftLs | MethodKind::IwmmseDftGmmEst => {
            let estimates = draws
                .observations
                .iter()
                .map(|y| match method.kind {
                    MethodKind::IwmmseDftLs => ls_estimate(&ctx.pilots, y),
                    _ => ctx.observation()?.channel_estimate(y),
                })
                .collect::<Result<Vec<_>>>()?;
            let idx = estimates
                .iter()
                .map(|h| dft_feedback(h, &ctx.codebook))
                .collect::<Result<Vec<_>>>()?;
            let quantized: Vec<CVector> = idx.iter().map(|&k| ctx.codebook.codeword(k).clone()).collect();
            let out = iwmmse(&quantized, power, ctx.noise_variance, iwmmse_iters, cfg.iwmmse_tol)?;
            (out.precoders, Some(idx))
        }
    };
    let rate = sum_rate(&scenario.channels(), &precoders.v, ctx.noise_variance);
    if !rate.is_finite() {
        return Err(Error::NonFinite {
            stage: "sum-rate evaluation",
            layer: 0,
        });
    }
    Ok(PipelineOutput {
        precoders,
        rate,
        feedback,
    })
}
