use rand::Rng;
use rayon::prelude::*;

use super::{cluster_covariance, ArrayGeometry, ClusterSampler};
use crate::error::{Error, Result};
use crate::linalg::{derive_seed, seeded_rng, CMatrix, CVector, PsdFactor};
use crate::structured::{complete_from_first_row, first_row};

/// Samples generated per RNG stream; fixed so results do not depend on the
/// number of worker threads.
const CHUNK: usize = 64;

/// One user's channel together with its genie statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct UserChannel {
    pub channel: CVector,
    /// First row of the true covariance `C_delta`.
    pub first_row: CVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub users: Vec<UserChannel>,
}

impl Scenario {
    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn channels(&self) -> Vec<CVector> {
        self.users.iter().map(|u| u.channel.clone()).collect()
    }

    pub fn first_rows(&self) -> Vec<CVector> {
        self.users.iter().map(|u| u.first_row.clone()).collect()
    }

    /// Genie covariance of user `j`, rebuilt from its first row.
    pub fn genie_covariance(&self, geometry: &ArrayGeometry, j: usize) -> Result<CMatrix> {
        complete_from_first_row(geometry, &self.users[j].first_row)
    }

    /// First `users` users of this scenario.
    pub fn truncated(&self, users: usize) -> Scenario {
        Scenario {
            users: self.users.iter().take(users).cloned().collect(),
        }
    }
}

fn draw_user<R: Rng + ?Sized>(
    geometry: &ArrayGeometry,
    sampler: &ClusterSampler,
    rng: &mut R,
) -> Result<UserChannel> {
    let params = sampler.sample(rng);
    let cov = cluster_covariance(geometry, &params, sampler.grid_size)?;
    let channel = PsdFactor::new(&cov)?.sample(rng);
    Ok(UserChannel {
        channel,
        first_row: first_row(&cov),
    })
}

/// The set `H`: `count` i.i.d. channels, each with a fresh cluster.
pub fn generate_dataset<R: Rng + ?Sized>(
    geometry: &ArrayGeometry,
    count: usize,
    sampler: &ClusterSampler,
    rng: &mut R,
) -> Result<Vec<CVector>> {
    if count == 0 {
        return Err(Error::invalid("dataset size must be at least 1"));
    }
    geometry.validate()?;
    sampler.validate()?;
    let base = rng.random::<u64>();
    let chunks: Vec<Result<Vec<CVector>>> = (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = seeded_rng(derive_seed(base, c as u64));
            let len = CHUNK.min(count - c * CHUNK);
            (0..len)
                .map(|_| draw_user(geometry, sampler, &mut rng).map(|u| u.channel))
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(count);
    for chunk in chunks {
        out.extend(chunk?);
    }
    Ok(out)
}

/// `scenarios` multi-user scenarios of `users` independent users each.
pub fn generate_scenarios<R: Rng + ?Sized>(
    geometry: &ArrayGeometry,
    scenarios: usize,
    users: usize,
    sampler: &ClusterSampler,
    rng: &mut R,
) -> Result<Vec<Scenario>> {
    if scenarios == 0 || users == 0 {
        return Err(Error::invalid("scenario and user counts must be at least 1"));
    }
    geometry.validate()?;
    sampler.validate()?;
    let base = rng.random::<u64>();
    (0..scenarios)
        .into_par_iter()
        .map(|d| {
            let mut rng = seeded_rng(derive_seed(base, d as u64));
            let users = (0..users)
                .map(|_| draw_user(geometry, sampler, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            Ok(Scenario { users })
        })
        .collect()
}

/// Scales all channels by one global factor so the empirical mean of
/// `|h|^2` equals `antennas`. Returns the factor.
pub fn normalize_dataset(channels: &mut [CVector], antennas: usize) -> Result<f64> {
    if channels.is_empty() {
        return Err(Error::invalid("cannot normalize an empty dataset"));
    }
    let mean = channels.iter().map(|h| h.norm_squared()).sum::<f64>() / channels.len() as f64;
    if mean == 0.0 || !mean.is_finite() {
        return Err(Error::invalid("dataset energy is zero or not finite"));
    }
    let scale = (antennas as f64 / mean).sqrt();
    if scale != 1.0 {
        channels.iter_mut().for_each(|h| h.scale_mut(scale));
    }
    Ok(scale)
}

/// Normalizes scenario channels jointly; genie covariances are rescaled by
/// the squared factor so they keep describing the stored channels.
pub fn normalize_scenarios(scenarios: &mut [Scenario], antennas: usize) -> Result<f64> {
    let count: usize = scenarios.iter().map(Scenario::user_count).sum();
    if count == 0 {
        return Err(Error::invalid("cannot normalize an empty scenario set"));
    }
    let mean = scenarios
        .iter()
        .flat_map(|s| s.users.iter())
        .map(|u| u.channel.norm_squared())
        .sum::<f64>()
        / count as f64;
    if mean == 0.0 || !mean.is_finite() {
        return Err(Error::invalid("scenario energy is zero or not finite"));
    }
    let scale = (antennas as f64 / mean).sqrt();
    scale_scenarios(scenarios, scale);
    Ok(scale)
}

/// Multiplies every channel by `scale` and every genie first row by `scale^2`.
pub fn scale_scenarios(scenarios: &mut [Scenario], scale: f64) {
    if scale == 1.0 {
        return;
    }
    for u in scenarios.iter_mut().flat_map(|s| s.users.iter_mut()) {
        u.channel.scale_mut(scale);
        u.first_row.scale_mut(scale * scale);
    }
}
