//! Expectation-maximization for the structured zero-mean mixture.
//!
//! The covariance structure `C_k = Q^H diag(q_k) Q` is read as a latent model:
//! `h = Q^H x` with `x ~ CN(0, diag(q_k))` on the `2N` (or `4N`) spectral grid.
//! The E-step yields component responsibilities and, per component, the
//! conditional second moments of `x`; the M-step sets
//!
//! ```text
//! q_k <- max(eps, q_k + q_k^2 * diag(Q C_k^-1 (S_k - C_k) C_k^-1 Q^H))
//! ```
//!
//! where `S_k` is the responsibility-weighted sample covariance. The bracket
//! is `E[|x_m|^2 | h, k]` averaged over the data, i.e. the periodogram
//! `|Q h|^2` corrected for what the component already explains. Because the
//! update is an exact maximization of the complete-data objective (the floor
//! is a box constraint on that objective), the log-likelihood never
//! decreases.

use std::f64::consts::PI;

use log::{debug, warn};
use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{GmmModel, SpectralDictionary};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmConfig {
    /// `K = 2^B`.
    pub components: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Stop once the relative log-likelihood improvement drops below this.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Spectral floor relative to the mean initial spectrum energy.
    #[serde(default = "default_floor")]
    pub floor_rel: f64,
}

fn default_max_iters() -> usize {
    300
}
fn default_tol() -> f64 {
    1e-5
}
fn default_floor() -> f64 {
    1e-6
}

impl EmConfig {
    pub fn new(components: usize) -> Self {
        Self {
            components,
            max_iters: default_max_iters(),
            tol: default_tol(),
            floor_rel: default_floor(),
        }
    }

    pub fn from_bits(bits: u32) -> Self {
        Self::new(1 << bits)
    }

    pub fn validate(&self) -> Result<()> {
        if self.components == 0 || !self.components.is_power_of_two() {
            return Err(Error::invalid(format!(
                "component count must be a power of two, got {}",
                self.components
            )));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::invalid("EM tolerance must be >= 0"));
        }
        if !(self.floor_rel > 0.0 && self.floor_rel.is_finite()) {
            return Err(Error::invalid("spectral floor must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EmFit {
    pub model: GmmModel,
    /// Mean per-sample log-likelihood before each M-step; the last entry is
    /// the likelihood of the returned model.
    pub log_likelihoods: Vec<f64>,
    pub converged: bool,
}

fn data_matrix(data: &[CVector], n: usize) -> Result<CMatrix> {
    if let Some(bad) = data.iter().find(|h| h.len() != n) {
        return Err(Error::DimensionMismatch {
            what: "channel length",
            expected: n,
            actual: bad.len(),
        });
    }
    Ok(CMatrix::from_fn(n, data.len(), |r, c| data[c][r]))
}

/// Fits a fresh mixture.
///
/// Every spectrum starts from the global sample covariance's spectrum with an
/// independent multiplicative jitter `1 + u`, `u ~ U[-0.5, 0.5]`; weights
/// start uniform.
pub fn fit_em<R: Rng + ?Sized>(
    data: &[CVector],
    config: &EmConfig,
    dictionary: &SpectralDictionary,
    rng: &mut R,
) -> Result<EmFit> {
    let k = config.components;
    if data.is_empty() {
        return Err(Error::invalid("EM needs a nonempty dataset"));
    }
    if k == 0 || !k.is_power_of_two() {
        return Err(Error::invalid(format!("component count must be a power of two, got {k}")));
    }
    if data.len() < k {
        return Err(Error::invalid(format!(
            "EM needs at least as many samples as components ({} < {k})",
            data.len()
        )));
    }
    let h = data_matrix(data, dictionary.antennas())?;
    let global = (&h * h.adjoint()).unscale(data.len() as f64);
    let base = dictionary.spectrum_of(&global);
    let mean_energy = base.iter().sum::<f64>() / base.len() as f64;
    if !(mean_energy > 0.0) {
        return Err(Error::invalid("dataset has zero energy"));
    }
    let floor = config.floor_rel * mean_energy;
    let spectra: Vec<Vec<f64>> = (0..k)
        .map(|_| {
            base.iter()
                .map(|&b| (b * (1.0 + rng.random_range(-0.5..=0.5))).max(floor))
                .collect()
        })
        .collect();
    let init = GmmModel::new(dictionary.clone(), vec![1.0 / k as f64; k], spectra, floor)?;
    run_em(&h, init, config)
}

/// Continues EM from an existing model (same floor, same structure).
pub fn resume_em(data: &[CVector], model: GmmModel, config: &EmConfig) -> Result<EmFit> {
    if data.len() < model.components() {
        return Err(Error::invalid("EM needs at least as many samples as components"));
    }
    let h = data_matrix(data, model.antennas())?;
    run_em(&h, model, config)
}

struct EStep {
    log_likelihood: f64,
    /// `K x M` responsibilities.
    resp: DMatrix<f64>,
}

fn e_step(h: &CMatrix, model: &GmmModel) -> Result<EStep> {
    let (n, m) = h.shape();
    let k = model.components();
    let constant = n as f64 * PI.ln();
    let mut logp = DMatrix::<f64>::zeros(k, m);
    for c in 0..k {
        let factor = model.factor(c);
        let log_det = factor.log_det;
        let z = factor
            .lower
            .solve_lower_triangular(h)
            .ok_or_else(|| Error::Factorization("triangular solve failed".into()))?;
        let lw = model.weights()[c].ln();
        for i in 0..m {
            logp[(c, i)] = lw - constant - log_det - z.column(i).norm_squared();
        }
    }
    let mut total = 0.0;
    for i in 0..m {
        let mut col: Vec<f64> = logp.column(i).iter().copied().collect();
        total += crate::linalg::normalize_log_weights(&mut col);
        logp.column_mut(i).copy_from_slice(&col);
    }
    Ok(EStep {
        log_likelihood: total / m as f64,
        resp: logp,
    })
}

fn m_step(h: &CMatrix, model: &GmmModel, resp: &DMatrix<f64>) -> Result<GmmModel> {
    let m = h.ncols();
    let k = model.components();
    let q_mat = model.dictionary().matrix();
    let floor = model.spectral_floor();
    let mut weights = Vec::with_capacity(k);
    let mut spectra = Vec::with_capacity(k);
    for c in 0..k {
        let r = resp.row(c);
        let mass: f64 = r.iter().sum();
        weights.push(mass / m as f64);
        let q = model.spectrum(c);
        if mass <= 1e-12 * m as f64 {
            // an empty component keeps its spectrum
            spectra.push(q.to_vec());
            continue;
        }
        let mut weighted = h.clone();
        for (i, mut col) in weighted.column_iter_mut().enumerate() {
            col.scale_mut((r[i] / mass).sqrt());
        }
        let s = &weighted * weighted.adjoint();
        let cov = model.covariance(c);
        let cinv = nalgebra::Cholesky::pack_dirty(model.factor(c).lower.clone()).inverse();
        let d = q_mat * cinv;
        let e = &d * (s - cov);
        let updated = (0..q.len())
            .map(|i| {
                let corr: f64 = e
                    .row(i)
                    .iter()
                    .zip(d.row(i).iter())
                    .map(|(a, b): (&C64, &C64)| (a * b.conj()).re)
                    .sum();
                (q[i] + q[i] * q[i] * corr).max(floor)
            })
            .collect();
        spectra.push(updated);
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    GmmModel::new(model.dictionary().clone(), weights, spectra, floor)
}

fn run_em(h: &CMatrix, mut model: GmmModel, config: &EmConfig) -> Result<EmFit> {
    let mut log_likelihoods = Vec::new();
    let mut converged = false;
    let mut iter = 0;
    loop {
        let e = e_step(h, &model)?;
        if !e.log_likelihood.is_finite() {
            return Err(Error::NonFinite {
                stage: "EM log-likelihood",
                layer: iter,
            });
        }
        debug!("EM iteration {iter}: mean log-likelihood {:.10}", e.log_likelihood);
        if let Some(&prev) = log_likelihoods.last() {
            let gain = (e.log_likelihood - prev) / f64::max(f64::abs(prev), 1.0);
            if gain < -1e-8 {
                warn!("EM log-likelihood decreased at iteration {iter}: {prev} -> {}", e.log_likelihood);
            }
            log_likelihoods.push(e.log_likelihood);
            if gain < config.tol {
                converged = true;
                break;
            }
        } else {
            log_likelihoods.push(e.log_likelihood);
        }
        if iter == config.max_iters {
            break;
        }
        model = m_step(h, &model, &e.resp)?;
        iter += 1;
    }
    Ok(EmFit {
        model,
        log_likelihoods,
        converged,
    })
}
