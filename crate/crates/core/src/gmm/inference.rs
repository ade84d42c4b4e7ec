//! Online inference from pilot observations.
//!
//! For a fixed pilot matrix the per-component projections `P C_k P^H` and
//! `C_k P^H` do not depend on the noise level; [`ProjectedGmm`] keeps them so
//! a cache for any noise variance costs `K` small Cholesky factorizations.
//! With the cache built, scoring one observation is `O(K n_p^2)` and never
//! touches an `N`-sized quantity.

use std::f64::consts::PI;

use super::GmmModel;
use crate::error::{Error, Result};
use crate::linalg::{
    adjoint_back_substitute, argmax, cholesky_lower, forward_substitute, normalize_log_weights,
    CMatrix, CVector, C64,
};
use crate::pilots::PilotMatrix;

/// Noise-independent projections of every mixture component.
#[derive(Debug, Clone)]
pub struct ProjectedGmm {
    log_weights: Vec<f64>,
    /// `P C_k P^H`.
    projected: Vec<CMatrix>,
    /// `C_k P^H`.
    gains: Vec<CMatrix>,
}

impl ProjectedGmm {
    pub fn new(model: &GmmModel, pilots: &CMatrix) -> Result<Self> {
        if pilots.ncols() != model.antennas() {
            return Err(Error::DimensionMismatch {
                what: "pilot matrix columns",
                expected: model.antennas(),
                actual: pilots.ncols(),
            });
        }
        let ph = pilots.adjoint();
        let gains: Vec<CMatrix> = model.covariances().iter().map(|c| c * &ph).collect();
        let projected = gains.iter().map(|g| pilots * g).collect();
        Ok(Self {
            log_weights: model.weights().iter().map(|w| w.ln()).collect(),
            projected,
            gains,
        })
    }

    pub fn with_noise(&self, noise_variance: f64) -> Result<ObservationCache> {
        if !(noise_variance >= 0.0) {
            return Err(Error::invalid(format!("noise variance must be >= 0, got {noise_variance}")));
        }
        let components = self
            .projected
            .iter()
            .zip(&self.gains)
            .zip(&self.log_weights)
            .map(|((pcp, gain), &log_weight)| {
                let mut m = pcp.clone();
                for i in 0..m.nrows() {
                    m[(i, i)] += C64::new(noise_variance, 0.0);
                }
                let (lower, log_det) = cholesky_lower(&m)?;
                Ok(CachedComponent {
                    lower,
                    log_det,
                    log_weight,
                    gain: gain.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ObservationCache {
            noise_variance,
            components,
        })
    }
}

#[derive(Debug, Clone)]
struct CachedComponent {
    /// Cholesky factor of `P C_k P^H + sigma^2 I`.
    lower: CMatrix,
    log_det: f64,
    log_weight: f64,
    gain: CMatrix,
}

/// Observation-domain factor cache for one `(P, sigma^2)` pair.
#[derive(Debug, Clone)]
pub struct ObservationCache {
    noise_variance: f64,
    components: Vec<CachedComponent>,
}

impl ObservationCache {
    pub fn new(model: &GmmModel, pilots: &PilotMatrix, noise_variance: f64) -> Result<Self> {
        ProjectedGmm::new(model, &pilots.matrix)?.with_noise(noise_variance)
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn pilots(&self) -> usize {
        self.components[0].lower.nrows()
    }

    /// Whitened observations `L_k^-1 y` and the log scores
    /// `ln pi_k + ln N_C(y; 0, P C_k P^H + sigma^2 I)`.
    fn whiten(&self, y: &CVector) -> Result<(Vec<CVector>, Vec<f64>)> {
        let n_p = self.pilots();
        if y.len() != n_p {
            return Err(Error::DimensionMismatch {
                what: "observation length",
                expected: n_p,
                actual: y.len(),
            });
        }
        if y.iter().any(|z| z.re.is_nan() || z.im.is_nan()) {
            return Err(Error::invalid("observation contains NaN"));
        }
        let constant = n_p as f64 * PI.ln();
        let mut whitened = Vec::with_capacity(self.components.len());
        let mut scores = Vec::with_capacity(self.components.len());
        for c in &self.components {
            let z = forward_substitute(&c.lower, y);
            scores.push(c.log_weight - constant - c.log_det - z.norm_squared());
            whitened.push(z);
        }
        Ok((whitened, scores))
    }

    pub fn log_scores(&self, y: &CVector) -> Result<Vec<f64>> {
        Ok(self.whiten(y)?.1)
    }

    /// `p(k | y)`, normalized in the log domain.
    pub fn responsibilities(&self, y: &CVector) -> Result<Vec<f64>> {
        let mut s = self.log_scores(y)?;
        normalize_log_weights(&mut s);
        Ok(s)
    }

    /// MAP feedback index (0-based, smallest index on ties).
    pub fn feedback_index(&self, y: &CVector) -> Result<usize> {
        Ok(argmax(&self.log_scores(y)?))
    }

    /// Conditional-mean estimate
    /// `sum_k p(k | y) C_k P^H (P C_k P^H + sigma^2 I)^-1 y`.
    pub fn channel_estimate(&self, y: &CVector) -> Result<CVector> {
        let (whitened, mut resp) = self.whiten(y)?;
        normalize_log_weights(&mut resp);
        let n = self.components[0].gain.nrows();
        let mut h = CVector::zeros(n);
        for ((c, z), p) in self.components.iter().zip(&whitened).zip(&resp) {
            if *p == 0.0 {
                continue;
            }
            let w = adjoint_back_substitute(&c.lower, z);
            h.gemv(C64::new(*p, 0.0), &c.gain, &w, C64::new(1.0, 0.0));
        }
        Ok(h)
    }
}
