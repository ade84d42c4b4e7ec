//! Structured Gaussian mixture prior over channels: offline EM fitting,
//! user-side MAP feedback from pilot observations (or perfect CSI), and the
//! mixture-based channel estimator.
//!
//! Component indices are 0-based throughout.

mod dictionary;
mod em;
mod inference;
mod model;

pub use dictionary::{SpectralDictionary, NORMALIZATION};
pub use em::{fit_em, resume_em, EmConfig, EmFit};
pub use inference::{ObservationCache, ProjectedGmm};
pub use model::{GmmModel, GMM_FILE_VERSION};
pub use crate::structured::{complete_from_first_row, first_row};

use crate::error::Result;
use crate::linalg::CVector;

/// `p(k | y)` for an observation under a prebuilt cache.
pub fn responsibilities_obs(cache: &ObservationCache, y: &CVector) -> Result<Vec<f64>> {
    cache.responsibilities(y)
}

pub fn feedback_index_obs(cache: &ObservationCache, y: &CVector) -> Result<usize> {
    cache.feedback_index(y)
}

pub fn feedback_index_csi(model: &GmmModel, h: &CVector) -> Result<usize> {
    model.feedback_index_csi(h)
}

pub fn gmm_channel_estimate(cache: &ObservationCache, y: &CVector) -> Result<CVector> {
    cache.channel_estimate(y)
}
