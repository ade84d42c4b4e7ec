use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::SpectralDictionary;
use crate::channels::ArrayGeometry;
use crate::error::{Error, Result};
use crate::linalg::{argmax, cholesky_lower, forward_substitute, normalize_log_weights, CMatrix, CVector};
use crate::structured::first_row;

pub const GMM_FILE_VERSION: u32 = 1;

/// Cholesky factor of one component covariance for perfect-CSI scoring.
#[derive(Debug, Clone)]
pub(crate) struct ComponentFactor {
    pub(crate) lower: CMatrix,
    pub(crate) log_det: f64,
}

/// Zero-mean Gaussian mixture with structured covariances
/// `C_k = Q^H diag(q_k) Q` and `K = 2^B` components.
#[derive(Debug, Clone)]
pub struct GmmModel {
    dictionary: SpectralDictionary,
    weights: Vec<f64>,
    spectra: Vec<Vec<f64>>,
    spectral_floor: f64,
    covariances: Vec<CMatrix>,
    factors: Vec<ComponentFactor>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GmmFile {
    version: u32,
    geometry: ArrayGeometry,
    components: usize,
    spectral_floor: f64,
    weights: Vec<f64>,
    spectra: Vec<Vec<f64>>,
}

impl GmmModel {
    pub fn new(
        dictionary: SpectralDictionary,
        weights: Vec<f64>,
        spectra: Vec<Vec<f64>>,
        spectral_floor: f64,
    ) -> Result<Self> {
        let k = weights.len();
        if k == 0 || !k.is_power_of_two() {
            return Err(Error::invalid(format!(
                "component count must be a power of two, got {k}"
            )));
        }
        if spectra.len() != k {
            return Err(Error::DimensionMismatch {
                what: "spectra count",
                expected: k,
                actual: spectra.len(),
            });
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid("mixture weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("mixture weights sum to {total}, not 1")));
        }
        // renormalizing an already normalized vector would perturb the last
        // bits and break save/load hash stability
        let weights: Vec<f64> = if (total - 1.0).abs() <= 1e-12 {
            weights
        } else {
            weights.iter().map(|w| w / total).collect()
        };
        let covariances = spectra
            .iter()
            .map(|q| dictionary.realize(q))
            .collect::<Result<Vec<_>>>()?;
        let factors = covariances
            .iter()
            .map(|c| {
                let (lower, log_det) = cholesky_lower(c)?;
                Ok(ComponentFactor { lower, log_det })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dictionary,
            weights,
            spectra,
            spectral_floor,
            covariances,
            factors,
        })
    }

    pub fn dictionary(&self) -> &SpectralDictionary {
        &self.dictionary
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        self.dictionary.geometry()
    }

    pub fn antennas(&self) -> usize {
        self.dictionary.antennas()
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    /// Feedback bits `B = log2(K)`.
    pub fn bits(&self) -> u32 {
        self.components().trailing_zeros()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn spectrum(&self, k: usize) -> &[f64] {
        &self.spectra[k]
    }

    pub fn spectral_floor(&self) -> f64 {
        self.spectral_floor
    }

    pub fn covariance(&self, k: usize) -> &CMatrix {
        &self.covariances[k]
    }

    pub(crate) fn factor(&self, k: usize) -> &ComponentFactor {
        &self.factors[k]
    }

    pub fn covariances(&self) -> &[CMatrix] {
        &self.covariances
    }

    /// `C_k[0, :]`, the statistics handed to the precoder network.
    pub fn first_row(&self, k: usize) -> CVector {
        first_row(&self.covariances[k])
    }

    /// `ln pi_k + ln N_C(h; 0, C_k)` for every component.
    pub fn log_scores_csi(&self, h: &CVector) -> Result<Vec<f64>> {
        let n = self.antennas();
        if h.len() != n {
            return Err(Error::DimensionMismatch {
                what: "channel length",
                expected: n,
                actual: h.len(),
            });
        }
        if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("channel contains non-finite entries"));
        }
        let constant = n as f64 * PI.ln();
        Ok(self
            .factors
            .iter()
            .zip(&self.weights)
            .map(|(f, w)| {
                let z = forward_substitute(&f.lower, h);
                w.ln() - constant - f.log_det - z.norm_squared()
            })
            .collect())
    }

    /// `p(k | h)` under the full mixture.
    pub fn responsibilities_csi(&self, h: &CVector) -> Result<Vec<f64>> {
        let mut s = self.log_scores_csi(h)?;
        normalize_log_weights(&mut s);
        Ok(s)
    }

    /// MAP component index from perfect CSI (0-based, smallest index on ties).
    pub fn feedback_index_csi(&self, h: &CVector) -> Result<usize> {
        Ok(argmax(&self.log_scores_csi(h)?))
    }

    fn to_json(&self) -> String {
        let file = GmmFile {
            version: GMM_FILE_VERSION,
            geometry: *self.geometry(),
            components: self.components(),
            spectral_floor: self.spectral_floor,
            weights: self.weights.clone(),
            spectra: self.spectra.clone(),
        };
        serde_json::to_string(&file).expect("finite model serializes")
    }

    /// SHA-256 of the file contents written by [`GmmModel::save`].
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = self.to_json();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: GmmFile = serde_json::from_str(&text).map_err(|e| Error::format(path, e))?;
        if file.version != GMM_FILE_VERSION {
            return Err(Error::format(path, format!("unsupported version {}", file.version)));
        }
        if file.components != file.weights.len() {
            return Err(Error::format(path, "component count does not match weights"));
        }
        let dictionary = SpectralDictionary::new(&file.geometry)?;
        GmmModel::new(dictionary, file.weights, file.spectra, file.spectral_floor)
            .map_err(|e| Error::format(path, e))
    }
}
