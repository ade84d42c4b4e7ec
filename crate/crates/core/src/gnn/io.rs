//! Model files: a JSON header next to a raw parameter blob.
//!
//! The blob holds `parameter_count` little-endian `f64` values in the order
//! of [`GnnModel::parameters`].

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::model::{Activation, EdgeLayer, FeatureExtractor, GnnModel};
use crate::error::{Error, Result};

pub const GNN_FILE_VERSION: u32 = 1;

const TENSOR_ORDER: &str = "extractor.weight[2N x 2N], extractor.bias[2N], extractor.prelu_slope[1], \
then for each layer S, T, Q, K, U [M_l x M_(l-1)]; all matrices row-major";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnnHeader {
    pub version: u32,
    #[serde(rename = "N")]
    pub antennas: usize,
    #[serde(rename = "L")]
    pub layers: usize,
    pub layer_dims: Vec<usize>,
    pub alpha: f64,
    pub beta: f64,
    pub activations: Vec<Activation>,
    pub extractor_activation: String,
    pub parameter_count: usize,
    pub tensor_order: String,
    pub blob: String,
}

fn blob_path(header_path: &Path) -> PathBuf {
    header_path.with_extension("bin")
}

impl GnnModel {
    pub fn header(&self, blob: &str) -> GnnHeader {
        GnnHeader {
            version: GNN_FILE_VERSION,
            antennas: self.antennas(),
            layers: self.layers.len(),
            layer_dims: self.layer_dims(),
            alpha: self.alpha(),
            beta: self.beta(),
            activations: self.layers.iter().map(|l| l.activation).collect(),
            extractor_activation: "prelu".into(),
            parameter_count: self.parameter_count(),
            tensor_order: TENSOR_ORDER.into(),
            blob: blob.into(),
        }
    }

    pub fn to_blob(&self) -> Vec<u8> {
        self.parameters().iter().flat_map(|x| x.to_le_bytes()).collect()
    }

    /// Writes `path` (JSON header) and the blob beside it with extension `.bin`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let blob = blob_path(path);
        let name = blob
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .ok_or_else(|| Error::format(path, "model path has no file name"))?;
        let json = serde_json::to_string_pretty(&self.header(&name)).map_err(|e| Error::format(path, e))?;
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, json).map_err(|e| Error::io(path, e))?;
        fs::write(&blob, self.to_blob()).map_err(|e| Error::io(&blob, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let header: GnnHeader = serde_json::from_str(&text).map_err(|e| Error::format(path, e))?;
        if header.version != GNN_FILE_VERSION {
            return Err(Error::format(path, format!("unsupported version {}", header.version)));
        }
        let dims = &header.layer_dims;
        if dims.len() != header.layers + 1 || header.activations.len() != header.layers {
            return Err(Error::format(path, "layer count does not match layer dims"));
        }
        let blob = path.parent().unwrap_or(Path::new("")).join(&header.blob);
        let bytes = fs::read(&blob).map_err(|e| Error::io(&blob, e))?;
        if bytes.len() != 8 * header.parameter_count {
            return Err(Error::format(&blob, format!(
                "expected {} parameters, found {} bytes",
                header.parameter_count,
                bytes.len()
            )));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        let n2 = 2 * header.antennas;
        let extractor = FeatureExtractor {
            weight: DMatrix::zeros(n2, n2),
            bias: DVector::zeros(n2),
            slope: 0.0,
        };
        let layers = dims
            .windows(2)
            .zip(&header.activations)
            .map(|(w, &act)| EdgeLayer::zeros(w[1], w[0], act))
            .collect();
        let mut model = GnnModel::from_parts(header.antennas, header.alpha, header.beta, extractor, layers)
            .map_err(|e| Error::format(path, e))?;
        model.set_parameters(&values).map_err(|e| Error::format(&blob, e))?;
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::format(&blob, "non-finite parameter"));
        }
        Ok(model)
    }

    /// SHA-256 over the header and parameter blob as written by `save`.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        let header = serde_json::to_string(&self.header("")).expect("header serializes");
        h.update(header.as_bytes());
        h.update(self.to_blob());
        hex::encode(h.finalize())
    }
}
