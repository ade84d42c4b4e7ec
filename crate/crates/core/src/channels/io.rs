//! Dataset files: a raw blob of little-endian `f64` values holding the
//! channels back to back as interleaved `(re, im)` pairs, described by a JSON
//! sidecar. Scenario sets additionally store the genie first rows in a second
//! blob with the same layout (scenario-major, then user).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ArrayGeometry, Scenario, UserChannel};
use crate::error::{Error, Result};
use crate::linalg::{CVector, C64};

pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetLayout {
    Channels { count: usize },
    Scenarios { scenarios: usize, users: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSidecar {
    pub version: u32,
    pub geometry: ArrayGeometry,
    pub antennas: usize,
    pub layout: DatasetLayout,
    pub seed: u64,
    pub normalization_scale: f64,
    pub channels_file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_rows_file: Option<String>,
}

/// `<stem>.<ext>` without replacing an existing extension of the stem.
pub fn sibling(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn encode_complex<'a>(vectors: impl IntoIterator<Item = &'a CVector>) -> Vec<u8> {
    let mut out = Vec::new();
    for v in vectors {
        for z in v.iter() {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    out
}

pub fn decode_complex(bytes: &[u8], len: usize, path: &Path) -> Result<Vec<CVector>> {
    let stride = 16 * len;
    if len == 0 || !bytes.len().is_multiple_of(stride) {
        return Err(Error::format(
            path,
            format!("blob of {} bytes is not a multiple of {stride}", bytes.len()),
        ));
    }
    let read = |chunk: &[u8], o: usize| f64::from_le_bytes(chunk[o..o + 8].try_into().unwrap());
    Ok(bytes
        .chunks_exact(stride)
        .map(|chunk| CVector::from_fn(len, |i, _| C64::new(read(chunk, 16 * i), read(chunk, 16 * i + 8))))
        .collect())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_sidecar(stem: &Path, sidecar: &DatasetSidecar) -> Result<()> {
    let path = sibling(stem, "json");
    let json = serde_json::to_string_pretty(sidecar).map_err(|e| Error::format(&path, e))?;
    write_file(&path, json.as_bytes())
}

pub fn read_sidecar(stem: &Path) -> Result<DatasetSidecar> {
    let path = sibling(stem, "json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let sidecar: DatasetSidecar = serde_json::from_str(&text).map_err(|e| Error::format(&path, e))?;
    if sidecar.version != DATASET_VERSION {
        return Err(Error::format(&path, format!("unsupported version {}", sidecar.version)));
    }
    Ok(sidecar)
}

pub fn write_channels(
    stem: &Path,
    geometry: &ArrayGeometry,
    channels: &[CVector],
    seed: u64,
    normalization_scale: f64,
) -> Result<DatasetSidecar> {
    let blob = sibling(stem, "bin");
    write_file(&blob, &encode_complex(channels))?;
    let sidecar = DatasetSidecar {
        version: DATASET_VERSION,
        geometry: *geometry,
        antennas: geometry.antennas(),
        layout: DatasetLayout::Channels {
            count: channels.len(),
        },
        seed,
        normalization_scale,
        channels_file: file_name(&blob),
        first_rows_file: None,
    };
    write_sidecar(stem, &sidecar)?;
    Ok(sidecar)
}

pub fn write_scenarios(
    stem: &Path,
    geometry: &ArrayGeometry,
    scenarios: &[Scenario],
    seed: u64,
    normalization_scale: f64,
) -> Result<DatasetSidecar> {
    let users = scenarios.first().map_or(0, Scenario::user_count);
    if scenarios.iter().any(|s| s.user_count() != users) {
        return Err(Error::invalid("all scenarios in a file must have the same user count"));
    }
    let blob = sibling(stem, "bin");
    let rows = sibling(stem, "rows.bin");
    let all = || scenarios.iter().flat_map(|s| s.users.iter());
    write_file(&blob, &encode_complex(all().map(|u| &u.channel)))?;
    write_file(&rows, &encode_complex(all().map(|u| &u.first_row)))?;
    let sidecar = DatasetSidecar {
        version: DATASET_VERSION,
        geometry: *geometry,
        antennas: geometry.antennas(),
        layout: DatasetLayout::Scenarios {
            scenarios: scenarios.len(),
            users,
        },
        seed,
        normalization_scale,
        channels_file: file_name(&blob),
        first_rows_file: Some(file_name(&rows)),
    };
    write_sidecar(stem, &sidecar)?;
    Ok(sidecar)
}

fn read_blob(stem: &Path, name: &str, n: usize, expected: usize) -> Result<Vec<CVector>> {
    let path = stem.parent().unwrap_or(Path::new("")).join(name);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let out = decode_complex(&bytes, n, &path)?;
    if out.len() != expected {
        return Err(Error::format(
            &path,
            format!("expected {expected} vectors, found {}", out.len()),
        ));
    }
    Ok(out)
}

pub fn read_channels(stem: &Path) -> Result<(DatasetSidecar, Vec<CVector>)> {
    let sidecar = read_sidecar(stem)?;
    let count = match sidecar.layout {
        DatasetLayout::Channels { count } => count,
        DatasetLayout::Scenarios { scenarios, users } => scenarios * users,
    };
    let channels = read_blob(stem, &sidecar.channels_file, sidecar.antennas, count)?;
    Ok((sidecar, channels))
}

pub fn read_scenarios(stem: &Path) -> Result<(DatasetSidecar, Vec<Scenario>)> {
    let sidecar = read_sidecar(stem)?;
    let DatasetLayout::Scenarios { scenarios, users } = sidecar.layout else {
        return Err(Error::format(sibling(stem, "json"), "not a scenario dataset"));
    };
    let rows_file = sidecar
        .first_rows_file
        .clone()
        .ok_or_else(|| Error::format(sibling(stem, "json"), "missing first_rows_file"))?;
    let n = sidecar.antennas;
    let channels = read_blob(stem, &sidecar.channels_file, n, scenarios * users)?;
    let rows = read_blob(stem, &rows_file, n, scenarios * users)?;
    let mut it = channels.into_iter().zip(rows);
    let out = (0..scenarios)
        .map(|_| Scenario {
            users: (0..users)
                .map(|_| {
                    let (channel, first_row) = it.next().unwrap();
                    UserChannel { channel, first_row }
                })
                .collect(),
        })
        .collect();
    Ok((sidecar, out))
}
