//! DFT pilot matrices and noisy pilot observations `y = P h + n`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::ArrayGeometry;
use crate::error::{Error, Result};
use crate::linalg::{complex_normal_vector, kron, unitary_dft, CMatrix, CVector};

/// Which DFT rows form the pilot submatrix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowSelection {
    /// ULA: rows `0..n_p`. URA: first `n_p` frequency pairs in diagonal-major
    /// order over the `N_v x N_h` grid.
    #[default]
    Lowest,
    /// ULA: rows `floor(i N / n_p)`; URA falls back to `Lowest`.
    Equispaced,
}

/// `n_p x N` pilot matrix whose rows are orthogonal with squared norm `rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotMatrix {
    pub matrix: CMatrix,
    pub power: f64,
    pub geometry: ArrayGeometry,
}

impl PilotMatrix {
    pub fn pilots(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn antennas(&self) -> usize {
        self.matrix.ncols()
    }
}

pub fn build_pilot_matrix(geometry: &ArrayGeometry, pilots: usize, power: f64) -> Result<PilotMatrix> {
    build_pilot_matrix_with(geometry, pilots, power, RowSelection::Lowest)
}

pub fn build_pilot_matrix_with(
    geometry: &ArrayGeometry,
    pilots: usize,
    power: f64,
    selection: RowSelection,
) -> Result<PilotMatrix> {
    geometry.validate()?;
    let n = geometry.antennas();
    if pilots == 0 || pilots > n {
        return Err(Error::invalid(format!("pilot count must be in 1..={n}, got {pilots}")));
    }
    if !(power > 0.0 && power.is_finite()) {
        return Err(Error::invalid(format!("pilot power must be positive, got {power}")));
    }
    let (n_v, n_h) = geometry.grid();
    let (full, rows): (CMatrix, Vec<usize>) = if n_v == 1 {
        let rows = match selection {
            RowSelection::Lowest => (0..pilots).collect(),
            RowSelection::Equispaced => (0..pilots).map(|i| i * n / pilots).collect(),
        };
        (unitary_dft(n), rows)
    } else {
        let mut grid: Vec<(usize, usize)> =
            (0..n_v).flat_map(|v| (0..n_h).map(move |h| (v, h))).collect();
        grid.sort_by_key(|&(v, h)| (v + h, v));
        let rows = grid.iter().take(pilots).map(|&(v, h)| v * n_h + h).collect();
        (kron(&unitary_dft(n_v), &unitary_dft(n_h)), rows)
    };
    // unitary rows have unit norm, so scaling by sqrt(rho) gives norm rho
    let scale = power.sqrt();
    let matrix = CMatrix::from_fn(pilots, n, |i, c| full[(rows[i], c)] * scale);
    Ok(PilotMatrix {
        matrix,
        power,
        geometry: *geometry,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub y: CVector,
    pub noise_variance: f64,
}

/// `y = P h + n`, `n ~ CN(0, sigma^2 I)`.
pub fn observe<R: Rng + ?Sized>(
    pilots: &PilotMatrix,
    channel: &CVector,
    noise_variance: f64,
    rng: &mut R,
) -> Result<Observation> {
    if channel.len() != pilots.antennas() {
        return Err(Error::DimensionMismatch {
            what: "channel length",
            expected: pilots.antennas(),
            actual: channel.len(),
        });
    }
    if !(noise_variance >= 0.0) {
        return Err(Error::invalid(format!("noise variance must be >= 0, got {noise_variance}")));
    }
    let mut y = &pilots.matrix * channel;
    if noise_variance > 0.0 {
        let noise = complex_normal_vector(y.len(), rng);
        y.axpy(noise_variance.sqrt().into(), &noise, 1.0.into());
    }
    Ok(Observation { y, noise_variance })
}
