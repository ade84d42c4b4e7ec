use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ArrayGeometry;
use crate::error::{Error, Result};
use crate::linalg::{kron, CMatrix, CVector, PsdFactor, C64};

pub const MIN_GRID_SIZE: usize = 64;
pub const DEFAULT_GRID_SIZE: usize = 720;

/// One propagation cluster as seen from the base station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterParameters {
    /// Main departure azimuth in radians, in `[-pi/2, pi/2)`.
    pub azimuth: f64,
    /// Main departure elevation in radians; ignored for a ULA.
    pub elevation: f64,
    /// Laplacian angular spread in radians.
    pub angular_spread: f64,
}

impl ClusterParameters {
    pub fn new(azimuth: f64, angular_spread: f64) -> Self {
        Self {
            azimuth,
            elevation: 0.0,
            angular_spread,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let in_range = |a: f64| (-FRAC_PI_2..FRAC_PI_2).contains(&a);
        if !in_range(self.azimuth) || !in_range(self.elevation) {
            return Err(Error::invalid(format!(
                "cluster angles must lie in [-pi/2, pi/2), got ({}, {})",
                self.azimuth, self.elevation
            )));
        }
        if !(self.angular_spread > 0.0 && self.angular_spread.is_finite()) {
            return Err(Error::invalid(format!(
                "angular spread must be positive, got {}",
                self.angular_spread
            )));
        }
        Ok(())
    }
}

/// Draws cluster centers uniformly over a sector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSampler {
    #[serde(default = "default_azimuth_range")]
    pub azimuth_range_deg: [f64; 2],
    #[serde(default = "default_elevation_range")]
    pub elevation_range_deg: [f64; 2],
    #[serde(default = "default_spread")]
    pub spread_deg: f64,
    #[serde(default = "default_grid")]
    pub grid_size: usize,
}

fn default_azimuth_range() -> [f64; 2] {
    [-60.0, 60.0]
}
fn default_elevation_range() -> [f64; 2] {
    [-15.0, 15.0]
}
fn default_spread() -> f64 {
    2.0
}
fn default_grid() -> usize {
    DEFAULT_GRID_SIZE
}

impl Default for ClusterSampler {
    fn default() -> Self {
        Self {
            azimuth_range_deg: default_azimuth_range(),
            elevation_range_deg: default_elevation_range(),
            spread_deg: default_spread(),
            grid_size: default_grid(),
        }
    }
}

impl ClusterSampler {
    pub fn validate(&self) -> Result<()> {
        for r in [self.azimuth_range_deg, self.elevation_range_deg] {
            if !(r[0] <= r[1] && r[0] >= -90.0 && r[1] < 90.0) {
                return Err(Error::invalid(format!("invalid angle range {r:?}")));
            }
        }
        if self.grid_size < MIN_GRID_SIZE {
            return Err(Error::invalid(format!(
                "grid_size must be at least {MIN_GRID_SIZE}, got {}",
                self.grid_size
            )));
        }
        ClusterParameters::new(0.0, self.spread_deg.to_radians()).validate()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ClusterParameters {
        let draw = |rng: &mut R, r: [f64; 2]| {
            if r[0] == r[1] {
                r[0]
            } else {
                rng.random_range(r[0]..r[1])
            }
        };
        let azimuth = draw(rng, self.azimuth_range_deg).to_radians();
        let elevation = draw(rng, self.elevation_range_deg).to_radians();
        ClusterParameters {
            azimuth,
            elevation,
            angular_spread: self.spread_deg.to_radians(),
        }
    }
}

/// Normalized Laplacian weights on the uniform grid over `[-pi/2, pi/2)`.
///
/// Weights are formed in the log domain relative to the closest grid point,
/// so a spread far below the grid step degenerates to a single point.
pub fn laplacian_grid_weights(center: f64, spread: f64, grid_size: usize) -> Vec<(f64, f64)> {
    let step = PI / grid_size as f64;
    let angles: Vec<f64> = (0..grid_size).map(|g| -FRAC_PI_2 + g as f64 * step).collect();
    let closest = angles
        .iter()
        .map(|a| (a - center).abs())
        .fold(f64::INFINITY, f64::min);
    let mut weights: Vec<(f64, f64)> = angles
        .iter()
        .map(|&a| (a, (-SQRT_2 * ((a - center).abs() - closest) / spread).exp()))
        .filter(|(_, w)| *w > 0.0)
        .collect();
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    weights.iter_mut().for_each(|(_, w)| *w /= total);
    weights
}

/// First row `r[d] = sum_g w_g exp(-j 2 pi s d sin(theta_g))` of a ULA
/// covariance whose steering vector is `a[n] = exp(j 2 pi s n sin(theta))`.
fn ula_first_row(n: usize, spacing: f64, center: f64, spread: f64, grid: usize) -> CVector {
    let weights = laplacian_grid_weights(center, spread, grid);
    CVector::from_fn(n, |d, _| {
        weights
            .iter()
            .map(|&(theta, w)| C64::from_polar(w, -2.0 * PI * spacing * d as f64 * theta.sin()))
            .sum()
    })
}

/// Hermitian Toeplitz matrix with the given first row.
pub fn hermitian_toeplitz(first_row: &CVector) -> CMatrix {
    let n = first_row.len();
    CMatrix::from_fn(n, n, |a, b| {
        if b >= a {
            first_row[b - a]
        } else {
            first_row[a - b].conj()
        }
    })
}

/// Covariance of one Laplacian cluster, trace-normalized to `N`.
///
/// ULA: `C = sum_g w_g a(theta_g) a(theta_g)^H`, built from its first row so the
/// result is exactly Toeplitz. URA: Kronecker product of the vertical
/// (elevation) and horizontal (azimuth) cluster covariances.
pub fn cluster_covariance(
    geometry: &ArrayGeometry,
    params: &ClusterParameters,
    grid_size: usize,
) -> Result<CMatrix> {
    geometry.validate()?;
    params.validate()?;
    if grid_size < MIN_GRID_SIZE {
        return Err(Error::invalid(format!(
            "grid_size must be at least {MIN_GRID_SIZE}, got {grid_size}"
        )));
    }
    let spread = params.angular_spread;
    let cov = match *geometry {
        ArrayGeometry::Ula { antennas, spacing } => {
            hermitian_toeplitz(&ula_first_row(antennas, spacing, params.azimuth, spread, grid_size))
        }
        ArrayGeometry::Ura {
            vertical,
            horizontal,
            spacing_v,
            spacing_h,
        } => {
            let cv = hermitian_toeplitz(&ula_first_row(
                vertical,
                spacing_v,
                params.elevation,
                spread,
                grid_size,
            ));
            let ch = hermitian_toeplitz(&ula_first_row(
                horizontal,
                spacing_h,
                params.azimuth,
                spread,
                grid_size,
            ));
            kron(&cv, &ch)
        }
    };
    Ok(cov)
}

/// Draws `h ~ CN(0, C)`.
pub fn sample_channel<R: Rng + ?Sized>(covariance: &CMatrix, rng: &mut R) -> Result<CVector> {
    Ok(PsdFactor::new(covariance)?.sample(rng))
}
