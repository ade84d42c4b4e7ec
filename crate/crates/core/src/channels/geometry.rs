use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Base-station antenna array.
///
/// URA elements are indexed `v * horizontal + h` (horizontal index fastest),
/// which is the ordering every covariance, pilot matrix and dictionary in this
/// crate uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ArrayGeometry {
    Ula {
        antennas: usize,
        #[serde(default = "half_wavelength")]
        spacing: f64,
    },
    Ura {
        vertical: usize,
        horizontal: usize,
        #[serde(default = "one_wavelength")]
        spacing_v: f64,
        #[serde(default = "half_wavelength")]
        spacing_h: f64,
    },
}

fn half_wavelength() -> f64 {
    0.5
}

fn one_wavelength() -> f64 {
    1.0
}

impl ArrayGeometry {
    pub fn ula(antennas: usize) -> Self {
        ArrayGeometry::Ula {
            antennas,
            spacing: 0.5,
        }
    }

    pub fn ura(vertical: usize, horizontal: usize) -> Self {
        ArrayGeometry::Ura {
            vertical,
            horizontal,
            spacing_v: 1.0,
            spacing_h: 0.5,
        }
    }

    pub fn antennas(&self) -> usize {
        match *self {
            ArrayGeometry::Ula { antennas, .. } => antennas,
            ArrayGeometry::Ura {
                vertical,
                horizontal,
                ..
            } => vertical * horizontal,
        }
    }

    pub fn is_ura(&self) -> bool {
        matches!(self, ArrayGeometry::Ura { .. })
    }

    /// `(vertical, horizontal)` element counts; a ULA is `(1, N)`.
    pub fn grid(&self) -> (usize, usize) {
        match *self {
            ArrayGeometry::Ula { antennas, .. } => (1, antennas),
            ArrayGeometry::Ura {
                vertical,
                horizontal,
                ..
            } => (vertical, horizontal),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok_spacing = |s: f64| s.is_finite() && s > 0.0;
        match *self {
            ArrayGeometry::Ula { antennas, spacing } => {
                if antennas == 0 {
                    return Err(Error::invalid("ULA needs at least one antenna"));
                }
                if !ok_spacing(spacing) {
                    return Err(Error::invalid(format!("invalid ULA spacing {spacing}")));
                }
            }
            ArrayGeometry::Ura {
                vertical,
                horizontal,
                spacing_v,
                spacing_h,
            } => {
                if vertical == 0 || horizontal == 0 {
                    return Err(Error::invalid(format!(
                        "URA needs positive dimensions, got {vertical}x{horizontal}"
                    )));
                }
                if !ok_spacing(spacing_v) || !ok_spacing(spacing_h) {
                    return Err(Error::invalid("invalid URA spacing"));
                }
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match *self {
            ArrayGeometry::Ula { antennas, .. } => format!("ula{antennas}"),
            ArrayGeometry::Ura {
                vertical,
                horizontal,
                ..
            } => format!("ura{vertical}x{horizontal}"),
        }
    }
}
