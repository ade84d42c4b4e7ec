use std::f64::consts::PI;

use crate::channels::ArrayGeometry;
use crate::error::{Error, Result};
use crate::linalg::{kron, unitary_dft, CMatrix, CVector, C64};

/// Negative spectrum entries above this magnitude are rejected.
const NEGATIVE_SPECTRUM_TOL: f64 = 1e-12;

/// Fixed DFT dictionary `Q` with `C = Q^H diag(q) Q`.
///
/// ULA: the first `N` columns of the `2N x 2N` unitary DFT. URA:
/// `Q_{N_v} (x) Q_{N_h}` with `Q_T` the first `T` columns of the `2T x 2T`
/// unitary DFT. Both have orthonormal columns (`Q^H Q = I_N`), so a flat
/// spectrum `q = c 1` realizes `c I_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDictionary {
    geometry: ArrayGeometry,
    matrix: CMatrix,
    /// Spectrum grid `(L_v, L_h)`; `L_v = 1` for a ULA.
    grid: (usize, usize),
}

/// `Q^H Q = NORMALIZATION * I_N` for the unitary-DFT based dictionaries.
pub const NORMALIZATION: f64 = 1.0;

fn leading_columns(t: usize) -> CMatrix {
    unitary_dft(2 * t).columns(0, t).clone_owned()
}

impl SpectralDictionary {
    pub fn new(geometry: &ArrayGeometry) -> Result<Self> {
        geometry.validate()?;
        let (n_v, n_h) = geometry.grid();
        let (matrix, grid) = if geometry.is_ura() {
            (kron(&leading_columns(n_v), &leading_columns(n_h)), (2 * n_v, 2 * n_h))
        } else {
            (leading_columns(n_h), (1, 2 * n_h))
        };
        Ok(Self {
            geometry: *geometry,
            matrix,
            grid,
        })
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    pub fn antennas(&self) -> usize {
        self.matrix.ncols()
    }

    /// `2N` for a ULA, `4N` for a URA.
    pub fn spectrum_len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `Q h`.
    pub fn project(&self, h: &CVector) -> CVector {
        &self.matrix * h
    }

    /// `diag(Q S Q^H)`, the spectrum seen by a (sample) covariance `S`.
    pub fn spectrum_of(&self, s: &CMatrix) -> Vec<f64> {
        let qs = &self.matrix * s;
        (0..self.spectrum_len())
            .map(|m| {
                qs.row(m)
                    .iter()
                    .zip(self.matrix.row(m).iter())
                    .map(|(a, b)| (a * b.conj()).re)
                    .sum::<f64>()
            })
            .collect()
    }

    pub fn check_spectrum(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.spectrum_len() {
            return Err(Error::DimensionMismatch {
                what: "spectrum length",
                expected: self.spectrum_len(),
                actual: q.len(),
            });
        }
        if let Some(bad) = q.iter().find(|v| !(**v >= -NEGATIVE_SPECTRUM_TOL) || !v.is_finite()) {
            return Err(Error::invalid(format!("invalid spectrum entry {bad}")));
        }
        Ok(())
    }

    /// `Q^H diag(q) Q`, assembled from its lag values:
    /// `C[a, b] = (1 / L) sum_m q_m exp(j 2 pi m (a - b) / L)` per dimension.
    pub fn realize(&self, q: &[f64]) -> Result<CMatrix> {
        self.check_spectrum(q)?;
        let (n_v, n_h) = self.geometry.grid();
        let (l_v, l_h) = self.grid;
        let lags_h = 2 * n_h - 1;
        let lags_v = 2 * n_v - 1;
        let twiddle = |m: usize, d: isize, l: usize| {
            let e = (m as isize * d).rem_euclid(l as isize);
            C64::from_polar(1.0, 2.0 * PI * e as f64 / l as f64)
        };
        // inner[mv][dh + n_h - 1] = sum_mh q[mv, mh] e^{j 2 pi mh dh / L_h}
        let inner: Vec<Vec<C64>> = (0..l_v)
            .map(|mv| {
                (0..lags_h)
                    .map(|i| {
                        let d = i as isize - (n_h as isize - 1);
                        (0..l_h)
                            .map(|mh| twiddle(mh, d, l_h) * q[mv * l_h + mh].max(0.0))
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let norm = 1.0 / (l_v * l_h) as f64;
        let lag: Vec<Vec<C64>> = (0..lags_v)
            .map(|iv| {
                let d = iv as isize - (n_v as isize - 1);
                (0..lags_h)
                    .map(|ih| {
                        (0..l_v)
                            .map(|mv| twiddle(mv, d, l_v) * inner[mv][ih])
                            .sum::<C64>()
                            * norm
                    })
                    .collect()
            })
            .collect();
        let n = n_v * n_h;
        Ok(CMatrix::from_fn(n, n, |a, b| {
            let dv = (a / n_h) as isize - (b / n_h) as isize + n_v as isize - 1;
            let dh = (a % n_h) as isize - (b % n_h) as isize + n_h as isize - 1;
            lag[dv as usize][dh as usize]
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_are_orthonormal() {
        for g in [ArrayGeometry::ula(6), ArrayGeometry::ura(2, 3)] {
            let d = SpectralDictionary::new(&g).unwrap();
            let gram = d.matrix().adjoint() * d.matrix();
            let n = g.antennas();
            assert!((gram - CMatrix::identity(n, n) * C64::from(NORMALIZATION)).camax() < 1e-12);
        }
    }

    #[test]
    fn flat_spectrum_gives_scaled_identity() {
        let d = SpectralDictionary::new(&ArrayGeometry::ula(5)).unwrap();
        let c = d.realize(&[2.5; 10]).unwrap();
        assert!((c - CMatrix::identity(5, 5) * C64::from(2.5)).camax() < 1e-12);
    }

    #[test]
    fn one_hot_spectrum_is_rank_one_outer_product() {
        let d = SpectralDictionary::new(&ArrayGeometry::ula(4)).unwrap();
        let mut q = vec![0.0; 8];
        q[3] = 1.0;
        let c = d.realize(&q).unwrap();
        let row = d.matrix().row(3).transpose();
        let expected = row.conjugate() * row.transpose();
        assert!((c - expected).camax() < 1e-14);
    }

    #[test]
    fn negative_spectrum_rejected() {
        let d = SpectralDictionary::new(&ArrayGeometry::ula(2)).unwrap();
        assert!(d.realize(&[1.0, -0.1, 1.0, 1.0]).is_err());
        assert!(d.realize(&[1.0, 1.0]).is_err());
    }
}
