//! First-row parametrization of (block-)Toeplitz Hermitian covariances.

use crate::channels::ArrayGeometry;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64};

/// `c = C[0, :]`.
pub fn first_row(covariance: &CMatrix) -> CVector {
    covariance.row(0).transpose()
}

/// Rebuilds a structured covariance from its first row.
///
/// ULA: Hermitian Toeplitz completion, exact for every Toeplitz input.
///
/// URA: the first row holds the lags `r(dv, dh)` with `dv, dh >= 0`; Hermitian
/// symmetry supplies the negated pairs. Mixed-sign lags are not contained in
/// the first row of a general block-Toeplitz matrix, so they are completed
/// under separability, `r(dv, -dh) = r(dv, 0) conj(r(0, dh)) / r(0, 0)`, which
/// is exact for Kronecker-structured covariances.
pub fn complete_from_first_row(geometry: &ArrayGeometry, row: &CVector) -> Result<CMatrix> {
    let n = geometry.antennas();
    if row.len() != n {
        return Err(Error::DimensionMismatch {
            what: "first-row length",
            expected: n,
            actual: row.len(),
        });
    }
    let (n_v, n_h) = geometry.grid();
    if n_v == 1 {
        return Ok(crate::channels::hermitian_toeplitz(row));
    }
    let r00 = row[0].re;
    let lag = |dv: isize, dh: isize| -> C64 {
        let (av, ah) = (dv.unsigned_abs(), dh.unsigned_abs());
        let direct = |v: usize, h: usize| row[v * n_h + h];
        match (dv >= 0, dh >= 0) {
            (true, true) => direct(av, ah),
            (false, false) => direct(av, ah).conj(),
            (true, false) => {
                if r00 == 0.0 {
                    C64::new(0.0, 0.0)
                } else {
                    direct(av, 0) * direct(0, ah).conj() / r00
                }
            }
            (false, true) => {
                if r00 == 0.0 {
                    C64::new(0.0, 0.0)
                } else {
                    (direct(av, 0) * direct(0, ah).conj() / r00).conj()
                }
            }
        }
    };
    Ok(CMatrix::from_fn(n, n, |a, b| {
        let (v1, h1) = ((a / n_h) as isize, (a % n_h) as isize);
        let (v2, h2) = ((b / n_h) as isize, (b % n_h) as isize);
        lag(v2 - v1, h2 - h1)
    }))
}
