use crate::error::{Error, Result};
use crate::linalg::{CVector, C64};
use crate::pilots::PilotMatrix;

/// Minimum-norm least-squares estimate `P^H (P P^H)^-1 y`.
pub fn ls_estimate(pilots: &PilotMatrix, y: &CVector) -> Result<CVector> {
    let p = &pilots.matrix;
    if y.len() != p.nrows() {
        return Err(Error::DimensionMismatch {
            what: "observation length",
            expected: p.nrows(),
            actual: y.len(),
        });
    }
    let gram = p * p.adjoint();
    let chol = nalgebra::Cholesky::new(gram)
        .ok_or_else(|| Error::Factorization("pilot rows are linearly dependent or zero".into()))?;
    let z = chol.solve(y);
    let mut h = p.adjoint() * z;
    if h.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        h.fill(C64::new(0.0, 0.0));
        return Err(Error::invalid("observation contains non-finite entries"));
    }
    Ok(h)
}
