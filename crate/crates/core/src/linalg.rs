//! Complex linear-algebra helpers shared by the channel, prior and precoder
//! modules.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Unitary `n x n` DFT matrix, `F[k, m] = exp(-j 2 pi k m / n) / sqrt(n)`.
pub fn unitary_dft(n: usize) -> CMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |k, m| {
        // reduce the exponent first so large k*m keep full precision
        let e = (k * m) % n;
        C64::from_polar(scale, -2.0 * PI * e as f64 / n as f64)
    })
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |r, c| {
        a[(r / br, c / bc)] * b[(r % br, c % bc)]
    })
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    CVector::from_fn(a.len() * b.len(), |i, _| a[i / b.len()] * b[i % b.len()])
}

/// Largest absolute entry of `m - m^H`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest deviation between entries on the same diagonal.
pub fn toeplitz_deviation(m: &CMatrix) -> f64 {
    let (r, c) = m.shape();
    let mut worst = 0.0f64;
    for i in 0..r.saturating_sub(1) {
        for j in 0..c.saturating_sub(1) {
            worst = worst.max((m[(i, j)] - m[(i + 1, j + 1)]).norm());
        }
    }
    worst
}

/// Deviation from block-Toeplitz-with-Toeplitz-blocks structure under the
/// `(v, h)` ordering `index = v * blocks_h + h`.
pub fn block_toeplitz_deviation(m: &CMatrix, n_v: usize, n_h: usize) -> f64 {
    let mut worst = 0.0f64;
    for v1 in 0..n_v {
        for v2 in 0..n_v {
            let block = m.view((v1 * n_h, v2 * n_h), (n_h, n_h)).clone_owned();
            worst = worst.max(toeplitz_deviation(&block));
            if v1 + 1 < n_v && v2 + 1 < n_v {
                let next = m.view(((v1 + 1) * n_h, (v2 + 1) * n_h), (n_h, n_h));
                worst = worst.max((block - next).camax());
            }
        }
    }
    worst
}

pub fn eigenvalues_hermitian(m: &CMatrix) -> DVector<f64> {
    SymmetricEigen::new(m.clone()).eigenvalues
}

/// Draws a standard circularly-symmetric complex normal scalar.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_normal_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    CVector::from_fn(n, |_, _| complex_normal(rng))
}

/// Square-root factor `L` with `C = L L^H` for a Hermitian PSD matrix.
///
/// A semidefinite Cholesky is tried first; pivots below a relative threshold
/// are treated as zero, so rank-deficient covariances factor without
/// regularization. If a clearly negative pivot appears the factor is taken
/// from an eigendecomposition instead, which also decides whether the input
/// is PSD at all.
#[derive(Debug, Clone)]
pub struct PsdFactor {
    factor: CMatrix,
}

const PSD_NEGATIVE_TOL: f64 = 1e-8;
const PIVOT_ZERO_TOL: f64 = 1e-12;

impl PsdFactor {
    pub fn new(c: &CMatrix) -> Result<Self> {
        if !c.is_square() {
            return Err(Error::DimensionMismatch {
                what: "covariance columns",
                expected: c.nrows(),
                actual: c.ncols(),
            });
        }
        let scale = c.norm();
        let herm = hermitian_deviation(c);
        if herm > PSD_NEGATIVE_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::NotHermitian { deviation: herm });
        }
        match semidefinite_cholesky(c, scale) {
            Some(factor) => Ok(Self { factor }),
            None => Self::from_eigen(c, scale),
        }
    }

    fn from_eigen(c: &CMatrix, scale: f64) -> Result<Self> {
        let eig = SymmetricEigen::new(c.clone());
        let min = eig.eigenvalues.min();
        if min < -PSD_NEGATIVE_TOL * scale {
            return Err(Error::NotPsd { eigenvalue: min });
        }
        let mut factor = eig.eigenvectors;
        for (j, lambda) in eig.eigenvalues.iter().enumerate() {
            let s = lambda.max(0.0).sqrt();
            factor.column_mut(j).scale_mut(s);
        }
        Ok(Self { factor })
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.factor
    }

    /// Draws `L z` with `z ~ CN(0, I)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CVector {
        let z = complex_normal_vector(self.factor.ncols(), rng);
        &self.factor * z
    }
}

/// Outer-product Cholesky that skips (near-)zero pivots. Returns `None` when a
/// pivot is clearly negative.
fn semidefinite_cholesky(c: &CMatrix, scale: f64) -> Option<CMatrix> {
    let n = c.nrows();
    let mut a = c.clone();
    let mut l = CMatrix::zeros(n, n);
    let max_diag = (0..n).map(|i| c[(i, i)].re).fold(0.0f64, f64::max);
    let zero_tol = PIVOT_ZERO_TOL * max_diag;
    for k in 0..n {
        let d = a[(k, k)].re;
        if d < -PSD_NEGATIVE_TOL * scale {
            return None;
        }
        if d <= zero_tol {
            continue;
        }
        let root = d.sqrt();
        for i in k..n {
            l[(i, k)] = a[(i, k)] / root;
        }
        for j in (k + 1)..n {
            let ljc = l[(j, k)].conj();
            if ljc == C64::new(0.0, 0.0) {
                continue;
            }
            for i in (k + 1)..n {
                let lik = l[(i, k)];
                a[(i, j)] -= lik * ljc;
            }
        }
    }
    Some(l)
}

/// Lower Cholesky factor of a Hermitian positive definite matrix together with
/// `ln det`.
pub fn cholesky_lower(m: &CMatrix) -> Result<(CMatrix, f64)> {
    let chol = nalgebra::Cholesky::new(m.clone())
        .ok_or_else(|| Error::Factorization("matrix is not positive definite".into()))?;
    let l = chol.unpack();
    let log_det = 2.0 * (0..l.nrows()).map(|i| l[(i, i)].re.ln()).sum::<f64>();
    Ok((l, log_det))
}

/// Solves `L z = y` for lower-triangular `L`.
pub fn forward_substitute(l: &CMatrix, y: &CVector) -> CVector {
    let n = l.nrows();
    let mut z = y.clone();
    for i in 0..n {
        let mut acc = z[i];
        for k in 0..i {
            acc -= l[(i, k)] * z[k];
        }
        z[i] = acc / l[(i, i)];
    }
    z
}

/// Solves `L^H w = z` for lower-triangular `L`.
pub fn adjoint_back_substitute(l: &CMatrix, z: &CVector) -> CVector {
    let n = l.nrows();
    let mut w = z.clone();
    for i in (0..n).rev() {
        let mut acc = w[i];
        for k in (i + 1)..n {
            acc -= l[(k, i)].conj() * w[k];
        }
        w[i] = acc / l[(i, i)].conj();
    }
    w
}

/// Mixes a base seed with an index into an independent child seed
/// (splitmix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn seeded_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

/// Natural-log log-sum-exp normalization in place; returns the log-sum.
/// Entries equal to `-inf` are allowed as long as at least one is finite.
pub fn normalize_log_weights(logw: &mut [f64]) -> f64 {
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        let u = 1.0 / logw.len() as f64;
        logw.iter_mut().for_each(|w| *w = u);
        return max;
    }
    let sum: f64 = logw.iter().map(|w| (w - max).exp()).sum();
    let lse = max + sum.ln();
    logw.iter_mut().for_each(|w| *w = (*w - lse).exp());
    lse
}

/// Index of the maximum, ties resolved toward the smallest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
