//! Weighted-MMSE precoding for single-antenna receivers.
//!
//! With the transpose channel model `y_j = h_j^T sum_k v_k s_k + n_j`:
//!
//! ```text
//! u_j = conj(h_j^T v_j) / T_j          T_j = sum_k |h_j^T v_k|^2 + sigma^2
//! w_j = 1 / e_j                        e_j = 1 - |h_j^T v_j|^2 / T_j
//! v_j = (A + mu I)^-1 b_j              A = sum_j w_j |u_j|^2 conj(h_j) h_j^T
//!                                      b_j = w_j conj(u_j) conj(h_j)
//! ```
//!
//! `mu >= 0` is the smallest multiplier meeting `sum_j |v_j|^2 <= rho`.
//! The stochastic variant replaces `A` and `b_j` by running averages over
//! fresh channel draws.

use nalgebra::SymmetricEigen;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, PsdFactor, C64};
use crate::rate::{effective_gains, sum_rate, PrecoderMatrix};

pub const MAX_BRACKET_DOUBLINGS: usize = 60;
const BISECTION_STEPS: usize = 200;

/// Minimizes `sum_j v_j^H A v_j - 2 Re(b_j^H v_j)` subject to the sum power
/// constraint.
pub fn solve_precoders(a: &CMatrix, b: &CMatrix, power: f64) -> Result<CMatrix> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(Error::DimensionMismatch {
            what: "WMMSE statistics size",
            expected: n,
            actual: b.nrows(),
        });
    }
    let eig = SymmetricEigen::new(a.clone());
    let proj = eig.eigenvectors.adjoint() * b;
    let energy: Vec<f64> = proj.row_iter().map(|r| r.norm_squared()).collect();
    let lambda: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0)).collect();
    let total: f64 = energy.iter().sum();
    if !total.is_finite() || lambda.iter().any(|l| !l.is_finite()) {
        return Err(Error::Bisection { doublings: 0 });
    }
    let precoder_power = |mu: f64| -> f64 {
        energy
            .iter()
            .zip(&lambda)
            .map(|(e, l)| {
                if *e == 0.0 {
                    0.0
                } else {
                    e / ((l + mu) * (l + mu))
                }
            })
            .sum()
    };
    let mu = if precoder_power(0.0) <= power {
        0.0
    } else {
        let scale = lambda.iter().copied().fold(0.0, f64::max);
        let mut lo = 0.0;
        let mut hi = if scale > 0.0 { 1e-6 * scale } else { 1e-6 };
        let mut doublings = 0;
        while !(precoder_power(hi) <= power) {
            if doublings == MAX_BRACKET_DOUBLINGS {
                return Err(Error::Bisection { doublings });
            }
            lo = hi;
            hi *= 2.0;
            doublings += 1;
        }
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if precoder_power(mid) <= power {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let mut scaled = proj;
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        let d = lambda[i] + mu;
        if d > 0.0 {
            row.unscale_mut(d);
        } else {
            row.fill(C64::new(0.0, 0.0));
        }
    }
    let mut v = eig.eigenvectors * scaled;
    // guard against round-off on the boundary
    let p = v.norm_squared();
    if p > power {
        v.scale_mut((power / p).sqrt());
    }
    Ok(v)
}

/// Receive coefficients and MSE weights for the current precoders.
fn receivers(channels: &[CVector], v: &CMatrix, noise_variance: f64) -> (Vec<C64>, Vec<f64>) {
    let g = effective_gains(channels, v);
    let mut u = Vec::with_capacity(channels.len());
    let mut w = Vec::with_capacity(channels.len());
    for j in 0..channels.len() {
        let total: f64 = g.row(j).iter().map(|z| z.norm_sqr()).sum::<f64>() + noise_variance;
        let signal = g[(j, j)].norm_sqr();
        u.push(g[(j, j)].conj() / total);
        let mse = (total - signal) / total;
        w.push(1.0 / mse);
    }
    (u, w)
}

/// Adds one channel realization's contribution to `A` and `B`.
fn accumulate(a: &mut CMatrix, b: &mut CMatrix, channels: &[CVector], u: &[C64], w: &[f64], weight: f64) {
    for (j, h) in channels.iter().enumerate() {
        let hc = h.map(|z| z.conj());
        let coeff = weight * w[j] * u[j].norm_sqr();
        a.ger(C64::new(coeff, 0.0), &hc, h, C64::new(1.0, 0.0));
        let bj = hc * (u[j].conj() * (weight * w[j]));
        let mut col = b.column_mut(j);
        col += bj;
    }
}

fn check_channels(channels: &[CVector]) -> Result<usize> {
    let n = channels
        .first()
        .ok_or_else(|| Error::invalid("at least one user is required"))?
        .len();
    for h in channels {
        if h.len() != n {
            return Err(Error::DimensionMismatch {
                what: "channel length",
                expected: n,
                actual: h.len(),
            });
        }
    }
    Ok(n)
}

fn check_scalars(power: f64, noise_variance: f64, max_iters: usize) -> Result<()> {
    if !(power > 0.0 && power.is_finite()) {
        return Err(Error::invalid(format!("transmit power must be positive, got {power}")));
    }
    if !(noise_variance > 0.0 && noise_variance.is_finite()) {
        return Err(Error::invalid(format!("noise variance must be positive, got {noise_variance}")));
    }
    if max_iters == 0 {
        return Err(Error::invalid("iteration cap must be at least 1"));
    }
    Ok(())
}

/// Matched filters `conj(h_j)/|h_j|` with an equal power split.
pub fn matched_filter_init(channels: &[CVector], power: f64) -> CMatrix {
    let n = channels[0].len();
    let share = (power / channels.len() as f64).sqrt();
    let mut v = CMatrix::zeros(n, channels.len());
    for (j, h) in channels.iter().enumerate() {
        let norm = h.norm();
        if norm > 0.0 {
            v.set_column(j, &(h.map(|z| z.conj()) * C64::new(share / norm, 0.0)));
        }
    }
    v
}

#[derive(Debug, Clone)]
pub struct WmmseOutcome {
    pub precoders: PrecoderMatrix,
    /// Sum-rate on the given channels: initial point, then after each iteration.
    pub trace: Vec<f64>,
}

/// Alternating WMMSE on channels treated as exact. Stops after `max_iters`
/// iterations or once an iteration improves the sum-rate by less than `tol`.
pub fn iwmmse(
    channels: &[CVector],
    power: f64,
    noise_variance: f64,
    max_iters: usize,
    tol: f64,
) -> Result<WmmseOutcome> {
    let n = check_channels(channels)?;
    check_scalars(power, noise_variance, max_iters)?;
    let users = channels.len();
    let mut v = matched_filter_init(channels, power);
    let mut trace = vec![sum_rate(channels, &v, noise_variance)];
    for _ in 0..max_iters {
        let (u, w) = receivers(channels, &v, noise_variance);
        let mut a = CMatrix::zeros(n, n);
        let mut b = CMatrix::zeros(n, users);
        accumulate(&mut a, &mut b, channels, &u, &w, 1.0);
        v = solve_precoders(&a, &b, power)?;
        let rate = sum_rate(channels, &v, noise_variance);
        let prev = *trace.last().expect("trace starts nonempty");
        trace.push(rate);
        if rate - prev < tol {
            break;
        }
    }
    Ok(WmmseOutcome {
        precoders: PrecoderMatrix { v, power },
        trace,
    })
}

/// Draws channels `CN(0, C)` for one user.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    covariance: CMatrix,
    factor: PsdFactor,
}

impl ChannelSampler {
    pub fn new(covariance: CMatrix) -> Result<Self> {
        let factor = PsdFactor::new(&covariance)?;
        Ok(Self { covariance, factor })
    }

    pub fn antennas(&self) -> usize {
        self.covariance.nrows()
    }

    pub fn covariance(&self) -> &CMatrix {
        &self.covariance
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> CVector {
        self.factor.sample(rng)
    }

    /// Unit-norm principal eigenvector of the covariance.
    pub fn principal_direction(&self) -> CVector {
        let eig = SymmetricEigen::new(self.covariance.clone());
        let best = eig.eigenvalues.imax();
        eig.eigenvectors.column(best).into_owned()
    }
}

/// Stochastic WMMSE from per-user channel statistics.
///
/// Each iteration draws one channel per user, computes receivers and weights
/// for the current precoders on those draws, folds them into the running
/// averages of `A` and `b_j`, and re-solves the precoders. Initialization is
/// `conj` of each user's principal eigenvector with an equal power split.
pub fn swmmse<R: Rng + ?Sized>(
    samplers: &[ChannelSampler],
    power: f64,
    noise_variance: f64,
    max_iters: usize,
    rng: &mut R,
) -> Result<PrecoderMatrix> {
    let n = samplers
        .first()
        .ok_or_else(|| Error::invalid("at least one user is required"))?
        .antennas();
    if let Some(bad) = samplers.iter().find(|s| s.antennas() != n) {
        return Err(Error::DimensionMismatch {
            what: "sampler size",
            expected: n,
            actual: bad.antennas(),
        });
    }
    check_scalars(power, noise_variance, max_iters)?;
    let users = samplers.len();
    let share = (power / users as f64).sqrt();
    let mut v = CMatrix::zeros(n, users);
    for (j, s) in samplers.iter().enumerate() {
        v.set_column(j, &(s.principal_direction().map(|z| z.conj()) * C64::new(share, 0.0)));
    }
    let mut a = CMatrix::zeros(n, n);
    let mut b = CMatrix::zeros(n, users);
    for i in 1..=max_iters {
        let draws: Vec<CVector> = samplers.iter().map(|s| s.draw(rng)).collect();
        let (u, w) = receivers(&draws, &v, noise_variance);
        // running mean: X_i = (1 - 1/i) X_{i-1} + (1/i) x_i
        let keep = 1.0 - 1.0 / i as f64;
        a.scale_mut(keep);
        b.scale_mut(keep);
        accumulate(&mut a, &mut b, &draws, &u, &w, 1.0 / i as f64);
        v = solve_precoders(&a, &b, power)?;
    }
    Ok(PrecoderMatrix { v, power })
}
