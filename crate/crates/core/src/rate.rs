//! Downlink sum-rate with single-antenna receivers.
//!
//! `R = sum_j log2(1 + |h_j^T v_j|^2 / (sum_{j' != j} |h_j^T v_j'|^2 + sigma^2))`
//! with the plain transpose.

use std::f64::consts::LN_2;

use crate::linalg::{CMatrix, CVector, C64};

/// Precoders `v_j` as the columns of an `N x J` matrix, designed for a sum
/// power budget `power`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderMatrix {
    pub v: CMatrix,
    pub power: f64,
}

impl PrecoderMatrix {
    pub fn users(&self) -> usize {
        self.v.ncols()
    }

    /// `sum_j |v_j|^2`.
    pub fn total_power(&self) -> f64 {
        self.v.norm_squared()
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        self.v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) && self.total_power() <= self.power + tol
    }
}

/// Effective gains `g[j, j'] = h_j^T v_j'`.
pub fn effective_gains(channels: &[CVector], precoders: &CMatrix) -> CMatrix {
    let j = channels.len();
    CMatrix::from_fn(j, precoders.ncols(), |r, c| {
        channels[r]
            .iter()
            .zip(precoders.column(c).iter())
            .map(|(h, v)| h * v)
            .sum()
    })
}

/// Per-user rates in bits per channel use.
pub fn user_rates(channels: &[CVector], precoders: &CMatrix, noise_variance: f64) -> Vec<f64> {
    let g = effective_gains(channels, precoders);
    (0..channels.len())
        .map(|j| {
            let signal = g[(j, j)].norm_sqr();
            let total: f64 = g.row(j).iter().map(|z| z.norm_sqr()).sum::<f64>() + noise_variance;
            let interference = total - signal;
            (signal / interference).ln_1p() / LN_2
        })
        .collect()
}

pub fn sum_rate(channels: &[CVector], precoders: &CMatrix, noise_variance: f64) -> f64 {
    user_rates(channels, precoders, noise_variance).iter().sum()
}

/// Sum-rate and its gradient with respect to the precoders.
///
/// The gradient is returned as `G[n, j] = dR/dRe(v_nj) + i dR/dIm(v_nj)`.
pub fn sum_rate_with_gradient(
    channels: &[CVector],
    precoders: &CMatrix,
    noise_variance: f64,
) -> (f64, CMatrix) {
    let users = channels.len();
    let g = effective_gains(channels, precoders);
    let mut rate = 0.0;
    // dR/dg as a complex number: 2 (dR/d|g|^2) g
    let mut dg = CMatrix::zeros(users, precoders.ncols());
    for j in 0..users {
        let signal = g[(j, j)].norm_sqr();
        let total: f64 = g.row(j).iter().map(|z| z.norm_sqr()).sum::<f64>() + noise_variance;
        let interference = total - signal;
        rate += (signal / interference).ln_1p() / LN_2;
        for jp in 0..precoders.ncols() {
            let mut c = 1.0 / total;
            if jp != j {
                c -= 1.0 / interference;
            }
            dg[(j, jp)] = g[(j, jp)] * (2.0 * c / LN_2);
        }
    }
    let n = precoders.nrows();
    let mut grad = CMatrix::zeros(n, precoders.ncols());
    for jp in 0..precoders.ncols() {
        for (j, h) in channels.iter().enumerate() {
            let d = dg[(j, jp)];
            if d == C64::new(0.0, 0.0) {
                continue;
            }
            for i in 0..n {
                grad[(i, jp)] += h[i].conj() * d;
            }
        }
    }
    (rate, grad)
}

/// Single-user capacity bound `J log2(1 + rho max_j |h_j|^2 / sigma^2)`.
pub fn rate_upper_bound(channels: &[CVector], power: f64, noise_variance: f64) -> f64 {
    let best = channels.iter().map(|h| h.norm_squared()).fold(0.0, f64::max);
    channels.len() as f64 * (1.0 + power * best / noise_variance).log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_normal, seeded_rng};

    fn unit(n: usize, i: usize) -> CVector {
        CVector::from_fn(n, |r, _| if r == i { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
    }

    #[test]
    fn single_user_unit_gain_is_one_bit() {
        let h = unit(3, 0);
        let v = CMatrix::from_columns(&[unit(3, 0)]);
        assert!((sum_rate(&[h], &v, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_precoder_gives_zero_rate() {
        let mut rng = seeded_rng(1);
        let hs: Vec<CVector> = (0..3).map(|_| CVector::from_fn(4, |_, _| complex_normal(&mut rng))).collect();
        assert_eq!(sum_rate(&hs, &CMatrix::zeros(4, 3), 0.5), 0.0);
    }

    #[test]
    fn orthogonal_users_add_up() {
        let s = 3.0f64.sqrt();
        let hs = vec![unit(2, 0), unit(2, 1)];
        let v = CMatrix::from_columns(&[unit(2, 0) * C64::new(s, 0.0), unit(2, 1) * C64::new(0.0, s)]);
        assert!((sum_rate(&hs, &v, 1.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn transpose_not_hermitian() {
        let h = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        let v = CMatrix::from_column_slice(2, 1, &[C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        // h^T v = 1 - 1 = 0, h^H v = 2
        assert!(sum_rate(&[h], &v, 1.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = seeded_rng(7);
        let hs: Vec<CVector> = (0..3).map(|_| CVector::from_fn(4, |_, _| complex_normal(&mut rng))).collect();
        let v = CMatrix::from_fn(4, 3, |_, _| complex_normal(&mut rng));
        let (_, g) = sum_rate_with_gradient(&hs, &v, 0.3);
        let eps = 1e-6;
        for i in 0..4 {
            for j in 0..3 {
                for (part, dir) in [(0, C64::new(eps, 0.0)), (1, C64::new(0.0, eps))] {
                    let mut p = v.clone();
                    p[(i, j)] += dir;
                    let mut m = v.clone();
                    m[(i, j)] -= dir;
                    let fd = (sum_rate(&hs, &p, 0.3) - sum_rate(&hs, &m, 0.3)) / (2.0 * eps);
                    let an = if part == 0 { g[(i, j)].re } else { g[(i, j)].im };
                    assert!((fd - an).abs() < 1e-6 * (1.0 + an.abs()), "{fd} vs {an}");
                }
            }
        }
    }
}
