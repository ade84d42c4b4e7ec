use std::f64::consts::PI;

use crate::channels::ArrayGeometry;
use crate::error::{Error, Result};
use crate::linalg::{kron_vec, CVector, C64};

/// `K = 2^B` unit-norm DFT codewords.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub codewords: Vec<CVector>,
    pub geometry: ArrayGeometry,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn codeword(&self, k: usize) -> &CVector {
        &self.codewords[k]
    }
}

/// `w_k[n] = exp(-j 2 pi n k / K) / sqrt(N)` for `k < K`.
fn dft_codewords(antennas: usize, size: usize) -> Vec<CVector> {
    let scale = 1.0 / (antennas as f64).sqrt();
    (0..size)
        .map(|k| {
            CVector::from_fn(antennas, |n, _| {
                let e = (n * k) % size;
                C64::from_polar(scale, -2.0 * PI * e as f64 / size as f64)
            })
        })
        .collect()
}

/// Bits given to the vertical dimension of a URA codebook.
pub fn ura_bit_split(n_v: usize, n_h: usize, bits: u32) -> Result<(u32, u32)> {
    let n = (n_v * n_h) as f64;
    if n_v * n_h < 2 {
        return Err(Error::invalid("URA codebook needs at least two antennas"));
    }
    let b_v = (bits as f64 * (n_v as f64).log2() / n.log2()).floor() as u32;
    Ok((b_v, bits - b_v))
}

/// DFT codebook for a ULA or the Kronecker 2D-DFT codebook for a URA
/// (index `k = k_v K_h + k_h`).
pub fn build_dft_codebook(geometry: &ArrayGeometry, bits: u32) -> Result<Codebook> {
    geometry.validate()?;
    if bits > 24 {
        return Err(Error::invalid(format!("{bits} feedback bits is beyond any supported codebook")));
    }
    let codewords = match *geometry {
        ArrayGeometry::Ula { antennas, .. } => dft_codewords(antennas, 1 << bits),
        ArrayGeometry::Ura {
            vertical, horizontal, ..
        } => {
            let (b_v, b_h) = ura_bit_split(vertical, horizontal, bits)?;
            let cv = dft_codewords(vertical, 1 << b_v);
            let ch = dft_codewords(horizontal, 1 << b_h);
            cv.iter()
                .flat_map(|wv| ch.iter().map(move |wh| kron_vec(wv, wh)))
                .collect()
        }
    };
    Ok(Codebook {
        codewords,
        geometry: *geometry,
    })
}

/// `argmax_k |w_k^H h|`, smallest index on ties.
pub fn dft_feedback(estimate: &CVector, codebook: &Codebook) -> Result<usize> {
    let n = codebook.codewords[0].len();
    if estimate.len() != n {
        return Err(Error::DimensionMismatch {
            what: "channel estimate length",
            expected: n,
            actual: estimate.len(),
        });
    }
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (k, w) in codebook.codewords.iter().enumerate() {
        let c = w.dotc(estimate).norm();
        if c > best_val {
            best = k;
            best_val = c;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_normal_vector, seeded_rng, unitary_dft};

    #[test]
    fn full_resolution_is_the_unitary_dft() {
        let cb = build_dft_codebook(&ArrayGeometry::ula(8), 3).unwrap();
        let f = unitary_dft(8);
        for k in 0..8 {
            assert!((cb.codeword(k) - f.column(k)).norm() < 1e-12);
        }
    }

    #[test]
    fn codewords_are_unit_norm() {
        for g in [ArrayGeometry::ula(64), ArrayGeometry::ura(4, 16)] {
            let cb = build_dft_codebook(&g, 6).unwrap();
            assert_eq!(cb.len(), 64);
            assert!(cb.codewords.iter().all(|w| (w.norm() - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn ura_split_is_proportional() {
        assert_eq!(ura_bit_split(4, 16, 6).unwrap(), (2, 4));
        assert_eq!(ura_bit_split(4, 4, 5).unwrap(), (2, 3));
    }

    #[test]
    fn feedback_is_scale_invariant() {
        let cb = build_dft_codebook(&ArrayGeometry::ula(16), 4).unwrap();
        assert_eq!(dft_feedback(cb.codeword(5), &cb).unwrap(), 5);
        let scaled = cb.codeword(5) * C64::new(-0.3, 2.0);
        assert_eq!(dft_feedback(&scaled, &cb).unwrap(), 5);
    }

    #[test]
    fn feedback_matches_brute_force() {
        let mut rng = seeded_rng(2);
        let cb = build_dft_codebook(&ArrayGeometry::ula(8), 5).unwrap();
        for _ in 0..50 {
            let h = complex_normal_vector(8, &mut rng);
            let scores: Vec<f64> = cb
                .codewords
                .iter()
                .map(|w| {
                    let mut acc = C64::new(0.0, 0.0);
                    for n in 0..8 {
                        acc += w[n].conj() * h[n];
                    }
                    acc.norm()
                })
                .collect();
            assert_eq!(dft_feedback(&h, &cb).unwrap(), crate::linalg::argmax(&scores));
        }
    }
}
