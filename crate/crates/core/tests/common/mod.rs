#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use statprec::gmm::{GmmModel, SpectralDictionary};
use statprec::gnn::{scenario_gradient, Activation, EdgeFeatures, EdgeLayer, GnnModel, TrainingSample};
use statprec::linalg::{seeded_rng, CVector};

/// Central differences with step 1e-5 on every coordinate whose analytic
/// gradient exceeds 1e-8; returns (checked, within 1e-4 relative).
pub fn fd_agreement(model: &GnnModel, rows: &[CVector], hs: &[CVector], nv: f64) -> (usize, usize) {
    let sample = TrainingSample {
        first_rows: rows,
        channels: hs,
        noise_variance: nv,
    };
    let loss = |m: &GnnModel| -scenario_gradient(m, &sample, 1.0).unwrap().0;
    let analytic = scenario_gradient(model, &sample, 1.0).unwrap().1.parameters();
    let base = model.parameters();
    let step = 1e-5;
    let (mut checked, mut good) = (0, 0);
    for i in 0..base.len() {
        if analytic[i].abs() <= 1e-8 {
            continue;
        }
        let mut m = model.clone();
        let mut p = base.clone();
        p[i] += step;
        m.set_parameters(&p).unwrap();
        let up = loss(&m);
        p[i] -= 2.0 * step;
        m.set_parameters(&p).unwrap();
        let down = loss(&m);
        let fd = (up - down) / (2.0 * step);
        checked += 1;
        if (fd - analytic[i]).abs() / analytic[i].abs().max(fd.abs()) < 1e-4 {
            good += 1;
        }
    }
    (checked, good)
}

pub fn random_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_layer(output: usize, input: usize, activation: Activation, seed: u64) -> EdgeLayer {
    let mut rng = seeded_rng(seed);
    let mut layer = EdgeLayer::zeros(output, input, activation);
    for m in [&mut layer.s, &mut layer.t, &mut layer.q, &mut layer.k, &mut layer.u] {
        *m = random_matrix(output, input, &mut rng);
    }
    layer
}

pub fn random_features(antennas: usize, users: usize, dim: usize, seed: u64) -> EdgeFeatures {
    let mut rng = seeded_rng(seed);
    EdgeFeatures::new(antennas, users, random_matrix(antennas * users, dim, &mut rng)).unwrap()
}

/// Edge-layer update evaluated with explicit loops over every edge.
pub fn naive_layer(layer: &EdgeLayer, f: &EdgeFeatures, alpha: f64, beta: f64) -> EdgeFeatures {
    let (n, users, mi, mo) = (f.antennas(), f.users(), layer.input_dim(), layer.output_dim());
    let lin = |w: &DMatrix<f64>, a: usize, j: usize, r: usize| -> f64 { (0..mi).map(|c| w[(r, c)] * f.get(a, j, c)).sum() };
    let mut out = EdgeFeatures::zeros(n, users, mo);
    for a in 0..n {
        for j in 0..users {
            for r in 0..mo {
                let mut v = lin(&layer.s, a, j, r);
                for i in (0..n).filter(|&i| i != a) {
                    v += alpha * lin(&layer.t, i, j, r);
                }
                for k in (0..users).filter(|&k| k != j) {
                    let att: f64 = (0..n).map(|b| lin(&layer.q, b, j, r) * lin(&layer.k, b, k, r)).sum::<f64>() / n as f64;
                    v += beta * att * lin(&layer.u, a, k, r);
                }
                out.set(a, j, r, layer.activation.apply(v));
            }
        }
    }
    out
}

/// Mixture with random weights and log-uniform spectra over four decades.
pub fn random_gmm<R: Rng>(dictionary: &SpectralDictionary, components: usize, rng: &mut R) -> GmmModel {
    let mut weights: Vec<f64> = (0..components).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let len = dictionary.spectrum_len();
    let spectra = (0..components)
        .map(|_| (0..len).map(|_| 10f64.powf(rng.random_range(-3.0..1.0))).collect())
        .collect();
    GmmModel::new(dictionary.clone(), weights, spectra, 1e-6).unwrap()
}
