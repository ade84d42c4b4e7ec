mod common;

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use statprec::channels::{cluster_covariance, ArrayGeometry, ClusterParameters, DEFAULT_GRID_SIZE};
use statprec::gmm::{
    complete_from_first_row, feedback_index_obs, first_row, fit_em, gmm_channel_estimate, resume_em,
    responsibilities_obs, EmConfig, GmmModel, ObservationCache, SpectralDictionary,
};
use statprec::linalg::{block_toeplitz_deviation, seeded_rng, CMatrix, CVector, PsdFactor, C64};
use statprec::pilots::{build_pilot_matrix, observe};

fn rel_frobenius(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / b.norm()
}

fn sample_covariance(samples: &[CVector]) -> CMatrix {
    let n = samples[0].len();
    let mut s = CMatrix::zeros(n, n);
    for h in samples {
        s += h * h.adjoint();
    }
    s.unscale(samples.len() as f64)
}

/// Composite Simpson rule for the truncated Laplacian first row on
/// `[-pi/2, pi/2]`, split at the cluster center.
fn quadrature_first_row(antennas: usize, spacing: f64, center: f64, spread: f64, nodes: usize) -> Vec<C64> {
    let density = |t: f64| (-SQRT_2 * (t - center).abs() / spread).exp();
    let simpson = |f: &dyn Fn(f64) -> C64, a: f64, b: f64| -> C64 {
        let h = (b - a) / nodes as f64;
        let mut acc = f(a) + f(b);
        for i in 1..nodes {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += f(a + i as f64 * h) * w;
        }
        acc * (h / 3.0)
    };
    let integral = |f: &dyn Fn(f64) -> C64| simpson(f, -FRAC_PI_2, center) + simpson(f, center, FRAC_PI_2);
    let mass = integral(&|t| C64::new(density(t), 0.0)).re;
    (0..antennas)
        .map(|d| {
            integral(&|t| C64::from_polar(density(t), -2.0 * PI * spacing * d as f64 * t.sin())) / mass
        })
        .collect()
}

#[test]
fn broadside_cluster_has_real_first_row() {
    for n in [1, 4, 16, 64] {
        let c = cluster_covariance(&ArrayGeometry::ula(n), &ClusterParameters::new(0.0, 2f64.to_radians()), DEFAULT_GRID_SIZE)
            .unwrap();
        assert!((c[(0, 0)].re - 1.0).abs() < 1e-12);
        for d in 0..n {
            assert!(c[(0, d)].im.abs() < 1e-12, "N={n} d={d}: {}", c[(0, d)]);
        }
    }
}

#[test]
fn grid_covariance_matches_quadrature() {
    let geometry = ArrayGeometry::ula(16);
    for (center_deg, spread_deg) in [(0.0, 2.0), (23.0, 2.0), (-47.0, 5.0), (10.0, 15.0)] {
        let center = f64::to_radians(center_deg);
        let spread = f64::to_radians(spread_deg);
        let oracle = quadrature_first_row(16, 0.5, center, spread, 100_000);
        let c = cluster_covariance(&geometry, &ClusterParameters::new(center, spread), 200_000).unwrap();
        for (d, o) in oracle.iter().enumerate() {
            assert!((c[(0, d)] - o).norm() < 1e-4, "({center_deg}, {spread_deg}) lag {d}: {} vs {o}", c[(0, d)]);
        }
        let coarse = cluster_covariance(&geometry, &ClusterParameters::new(center, spread), DEFAULT_GRID_SIZE).unwrap();
        let row = CVector::from_vec(oracle);
        let err = (first_row(&coarse) - &row).norm() / row.norm();
        assert!(err < 1e-2, "default grid vs quadrature {err}");
    }
}

#[test]
fn sample_covariance_converges() {
    let mut rng = seeded_rng(3);
    let c = cluster_covariance(&ArrayGeometry::ula(8), &ClusterParameters::new(0.3, 0.2), DEFAULT_GRID_SIZE).unwrap();
    let factor = PsdFactor::new(&c).unwrap();
    let samples: Vec<CVector> = (0..100_000).map(|_| factor.sample(&mut rng)).collect();
    assert!(rel_frobenius(&sample_covariance(&samples), &c) < 0.05);

    let identity = CMatrix::identity(4, 4);
    let factor = PsdFactor::new(&identity).unwrap();
    let mean_energy = (0..100_000).map(|_| factor.sample(&mut rng).norm_squared()).sum::<f64>() / 1e5;
    assert!((mean_energy - 4.0).abs() < 0.02 * 4.0);
}

#[test]
fn rank_one_covariance_gives_collinear_samples() {
    let c = cluster_covariance(&ArrayGeometry::ula(16), &ClusterParameters::new(0.4, 1e-6), DEFAULT_GRID_SIZE).unwrap();
    let a = c.column(0).clone_owned();
    let factor = PsdFactor::new(&c).unwrap();
    let mut rng = seeded_rng(5);
    for _ in 0..100 {
        let h = factor.sample(&mut rng);
        let inner = a.dotc(&h).norm_sqr();
        assert!(inner >= (1.0 - 1e-10) * a.norm_squared() * h.norm_squared());
    }
}

#[test]
fn ura_covariance_is_rebuilt_from_first_row() {
    let geometry = ArrayGeometry::ura(4, 8);
    let params = ClusterParameters {
        azimuth: 0.5,
        elevation: -0.1,
        angular_spread: 0.05,
    };
    let c = cluster_covariance(&geometry, &params, DEFAULT_GRID_SIZE).unwrap();
    assert!(block_toeplitz_deviation(&c, 4, 8) < 1e-10);
    assert!((c.trace().re - 32.0).abs() < 1e-10);
    let rebuilt = complete_from_first_row(&geometry, &first_row(&c)).unwrap();
    assert!((rebuilt - &c).camax() < 1e-10);
}

/// `Q^H diag(q) Q` with `Q[m, n] = exp(-j 2 pi m n / 2N) / sqrt(2N)`, summed
/// entry by entry.
fn dense_ula_realization(q: &[f64], n: usize) -> CMatrix {
    let l = 2 * n;
    let qmat = |m: usize, c: usize| C64::from_polar(1.0 / (l as f64).sqrt(), -2.0 * PI * (m * c) as f64 / l as f64);
    CMatrix::from_fn(n, n, |a, b| (0..l).map(|m| qmat(m, a).conj() * q[m] * qmat(m, b)).sum())
}

#[test]
fn realization_matches_dense_product() {
    let mut rng = seeded_rng(7);
    for n in [2, 8, 16] {
        let dict = SpectralDictionary::new(&ArrayGeometry::ula(n)).unwrap();
        let q: Vec<f64> = (0..2 * n).map(|_| rand::Rng::random_range(&mut rng, 0.0..3.0)).collect();
        let c = dict.realize(&q).unwrap();
        assert!((c - dense_ula_realization(&q, n)).camax() < 1e-12);
    }
}

fn two_component_model(n: usize, weights: [f64; 2], levels: [f64; 2]) -> GmmModel {
    let dict = SpectralDictionary::new(&ArrayGeometry::ula(n)).unwrap();
    let spectra = levels.iter().map(|&c| vec![c; 2 * n]).collect();
    GmmModel::new(dict, weights.to_vec(), spectra, 1e-9).unwrap()
}

#[test]
fn two_component_responsibility_at_origin() {
    let model = two_component_model(2, [0.5, 0.5], [2.0, 1.0]);
    let pilots = build_pilot_matrix(&ArrayGeometry::ula(2), 2, 1.0).unwrap();
    let cache = ObservationCache::new(&model, &pilots, 0.0).unwrap();
    let p = responsibilities_obs(&cache, &CVector::zeros(2)).unwrap();
    assert!((p[0] - 0.2).abs() < 1e-12 && (p[1] - 0.8).abs() < 1e-12, "{p:?}");
    assert_eq!(feedback_index_obs(&cache, &CVector::zeros(2)).unwrap(), 1);
}

#[test]
fn identical_components_tie_to_first_index() {
    let model = two_component_model(4, [0.5, 0.5], [1.0, 1.0]);
    let pilots = build_pilot_matrix(&ArrayGeometry::ula(4), 2, 1.0).unwrap();
    let cache = ObservationCache::new(&model, &pilots, 0.1).unwrap();
    let mut rng = seeded_rng(1);
    for _ in 0..20 {
        let y = statprec::linalg::complex_normal_vector(2, &mut rng);
        assert_eq!(feedback_index_obs(&cache, &y).unwrap(), 0);
        assert_eq!(model.feedback_index_csi(&statprec::linalg::complex_normal_vector(4, &mut rng)).unwrap(), 0);
    }
}

#[test]
fn single_component_estimate_is_lmmse() {
    let geometry = ArrayGeometry::ula(16);
    let c = cluster_covariance(&geometry, &ClusterParameters::new(-0.2, 0.1), DEFAULT_GRID_SIZE).unwrap();
    let mut rng = seeded_rng(11);
    let dict = SpectralDictionary::new(&geometry).unwrap();
    let mut model_rng = seeded_rng(12);
    let model = common::random_gmm(&dict, 1, &mut model_rng);
    let pilots = build_pilot_matrix(&geometry, 4, 1.0).unwrap();
    let nv = 0.1;
    let cache = ObservationCache::new(&model, &pilots, nv).unwrap();
    let ck = model.covariance(0);
    let p = &pilots.matrix;
    let gain = ck * p.adjoint() * (p * ck * p.adjoint() + CMatrix::identity(4, 4).scale(nv)).try_inverse().unwrap();
    let factor = PsdFactor::new(&c).unwrap();
    for _ in 0..20 {
        let obs = observe(&pilots, &factor.sample(&mut rng), nv, &mut rng).unwrap();
        assert_eq!(responsibilities_obs(&cache, &obs.y).unwrap(), vec![1.0]);
        let est = gmm_channel_estimate(&cache, &obs.y).unwrap();
        let oracle = &gain * &obs.y;
        assert!((est - &oracle).norm() <= 1e-9 * oracle.norm().max(1.0));
    }
}

#[test]
fn em_single_component_recovers_identity() {
    let mut rng = seeded_rng(21);
    let data: Vec<CVector> = (0..100_000).map(|_| statprec::linalg::complex_normal_vector(4, &mut rng)).collect();
    let dict = SpectralDictionary::new(&ArrayGeometry::ula(4)).unwrap();
    let fit = fit_em(&data, &EmConfig::new(1), &dict, &mut rng).unwrap();
    assert!(rel_frobenius(fit.model.covariance(0), &CMatrix::identity(4, 4)) < 0.05);
    assert!((fit.model.weights()[0] - 1.0).abs() < 1e-12);
}

#[test]
fn em_separates_two_rank_deficient_components() {
    let n = 8;
    let dict = SpectralDictionary::new(&ArrayGeometry::ula(n)).unwrap();
    let mut qa = vec![0.0; 2 * n];
    let mut qb = vec![0.0; 2 * n];
    qa[1..4].iter_mut().for_each(|v| *v = 2.0);
    qb[9..12].iter_mut().for_each(|v| *v = 2.0);
    let truth = [dict.realize(&qa).unwrap(), dict.realize(&qb).unwrap()];
    let factors = truth.clone().map(|c| PsdFactor::new(&c).unwrap());
    let mut rng = seeded_rng(31);
    let mut labelled: [Vec<CVector>; 2] = [Vec::new(), Vec::new()];
    for i in 0..20_000 {
        labelled[i % 2].push(factors[i % 2].sample(&mut rng));
    }
    let data: Vec<CVector> = labelled.iter().flatten().cloned().collect();
    // oracle: per-label sample covariances
    let oracle = labelled.clone().map(|s| sample_covariance(&s));
    let fit = fit_em(&data, &EmConfig::new(2), &dict, &mut rng).unwrap();
    let (c0, c1) = (fit.model.covariance(0), fit.model.covariance(1));
    let straight = rel_frobenius(c0, &oracle[0]).max(rel_frobenius(c1, &oracle[1]));
    let swapped = rel_frobenius(c0, &oracle[1]).max(rel_frobenius(c1, &oracle[0]));
    assert!(straight.min(swapped) < 0.10, "straight {straight}, swapped {swapped}");
}

#[test]
fn em_log_likelihood_is_monotone_and_resumable() {
    let geometry = ArrayGeometry::ula(8);
    let mut rng = seeded_rng(41);
    let sampler = statprec::channels::ClusterSampler::default();
    let data = statprec::channels::generate_dataset(&geometry, 2000, &sampler, &mut rng).unwrap();
    let dict = SpectralDictionary::new(&geometry).unwrap();
    let config = EmConfig {
        max_iters: 8,
        tol: 0.0,
        ..EmConfig::new(4)
    };
    let first = fit_em(&data, &config, &dict, &mut rng).unwrap();
    let second = resume_em(&data, first.model.clone(), &config).unwrap();
    let last = *first.log_likelihoods.last().unwrap();
    assert!((second.log_likelihoods[0] - last).abs() <= 1e-10 * last.abs());
    let joined: Vec<f64> = first.log_likelihoods.iter().chain(&second.log_likelihoods[1..]).copied().collect();
    for w in joined.windows(2) {
        assert!(w[1] >= w[0] - 1e-8 * w[0].abs(), "{} -> {}", w[0], w[1]);
    }
    assert!(joined.last().unwrap() > &joined[0]);
}

#[test]
fn em_rejects_bad_inputs() {
    let dict = SpectralDictionary::new(&ArrayGeometry::ula(4)).unwrap();
    let mut rng = seeded_rng(0);
    let data: Vec<CVector> = (0..8).map(|_| statprec::linalg::complex_normal_vector(4, &mut rng)).collect();
    assert!(fit_em(&[], &EmConfig::new(2), &dict, &mut rng).is_err());
    assert!(fit_em(&data, &EmConfig::new(3), &dict, &mut rng).is_err());
    assert!(fit_em(&data[..1], &EmConfig::new(2), &dict, &mut rng).is_err());
}

#[test]
fn model_file_round_trip_keeps_hash() {
    let dict = SpectralDictionary::new(&ArrayGeometry::ura(2, 4)).unwrap();
    let model = common::random_gmm(&dict, 4, &mut seeded_rng(2));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gmm.json");
    model.save(&path).unwrap();
    let loaded = GmmModel::load(&path).unwrap();
    assert_eq!(loaded.content_hash(), model.content_hash());
    let sum: f64 = loaded.weights().iter().sum();
    assert!((sum - 1.0).abs() < 1e-12);
}
