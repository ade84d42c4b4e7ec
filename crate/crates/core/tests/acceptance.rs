//! Acceptance criteria on the desk-scale testbed: ULA N = 16, J = 4, B = 4,
//! n_p in {4, 8}, D = 400 / 100 / 200, M = 2e4, three hidden layers of width
//! 64, 100 epochs. Prints one PASS/FAIL line per criterion. Failures are
//! reported but only change the exit status when STATPREC_ACCEPTANCE_STRICT
//! is set.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use statprec::baselines::{iwmmse, swmmse, ChannelSampler};
use statprec::channels::{cluster_covariance, generate_scenarios, normalize_scenarios, ArrayGeometry, ClusterParameters, ClusterSampler};
use statprec::eval::{
    evaluate, generate_datasets, run_pipeline, Datasets, EvalReport, EvaluateOptions, Method, MethodKind, Models,
    PointContext, ScenarioDraws, Stream, SystemConfig,
};
use statprec::gmm::{fit_em, EmConfig, GmmModel, ObservationCache, SpectralDictionary};
use statprec::gnn::{
    forward, train, Activation, GnnConfig, GnnModel, LrSchedule, StatisticsSource, TrainConfig,
};
use statprec::linalg::{
    block_toeplitz_deviation, complex_normal_vector, derive_seed, eigenvalues_hermitian, hermitian_deviation,
    seeded_rng, toeplitz_deviation, CMatrix, CVector, C64,
};
use statprec::pilots::{build_pilot_matrix, observe};
use statprec::rate::sum_rate;

use common::{fd_agreement, naive_layer, random_features, random_gmm, random_layer};

const SNR_DB: f64 = 10.0;
const PILOTS: [usize; 2] = [4, 8];

struct Line {
    id: &'static str,
    pass: bool,
}

#[derive(Default)]
struct Outcomes {
    lines: Vec<Line>,
}

impl Outcomes {
    fn record(&mut self, id: &'static str, pass: bool, text: String) {
        println!("{} {id:<3} {text}", if pass { "PASS" } else { "FAIL" });
        self.lines.push(Line { id, pass });
    }

    fn error(&mut self, id: &'static str, err: impl std::fmt::Display) {
        self.record(id, false, format!("error: {err}"));
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn paired_mean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x - y).sum::<f64>() / a.len() as f64
}

fn median(mut x: Vec<f64>) -> f64 {
    x.sort_by(f64::total_cmp);
    x[x.len() / 2]
}

// ---------------------------------------------------------------- testbed

struct Testbed {
    config: SystemConfig,
    data: Datasets,
    models: Models,
    em_log: Vec<f64>,
    em_secs: f64,
    build_secs: f64,
}

fn train_config(config: &SystemConfig) -> TrainConfig {
    TrainConfig {
        epochs: 100,
        batch_size: 4,
        learning_rate: 5e-3,
        snr_db: [SNR_DB, SNR_DB],
        power: config.power,
        seed: config.stream_seed(Stream::Training),
        regroup_users: true,
        schedule: LrSchedule::Cosine,
    }
}

fn train_network(config: &SystemConfig, data: &Datasets, source: StatisticsSource<'_>) -> statprec::Result<GnnModel> {
    let tc = train_config(config);
    let gc = GnnConfig::new(config.geometry.antennas(), vec![64; 3]);
    let init = GnnModel::new(&gc, &mut seeded_rng(derive_seed(tc.seed, 0)))?;
    let (model, log) = train(init, &data.train, &data.val, source, &tc)?;
    eprintln!(
        "  trained: best validation rate {:.4} at epoch {}",
        log.best_val_rate, log.best_epoch
    );
    Ok(model)
}

fn build_testbed() -> statprec::Result<Testbed> {
    let start = Instant::now();
    let config = SystemConfig::desk();
    let data = generate_datasets(&config)?;
    eprintln!("  datasets ready ({:.1} s)", start.elapsed().as_secs_f64());

    let em_start = Instant::now();
    let dictionary = SpectralDictionary::new(&config.geometry)?;
    let fit = fit_em(
        &data.gmm,
        &EmConfig::from_bits(config.bits),
        &dictionary,
        &mut seeded_rng(config.stream_seed(Stream::EmInit)),
    )?;
    let em_secs = em_start.elapsed().as_secs_f64();
    eprintln!("  EM: {} iterations ({em_secs:.1} s)", fit.log_likelihoods.len() - 1);
    let gmm = fit.model;

    let genie = train_network(&config, &data, StatisticsSource::Genie)?;
    let gmm_h = train_network(&config, &data, StatisticsSource::GmmCsi(&gmm))?;
    let mut gmm_y = BTreeMap::new();
    for n_p in PILOTS {
        let pilots = build_pilot_matrix(&config.geometry, n_p, config.power)?;
        let model = train_network(
            &config,
            &data,
            StatisticsSource::GmmObservation {
                model: &gmm,
                pilots: &pilots,
            },
        )?;
        gmm_y.insert(n_p, model);
    }
    Ok(Testbed {
        models: Models {
            gmm: Some(gmm),
            gnn_genie: Some(genie),
            gnn_gmm_h: Some(gmm_h),
            gnn_gmm_y: gmm_y,
        },
        config,
        data,
        em_log: fit.log_likelihoods,
        em_secs,
        build_secs: start.elapsed().as_secs_f64(),
    })
}

fn method(kind: MethodKind) -> Method {
    Method::new(kind)
}

fn swmmse_y(iters: usize) -> Method {
    Method::with_iters(MethodKind::SwmmseGmmY, iters)
}

fn rates(r: &EvalReport, m: Method, users: usize, snr: f64) -> &[f64] {
    r.rates(&m, users, snr).expect("row present")
}

// ------------------------------------------------------------ criterion 1

fn criterion_1(tb: &Testbed, out: &mut Outcomes) -> statprec::Result<BTreeMap<usize, EvalReport>> {
    let start = Instant::now();
    let mut reports = BTreeMap::new();
    for n_p in PILOTS {
        let config = SystemConfig {
            pilots: n_p,
            ..tb.config.clone()
        };
        let mut methods = vec![
            method(MethodKind::GnnGmmH),
            method(MethodKind::GnnGmmY),
            swmmse_y(300),
            swmmse_y(100),
            swmmse_y(20),
            method(MethodKind::IwmmseDftLs),
            method(MethodKind::IwmmseDftGmmEst),
        ];
        if n_p == 4 {
            methods.insert(0, method(MethodKind::GnnGenie));
            methods.insert(1, method(MethodKind::SwmmseGenie));
        }
        let report = evaluate(&methods, &tb.data.test, &tb.models, &config, EvaluateOptions { record_runtime: false })?;
        reports.insert(n_p, report);
    }
    let total = tb.build_secs + start.elapsed().as_secs_f64();
    let j = tb.config.users[0];
    let r4 = &reports[&4];

    let gnn = mean(rates(r4, method(MethodKind::GnnGenie), j, SNR_DB));
    let sw = mean(rates(r4, method(MethodKind::SwmmseGenie), j, SNR_DB));
    out.record(
        "1a",
        gnn >= 0.98 * sw && total < 45.0 * 60.0,
        format!(
            "GNN-genie {gnn:.4} vs SWMMSE-genie {sw:.4} at 10 dB (need >= {:.4}, {:+.2}%); testbed incl. training {total:.0} s (< 2700 s)",
            0.98 * sw,
            100.0 * (gnn / sw - 1.0)
        ),
    );

    let mut ok = true;
    let mut parts = Vec::new();
    for n_p in PILOTS {
        let r = &reports[&n_p];
        let d = paired_mean(rates(r, method(MethodKind::GnnGmmY), j, SNR_DB), rates(r, swmmse_y(300), j, SNR_DB));
        ok &= d > 0.0;
        parts.push(format!("n_p={n_p}: {d:+.4}"));
    }
    out.record("1b", ok, format!("paired mean GNN-GMM-y minus SWMMSE-GMM-y at 10 dB (> 0): {}", parts.join(", ")));

    let y = mean(rates(r4, method(MethodKind::GnnGmmY), j, SNR_DB));
    let ls = mean(rates(r4, method(MethodKind::IwmmseDftLs), j, SNR_DB));
    let est = mean(rates(r4, method(MethodKind::IwmmseDftGmmEst), j, SNR_DB));
    out.record(
        "1c",
        y > ls && y > est,
        format!("GNN-GMM-y {y:.4} vs IWMMSE-DFT-LS {ls:.4}, IWMMSE-DFT-GMMest {est:.4} at 10 dB, n_p=4"),
    );

    let mut ok = true;
    let mut worst = f64::INFINITY;
    for n_p in PILOTS {
        let r = &reports[&n_p];
        for &snr in &tb.config.snr_db {
            let h = rates(r, method(MethodKind::GnnGmmH), j, snr);
            let yv = rates(r, method(MethodKind::GnnGmmY), j, snr);
            let rel = paired_mean(h, yv) / mean(yv);
            worst = worst.min(rel);
            ok &= rel >= -0.01;
        }
    }
    out.record(
        "1d",
        ok,
        format!(
            "GNN-GMM-h minus GNN-GMM-y, paired, relative; worst over SNR {:?} dB and n_p {PILOTS:?}: {:+.2}% (>= -1%)",
            tb.config.snr_db,
            100.0 * worst
        ),
    );

    let mut ok = true;
    let mut parts = Vec::new();
    for n_p in PILOTS {
        let r = &reports[&n_p];
        for &snr in &tb.config.snr_db {
            let m: Vec<f64> = [300, 100, 20].iter().map(|&i| mean(rates(r, swmmse_y(i), j, snr))).collect();
            ok &= m[1] <= 1.01 * m[0] && m[2] <= 1.01 * m[1];
            if snr == SNR_DB {
                parts.push(format!("n_p={n_p}: {:.4} / {:.4} / {:.4}", m[0], m[1], m[2]));
            }
        }
    }
    out.record(
        "1e",
        ok,
        format!(
            "SWMMSE-GMM-y at I_max 300/100/20 non-increasing within +1% at every SNR and n_p; 10 dB: {}",
            parts.join(", ")
        ),
    );
    Ok(reports)
}

// ------------------------------------------------------------ criterion 2

fn criterion_2(out: &mut Outcomes) {
    let start = Instant::now();
    let geometry = ArrayGeometry::ula(4);
    let (mut checked, mut good) = (0, 0);
    for seed in 0..10u64 {
        let mut rng = seeded_rng(seed);
        let model = GnnModel::new(&GnnConfig::new(4, vec![4, 4]), &mut rng).unwrap();
        let mut sc = generate_scenarios(&geometry, 1, 2, &ClusterSampler::default(), &mut rng).unwrap();
        normalize_scenarios(&mut sc, 4).unwrap();
        let (c, g) = fd_agreement(&model, &sc[0].first_rows(), &sc[0].channels(), 0.1);
        checked += c;
        good += g;
    }
    let secs = start.elapsed().as_secs_f64();
    let frac = good as f64 / checked as f64;
    out.record(
        "2",
        frac >= 0.99 && secs < 60.0,
        format!(
            "finite differences (N=4, J=2, M=4, L=3, step 1e-5): {good}/{checked} = {:.2}% within 1e-4 (>= 99%); {secs:.1} s",
            100.0 * frac
        ),
    );
}

// ------------------------------------------------------------ criterion 3

fn criterion_3(tb: &Testbed, out: &mut Outcomes) {
    let start = Instant::now();
    let worst = tb
        .em_log
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[0].abs().max(1.0))
        .fold(f64::INFINITY, f64::min);
    let monotone = worst >= -1e-8;

    let n = 16;
    let g = ArrayGeometry::ula(n);
    let mut rng = seeded_rng(33);
    let data: Vec<CVector> = (0..20_000).map(|_| complex_normal_vector(n, &mut rng)).collect();
    let dictionary = SpectralDictionary::new(&g).unwrap();
    let fit = fit_em(&data, &EmConfig::new(1), &dictionary, &mut rng).unwrap();
    let c = fit.model.covariance(0);
    let err = (c - CMatrix::identity(n, n)).norm() / (n as f64).sqrt();
    let secs = tb.em_secs + start.elapsed().as_secs_f64();
    out.record(
        "3",
        monotone && err < 0.05 && secs < 300.0,
        format!(
            "desk EM ({} iterations) worst relative step {worst:.2e} (>= -1e-8); K=1 identity recovery error {:.2}% (< 5%); {secs:.1} s",
            tb.em_log.len() - 1,
            100.0 * err
        ),
    );
}

// ------------------------------------------------------------ criterion 4

fn criterion_4(out: &mut Outcomes) {
    let start = Instant::now();
    let trials = 1000;
    let mut rng = seeded_rng(44);

    let mut cov_dev: f64 = 0.0;
    let dictionaries: Vec<(ArrayGeometry, SpectralDictionary)> =
        [ArrayGeometry::ula(8), ArrayGeometry::ula(13), ArrayGeometry::ura(2, 4), ArrayGeometry::ura(3, 3)]
            .into_iter()
            .map(|g| (g, SpectralDictionary::new(&g).unwrap()))
            .collect();
    for t in 0..trials {
        let (g, d) = &dictionaries[t % dictionaries.len()];
        let q: Vec<f64> = (0..d.spectrum_len()).map(|_| rng.random_range(0.0..2.0)).collect();
        let c = d.realize(&q).unwrap();
        let scale = c.norm().max(1.0);
        let structure = match *g {
            ArrayGeometry::Ula { .. } => toeplitz_deviation(&c),
            ArrayGeometry::Ura { vertical, horizontal, .. } => block_toeplitz_deviation(&c, vertical, horizontal),
        };
        let min_eig = eigenvalues_hermitian(&c).min();
        cov_dev = cov_dev.max(hermitian_deviation(&c)).max(structure).max((-min_eig / scale).max(0.0));
    }

    let mut resp_dev: f64 = 0.0;
    let g = ArrayGeometry::ula(8);
    let d = SpectralDictionary::new(&g).unwrap();
    for t in 0..trials {
        let model = random_gmm(&d, 4, &mut rng);
        let n_p = 1 + t % 8;
        let pilots = build_pilot_matrix(&g, n_p, 1.0).unwrap();
        let nv = 10f64.powf(rng.random_range(-2.0..1.0));
        let cache = ObservationCache::new(&model, &pilots, nv).unwrap();
        let y = complex_normal_vector(n_p, &mut rng) * C64::new(10f64.powf(rng.random_range(-1.0..1.0)), 0.0);
        let r = cache.responsibilities(&y).unwrap();
        resp_dev = resp_dev.max((r.iter().sum::<f64>() - 1.0).abs());
    }

    let mut power_dev: f64 = 0.0;
    let mut equiv_dev: f64 = 0.0;
    for t in 0..trials {
        let n = 2 + t % 7;
        let users = 1 + t % 5;
        let model = GnnModel::new(&GnnConfig::new(n, vec![8, 8]), &mut rng).unwrap();
        let rows: Vec<CVector> = (0..users).map(|_| complex_normal_vector(n, &mut rng)).collect();
        let power = rng.random_range(0.1..10.0);
        let v = forward(&model, &rows, power).unwrap();
        power_dev = power_dev.max((v.total_power() - power).abs());
        let mut perm: Vec<usize> = (0..users).collect();
        for i in (1..users).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let permuted: Vec<CVector> = perm.iter().map(|&i| rows[i].clone()).collect();
        let w = forward(&model, &permuted, power).unwrap();
        for (col, &src) in perm.iter().enumerate() {
            equiv_dev = equiv_dev.max((w.v.column(col) - v.v.column(src)).camax());
        }
    }

    let mut pilot_dev: f64 = 0.0;
    for t in 0..trials {
        let g = if t % 2 == 0 {
            ArrayGeometry::ula(1 + t % 32)
        } else {
            ArrayGeometry::ura(1 + t % 4, 1 + (t / 4) % 8)
        };
        let n = g.antennas();
        let n_p = 1 + rng.random_range(0..n);
        let power = rng.random_range(0.5..2.0);
        let p = build_pilot_matrix(&g, n_p, power).unwrap();
        let gram = &p.matrix * p.matrix.adjoint();
        pilot_dev = pilot_dev.max((gram - CMatrix::identity(n_p, n_p) * C64::new(power, 0.0)).camax());
    }

    let secs = start.elapsed().as_secs_f64();
    out.record(
        "4",
        cov_dev <= 1e-10 && resp_dev <= 1e-12 && power_dev <= 1e-10 && equiv_dev <= 1e-6 && pilot_dev <= 1e-10 && secs < 120.0,
        format!(
            "{trials} trials each: covariance structure {cov_dev:.1e} (1e-10), responsibilities {resp_dev:.1e} (1e-12), power {power_dev:.1e} (1e-10), equivariance {equiv_dev:.1e} (1e-6), pilot Gram {pilot_dev:.1e} (1e-10); {secs:.1} s"
        ),
    );
}

// ------------------------------------------------------------ criterion 5

fn criterion_5(out: &mut Outcomes) {
    let start = Instant::now();
    let mut rng = seeded_rng(55);

    let mut mrt_dev: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..12);
        let h = complex_normal_vector(n, &mut rng);
        let power = rng.random_range(0.5..2.0);
        let nv = 10f64.powf(rng.random_range(-2.0..1.0));
        let outcome = iwmmse(std::slice::from_ref(&h), power, nv, 300, 1e-12).unwrap();
        let ours = sum_rate(std::slice::from_ref(&h), &outcome.precoders.v, nv);
        let mrt = (1.0 + power * h.norm_squared() / nv).log2();
        mrt_dev = mrt_dev.max((ours - mrt).abs());
    }

    let geometry = ArrayGeometry::ula(8);
    let cov = cluster_covariance(&geometry, &ClusterParameters::new(0.3, 1e-9), 720).unwrap();
    let sampler = ChannelSampler::new(cov).unwrap();
    let (power, noise) = (1.0, 0.1);
    let v = swmmse(std::slice::from_ref(&sampler), power, noise, 300, &mut rng).unwrap();
    let a = sampler.principal_direction();
    let matched = CMatrix::from_column_slice(8, 1, a.map(|z| z.conj()).as_slice()) * C64::new(power.sqrt(), 0.0);
    let (mut ours, mut reference) = (0.0, 0.0);
    for _ in 0..10_000 {
        let h = sampler.draw(&mut rng);
        ours += sum_rate(std::slice::from_ref(&h), &v.v, noise);
        reference += sum_rate(std::slice::from_ref(&h), &matched, noise);
    }
    let swmmse_ratio = ours / reference;

    let mut layer_dev: f64 = 0.0;
    for (seed, &(n, j, mi, mo)) in [(3, 2, 2, 2), (4, 3, 2, 5), (16, 4, 3, 3), (5, 1, 4, 2), (1, 3, 2, 2)]
        .iter()
        .enumerate()
    {
        for act in [Activation::Relu, Activation::Identity] {
            let layer = random_layer(mo, mi, act, seed as u64);
            let f = random_features(n, j, mi, 100 + seed as u64);
            let fast = layer.forward(&f, 0.3 / n as f64, 0.7).unwrap();
            let slow = naive_layer(&layer, &f, 0.3 / n as f64, 0.7);
            layer_dev = layer_dev.max((fast.data() - slow.data()).amax());
        }
    }

    let g16 = ArrayGeometry::ula(16);
    let d = SpectralDictionary::new(&g16).unwrap();
    let c = cluster_covariance(&g16, &ClusterParameters::new(-0.4, 10f64.to_radians()), 720).unwrap();
    let q: Vec<f64> = d.spectrum_of(&c).iter().map(|&x| x.max(1e-6)).collect();
    let model = GmmModel::new(d.clone(), vec![1.0], vec![q], 1e-6).unwrap();
    let cov = model.covariance(0).clone();
    let pilots = build_pilot_matrix(&g16, 4, 1.0).unwrap();
    let nv = 0.1;
    let cache = ObservationCache::new(&model, &pilots, nv).unwrap();
    let sampler = ChannelSampler::new(cov.clone()).unwrap();
    let draws = 20_000;
    let mut mse = 0.0;
    for _ in 0..draws {
        let h = sampler.draw(&mut rng);
        let y = observe(&pilots, &h, nv, &mut rng).unwrap().y;
        mse += (cache.channel_estimate(&y).unwrap() - &h).norm_squared();
    }
    mse /= draws as f64;
    let p = &pilots.matrix;
    let s = p * &cov * p.adjoint() + CMatrix::identity(4, 4) * C64::new(nv, 0.0);
    let gain = &cov * p.adjoint() * s.try_inverse().unwrap() * p * &cov;
    let analytic = (cov.trace() - gain.trace()).re;
    let lmmse_rel = (mse - analytic).abs() / analytic;

    let secs = start.elapsed().as_secs_f64();
    out.record(
        "5",
        mrt_dev <= 1e-6 && swmmse_ratio >= 0.98 && layer_dev <= 1e-12 && lmmse_rel < 0.02 && secs < 300.0,
        format!(
            "IWMMSE vs MRT {mrt_dev:.1e} (1e-6); SWMMSE/matched filter {swmmse_ratio:.4} (>= 0.98); layer vs loops {layer_dev:.1e} (1e-12); K=1 MSE {mse:.4} vs LMMSE {analytic:.4}, {:.2}% (< 2%); {secs:.1} s",
            100.0 * lmmse_rel
        ),
    );
}

// ------------------------------------------------------------ criterion 6

fn criterion_6(out: &mut Outcomes) {
    let start = Instant::now();
    let (k, n_p, nv) = (16, 8, 0.1);
    let mut rng = seeded_rng(66);
    let setups: Vec<(ObservationCache, Vec<CVector>)> = [16usize, 64]
        .iter()
        .map(|&n| {
            let g = ArrayGeometry::ula(n);
            let d = SpectralDictionary::new(&g).unwrap();
            let model = random_gmm(&d, k, &mut rng);
            let pilots = build_pilot_matrix(&g, n_p, 1.0).unwrap();
            let cache = ObservationCache::new(&model, &pilots, nv).unwrap();
            let ys = (0..200)
                .map(|_| {
                    let h = complex_normal_vector(n, &mut rng);
                    observe(&pilots, &h, nv, &mut rng).unwrap().y
                })
                .collect();
            (cache, ys)
        })
        .collect();
    let mut times = [Vec::new(), Vec::new()];
    let mut sink = 0usize;
    for _ in 0..61 {
        for (i, (cache, ys)) in setups.iter().enumerate() {
            let t = Instant::now();
            for y in ys {
                sink += cache.feedback_index(y).unwrap();
            }
            times[i].push(t.elapsed().as_secs_f64() / ys.len() as f64);
        }
    }
    std::hint::black_box(sink);
    let [t16, t64] = times.map(median);
    let ratio = t64 / t16;
    let secs = start.elapsed().as_secs_f64();
    out.record(
        "6",
        ratio <= 1.5 && secs < 120.0,
        format!(
            "median feedback inference per user (K={k}, n_p={n_p}): N=16 {:.2} us, N=64 {:.2} us, ratio {ratio:.3} (<= 1.5); {secs:.1} s",
            1e6 * t16,
            1e6 * t64
        ),
    );
}

// ------------------------------------------------------------ criterion 7

fn criterion_7(tb: &Testbed, out: &mut Outcomes) -> statprec::Result<()> {
    let users = vec![1, 2, 3];
    let mut ok = true;
    let mut worst_power: f64 = 0.0;
    let mut parts = Vec::new();
    for n_p in PILOTS {
        let config = SystemConfig {
            pilots: n_p,
            users: users.clone(),
            snr_db: vec![SNR_DB],
            ..tb.config.clone()
        };
        let methods = [method(MethodKind::GnnGmmY), method(MethodKind::IwmmseDftLs)];
        let report = evaluate(&methods, &tb.data.test, &tb.models, &config, EvaluateOptions { record_runtime: false })?;
        for &j in &users {
            let g = mean(rates(&report, methods[0], j, SNR_DB));
            let ls = mean(rates(&report, methods[1], j, SNR_DB));
            ok &= g >= ls;
            parts.push(format!("n_p={n_p} J={j}: {g:.3} vs {ls:.3}"));
        }
        let ctx = PointContext::new(&config, &tb.models, SNR_DB)?;
        let base = config.stream_seed(Stream::Evaluation);
        for &j in &users {
            for (d, s) in tb.data.test.iter().enumerate() {
                let s = s.truncated(j);
                let draws = ScenarioDraws::new(&ctx, &s, d, base)?;
                for kind in [MethodKind::GnnGenie, MethodKind::GnnGmmH, MethodKind::GnnGmmY] {
                    let p = run_pipeline(&method(kind), &s, &draws, &ctx)?.precoders;
                    worst_power = worst_power.max((p.total_power() - config.power).abs());
                }
            }
        }
    }
    ok &= worst_power <= 1e-10;
    out.record(
        "7",
        ok,
        format!(
            "J=4-trained networks at J in {users:?}, 10 dB: power error {worst_power:.1e} (1e-10); GNN-GMM-y vs IWMMSE-DFT-LS {}",
            parts.join(", ")
        ),
    );
    Ok(())
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let start = Instant::now();
    let mut out = Outcomes::default();
    println!("acceptance: desk-scale testbed (N=16, J=4, B=4, n_p in {PILOTS:?})");
    criterion_2(&mut out);
    criterion_4(&mut out);
    criterion_5(&mut out);
    criterion_6(&mut out);
    match build_testbed() {
        Ok(tb) => {
            criterion_3(&tb, &mut out);
            if let Err(e) = criterion_1(&tb, &mut out) {
                out.error("1", e);
            }
            if let Err(e) = criterion_7(&tb, &mut out) {
                out.error("7", e);
            }
        }
        Err(e) => out.error("1-3,7", e),
    }
    let failed: Vec<&str> = out.lines.iter().filter(|l| !l.pass).map(|l| l.id).collect();
    println!(
        "acceptance: {}/{} criteria passed in {:.0} s{}",
        out.lines.len() - failed.len(),
        out.lines.len(),
        start.elapsed().as_secs_f64(),
        if failed.is_empty() {
            String::new()
        } else {
            format!("; failed: {}", failed.join(", "))
        }
    );
    if !failed.is_empty() && std::env::var_os("STATPREC_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
