//! End to end on a small system: data, mixture prior, three networks and a
//! report comparing every method at one SNR.

use statprec::eval::{evaluate, generate_datasets, EvaluateOptions, Method, Models, Stream, SystemConfig};
use statprec::gmm::{fit_em, EmConfig, SpectralDictionary};
use statprec::gnn::{train, GnnConfig, GnnModel, LrSchedule, StatisticsSource, TrainConfig};
use statprec::linalg::seeded_rng;
use statprec::pilots::build_pilot_matrix;

fn main() -> statprec::Result<()> {
    let config = SystemConfig {
        snr_db: vec![10.0],
        bits: 3,
        users: vec![3],
        train_users: 3,
        train_scenarios: 300,
        val_scenarios: 30,
        test_scenarios: 40,
        gmm_samples: 4000,
        swmmse_iters: 100,
        ..SystemConfig::desk()
    };
    let data = generate_datasets(&config)?;
    let dictionary = SpectralDictionary::new(&config.geometry)?;
    let gmm = fit_em(
        &data.gmm,
        &EmConfig::from_bits(config.bits),
        &dictionary,
        &mut seeded_rng(config.stream_seed(Stream::EmInit)),
    )?
    .model;

    let tc = TrainConfig {
        epochs: 40,
        batch_size: 4,
        learning_rate: 3e-3,
        snr_db: [10.0, 10.0],
        seed: config.stream_seed(Stream::Training),
        regroup_users: true,
        schedule: LrSchedule::Cosine,
        ..TrainConfig::default()
    };
    let pilots = build_pilot_matrix(&config.geometry, config.pilots, config.power)?;
    let gc = GnnConfig::new(config.geometry.antennas(), vec![64, 64]);
    let fit = |source| -> statprec::Result<GnnModel> {
        let init = GnnModel::new(&gc, &mut seeded_rng(1))?;
        Ok(train(init, &data.train, &data.val, source, &tc)?.0)
    };
    let mut models = Models {
        gnn_genie: Some(fit(StatisticsSource::Genie)?),
        gnn_gmm_h: Some(fit(StatisticsSource::GmmCsi(&gmm))?),
        ..Models::default()
    };
    let gmm_y = fit(StatisticsSource::GmmObservation { model: &gmm, pilots: &pilots })?;
    models.gnn_gmm_y.insert(config.pilots, gmm_y);
    models.gmm = Some(gmm);

    let methods = Method::all();
    let report = evaluate(&methods, &data.test, &models, &config, EvaluateOptions::default())?;
    println!("{:<20} {:>8} {:>8} {:>10}", "method", "rate", "stderr", "ms");
    for r in &report.rows {
        println!("{:<20} {:>8.3} {:>8.3} {:>10.3}", r.method, r.mean_rate_bits, r.stderr, r.mean_runtime_ms);
    }
    Ok(())
}
