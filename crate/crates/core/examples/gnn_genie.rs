//! Trains a small precoder network on true covariance first rows and reports
//! the validation sum-rate per epoch.

use statprec::channels::{generate_scenarios, normalize_scenarios, ArrayGeometry, ClusterSampler};
use statprec::gnn::{forward, train, GnnConfig, GnnModel, LrSchedule, StatisticsSource, TrainConfig};
use statprec::linalg::seeded_rng;
use statprec::rate::sum_rate;

fn main() -> statprec::Result<()> {
    let geometry = ArrayGeometry::ula(8);
    let sampler = ClusterSampler::default();
    let mut rng = seeded_rng(5);
    let mut train_set = generate_scenarios(&geometry, 200, 3, &sampler, &mut rng)?;
    let mut val_set = generate_scenarios(&geometry, 50, 3, &sampler, &mut rng)?;
    normalize_scenarios(&mut train_set, 8)?;
    normalize_scenarios(&mut val_set, 8)?;

    let config = TrainConfig {
        epochs: 15,
        batch_size: 4,
        learning_rate: 3e-3,
        snr_db: [10.0, 10.0],
        regroup_users: true,
        schedule: LrSchedule::Cosine,
        ..TrainConfig::default()
    };
    let init = GnnModel::new(&GnnConfig::new(8, vec![32, 32]), &mut rng)?;
    let (model, log) = train(init, &train_set, &val_set, StatisticsSource::Genie, &config)?;
    println!("epoch 0: validation {:.3}", log.initial_val_rate);
    for r in &log.records {
        println!("epoch {}: train {:.3}, validation {:.3}, lr {:.1e}", r.epoch, r.train_rate, r.val_rate, r.lr);
    }

    let nv = 0.1;
    let s = &val_set[0];
    let v = forward(&model, &s.first_rows(), 1.0)?;
    println!(
        "best epoch {}; first validation scenario: power {:.6}, sum-rate {:.3}",
        log.best_epoch,
        v.total_power(),
        sum_rate(&s.channels(), &v.v, nv)
    );
    Ok(())
}
