//! Fits the structured mixture prior by EM and compares the mixture channel
//! estimate with least squares over an SNR sweep.

use statprec::baselines::ls_estimate;
use statprec::channels::{generate_dataset, normalize_dataset, ArrayGeometry, ClusterSampler};
use statprec::gmm::{fit_em, gmm_channel_estimate, EmConfig, ObservationCache, SpectralDictionary};
use statprec::linalg::seeded_rng;
use statprec::pilots::{build_pilot_matrix, observe};

fn main() -> statprec::Result<()> {
    let geometry = ArrayGeometry::ula(16);
    let mut rng = seeded_rng(3);
    let sampler = ClusterSampler::default();
    let mut train = generate_dataset(&geometry, 10_000, &sampler, &mut rng)?;
    let scale = normalize_dataset(&mut train, 16)?;
    let mut test = generate_dataset(&geometry, 500, &sampler, &mut rng)?;
    test.iter_mut().for_each(|h| h.scale_mut(scale));

    let fit = fit_em(&train, &EmConfig::from_bits(4), &SpectralDictionary::new(&geometry)?, &mut rng)?;
    println!(
        "EM: {} iterations, log-likelihood {:.3} -> {:.3}",
        fit.log_likelihoods.len() - 1,
        fit.log_likelihoods[0],
        fit.log_likelihoods.last().unwrap()
    );

    let pilots = build_pilot_matrix(&geometry, 16, 1.0)?;
    println!("SNR dB   nMSE GMM   nMSE LS");
    for snr in [0.0, 10.0, 20.0] {
        let nv = 10f64.powf(-snr / 10.0);
        let cache = ObservationCache::new(&fit.model, &pilots, nv)?;
        let (mut gmm, mut ls) = (0.0, 0.0);
        for h in &test {
            let y = observe(&pilots, h, nv, &mut rng)?.y;
            gmm += (gmm_channel_estimate(&cache, &y)? - h).norm_squared() / h.norm_squared();
            ls += (ls_estimate(&pilots, &y)? - h).norm_squared() / h.norm_squared();
        }
        let m = test.len() as f64;
        println!("{snr:>6.1}   {:>8.4}   {:>7.4}", gmm / m, ls / m);
    }
    Ok(())
}
