//! Pilot observations and the feedback a user sends back: the MAP mixture
//! component versus the nearest DFT codeword of a least-squares estimate.

use statprec::baselines::{build_dft_codebook, dft_feedback, ls_estimate};
use statprec::channels::{generate_dataset, normalize_dataset, ArrayGeometry, ClusterSampler};
use statprec::gmm::{feedback_index_obs, fit_em, EmConfig, ObservationCache, SpectralDictionary};
use statprec::linalg::seeded_rng;
use statprec::pilots::{build_pilot_matrix, observe};

fn main() -> statprec::Result<()> {
    let geometry = ArrayGeometry::ula(16);
    let mut rng = seeded_rng(2);
    let mut data = generate_dataset(&geometry, 4000, &ClusterSampler::default(), &mut rng)?;
    normalize_dataset(&mut data, 16)?;
    let dictionary = SpectralDictionary::new(&geometry)?;
    let model = fit_em(&data, &EmConfig::from_bits(3), &dictionary, &mut rng)?.model;

    let pilots = build_pilot_matrix(&geometry, 4, 1.0)?;
    let noise_variance = 0.1;
    let cache = ObservationCache::new(&model, &pilots, noise_variance)?;
    let codebook = build_dft_codebook(&geometry, 3)?;
    println!("user  csi-index  obs-index  dft-index");
    for (u, h) in data.iter().take(8).enumerate() {
        let obs = observe(&pilots, h, noise_variance, &mut rng)?;
        let from_csi = model.feedback_index_csi(h)?;
        let from_obs = feedback_index_obs(&cache, &obs.y)?;
        let dft = dft_feedback(&ls_estimate(&pilots, &obs.y)?, &codebook)?;
        println!("{u:>4}  {from_csi:>9}  {from_obs:>9}  {dft:>9}");
    }
    Ok(())
}
