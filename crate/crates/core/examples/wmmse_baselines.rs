//! Instantaneous WMMSE on known channels versus stochastic WMMSE on channel
//! statistics, both scored on the same channel draws.

use statprec::baselines::{iwmmse, swmmse, ChannelSampler};
use statprec::channels::{generate_scenarios, ArrayGeometry, ClusterSampler};
use statprec::linalg::seeded_rng;
use statprec::rate::sum_rate;

fn main() -> statprec::Result<()> {
    let geometry = ArrayGeometry::ula(16);
    let mut rng = seeded_rng(4);
    let scenarios = generate_scenarios(&geometry, 20, 4, &ClusterSampler::default(), &mut rng)?;
    println!("SNR dB   IWMMSE   SWMMSE");
    for snr in [0.0, 10.0, 20.0] {
        let nv = 10f64.powf(-snr / 10.0);
        let (mut inst, mut stat) = (0.0, 0.0);
        for s in &scenarios {
            let hs = s.channels();
            inst += sum_rate(&hs, &iwmmse(&hs, 1.0, nv, 300, 1e-6)?.precoders.v, nv);
            let samplers = (0..s.user_count())
                .map(|j| ChannelSampler::new(s.genie_covariance(&geometry, j)?))
                .collect::<statprec::Result<Vec<_>>>()?;
            stat += sum_rate(&hs, &swmmse(&samplers, 1.0, nv, 300, &mut rng)?.v, nv);
        }
        let d = scenarios.len() as f64;
        println!("{snr:>6.1}   {:>6.3}   {:>6.3}", inst / d, stat / d);
    }
    Ok(())
}
