//! Draws Laplacian-cluster channels for a ULA and a URA and compares the
//! sample covariance with the model covariance.

use statprec::channels::{cluster_covariance, ArrayGeometry, ClusterParameters, ClusterSampler, DEFAULT_GRID_SIZE};
use statprec::gmm::{complete_from_first_row, first_row};
use statprec::linalg::{eigenvalues_hermitian, seeded_rng, CMatrix, PsdFactor};

fn main() -> statprec::Result<()> {
    let mut rng = seeded_rng(1);
    let sampler = ClusterSampler::default();
    for geometry in [ArrayGeometry::ula(16), ArrayGeometry::ura(4, 8)] {
        let params = sampler.sample(&mut rng);
        let c = cluster_covariance(&geometry, &params, DEFAULT_GRID_SIZE)?;
        let factor = PsdFactor::new(&c)?;
        let n = geometry.antennas();
        let draws = 20_000;
        let mut s = CMatrix::zeros(n, n);
        for _ in 0..draws {
            let h = factor.sample(&mut rng);
            s += &h * h.adjoint();
        }
        s.unscale_mut(draws as f64);
        let eig = eigenvalues_hermitian(&c);
        let rebuilt = complete_from_first_row(&geometry, &first_row(&c))?;
        println!(
            "{}: azimuth {:.1} deg, trace {:.3}, largest eigenvalue {:.3}, sample covariance error {:.3}, first-row rebuild error {:.1e}",
            geometry.label(),
            params.azimuth.to_degrees(),
            c.trace().re,
            eig.max(),
            (&s - &c).norm() / c.norm(),
            (rebuilt - &c).camax()
        );
    }

    let c = cluster_covariance(&ArrayGeometry::ula(8), &ClusterParameters::new(0.0, 2f64.to_radians()), DEFAULT_GRID_SIZE)?;
    let row: Vec<String> = first_row(&c).iter().map(|z| format!("{:.3}{:+.1e}j", z.re, z.im)).collect();
    println!("broadside first row: {}", row.join(" "));
    Ok(())
}
