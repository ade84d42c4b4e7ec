use statprec::channels::{generate_scenarios, normalize_scenarios, ArrayGeometry, ClusterSampler};
use statprec::gnn::{GnnConfig, GnnModel};
use statprec::linalg::seeded_rng;

mod common;
use common::fd_agreement;

#[test]
fn gradient_agrees_with_central_differences() {
    // N = 4, J = 2, width 4, L = 3; pooled over ten random instances
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
    assert!(checked > 1000);
    assert!(good as f64 >= 0.99 * checked as f64, "{good}/{checked}");
}
