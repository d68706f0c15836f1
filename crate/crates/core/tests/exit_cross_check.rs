use sos_core::experiments::exit::{exit_point, ExitScalingConfig};
use sos_core::model::energy::log_weight_of;
use sos_core::model::enumerate::{StateSpace, DEFAULT_SIZE_CAP};
use sos_core::spectral::killed::KilledOperator;

#[test]
fn monte_carlo_median_matches_killed_semigroup_at_l4() {
    let cfg = ExitScalingConfig { lens: vec![4], replicas: 4000, seed: 21, ..ExitScalingConfig::default() };
    let p = cfg.params(4).unwrap();
    let killed = KilledOperator::on_region_a(&p).unwrap();

    // start law mu(. | B) written on the states of A
    let b = p.region_b_height();
    let space = StateSpace::height_box(4, b as u32, DEFAULT_SIZE_CAP).unwrap();
    let mut start = vec![0.0; killed.n()];
    let mut z = 0.0;
    for idx in 0..space.len() {
        let cfg = space.configuration(idx);
        let w = log_weight_of(cfg.heights(), &p).exp();
        start[killed.index_of(&cfg).unwrap()] += w;
        z += w;
    }
    start.iter_mut().for_each(|s| *s /= z);
    let exact = killed.survival_function(&start).unwrap().median();

    let pt = exit_point(&cfg, 4).unwrap();
    assert_eq!(pt.censored, 0);
    let (med, se) = (pt.median.unwrap(), pt.median_se.unwrap());
    assert!((med - exact).abs() <= 3.0 * se, "MC {med} +- {se} vs exact {exact}");
}
