use proptest::prelude::*;

use gfdm::presets::{example1, example2};
use gfdm::{
    generate_irregular_cloud, generate_regular_cloud, load_cloud, norms, read_cloud, save_cloud,
    validate_hypotheses, write_cloud, Domain, Error, ModelParameters, MotilityFunction, Simulation,
};

#[test]
fn motility_derivatives_match_finite_differences() {
    for name in ["exp", "rational"] {
        let g = MotilityFunction::by_name(name).unwrap();
        for s in [0.0, 0.3, 1.0, 2.5, 7.0] {
            let h = 1e-5;
            for k in 0..3 {
                let fd = (g.derivative(k, s + h) - g.derivative(k, s - h)) / (2.0 * h);
                let exact = g.derivative(k + 1, s);
                assert!(
                    (fd - exact).abs() < 1e-6 * (1.0 + exact.abs()),
                    "{name} k={k} s={s}"
                );
            }
        }
    }
}

#[test]
fn divergence_is_caught_at_large_dt() {
    let preset = example1();
    let cloud = generate_regular_cloud(21, 21, Domain::unit_square()).unwrap();
    let mut config = preset.config();
    config.dt = 1.0;
    config.t_final = 100.0;
    config.snapshot_times.clear();
    let sim = Simulation::new(cloud, config).unwrap();
    match sim.run(preset.u0) {
        Err(Error::Divergence { step, .. }) => assert!(step <= 100),
        Ok(r) => {
            let blown = r.series.iter().take(101).any(|rec| rec.norm_u > 1e3);
            assert!(blown, "run neither diverged nor grew");
        }
        Err(other) => panic!("unexpected error {other}"),
    }
}

#[test]
fn irregular_runs_are_bitwise_reproducible() {
    let preset = example2();
    let mut config = preset.config();
    config.t_final = 0.2;
    config.snapshot_times.clear();
    let run = || {
        let cloud = generate_irregular_cloud(17, 17, 0.2, 9, Domain::unit_square()).unwrap();
        Simulation::new(cloud, config.clone())
            .unwrap()
            .run(preset.u0)
            .unwrap()
    };
    let (a, b) = (run(), run());
    let bits = |r: &gfdm::SimulationResult| -> Vec<u64> {
        r.series
            .iter()
            .flat_map(|s| [s.norm_u.to_bits(), s.norm_v.to_bits()])
            .collect()
    };
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(a.final_state, b.final_state);
}

#[test]
fn stability_enforcement_passes_small_steps() {
    let preset = example1();
    let cloud = generate_regular_cloud(21, 21, Domain::unit_square()).unwrap();
    let mut config = preset.config();
    config.dt = 2e-4;
    config.t_final = 0.01;
    config.snapshot_times.clear();
    config.enforce_stability_bound = true;
    config.stability_check_every = 10;
    let r = Simulation::new(cloud, config)
        .unwrap()
        .run(preset.u0)
        .unwrap();
    assert!(r.initial_stability.unwrap().admits(2e-4));
    assert_eq!(r.series.len(), 51);
    let (nu, _) = norms(&r.final_state);
    assert!(nu < r.series[0].norm_u);
}

#[test]
fn saved_cloud_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cloud.csv");
    let cloud = generate_irregular_cloud(21, 21, 0.2, 1, Domain::unit_square()).unwrap();
    save_cloud(&cloud, &path).unwrap();
    assert_eq!(load_cloud(&path).unwrap(), cloud);
    assert!(matches!(
        load_cloud(dir.path().join("missing.csv")),
        Err(Error::Io { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cloud_csv_round_trip(nx in 3usize..12, ny in 3usize..12, p in 0.0f64..0.45, seed in any::<u64>()) {
        let cloud = generate_irregular_cloud(nx, ny, p, seed, Domain::unit_square()).unwrap();
        let mut buf = Vec::new();
        write_cloud(&cloud, &mut buf).unwrap();
        let back = read_cloud(&buf[..], std::path::Path::new("mem")).unwrap();
        prop_assert_eq!(back.nodes(), cloud.nodes());
    }

    #[test]
    fn hypotheses_are_monotone_in_mu(mu_a in 0.1f64..10.0, mu_b in 0.1f64..10.0) {
        let (lo, hi) = if mu_a <= mu_b { (mu_a, mu_b) } else { (mu_b, mu_a) };
        for g in [gfdm::gamma_exp(), gfdm::gamma_rational()] {
            let a = validate_hypotheses(&g, &ModelParameters::new(lo).unwrap(), 20.0, 2000).unwrap();
            let b = validate_hypotheses(&g, &ModelParameters::new(hi).unwrap(), 20.0, 2000).unwrap();
            prop_assert!(!a.passed || b.passed);
        }
    }
}
