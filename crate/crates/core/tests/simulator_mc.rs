use agnlab_core::optimizer::solve_b2;
use agnlab_core::simulator::{fragility_report, simulate, PerturbationSpec, RngSpec};
use agnlab_core::{ChannelParams, GainSequence, StateKind};

const TRIALS: usize = 100_000;
const SEED: u64 = 20_240_601;

#[test]
fn butman_run_matches_analytic_moments() {
    let p = ChannelParams::figure_defaults(10);
    let b2 = solve_b2(&p).unwrap();
    let sim = simulate(&p, &b2.gains, TRIALS, RngSpec::new(SEED), &PerturbationSpec::None).unwrap();
    let analytic = b2.trace.sigma[10];
    assert!(
        (sim.empirical_sigma_n - analytic).abs() <= 3.0 * sim.sigma_n_std_error,
        "{} vs {analytic} (se {})",
        sim.empirical_sigma_n,
        sim.sigma_n_std_error
    );
    for t in 0..10 {
        let k = b2.trace.kappa_t[t];
        assert!((sim.empirical_power[t] - k).abs() <= 3.0 * sim.power_std_error[t], "t={}", t + 1);
    }
    let bound = 4.0 / (TRIALS as f64).sqrt();
    for (t, row) in sim.innovation_correlation.iter().enumerate() {
        assert!((row[t] - 1.0).abs() < 1e-12);
        for (s, r) in row.iter().enumerate() {
            if s != t {
                assert!(r.abs() < bound, "rho({}, {}) = {r}", t + 1, s + 1);
            }
        }
    }
    assert!(sim.amplification.iter().all(|&a| a == 0.0));
}

#[test]
fn arbitrary_gains_and_unknown_state() {
    let p = ChannelParams::constant(6, -0.6, 0.8, 2.0, 1.5, 1.0).with_state(StateKind::NoInitialState);
    let g = GainSequence(vec![0.9, 1.1, -0.4, 2.0, 0.0, -3.0]);
    let sim = simulate(&p, &g, 50_000, RngSpec::new(7), &PerturbationSpec::None).unwrap();
    let tr = agnlab_core::recursions::sigma_trace(&p, &g).unwrap();
    assert!((sim.empirical_sigma_n - tr.sigma[6]).abs() <= 4.0 * sim.sigma_n_std_error);
    for t in 0..6 {
        assert!((sim.empirical_power[t] - tr.kappa_t[t]).abs() <= 4.0 * sim.power_std_error[t].max(1e-15));
    }
}

#[test]
fn same_seed_same_numbers() {
    let p = ChannelParams::figure_defaults(5);
    let g = solve_b2(&p).unwrap().gains;
    let eps = PerturbationSpec::Constant(1e-3);
    let a = simulate(&p, &g, 9_000, RngSpec::new(3), &eps).unwrap();
    let b = simulate(&p, &g, 9_000, RngSpec::new(3), &eps).unwrap();
    assert_eq!(a, b);
    let c = simulate(&p, &g, 9_000, RngSpec::new(4), &eps).unwrap();
    assert_ne!(a.empirical_sigma_n, c.empirical_sigma_n);
}

#[test]
fn larger_perturbation_costs_more() {
    let p = ChannelParams::figure_defaults(10);
    let g = solve_b2(&p).unwrap().gains;
    let excess: Vec<f64> = [0.0, 1e-3, 1e-2, 1e-1]
        .iter()
        .map(|&e| {
            simulate(&p, &g, 20_000, RngSpec::new(11), &PerturbationSpec::Constant(e))
                .unwrap()
                .empirical_sigma_n
        })
        .collect();
    assert!(excess.windows(2).all(|w| w[1] > w[0]), "{excess:?}");
}

#[test]
fn fragility_grows_with_horizon() {
    let p = ChannelParams::figure_defaults(10);
    let rows = fragility_report(&p, 1e-6, &[20, 5, 10, 15, 10], 2_000, RngSpec::new(1)).unwrap();
    let ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    assert_eq!(ns, vec![5, 10, 15, 20]);
    assert!(rows.windows(2).all(|w| w[1].amplification > w[0].amplification));
    assert!(rows[3].amplification > 10.0 * rows[0].amplification);
    for r in &rows {
        let b2 = solve_b2(&p.with_horizon(r.n)).unwrap();
        assert_eq!(r.gain_n, b2.gains.0[r.n - 1].abs());
        assert_eq!(r.analytic_sigma_n, b2.trace.sigma[r.n]);
    }
}

#[test]
fn memoryless_gains_still_grow_geometrically() {
    // with c = 0 the equal-power gains satisfy |g_t| = sqrt(kappa/K_theta) (1 + kappa/K_W)^{(t-1)/2}
    let p = ChannelParams::constant(10, 0.0, 1.0, 1.0, 1.0, 1.0);
    let rows = fragility_report(&p, 1e-6, &[5, 20], 1_000, RngSpec::new(1)).unwrap();
    let ratio = rows[1].amplification / rows[0].amplification;
    assert!((ratio - 2f64.powf(7.5)).abs() < 1e-9 * ratio);
}
