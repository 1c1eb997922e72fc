use agnlab_core::asymptotics::{
    chi_fixed_point_iteration, quartic, ratio_test_verdict, solve_asymptote, RatioTestConfig,
    Verdict,
};
use agnlab_core::optimizer::solve_b2;
use agnlab_core::ChannelParams;

/// Independent reference: scan the quartic on a fixed grid, count sign
/// changes, refine the first one by plain bisection.
fn grid_root(kappa: f64, kw: f64, c: f64, lo: f64, hi: f64, step: f64) -> (f64, usize) {
    let q = |x: f64| quartic(x, kappa, kw, c);
    let steps = ((hi - lo) / step).round() as usize;
    let mut crossings = Vec::new();
    let mut prev = q(lo);
    for i in 1..=steps {
        let x = lo + i as f64 * step;
        let cur = q(x);
        if prev < 0.0 && cur >= 0.0 || prev > 0.0 && cur <= 0.0 {
            crossings.push(x - step);
        }
        prev = cur;
    }
    let (mut a, mut b) = (crossings[0], crossings[0] + step);
    while b - a > 1e-12 {
        let m = 0.5 * (a + b);
        if (q(a) < 0.0) == (q(m) < 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    (0.5 * (a + b), crossings.len())
}

// frozen from grid_root(1, 1, 0.5, 1, 3, 1e-6)
const FIGURE_CHI: f64 = 1.643_478_901_134_570_3;

#[test]
fn figure_root_matches_grid_scan() {
    let (oracle, roots) = grid_root(1.0, 1.0, 0.5, 1.0, 3.0, 1e-6);
    assert_eq!(roots, 1);
    assert!((oracle - FIGURE_CHI).abs() < 1e-11);
    let a = solve_asymptote(1.0, 1.0, 0.5).unwrap();
    assert!((a.chi - oracle).abs() < 1e-11, "{} vs {}", a.chi, oracle);
    assert!((a.rate - FIGURE_CHI.ln()).abs() < 1e-11);
}

fn grid() -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for &kappa in &[0.1, 0.5, 1.0, 3.0, 10.0] {
        for &kw in &[0.5, 1.0, 2.0] {
            for &c in &[-1.0, -0.5, 0.0, 0.5, 1.0] {
                out.push((kappa, kw, c));
            }
        }
    }
    out
}

#[test]
fn unique_root_on_grid() {
    for (kappa, kw, c) in grid() {
        let a = solve_asymptote(kappa, kw, c).unwrap();
        let (oracle, roots) = grid_root(kappa, kw, c, 1.0, a.chi + 2.0, 1e-4);
        assert_eq!(roots, 1, "kappa={kappa} kw={kw} c={c}");
        assert!((a.chi - oracle).abs() < 1e-10);
        assert!(a.chi >= 1.0 && a.residual < 1e-10);
    }
}

#[test]
fn fixed_point_limit_equals_root_on_grid() {
    for (kappa, kw, c) in grid() {
        let fp = chi_fixed_point_iteration(kappa, kw, c, 10_000, 1e-13).unwrap();
        assert!(fp.converged);
        let root = solve_asymptote(kappa, kw, c).unwrap().chi;
        assert!((fp.limit - root).abs() < 1e-8, "kappa={kappa} kw={kw} c={c}");
    }
}

#[test]
fn fixed_point_cross_check_at_figure_parameters() {
    let fp = chi_fixed_point_iteration(1.0, 1.0, 0.5, 1000, 1e-9).unwrap();
    assert!(fp.converged && fp.matches_root);
    assert!((fp.limit - FIGURE_CHI).abs() < 1e-9);
}

#[test]
fn rate_is_monotone_in_power_and_pole() {
    let kappas = [0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0];
    let poles = [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0];
    for &kw in &[0.5, 1.0, 2.0] {
        for &c in &poles {
            let rates: Vec<f64> = kappas
                .iter()
                .map(|&k| solve_asymptote(k, kw, c).unwrap().rate)
                .collect();
            assert!(rates.windows(2).all(|w| w[1] >= w[0]));
        }
        for &k in &kappas {
            let rates: Vec<f64> = poles
                .iter()
                .map(|&c| solve_asymptote(k, kw, c).unwrap().rate)
                .collect();
            assert!(rates.windows(2).all(|w| w[1] >= w[0]));
            let neg = solve_asymptote(k, kw, -0.75).unwrap().rate;
            assert_eq!(neg, solve_asymptote(k, kw, 0.75).unwrap().rate);
        }
    }
}

#[test]
fn memoryless_reduction_is_exact() {
    for (kappa, kw, _) in grid() {
        let a = solve_asymptote(kappa, kw, 0.0).unwrap();
        assert!((a.rate - 0.5 * (kappa / kw).ln_1p()).abs() < 1e-12);
    }
}

#[test]
fn butman_gains_diverge_at_the_asymptotic_ratio() {
    let b2 = solve_b2(&ChannelParams::figure_defaults(50)).unwrap();
    let r = ratio_test_verdict(&b2.gains, RatioTestConfig::default()).unwrap();
    assert_eq!(r.verdict, Verdict::DivergesToInfinity);
    assert!((r.limit - FIGURE_CHI).abs() < 1e-3);
}
