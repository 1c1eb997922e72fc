//! Asymptotic gain ratio and the limiting rate `log chi`.
//!
//! `chi` is the root on `[1, inf)` of `chi^4 - chi^2 - (kappa/K_W)(chi + |c|)^2`.
//! Rewriting the quartic as `chi^2 - 1 = (kappa/K_W)(1 + |c|/chi)^2` shows the
//! left side increasing and the right side non-increasing on `chi > 0`, so
//! the root is unique.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GainSequence;

const MAX_BRACKET_EXPANSIONS: usize = 64;
const MAX_BISECTIONS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoteResult {
    pub chi: f64,
    /// `1/2 log chi^2` in nats
    pub rate: f64,
    pub iterations: usize,
    /// `|quartic(chi)|`
    pub residual: f64,
}

pub fn quartic(chi: f64, kappa: f64, kw: f64, c: f64) -> f64 {
    let chi2 = chi * chi;
    let shifted = chi + c.abs();
    chi2 * chi2 - chi2 - kappa / kw * shifted * shifted
}

fn check_inputs(kappa: f64, kw: f64, c: f64) -> Result<()> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidParams("kappa must be finite and >= 0".into()));
    }
    if !(kw > 0.0 && kw.is_finite()) {
        return Err(Error::InvalidParams("K_W must be a positive finite variance".into()));
    }
    if !c.is_finite() {
        return Err(Error::InvalidParams("c must be finite".into()));
    }
    if c.abs() > 1.0 {
        warn!("|c| = {} > 1: the asymptotic bound assumes |c| <= 1; computing formally", c.abs());
    }
    Ok(())
}

/// Bisection for the quartic root on `[1, 2 + sqrt(kappa/K_W) + |c|]`,
/// widening the upper end geometrically until the sign changes, then one
/// guarded Newton step.
pub fn solve_asymptote(kappa: f64, kw: f64, c: f64) -> Result<AsymptoteResult> {
    check_inputs(kappa, kw, c)?;
    let q = |x: f64| quartic(x, kappa, kw, c);

    let mut lo = 1.0_f64;
    if q(lo) >= 0.0 {
        // only when kappa = 0
        return Ok(AsymptoteResult {
            chi: 1.0,
            rate: 0.0,
            iterations: 0,
            residual: q(lo).abs(),
        });
    }
    let mut hi = 2.0 + (kappa / kw).sqrt() + c.abs();
    let mut expansions = 0;
    while q(hi) < 0.0 {
        if expansions == MAX_BRACKET_EXPANSIONS {
            return Err(Error::BracketFailure(expansions));
        }
        lo = hi;
        hi *= 2.0;
        expansions += 1;
    }

    let mut iterations = 0;
    while iterations < MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        if q(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut chi = if q(lo).abs() <= q(hi).abs() { lo } else { hi };

    let dq = |x: f64| 4.0 * x * x * x - 2.0 * x - 2.0 * kappa / kw * (x + c.abs());
    let slope = dq(chi);
    if slope != 0.0 {
        let polished = chi - q(chi) / slope;
        if polished.is_finite() && polished >= 1.0 && q(polished).abs() < q(chi).abs() {
            chi = polished;
        }
    }

    Ok(AsymptoteResult {
        chi,
        rate: chi.ln(),
        iterations,
        residual: q(chi).abs(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointResult {
    /// `chi_2, chi_3, ...` up to convergence or the cap.
    pub sequence: Vec<f64>,
    pub limit: f64,
    pub converged: bool,
    /// Quartic root the limit is compared against.
    pub root: f64,
    pub matches_root: bool,
}

/// Iterates `chi_t = sqrt(1 + (1 + |c|/chi_{t-1})^2 kappa/K_W)` from
/// `chi_2 = 1 + kappa/K_W` until successive values differ by less than
/// `tol`, or `chi_{n_max}` has been produced.
pub fn chi_fixed_point_iteration(
    kappa: f64,
    kw: f64,
    c: f64,
    n_max: usize,
    tol: f64,
) -> Result<FixedPointResult> {
    check_inputs(kappa, kw, c)?;
    if n_max < 2 {
        return Err(Error::InvalidParams("n_max must be at least 2".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParams("tol must be positive".into()));
    }
    let r = kappa / kw;
    let mut sequence = vec![1.0 + r];
    let mut converged = false;
    while sequence.len() < n_max - 1 {
        let prev = *sequence.last().unwrap();
        let factor = 1.0 + c.abs() / prev;
        let next = (1.0 + factor * factor * r).sqrt();
        sequence.push(next);
        if (next - prev).abs() < tol {
            converged = true;
            break;
        }
    }
    let limit = *sequence.last().unwrap();
    let root = solve_asymptote(kappa, kw, c)?.chi;
    Ok(FixedPointResult {
        matches_root: (limit - root).abs() < tol,
        sequence,
        limit,
        converged,
        root,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    DivergesToInfinity,
    ConvergesToZero,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioTestConfig {
    /// Number of trailing ratios averaged.
    pub window: usize,
    pub margin: f64,
}

impl Default for RatioTestConfig {
    fn default() -> Self {
        RatioTestConfig {
            window: 10,
            margin: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioTest {
    pub verdict: Verdict,
    /// Tail average of `|g_t / g_{t-1}|`.
    pub limit: f64,
    pub window: usize,
}

/// Ratio test on a gain sequence: `L > 1` means `|g_n| -> inf`, `L < 1`
/// means `|g_n| -> 0`.
pub fn ratio_test_verdict(gains: &GainSequence, cfg: RatioTestConfig) -> Result<RatioTest> {
    let g = gains.as_slice();
    if g.iter().filter(|&&x| x != 0.0).count() < 3 {
        return Err(Error::InvalidGains("ratio test needs at least 3 nonzero gains".into()));
    }
    if cfg.window == 0 || !(cfg.margin >= 0.0) {
        return Err(Error::InvalidParams("window must be positive and margin >= 0".into()));
    }
    let ratios = g.len() - 1;
    let window = cfg.window.min(ratios);
    let start = g.len() - window;
    let mut sum = 0.0;
    for t in start..g.len() {
        if g[t - 1] == 0.0 {
            return Err(Error::ZeroGain { index: t });
        }
        sum += (g[t] / g[t - 1]).abs();
    }
    let limit = sum / window as f64;
    let verdict = if limit > 1.0 + cfg.margin {
        Verdict::DivergesToInfinity
    } else if limit < 1.0 - cfg.margin {
        Verdict::ConvergesToZero
    } else {
        Verdict::Inconclusive
    };
    Ok(RatioTest {
        verdict,
        limit,
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn memoryless_root_is_awgn_capacity() {
        for &(kappa, kw) in &[(0.1, 0.5), (1.0, 1.0), (10.0, 2.0), (3.7, 0.2)] {
            let a = solve_asymptote(kappa, kw, 0.0).unwrap();
            assert_relative_eq!(a.chi * a.chi, 1.0 + kappa / kw, max_relative = 1e-14);
            assert!((a.rate - 0.5 * (kappa / kw).ln_1p()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_power_has_unit_root() {
        let a = solve_asymptote(0.0, 1.0, 0.7).unwrap();
        assert_eq!(a.chi, 1.0);
        assert_eq!(a.rate, 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(solve_asymptote(-1.0, 1.0, 0.5).is_err());
        assert!(solve_asymptote(1.0, 0.0, 0.5).is_err());
        assert!(solve_asymptote(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn computes_formally_beyond_unit_pole() {
        let a = solve_asymptote(1.0, 1.0, 1.5).unwrap();
        assert!(a.chi > 1.0 && a.residual < 1e-10);
    }

    #[test]
    fn root_satisfies_quartic_tightly() {
        let a = solve_asymptote(1.0, 1.0, 0.5).unwrap();
        assert!(a.residual < 1e-12, "residual {}", a.residual);
        assert!(a.iterations > 10);
    }

    #[test]
    fn fixed_point_first_steps() {
        let fp = chi_fixed_point_iteration(1.0, 1.0, 0.5, 3, 1e-12).unwrap();
        assert_eq!(fp.sequence.len(), 2);
        assert_eq!(fp.sequence[0], 2.0);
        assert_relative_eq!(fp.sequence[1], 2.5625f64.sqrt(), max_relative = 1e-15);
        assert!(!fp.converged);
    }

    #[test]
    fn fixed_point_memoryless_settles_after_one_step() {
        let fp = chi_fixed_point_iteration(1.0, 1.0, 0.0, 100, 1e-12).unwrap();
        assert_eq!(fp.sequence.len(), 3);
        assert_eq!(fp.sequence[1], 2f64.sqrt());
        assert_eq!(fp.sequence[2], 2f64.sqrt());
        assert!(fp.converged && fp.matches_root);
    }

    #[test]
    fn fixed_point_reports_non_convergence() {
        let fp = chi_fixed_point_iteration(1.0, 1.0, 0.5, 4, 1e-15).unwrap();
        assert!(!fp.converged);
        assert_eq!(fp.sequence.len(), 3);
    }

    #[test]
    fn geometric_growth_and_decay() {
        let up = GainSequence((1..=20).map(|t| 2f64.powi(t)).collect());
        let r = ratio_test_verdict(&up, RatioTestConfig::default()).unwrap();
        assert_eq!(r.verdict, Verdict::DivergesToInfinity);
        assert_relative_eq!(r.limit, 2.0, max_relative = 1e-15);

        let down = GainSequence((1..=20).map(|t| 2f64.powi(-t)).collect());
        let r = ratio_test_verdict(&down, RatioTestConfig::default()).unwrap();
        assert_eq!(r.verdict, Verdict::ConvergesToZero);
        assert_relative_eq!(r.limit, 0.5, max_relative = 1e-15);

        let flat = GainSequence(vec![-1.0, 1.0, -1.0, 1.0]);
        let r = ratio_test_verdict(&flat, RatioTestConfig::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert_eq!(r.window, 3);
    }

    #[test]
    fn ratio_test_errors() {
        let few = GainSequence(vec![1.0, 0.0, 2.0]);
        assert!(ratio_test_verdict(&few, RatioTestConfig::default()).is_err());
        let zero_in_tail = GainSequence(vec![1.0, 2.0, 3.0, 0.0, 4.0]);
        let err = ratio_test_verdict(&zero_in_tail, RatioTestConfig::default()).unwrap_err();
        assert_eq!(err, Error::ZeroGain { index: 4 });
    }
}
