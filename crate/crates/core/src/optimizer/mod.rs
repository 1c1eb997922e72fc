//! Rate problems over the gain sequence.
//!
//! * `B2`: equal per-step power and Butman's sign rule; no free parameters.
//! * `P2`: equal per-step power, any signs. With `g_t^2 Sigma_{t-1} = kappa`
//!   each magnitude is fixed by the past, so the feasible set is the
//!   `2^{n-1}` sign patterns of `g_2..g_n` (`g_1 > 0` by global sign symmetry).
//! * `B1`/`P1`: total power `sum_t kappa_t <= n kappa`, with and without the
//!   sign rule. Solved by multi-start simplex search on the gains, each
//!   candidate rescaled onto the power boundary.
//!
//! Butman's sign rule is `sgn(g_t) = -sgn(c g_{t-1})`; when `c g_{t-1} = 0`
//! the gain is taken positive.

mod simplex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChannelParams, GainSequence, Method, Problem, RateResult};
use crate::recursions::{self, mutual_information, total_mi_unchecked};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum P2Branch {
    /// Exhaustive sign search plus the penalised continuous search.
    Both,
    Exhaustive,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Largest horizon for which all sign patterns are enumerated.
    pub sign_search_limit: usize,
    pub restarts: usize,
    pub seed: u64,
    pub p2_branch: P2Branch,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            tol: 1e-12,
            max_iter: 20_000,
            sign_search_limit: 20,
            restarts: 8,
            seed: 0,
            p2_branch: P2Branch::Both,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(self) -> Result<Self> {
        if !(self.tol > 0.0) || self.max_iter == 0 || self.sign_search_limit == 0 {
            return Err(Error::InvalidConfig(
                "optimizer tol, max_iter and sign_search_limit must be positive".into(),
            ));
        }
        Ok(self)
    }
}

fn butman_sign(c: f64, prev: f64) -> f64 {
    if c * prev > 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn finish(
    params: &ChannelParams,
    gains: GainSequence,
    problem: Problem,
    method: Method,
    converged: bool,
) -> Result<RateResult> {
    let mut r = mutual_information(params, &gains)?;
    r.problem = Some(problem);
    r.method = method;
    r.converged = converged;
    Ok(r)
}

// ---------------------------------------------------------------------------
// B2
// ---------------------------------------------------------------------------

/// Gain ratios `chi_2..chi_n` along the equal-power Butman strategy:
/// `chi_2^2 = 1 + kappa/S`, `chi_t^2 = 1 + (1 + |c|/chi_{t-1})^2 kappa/K_W`.
pub fn b2_chi_sequence(params: &ChannelParams) -> Result<Vec<f64>> {
    let params = params.clone().validate()?;
    let (c, kw) = params.constant_channel()?;
    let kappa = params.kappa;
    let mut chi = Vec::with_capacity(params.n.saturating_sub(1));
    if params.n >= 2 {
        chi.push((1.0 + kappa / params.initial_noise_variance()).sqrt());
    }
    while chi.len() + 1 < params.n {
        let factor = 1.0 + c.abs() / chi.last().unwrap();
        chi.push((1.0 + factor * factor * kappa / kw).sqrt());
    }
    Ok(chi)
}

/// Rebuilds the equal-power gains from their ratios: `g_1 = sqrt(kappa/K_Theta)`,
/// `|g_t| = sqrt(kappa / Sigma_{t-1})` with `Sigma` from the explicit sum form,
/// signs from Butman's rule.
pub fn recover_gains_from_chi(chi: &[f64], params: &ChannelParams) -> Result<GainSequence> {
    let params = params.clone().validate()?;
    let (c, kw) = params.constant_channel()?;
    if chi.len() + 1 != params.n {
        return Err(Error::InvalidGains(format!(
            "expected {} ratios for n = {}, got {}",
            params.n - 1,
            params.n,
            chi.len()
        )));
    }
    let kappa = params.kappa;
    let kt = params.ktheta;
    let s = params.initial_noise_variance();
    let numerator = kw * kt * s;

    let mut g = Vec::with_capacity(params.n);
    g.push((kappa / kt).sqrt());
    let mut denom = g[0] * g[0] * kw * kt + kw * s;
    for (i, &ratio) in chi.iter().enumerate() {
        let t = i + 2;
        let sigma_prev = numerator / denom;
        if !(sigma_prev.is_normal() && sigma_prev > 0.0) {
            return Err(Error::SigmaUnderflow { t: t - 1 });
        }
        let magnitude = (kappa / sigma_prev).sqrt();
        if !magnitude.is_finite() {
            return Err(Error::SigmaUnderflow { t: t - 1 });
        }
        let gt = butman_sign(c, g[t - 2]) * magnitude;
        let factor = 1.0 + c.abs() / ratio;
        denom += gt * gt * factor * factor * kt * s;
        g.push(gt);
    }
    GainSequence::new(g)
}

/// Equal-power Butman strategy; the rate is
/// `(1/n)[1/2 log(1 + kappa/S) + 1/2 sum_{t>=2} log(1 + (1 + |c|/chi_t)^2 kappa/K_W)]`.
pub fn solve_b2(params: &ChannelParams) -> Result<RateResult> {
    let params = params.clone().validate()?;
    let (c, kw) = params.constant_channel()?;
    let chi = b2_chi_sequence(&params)?;
    let gains = recover_gains_from_chi(&chi, &params)?;
    let kappa = params.kappa;
    let mut total_mi = 0.5 * (kappa / params.initial_noise_variance()).ln_1p();
    for &ratio in &chi {
        let factor = 1.0 + c.abs() / ratio;
        total_mi += 0.5 * (factor * factor * kappa / kw).ln_1p();
    }
    let trace = recursions::sigma_trace(&params, &gains)?;
    Ok(RateResult {
        rate: total_mi / params.n as f64,
        total_mi,
        trace,
        gains,
        problem: Some(Problem::B2),
        method: Method::Recursion,
        converged: true,
    })
}

// ---------------------------------------------------------------------------
// P2
// ---------------------------------------------------------------------------

/// Equal-power gains for the given signs of `g_2..g_n` (`g_1 > 0`).
pub fn pointwise_gains(params: &ChannelParams, signs: &[f64]) -> Vec<f64> {
    let kappa = params.kappa;
    let kt = params.ktheta;
    let s = params.initial_noise_variance();
    let mut g = Vec::with_capacity(signs.len() + 1);
    g.push((kappa / kt).sqrt());
    let mut sigma = kt * s / (g[0] * g[0] * kt + s);
    for (i, &sign) in signs.iter().enumerate() {
        let t = i + 1;
        let gt = sign.signum() * (kappa / sigma).sqrt();
        let d = gt - params.c[t] * g[t - 1];
        sigma = params.kw[t] * sigma / (d * d * sigma + params.kw[t]);
        g.push(gt);
    }
    g
}

fn pattern_signs(mask: u64, len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 })
        .collect()
}

/// Both P2 branches, kept for cross-checking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P2Report {
    pub best: RateResult,
    pub exhaustive: Option<RateResult>,
    pub continuous: Option<RateResult>,
}

fn p2_exhaustive(params: &ChannelParams) -> Result<RateResult> {
    let free = params.n - 1;
    let count = 1u64 << free;
    let (_, mask) = (0..count)
        .into_par_iter()
        .map(|mask| {
            let g = pointwise_gains(params, &pattern_signs(mask, free));
            (total_mi_unchecked(params, &g), mask)
        })
        .reduce(
            || (f64::NEG_INFINITY, u64::MAX),
            |a, b| match a.0.total_cmp(&b.0) {
                std::cmp::Ordering::Greater => a,
                std::cmp::Ordering::Less => b,
                std::cmp::Ordering::Equal => {
                    if a.1 <= b.1 {
                        a
                    } else {
                        b
                    }
                }
            },
        );
    let gains = GainSequence::new(pointwise_gains(params, &pattern_signs(mask, free)))?;
    finish(params, gains, Problem::P2, Method::ExhaustiveSignSearch, true)
}

fn p2_continuous(params: &ChannelParams, cfg: &OptimizerConfig) -> Result<RateResult> {
    let n = params.n;
    let kappa = params.kappa;
    let g1 = (kappa / params.ktheta).sqrt();
    let nf = n as f64;

    let objective = |mu: f64| {
        move |y: &[f64]| -> f64 {
            let mut g = Vec::with_capacity(n);
            g.push(g1);
            g.extend_from_slice(y);
            let sigma = recursions::sigma_path(params, &g);
            let penalty: f64 = (1..n)
                .map(|t| {
                    let v = (g[t] * g[t] * sigma[t] - kappa) / kappa;
                    v * v
                })
                .sum();
            -total_mi_unchecked(params, &g) / nf + mu * penalty
        }
    };

    let starts = cfg.restarts.max(1);
    let runs: Vec<(f64, Vec<f64>, bool)> = (0..starts)
        .into_par_iter()
        .map(|k| {
            let signs: Vec<f64> = if k == 0 {
                let mut g = vec![g1];
                let mut s = Vec::with_capacity(n - 1);
                for t in 1..n {
                    let sign = butman_sign(params.c[t], g[t - 1]);
                    s.push(sign);
                    g = pointwise_gains(params, &s);
                }
                s
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(k as u64);
                (1..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
            };
            let mut y: Vec<f64> = pointwise_gains(params, &signs)[1..].to_vec();
            let mut converged = true;
            for mu in [1e1, 1e3, 1e5, 1e7] {
                let steps: Vec<f64> = y.iter().map(|v| 0.05 * v.abs().max(1e-3)).collect();
                let out = simplex::minimize(objective(mu), &y, &steps, cfg.tol, cfg.max_iter);
                converged &= out.converged;
                y = out.x;
            }
            // restore exact feasibility from the signs the search settled on
            let snapped = pointwise_gains(params, &y);
            (total_mi_unchecked(params, &snapped), snapped, converged)
        })
        .collect();

    let (_, g, converged) = runs
        .into_iter()
        .reduce(|a, b| if b.0 > a.0 { b } else { a })
        .unwrap();
    finish(
        params,
        GainSequence::new(g)?,
        Problem::P2,
        Method::ContinuousPenalty,
        converged,
    )
}

/// Equal per-step power with free signs; see [`solve_p2`].
pub fn solve_p2_report(params: &ChannelParams, cfg: &OptimizerConfig) -> Result<P2Report> {
    let params = params.clone().validate()?;
    let cfg = cfg.validate()?;
    params.constant_channel()?;
    let n = params.n;
    let wants_exhaustive = cfg.p2_branch != P2Branch::Continuous;
    if wants_exhaustive && n > cfg.sign_search_limit {
        return Err(Error::SignSearchLimit {
            n,
            limit: cfg.sign_search_limit,
        });
    }
    if n == 1 || params.kappa == 0.0 {
        // a single feasible point
        let gains = GainSequence::new(pointwise_gains(&params, &vec![1.0; n - 1]))?;
        let r = finish(&params, gains, Problem::P2, Method::ExhaustiveSignSearch, true)?;
        return Ok(P2Report {
            exhaustive: Some(r.clone()),
            continuous: None,
            best: r,
        });
    }
    let exhaustive = wants_exhaustive.then(|| p2_exhaustive(&params)).transpose()?;
    let continuous = (cfg.p2_branch != P2Branch::Exhaustive)
        .then(|| p2_continuous(&params, &cfg))
        .transpose()?;
    let best = match (&exhaustive, &continuous) {
        (Some(e), Some(c)) => {
            if c.total_mi > e.total_mi {
                c.clone()
            } else {
                e.clone()
            }
        }
        (Some(e), None) => e.clone(),
        (None, Some(c)) => c.clone(),
        (None, None) => unreachable!(),
    };
    Ok(P2Report {
        best,
        exhaustive,
        continuous,
    })
}

/// Best rate under `E[X_t^2] = kappa` for every `t`. The winning branch is
/// named in `method`.
pub fn solve_p2(params: &ChannelParams, cfg: &OptimizerConfig) -> Result<RateResult> {
    Ok(solve_p2_report(params, cfg)?.best)
}

// ---------------------------------------------------------------------------
// P1 / B1
// ---------------------------------------------------------------------------

/// Scales `g` by the unique `alpha > 0` with `sum_t kappa_t(alpha g) = n kappa`.
/// Total power is increasing in `alpha` because `alpha^2 Sigma_{t-1}(alpha g)`
/// is. Returns `None` for an all-zero direction.
pub(crate) fn project_total_power(params: &ChannelParams, g: &[f64]) -> Option<Vec<f64>> {
    if g.iter().all(|&x| x == 0.0) || g.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let target = params.n as f64 * params.kappa;
    let excess = |log_alpha: f64| -> f64 {
        let alpha = log_alpha.exp();
        let scaled: Vec<f64> = g.iter().map(|x| alpha * x).collect();
        let total: f64 = recursions::powers_unchecked(params, &scaled).iter().sum();
        total.ln() - target.ln()
    };
    let (mut lo, mut hi) = (0.0_f64, 0.0_f64);
    if excess(0.0) < 0.0 {
        while excess(hi) < 0.0 {
            lo = hi;
            hi += 4.0;
            if hi > 700.0 {
                return None;
            }
        }
    } else {
        while excess(lo) > 0.0 {
            hi = lo;
            lo -= 4.0;
            if lo < -700.0 {
                return None;
            }
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = (0.5 * (lo + hi)).exp();
    Some(g.iter().map(|x| alpha * x).collect())
}

fn butman_signed(params: &ChannelParams, magnitudes: &[f64]) -> Vec<f64> {
    let mut g = Vec::with_capacity(magnitudes.len());
    for (t, m) in magnitudes.iter().enumerate() {
        let sign = if t == 0 {
            1.0
        } else {
            butman_sign(params.c[t], g[t - 1])
        };
        g.push(sign * m.abs());
    }
    g
}

fn total_power_search(
    params: &ChannelParams,
    cfg: &OptimizerConfig,
    starts: Vec<Vec<f64>>,
    sign_rule: bool,
    problem: Problem,
) -> Result<RateResult> {
    let n = params.n;
    let nf = n as f64;
    let map = |x: &[f64]| -> Vec<f64> {
        if sign_rule {
            butman_signed(params, x)
        } else {
            x.to_vec()
        }
    };
    let objective = |x: &[f64]| -> f64 {
        match project_total_power(params, &map(x)) {
            Some(g) => -total_mi_unchecked(params, &g) / nf,
            None => 0.0,
        }
    };

    let mut candidates: Vec<Vec<f64>> = starts;
    let base = candidates[0].clone();
    for k in 1..cfg.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(k as u64);
        let x: Vec<f64> = base
            .iter()
            .map(|v| {
                let z: f64 = rng.sample(StandardNormal);
                let flip = !sign_rule && rng.random::<f64>() < 0.25;
                let mag = v.abs().max(1e-2) * (0.5 * z).exp();
                if flip {
                    -v.signum() * mag
                } else {
                    v.signum() * mag
                }
            })
            .collect();
        candidates.push(x);
    }

    let runs: Vec<(f64, Vec<f64>, bool)> = candidates
        .into_par_iter()
        .map(|x0| {
            let mut x = x0;
            let mut converged = false;
            let mut value = objective(&x);
            // restart from the previous optimum until no further progress
            for _ in 0..4 {
                let steps: Vec<f64> = x.iter().map(|v| 0.1 * v.abs().max(1e-2)).collect();
                let out = simplex::minimize(objective, &x, &steps, cfg.tol, cfg.max_iter);
                let improved = out.value < value - cfg.tol * (1.0 + value.abs());
                converged = out.converged;
                if out.value <= value {
                    x = out.x;
                    value = out.value;
                }
                if !improved {
                    break;
                }
            }
            (value, x, converged)
        })
        .collect();

    let (_, x, converged) = runs
        .into_iter()
        .reduce(|a, b| if b.0 < a.0 { b } else { a })
        .unwrap();
    let g = project_total_power(params, &map(&x)).unwrap_or_else(|| vec![0.0; n]);
    finish(
        params,
        GainSequence::new(g)?,
        problem,
        Method::ProjectedSimplex,
        converged,
    )
}

fn total_power_preamble(
    params: &ChannelParams,
    cfg: &OptimizerConfig,
    problem: Problem,
) -> Result<(ChannelParams, OptimizerConfig, Option<RateResult>)> {
    let params = params.clone().validate()?;
    let cfg = cfg.validate()?;
    params.constant_channel()?;
    if params.kappa == 0.0 {
        let r = finish(&params, GainSequence::zeros(params.n), problem, Method::ProjectedSimplex, true)?;
        return Ok((params, cfg, Some(r)));
    }
    Ok((params, cfg, None))
}

/// Total-power problem restricted to Butman's sign rule: only the
/// magnitudes `|g_t|` are searched. Seeded with the equal-power gains.
pub fn solve_b1(params: &ChannelParams, cfg: &OptimizerConfig) -> Result<RateResult> {
    let (params, cfg, trivial) = total_power_preamble(params, cfg, Problem::B1)?;
    if let Some(r) = trivial {
        return Ok(r);
    }
    let seed = solve_b2(&params)?.gains.0.iter().map(|g| g.abs()).collect();
    total_power_search(&params, &cfg, vec![seed], true, Problem::B1)
}

/// Total-power problem over all real gains. Seeded with the B1 optimum and
/// the equal-power gains, so its value is never below either.
pub fn solve_p1(params: &ChannelParams, cfg: &OptimizerConfig) -> Result<RateResult> {
    let (params, cfg, trivial) = total_power_preamble(params, cfg, Problem::P1)?;
    if let Some(r) = trivial {
        return Ok(r);
    }
    let b1 = solve_b1(&params, &cfg)?;
    let b2 = solve_b2(&params)?;
    total_power_search(&params, &cfg, vec![b1.gains.0, b2.gains.0], false, Problem::P1)
}
