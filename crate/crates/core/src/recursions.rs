//! Closed-form evaluation of the scheme for a fixed gain sequence.
//!
//! With `d_t = g_t - c_t g_{t-1}` the decoder's innovation is
//! `I_t = d_t (Theta - Theta_hat_{t-1}) + W_t`, which gives the scalar
//! filter
//!
//! ```text
//! Sigma_1 = K_Theta S / (g_1^2 K_Theta + S)
//! Sigma_t = K_Wt Sigma_{t-1} / (d_t^2 Sigma_{t-1} + K_Wt)
//! I(Theta; Y^n) = 1/2 log((g_1^2 K_Theta + S) / S)
//!               + 1/2 sum_{t>=2} log((d_t^2 Sigma_{t-1} + K_Wt) / K_Wt)
//! ```
//!
//! where `S` is the variance of the first noise sample (`K_{V1}`, or
//! `K_{W_1}` when the initial state is known). Natural logarithms throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChannelParams, GainSequence, Method, RateResult, RecursionTrace};

/// Coefficients `k_t` of the estimate update `Theta_hat_t = Theta_hat_{t-1} + k_t I_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorGains {
    pub k: Vec<f64>,
}

/// Gain ratios along a sequence, with the Butman identity residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiTrace {
    /// `|g_t / g_{t-1}|` for `t = 2..n`.
    pub abs: Vec<f64>,
    /// `g_t / g_{t-1}` for `t = 2..n`.
    pub signed: Vec<f64>,
    /// Relative residual of
    /// `chi_t^2 = {1 + (1 + |c|/chi_{t-1})^2 kappa_{t-1}/K_W} kappa_t/kappa_{t-1}`
    /// for each `t = 2..n`. `None` where the identity does not apply, i.e. the
    /// sign rule fails at `t - 1` or `kappa_{t-1} = 0`. At `t = 2` the
    /// first-step form `chi_2^2 = (1 + kappa_1/S) kappa_2/kappa_1` is used.
    pub identity_residual: Vec<Option<f64>>,
}

impl ChiTrace {
    pub fn max_residual(&self) -> Option<f64> {
        self.identity_residual.iter().flatten().copied().reduce(f64::max)
    }
}

#[inline]
fn innovation_gain(g: &[f64], c: &[f64], t: usize) -> f64 {
    g[t] - c[t] * g[t - 1]
}

/// Error variances `Sigma_0..Sigma_n` without any input checks.
pub(crate) fn sigma_path(params: &ChannelParams, g: &[f64]) -> Vec<f64> {
    let s = params.initial_noise_variance();
    let kt = params.ktheta;
    let mut sigma = Vec::with_capacity(g.len() + 1);
    sigma.push(kt);
    if g.is_empty() {
        return sigma;
    }
    sigma.push(kt * s / (g[0] * g[0] * kt + s));
    for t in 1..g.len() {
        let prev = sigma[t];
        let d = innovation_gain(g, &params.c, t);
        let kw = params.kw[t];
        sigma.push(kw * prev / (d * d * prev + kw));
    }
    sigma
}

/// `I(Theta; Y^n)` in nats without any input checks.
///
/// Uses `I = 1/2 log(K_Theta / Sigma_n)` accumulated as a sum of
/// per-step log terms so no cancellation occurs.
pub(crate) fn total_mi_unchecked(params: &ChannelParams, g: &[f64]) -> f64 {
    let s = params.initial_noise_variance();
    let kt = params.ktheta;
    let mut total = 0.5 * (g[0] * g[0] * kt / s).ln_1p();
    let mut prev = kt * s / (g[0] * g[0] * kt + s);
    for t in 1..g.len() {
        let d = innovation_gain(g, &params.c, t);
        let kw = params.kw[t];
        let snr = d * d * prev / kw;
        total += 0.5 * snr.ln_1p();
        prev /= 1.0 + snr;
    }
    total
}

/// Per-step powers `kappa_t = g_t^2 Sigma_{t-1}`, unchecked.
pub(crate) fn powers_unchecked(params: &ChannelParams, g: &[f64]) -> Vec<f64> {
    let sigma = sigma_path(params, g);
    g.iter().zip(&sigma).map(|(gt, s)| gt * gt * s).collect()
}

fn abs_ratios(g: &[f64]) -> Option<Vec<f64>> {
    if g[..g.len().saturating_sub(1)].contains(&0.0) {
        return None;
    }
    Some(g.windows(2).map(|w| (w[1] / w[0]).abs()).collect())
}

fn check(params: &ChannelParams, gains: &GainSequence) -> Result<()> {
    params.clone().validate()?;
    gains.check_against(params)
}

/// Error variance, powers and per-step information via the forward recursion.
pub fn sigma_trace(params: &ChannelParams, gains: &GainSequence) -> Result<RecursionTrace> {
    check(params, gains)?;
    let g = gains.as_slice();
    let sigma = sigma_path(params, g);
    let kappa_t = g.iter().zip(&sigma).map(|(gt, s)| gt * gt * s).collect();
    let s = params.initial_noise_variance();
    let mut mi_increments = Vec::with_capacity(g.len());
    mi_increments.push(0.5 * (g[0] * g[0] * params.ktheta / s).ln_1p());
    for t in 1..g.len() {
        let d = innovation_gain(g, &params.c, t);
        mi_increments.push(0.5 * (d * d * sigma[t] / params.kw[t]).ln_1p());
    }
    Ok(RecursionTrace {
        sigma,
        kappa_t,
        chi: abs_ratios(g),
        mi_increments,
        snr: None,
    })
}

/// Error variance through the explicit sum form, which needs `K_{W_t}`
/// constant for `t >= 2`:
///
/// `Sigma_t = K_W K_Theta S / (g_1^2 K_W K_Theta + sum_{j<=t} d_j^2 K_Theta S + K_W S)`.
///
/// Also fills `SNR_t`, the first two terms of that denominator.
pub fn sigma_closed_form(params: &ChannelParams, gains: &GainSequence) -> Result<RecursionTrace> {
    check(params, gains)?;
    let kw_tail = params.kw.get(1..).unwrap_or(&[]);
    if let Some(&first) = kw_tail.first() {
        if kw_tail.iter().any(|&k| k != first) {
            return Err(Error::NotConstant("K_W_t"));
        }
    }
    let g = gains.as_slice();
    let n = g.len();
    let s = params.initial_noise_variance();
    let kt = params.ktheta;
    // K_W for t >= 2; at n = 1 any positive value gives the same Sigma_1.
    let kw = kw_tail.first().copied().unwrap_or(params.kw[0]);

    let mut sigma = Vec::with_capacity(n + 1);
    let mut snr = Vec::with_capacity(n);
    sigma.push(kt);
    let mut acc = g[0] * g[0] * kw * kt;
    snr.push(acc);
    sigma.push(kw * kt * s / (acc + kw * s));
    for t in 1..n {
        let d = innovation_gain(g, &params.c, t);
        acc += d * d * kt * s;
        snr.push(acc);
        sigma.push(kw * kt * s / (acc + kw * s));
    }

    let kappa_t = g.iter().zip(&sigma).map(|(gt, sg)| gt * gt * sg).collect();
    // d_t^2 Sigma_{t-1} / K_W = (SNR_t - SNR_{t-1}) / (SNR_{t-1} + K_W S)
    let mut mi_increments = Vec::with_capacity(n);
    mi_increments.push(0.5 * (g[0] * g[0] * kt / s).ln_1p());
    for t in 1..n {
        mi_increments.push(0.5 * ((snr[t] - snr[t - 1]) / (snr[t - 1] + kw * s)).ln_1p());
    }
    Ok(RecursionTrace {
        sigma,
        kappa_t,
        chi: abs_ratios(g),
        mi_increments,
        snr: Some(snr),
    })
}

pub fn estimator_gains(params: &ChannelParams, gains: &GainSequence) -> Result<EstimatorGains> {
    check(params, gains)?;
    Ok(estimator_gains_unchecked(params, gains.as_slice()))
}

pub(crate) fn estimator_gains_unchecked(params: &ChannelParams, g: &[f64]) -> EstimatorGains {
    let sigma = sigma_path(params, g);
    let s = params.initial_noise_variance();
    let kt = params.ktheta;
    let mut k = Vec::with_capacity(g.len());
    k.push(g[0] * kt / (g[0] * g[0] * kt + s));
    for t in 1..g.len() {
        let d = innovation_gain(g, &params.c, t);
        let prev = sigma[t];
        k.push(d * prev / (d * d * prev + params.kw[t]));
    }
    EstimatorGains { k }
}

/// `I(Theta; Y^n)` for the given gains, as a rate result with its trace.
pub fn mutual_information(params: &ChannelParams, gains: &GainSequence) -> Result<RateResult> {
    let trace = sigma_trace(params, gains)?;
    let total_mi: f64 = trace.mi_increments.iter().sum();
    Ok(RateResult {
        rate: total_mi / params.n as f64,
        total_mi,
        trace,
        gains: gains.clone(),
        problem: None,
        method: Method::Evaluation,
        converged: true,
    })
}

/// Gain ratios `chi_t` for `t = 2..n` plus the residual of the Butman
/// recursion identity at every step where the sign rule holds.
///
/// The identity is checked in the no-initial-state/known-state form used
/// by Butman's recursion only; the `1/(K_W K_Theta K_V1)` normalised form is
/// not reconciled with it.
pub fn chi_trace(params: &ChannelParams, gains: &GainSequence) -> Result<ChiTrace> {
    check(params, gains)?;
    let g = gains.as_slice();
    if let Some(i) = g[..g.len().saturating_sub(1)].iter().position(|&x| x == 0.0) {
        return Err(Error::ZeroGain { index: i + 1 });
    }
    let kappa = powers_unchecked(params, g);
    let s = params.initial_noise_variance();
    let signed: Vec<f64> = g.windows(2).map(|w| w[1] / w[0]).collect();
    let abs: Vec<f64> = signed.iter().map(|x| x.abs()).collect();

    let mut identity_residual = Vec::with_capacity(abs.len());
    for (i, &chi) in abs.iter().enumerate() {
        // step t = i + 2 (1-based), gains g[i] -> g[i + 1]
        let t = i + 1;
        let lhs = chi * chi;
        let rhs = if kappa[t - 1] == 0.0 {
            None
        } else if t == 1 {
            Some((1.0 + kappa[0] / s) * kappa[1] / kappa[0])
        } else {
            let c = params.c[t - 1];
            let sign_rule = c == 0.0 || g[t - 1] * c * g[t - 2] <= 0.0;
            sign_rule.then(|| {
                let prev_chi = abs[i - 1];
                let factor = 1.0 + c.abs() / prev_chi;
                (1.0 + factor * factor * kappa[t - 1] / params.kw[t - 1]) * kappa[t] / kappa[t - 1]
            })
        };
        identity_residual.push(rhs.map(|r| (lhs - r).abs() / lhs.abs().max(1.0)));
    }
    Ok(ChiTrace {
        abs,
        signed,
        identity_residual,
    })
}
