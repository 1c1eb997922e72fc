//! Monte Carlo runs of the linear feedback scheme on sampled noise paths.
//!
//! Random streams: trial `i` draws from ChaCha8 keyed by
//! `ChaCha8Rng::seed_from_u64(seed)` on stream `i`, so every trial's path
//! depends only on `(seed, i)`. Normals are `rand_distr::StandardNormal`
//! (ziggurat). Draw order per trial: `Theta`, first noise sample, then for
//! each `t`: `xi_t`, and `W_t` for `t >= 2`. `xi_t` is drawn even when no
//! perturbation is applied, so runs at different `eps` share noise paths.
//!
//! Trials are processed in fixed-size chunks in parallel; chunk statistics
//! are combined in chunk order, so results do not depend on thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChannelParams, GainSequence, SimOutcome, StateKind};
use crate::optimizer::solve_b2;
use crate::recursions::{estimator_gains_unchecked, sigma_path};

const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
}

impl RngSpec {
    pub fn new(seed: u64) -> Self {
        RngSpec { seed }
    }

    pub fn trial_stream(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        rng
    }
}

/// Perturbation of the error signal before gain scaling:
/// `X_t = g_t (Theta - Theta_hat_{t-1} + p_t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PerturbationSpec {
    None,
    /// `p_t = eps * xi_t` with `xi_t ~ N(0, 1)`.
    Constant(f64),
    /// Deterministic offset `p_t = eps_t`.
    Custom(Vec<f64>),
}

impl PerturbationSpec {
    fn validate(&self, n: usize) -> Result<()> {
        match self {
            PerturbationSpec::None => Ok(()),
            PerturbationSpec::Constant(e) if *e >= 0.0 && e.is_finite() => Ok(()),
            PerturbationSpec::Constant(_) => {
                Err(Error::InvalidConfig("perturbation eps must be finite and >= 0".into()))
            }
            PerturbationSpec::Custom(v) if v.len() != n => Err(Error::InvalidConfig(format!(
                "custom perturbation has {} entries, expected {n}",
                v.len()
            ))),
            PerturbationSpec::Custom(v) if v.iter().all(|e| *e >= 0.0 && e.is_finite()) => Ok(()),
            PerturbationSpec::Custom(_) => {
                Err(Error::InvalidConfig("perturbation eps_t must be finite and >= 0".into()))
            }
        }
    }

    pub fn magnitude(&self, t: usize) -> f64 {
        match self {
            PerturbationSpec::None => 0.0,
            PerturbationSpec::Constant(e) => *e,
            PerturbationSpec::Custom(v) => v[t],
        }
    }
}

#[derive(Clone)]
struct Moments {
    err2: f64,
    err4: f64,
    x2: Vec<f64>,
    x4: Vec<f64>,
    innov: Vec<f64>,
    /// row-major n x n
    innov_cross: Vec<f64>,
}

impl Moments {
    fn new(n: usize) -> Self {
        Moments {
            err2: 0.0,
            err4: 0.0,
            x2: vec![0.0; n],
            x4: vec![0.0; n],
            innov: vec![0.0; n],
            innov_cross: vec![0.0; n * n],
        }
    }

    fn absorb(&mut self, other: &Moments) {
        self.err2 += other.err2;
        self.err4 += other.err4;
        let add = |a: &mut [f64], b: &[f64]| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        add(&mut self.x2, &other.x2);
        add(&mut self.x4, &other.x4);
        add(&mut self.innov, &other.innov);
        add(&mut self.innov_cross, &other.innov_cross);
    }
}

struct Scheme<'a> {
    params: &'a ChannelParams,
    g: &'a [f64],
    k: Vec<f64>,
    perturb: &'a PerturbationSpec,
}

impl Scheme<'_> {
    fn run_trial(&self, rng: &mut ChaCha8Rng, x_out: &mut [f64], innov_out: &mut [f64]) -> f64 {
        let p = self.params;
        let n = self.g.len();
        let normal = |rng: &mut ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };

        let theta = p.ktheta.sqrt() * normal(rng);
        // v_0 = 0 in the known-state variant, so V_1 = W_1
        let first_sd = match p.state_kind {
            StateKind::NoInitialState => p.kv1.sqrt(),
            StateKind::KnownInitialState => p.kw[0].sqrt(),
        };
        let mut v = first_sd * normal(rng);

        let (mut est, mut est_prev) = (0.0_f64, 0.0_f64);
        let mut y_prev = 0.0;
        for t in 0..n {
            let xi = normal(rng);
            let offset = match self.perturb {
                PerturbationSpec::None => 0.0,
                PerturbationSpec::Constant(e) => e * xi,
                PerturbationSpec::Custom(eps) => eps[t],
            };
            let x = self.g[t] * (theta - est + offset);
            if t > 0 {
                v = p.c[t] * v + p.kw[t].sqrt() * normal(rng);
            }
            let y = x + v;
            // Y_t - E[Y_t | Y^{t-1}] as computed by a decoder that assumes no perturbation
            let innovation = if t == 0 {
                y
            } else {
                y - p.c[t] * y_prev + p.c[t] * self.g[t - 1] * (est - est_prev)
            };
            est_prev = est;
            est += self.k[t] * innovation;
            y_prev = y;
            x_out[t] = x;
            innov_out[t] = innovation;
        }
        theta - est
    }
}

/// Runs `trials` independent transmissions of the scheme with gains `gains`;
/// the decoder always uses the unperturbed design.
pub fn simulate(
    params: &ChannelParams,
    gains: &GainSequence,
    trials: usize,
    rng: RngSpec,
    perturb: &PerturbationSpec,
) -> Result<SimOutcome> {
    let params = params.clone().validate()?;
    gains.check_against(&params)?;
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    perturb.validate(params.n)?;
    let n = params.n;
    let g = gains.as_slice();
    let scheme = Scheme {
        params: &params,
        g,
        k: estimator_gains_unchecked(&params, g).k,
        perturb,
    };

    let chunks = trials.div_ceil(CHUNK);
    let partial: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut m = Moments::new(n);
            let mut x = vec![0.0; n];
            let mut innov = vec![0.0; n];
            let end = ((chunk + 1) * CHUNK).min(trials);
            for trial in chunk * CHUNK..end {
                let mut stream = rng.trial_stream(trial as u64);
                let e = scheme.run_trial(&mut stream, &mut x, &mut innov);
                let e2 = e * e;
                m.err2 += e2;
                m.err4 += e2 * e2;
                for t in 0..n {
                    let x2 = x[t] * x[t];
                    m.x2[t] += x2;
                    m.x4[t] += x2 * x2;
                    m.innov[t] += innov[t];
                    for s in 0..n {
                        m.innov_cross[t * n + s] += innov[t] * innov[s];
                    }
                }
            }
            m
        })
        .collect();
    let mut total = Moments::new(n);
    for m in &partial {
        total.absorb(m);
    }

    let nt = trials as f64;
    let dof = (trials.max(2) - 1) as f64;
    let mean_and_se = |sum: f64, sum_sq: f64| -> (f64, f64) {
        let mean = sum / nt;
        let var = ((sum_sq - nt * mean * mean) / dof).max(0.0);
        (mean, (var / nt).sqrt())
    };
    let (empirical_sigma_n, sigma_n_std_error) = mean_and_se(total.err2, total.err4);
    let (empirical_power, power_std_error): (Vec<f64>, Vec<f64>) =
        (0..n).map(|t| mean_and_se(total.x2[t], total.x4[t])).unzip();

    let cov = |t: usize, s: usize| -> f64 {
        (total.innov_cross[t * n + s] - total.innov[t] * total.innov[s] / nt) / dof
    };
    let innovation_correlation = (0..n)
        .map(|t| {
            (0..n)
                .map(|s| {
                    let denom = (cov(t, t) * cov(s, s)).sqrt();
                    if denom > 0.0 {
                        cov(t, s) / denom
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();

    Ok(SimOutcome {
        trials,
        seed: rng.seed,
        empirical_sigma_n,
        sigma_n_std_error,
        empirical_power,
        power_std_error,
        amplification: (0..n).map(|t| g[t].abs() * perturb.magnitude(t)).collect(),
        innovation_correlation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FragilityRow {
    pub n: usize,
    /// `|g_n|` of the equal-power Butman gains at horizon `n`
    pub gain_n: f64,
    /// `|g_n| * eps`
    pub amplification: f64,
    pub analytic_sigma_n: f64,
    pub empirical_sigma_n: f64,
    /// empirical `Sigma_n` under perturbation minus the analytic value
    pub excess_mse: f64,
    pub excess_std_error: f64,
}

/// Amplification of an `eps`-perturbation of the error signal by the
/// equal-power Butman gains, one row per horizon (sorted, deduplicated).
pub fn fragility_report(
    params: &ChannelParams,
    eps: f64,
    n_list: &[usize],
    trials: usize,
    rng: RngSpec,
) -> Result<Vec<FragilityRow>> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidConfig("eps must be finite and >= 0".into()));
    }
    let mut horizons = n_list.to_vec();
    horizons.sort_unstable();
    horizons.dedup();
    if horizons.is_empty() {
        return Err(Error::InvalidConfig("fragility needs at least one horizon".into()));
    }
    horizons
        .into_iter()
        .map(|n| {
            let p = params.with_horizon(n).validate()?;
            let b2 = solve_b2(&p)?;
            let g = b2.gains.as_slice();
            let analytic = *sigma_path(&p, g).last().unwrap();
            let sim = simulate(&p, &b2.gains, trials, rng, &PerturbationSpec::Constant(eps))?;
            let gain_n = g[n - 1].abs();
            Ok(FragilityRow {
                n,
                gain_n,
                amplification: gain_n * eps,
                analytic_sigma_n: analytic,
                empirical_sigma_n: sim.empirical_sigma_n,
                excess_mse: sim.empirical_sigma_n - analytic,
                excess_std_error: sim.sigma_n_std_error,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_trials_rejected() {
        let p = ChannelParams::figure_defaults(3);
        let g = GainSequence(vec![1.0, -1.0, 1.0]);
        assert!(simulate(&p, &g, 0, RngSpec::new(1), &PerturbationSpec::None).is_err());
    }

    #[test]
    fn bad_perturbations_rejected() {
        let p = ChannelParams::figure_defaults(3);
        let g = GainSequence(vec![1.0, -1.0, 1.0]);
        let rng = RngSpec::new(1);
        assert!(simulate(&p, &g, 10, rng, &PerturbationSpec::Constant(-1.0)).is_err());
        assert!(simulate(&p, &g, 10, rng, &PerturbationSpec::Custom(vec![0.0; 2])).is_err());
        assert!(fragility_report(&p, -1e-6, &[3], 10, rng).is_err());
    }

    #[test]
    fn streams_are_keyed_by_trial() {
        let spec = RngSpec::new(42);
        let a: f64 = spec.trial_stream(7).sample(StandardNormal);
        let b: f64 = spec.trial_stream(7).sample(StandardNormal);
        let c: f64 = spec.trial_stream(8).sample(StandardNormal);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_gains_leave_prior_error() {
        let p = ChannelParams::constant(10, 0.5, 1.0, 1.0, 2.0, 1.0);
        let out = simulate(&p, &GainSequence::zeros(10), 20_000, RngSpec::new(3), &PerturbationSpec::None)
            .unwrap();
        assert!((out.empirical_sigma_n - 2.0).abs() < 3.0 * out.sigma_n_std_error);
        assert!(out.empirical_power.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn amplification_is_gain_times_eps() {
        let p = ChannelParams::figure_defaults(4);
        let g = GainSequence(vec![1.0, -2.0, 3.0, -4.0]);
        let out = simulate(&p, &g, 5, RngSpec::new(0), &PerturbationSpec::Constant(0.5)).unwrap();
        assert_eq!(out.amplification, vec![0.5, 1.0, 1.5, 2.0]);
        let out = simulate(&p, &g, 5, RngSpec::new(0), &PerturbationSpec::Custom(vec![0.0, 1.0, 0.0, 2.0]))
            .unwrap();
        assert_eq!(out.amplification, vec![0.0, 2.0, 0.0, 8.0]);
    }

    #[test]
    fn report_rows_are_sorted() {
        let p = ChannelParams::figure_defaults(1);
        let rows = fragility_report(&p, 1e-6, &[10, 5, 10, 7], 100, RngSpec::new(0)).unwrap();
        let ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
        assert_eq!(ns, vec![5, 7, 10]);
    }
}
