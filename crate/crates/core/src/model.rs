//! Parameter and result types shared by every solver.
//!
//! The channel is `Y_t = X_t + V_t` with first-order autoregressive noise
//! `V_t = c_t V_{t-1} + W_t`, `W_t ~ N(0, K_{W_t})`, and a Gaussian message
//! `Theta ~ N(0, K_Theta)` sent through the linear feedback scheme
//! `X_t = g_t (Theta - E[Theta | Y^{t-1}])`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which power constraint a rate problem is posed under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintKind {
    /// `(1/n) sum_t E[X_t^2] <= kappa`.
    TotalAverage,
    /// `E[X_t^2] = kappa` at every transmission.
    PointwisePerSymbol,
}

/// Whether the initial noise state `V_0` is known to both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateKind {
    /// `V_0` is trivial; the first noise sample has variance `K_{V1}`.
    NoInitialState,
    /// `V_0 = v_0` is known; the first noise sample has variance `K_{W_1}`.
    KnownInitialState,
}

/// AR(1) channel description and power budget.
///
/// `c` and `kw` are indexed by transmission, `c[0]` being `c_1`. The entry
/// `c[0]` only matters to the simulator in the known-initial-state variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub n: usize,
    pub c: Vec<f64>,
    pub kw: Vec<f64>,
    pub kv1: f64,
    pub ktheta: f64,
    pub kappa: f64,
    pub constraint_kind: ConstraintKind,
    pub state_kind: StateKind,
}

impl ChannelParams {
    /// Time-invariant channel: `c_t = c`, `K_{W_t} = kw` for every `t`.
    pub fn constant(n: usize, c: f64, kw: f64, kv1: f64, ktheta: f64, kappa: f64) -> Self {
        ChannelParams {
            n,
            c: vec![c; n],
            kw: vec![kw; n],
            kv1,
            ktheta,
            kappa,
            constraint_kind: ConstraintKind::PointwisePerSymbol,
            state_kind: StateKind::KnownInitialState,
        }
    }

    /// Unit variances, `c = 0.5`, `kappa = 1`: the parameter set used for the
    /// gain-growth and rate-comparison figures.
    pub fn figure_defaults(n: usize) -> Self {
        Self::constant(n, 0.5, 1.0, 1.0, 1.0, 1.0)
    }

    pub fn with_state(mut self, state_kind: StateKind) -> Self {
        self.state_kind = state_kind;
        self
    }

    pub fn with_constraint(mut self, constraint_kind: ConstraintKind) -> Self {
        self.constraint_kind = constraint_kind;
        self
    }

    /// Copy with a different horizon; per-step lists are truncated or padded
    /// with their last entry.
    pub fn with_horizon(&self, n: usize) -> Self {
        let resize = |v: &[f64]| -> Vec<f64> {
            let fill = v.last().copied().unwrap_or(0.0);
            let mut out: Vec<f64> = v.iter().copied().take(n).collect();
            out.resize(n, fill);
            out
        };
        ChannelParams {
            n,
            c: resize(&self.c),
            kw: resize(&self.kw),
            ..self.clone()
        }
    }

    pub fn validate(self) -> Result<Self> {
        if self.n == 0 {
            return Err(Error::InvalidParams("horizon n must be positive".into()));
        }
        if self.c.len() != self.n || self.kw.len() != self.n {
            return Err(Error::InvalidParams(format!(
                "c and kw must have length n = {} (got {} and {})",
                self.n,
                self.c.len(),
                self.kw.len()
            )));
        }
        if let Some(t) = self.c.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidParams(format!("c_{} is not finite", t + 1)));
        }
        if let Some(t) = self.kw.iter().position(|&k| !(k > 0.0 && k.is_finite())) {
            return Err(Error::InvalidParams(format!(
                "K_W at t = {} must be a positive finite variance",
                t + 1
            )));
        }
        if !(self.kv1 > 0.0 && self.kv1.is_finite()) {
            return Err(Error::InvalidParams("K_V1 must be a positive finite variance".into()));
        }
        if !(self.ktheta > 0.0 && self.ktheta.is_finite()) {
            return Err(Error::InvalidParams("K_Theta must be a positive finite variance".into()));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidParams("power budget kappa must be finite and >= 0".into()));
        }
        Ok(self)
    }

    /// Variance of the first noise sample seen by the decoder: `K_{V1}`, or
    /// `K_{W_1}` when the initial state is known.
    pub fn initial_noise_variance(&self) -> f64 {
        match self.state_kind {
            StateKind::NoInitialState => self.kv1,
            StateKind::KnownInitialState => self.kw[0],
        }
    }

    /// `(c, K_W)` when both are constant over `t >= 2`.
    pub fn constant_channel(&self) -> Result<(f64, f64)> {
        let tail_c = self.c.get(1..).unwrap_or(&[]);
        let tail_kw = self.kw.get(1..).unwrap_or(&[]);
        let c = tail_c.first().copied().unwrap_or(self.c[0]);
        let kw = tail_kw.first().copied().unwrap_or(self.kw[0]);
        if tail_c.iter().any(|&x| x != c) {
            return Err(Error::NotConstant("c_t"));
        }
        if tail_kw.iter().any(|&x| x != kw) {
            return Err(Error::NotConstant("K_W_t"));
        }
        Ok((c, kw))
    }
}

/// Encoder gains `g_1..g_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GainSequence(pub Vec<f64>);

impl GainSequence {
    pub fn new(g: Vec<f64>) -> Result<Self> {
        if let Some(t) = g.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidGains(format!("g_{} is not finite", t + 1)));
        }
        Ok(GainSequence(g))
    }

    pub fn zeros(n: usize) -> Self {
        GainSequence(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn negated(&self) -> Self {
        GainSequence(self.0.iter().map(|g| -g).collect())
    }

    pub(crate) fn check_against(&self, params: &ChannelParams) -> Result<()> {
        if self.0.len() != params.n {
            return Err(Error::InvalidGains(format!(
                "gain sequence has length {} but n = {}",
                self.0.len(),
                params.n
            )));
        }
        if let Some(t) = self.0.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidGains(format!("g_{} is not finite", t + 1)));
        }
        Ok(())
    }
}

/// Time-indexed record of one evaluation of the scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionTrace {
    /// `Sigma_0..Sigma_n`, with `Sigma_0 = K_Theta`.
    pub sigma: Vec<f64>,
    /// `kappa_1..kappa_n`, `kappa_t = g_t^2 Sigma_{t-1}`.
    pub kappa_t: Vec<f64>,
    /// `|g_t / g_{t-1}|` for `t = 2..n`; absent when an earlier gain is zero.
    pub chi: Option<Vec<f64>>,
    /// Per-step mutual information terms in nats.
    pub mi_increments: Vec<f64>,
    /// `SNR_1..SNR_n`, only filled by the closed-form evaluation.
    pub snr: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Problem {
    B1,
    B2,
    BAsymptotic,
    P1,
    P2,
}

impl Problem {
    pub fn label(self) -> &'static str {
        match self {
            Problem::B1 => "B1",
            Problem::B2 => "B2",
            Problem::BAsymptotic => "B_asymptote",
            Problem::P1 => "P1",
            Problem::P2 => "P2",
        }
    }
}

/// How a reported rate was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Direct evaluation of a given gain sequence.
    Evaluation,
    /// Closed recursion with no free parameters.
    Recursion,
    /// Enumeration of every feasible sign pattern.
    ExhaustiveSignSearch,
    /// Penalised multi-start simplex search.
    ContinuousPenalty,
    /// Multi-start simplex search with power projection.
    ProjectedSimplex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    /// nats per transmission
    pub rate: f64,
    /// nats over the horizon
    pub total_mi: f64,
    pub trace: RecursionTrace,
    pub gains: GainSequence,
    pub problem: Option<Problem>,
    pub method: Method,
    pub converged: bool,
}

impl RateResult {
    pub fn rate_bits(&self) -> f64 {
        self.rate / std::f64::consts::LN_2
    }
}

/// Monte Carlo statistics from [`crate::simulator::simulate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub trials: usize,
    pub seed: u64,
    /// Mean of `(Theta - Theta_hat_n)^2`.
    pub empirical_sigma_n: f64,
    pub sigma_n_std_error: f64,
    /// Mean of `X_t^2` per step.
    pub empirical_power: Vec<f64>,
    pub power_std_error: Vec<f64>,
    /// `|g_t| * eps_t` per step.
    pub amplification: Vec<f64>,
    /// Sample correlation matrix of the decoder's innovations `I_1..I_n`.
    pub innovation_correlation: Vec<Vec<f64>>,
}
