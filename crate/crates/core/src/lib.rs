//! Linear feedback coding over additive Gaussian noise channels driven by
//! first-order autoregressive noise.
//!
//! * [`recursions`]: error variance, estimator coefficients and mutual
//!   information of the scheme `X_t = g_t (Theta - E[Theta | Y^{t-1}])`.
//! * [`asymptotics`]: the limiting gain ratio `chi`, the rate `log chi`,
//!   and the ratio test on gain sequences.
//! * [`optimizer`]: the equal-power and total-power rate problems.
//! * [`simulator`]: Monte Carlo runs of the scheme and the perturbation
//!   amplification report.

pub mod asymptotics;
pub mod error;
pub mod model;
pub mod optimizer;
pub mod recursions;
pub mod simulator;

pub use error::{Error, Result};
pub use model::{
    ChannelParams, ConstraintKind, GainSequence, Method, Problem, RateResult, RecursionTrace,
    SimOutcome, StateKind,
};
