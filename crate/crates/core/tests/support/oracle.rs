//! Brute-force joint-Gaussian reference for the feedback scheme.
//!
//! Every variable is kept as a coefficient vector over the independent
//! sources `(Theta, first noise sample, W_2, ..., W_n)`. Conditional means
//! are obtained by solving the normal equations of the full output history,
//! with no use of the scalar filter under test.

#![allow(dead_code)]

use agnlab_core::ChannelParams;
use nalgebra::{DMatrix, DVector};

pub struct OracleRun {
    /// `Sigma_0..Sigma_n`
    pub sigma: Vec<f64>,
    /// `I(Theta; Y^n)` from `1/2 log det Cov(Y^n) - 1/2 log det Cov(V^n)`
    pub mutual_information: f64,
    /// Coefficients of `E[Theta | Y^t]` over the sources, `t = 0..n`.
    pub estimates: Vec<Vec<f64>>,
    /// Coefficients of `Y_t - E[Y_t | Y^{t-1}]`, `t = 1..n`.
    pub innovations: Vec<Vec<f64>>,
}

struct Sources {
    var: Vec<f64>,
}

impl Sources {
    fn cov(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).zip(&self.var).map(|((x, y), v)| x * y * v).sum()
    }

    fn gram(&self, rows: &[Vec<f64>]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), rows.len(), |i, j| self.cov(&rows[i], &rows[j]))
    }

    /// Coefficients of the projection of `target` onto span(`basis`).
    fn project(&self, target: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
        let m = target.len();
        if basis.is_empty() {
            return vec![0.0; m];
        }
        let gram = self.gram(basis);
        let rhs = DVector::from_iterator(basis.len(), basis.iter().map(|b| self.cov(target, b)));
        let w = gram.lu().solve(&rhs).expect("singular output covariance");
        let mut out = vec![0.0; m];
        for (wi, b) in w.iter().zip(basis) {
            for (o, x) in out.iter_mut().zip(b) {
                *o += wi * x;
            }
        }
        out
    }
}

fn log_det(m: &DMatrix<f64>) -> f64 {
    let chol = m.clone().cholesky().expect("covariance not positive definite");
    2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

pub fn run(params: &ChannelParams, g: &[f64]) -> OracleRun {
    let n = g.len();
    let m = n + 1;
    let mut var = vec![params.ktheta, params.initial_noise_variance()];
    var.extend_from_slice(&params.kw[1..n]);
    let src = Sources { var };
    let unit = |i: usize| -> Vec<f64> {
        let mut e = vec![0.0; m];
        e[i] = 1.0;
        e
    };

    let theta = unit(0);
    let mut noise = vec![unit(1)];
    for t in 1..n {
        let w = unit(t + 1);
        let v: Vec<f64> = noise[t - 1].iter().zip(&w).map(|(a, b)| params.c[t] * a + b).collect();
        noise.push(v);
    }

    let mut ys: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut estimates = vec![vec![0.0; m]];
    let mut innovations = Vec::with_capacity(n);
    let mut sigma = vec![params.ktheta];
    for t in 0..n {
        let err: Vec<f64> = theta.iter().zip(&estimates[t]).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = err.iter().zip(&noise[t]).map(|(e, v)| g[t] * e + v).collect();
        let pred = src.project(&y, &ys);
        innovations.push(y.iter().zip(&pred).map(|(a, b)| a - b).collect());
        ys.push(y);
        let est = src.project(&theta, &ys);
        let resid: Vec<f64> = theta.iter().zip(&est).map(|(a, b)| a - b).collect();
        sigma.push(src.cov(&resid, &resid));
        estimates.push(est);
    }

    let mutual_information = 0.5 * (log_det(&src.gram(&ys)) - log_det(&src.gram(&noise)));
    OracleRun {
        sigma,
        mutual_information,
        estimates,
        innovations,
    }
}
