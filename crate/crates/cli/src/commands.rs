use agnlab_core::asymptotics::{chi_fixed_point_iteration, solve_asymptote};
use agnlab_core::optimizer::{solve_b1, solve_b2, solve_p1, solve_p2};
use agnlab_core::simulator::{fragility_report, RngSpec};
use agnlab_core::{ConstraintKind, RateResult};
use anyhow::Result;

use crate::config::{ConfigError, Format, ProblemName, RunConfig, SweepParam};
use crate::output::{json_bytes, Cell, Table};

const FIXED_POINT_CAP: usize = 100_000;

/// Rendered command output plus the convergence flag that decides the exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub bytes: Vec<u8>,
    pub converged: bool,
}

fn bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

fn render(table: &Table, format: Format, converged: bool) -> Result<Report> {
    let bytes = match format {
        Format::Csv => table.to_csv()?,
        Format::Json => json_bytes(&table.to_json_value())?,
    };
    Ok(Report { bytes, converged })
}

fn solve(cfg: &RunConfig, problem: ProblemName, n: usize) -> Result<RateResult> {
    let params = cfg.channel_at(n);
    let opt = cfg.optimizer();
    let r = match problem {
        ProblemName::B1 => solve_b1(&params.with_constraint(ConstraintKind::TotalAverage), &opt)?,
        ProblemName::P1 => solve_p1(&params.with_constraint(ConstraintKind::TotalAverage), &opt)?,
        ProblemName::B2 => solve_b2(&params.with_constraint(ConstraintKind::PointwisePerSymbol))?,
        ProblemName::P2 => {
            solve_p2(&params.with_constraint(ConstraintKind::PointwisePerSymbol), &opt)?
        }
        ProblemName::Asymptote => {
            return Err(ConfigError("the asymptote has no gain sequence; use `asymptote`".into()).into())
        }
    };
    Ok(r)
}

pub fn rate(cfg: &RunConfig) -> Result<Report> {
    let problem = cfg.resolved_problem()?;
    let r = solve(cfg, problem, cfg.n)?;
    if cfg.format == Format::Json {
        let bytes = json_bytes(&serde_json::to_value(&r)?)?;
        return Ok(Report {
            bytes,
            converged: r.converged,
        });
    }
    let mut table = Table::new(&[
        "problem",
        "t",
        "g",
        "kappa_t",
        "sigma_t",
        "chi_t",
        "mi_increment",
        "cumulative_rate",
        "rate",
        "rate_bits",
        "converged",
    ]);
    let label = r.problem.map_or("eval", |p| p.label());
    let mut cumulative = 0.0;
    for t in 1..=cfg.n {
        cumulative += r.trace.mi_increments[t - 1];
        let chi = match (&r.trace.chi, t) {
            (Some(chi), t) if t >= 2 => Cell::Float(chi[t - 2]),
            _ => Cell::Empty,
        };
        table.push(vec![
            label.into(),
            t.into(),
            r.gains.0[t - 1].into(),
            r.trace.kappa_t[t - 1].into(),
            r.trace.sigma[t].into(),
            chi,
            r.trace.mi_increments[t - 1].into(),
            (cumulative / t as f64).into(),
            r.rate.into(),
            r.rate_bits().into(),
            r.converged.into(),
        ]);
    }
    render(&table, cfg.format, r.converged)
}

pub fn fig2(cfg: &RunConfig) -> Result<Report> {
    let b2 = solve(cfg, ProblemName::B2, cfg.n)?;
    let p2 = solve(cfg, ProblemName::P2, cfg.n)?;
    let mut table = Table::new(&["t", "g_t_B2", "g_t_P2"]);
    for t in 0..cfg.n {
        table.push(vec![(t + 1).into(), b2.gains.0[t].into(), p2.gains.0[t].into()]);
    }
    render(&table, cfg.format, b2.converged && p2.converged)
}

pub fn fig3(cfg: &RunConfig) -> Result<Report> {
    let mut table = Table::new(&["label", "n", "rate", "rate_bits", "converged"]);
    let mut converged = true;
    for (problem, list) in [(ProblemName::B2, &cfg.b2_n), (ProblemName::P2, &cfg.p2_n)] {
        for &n in list {
            let r = solve(cfg, problem, n)?;
            converged &= r.converged;
            let label = format!("{}@{n}", r.problem.map_or("?", |p| p.label()));
            table.push(vec![label.into(), n.into(), r.rate.into(), bits(r.rate).into(), r.converged.into()]);
        }
    }
    let a = solve_asymptote(cfg.kappa, cfg.kw, cfg.c)?;
    table.push(vec!["B_asymptote".into(), Cell::Empty, a.rate.into(), bits(a.rate).into(), true.into()]);
    render(&table, cfg.format, converged)
}

pub fn fragility(cfg: &RunConfig) -> Result<Report> {
    let rows = fragility_report(&cfg.channel(), cfg.eps, &cfg.n_list, cfg.trials, RngSpec::new(cfg.seed))?;
    let mut table = Table::new(&[
        "n",
        "gain_n",
        "amplification",
        "analytic_sigma_n",
        "empirical_sigma_n",
        "excess_mse",
        "excess_std_error",
    ]);
    for r in rows {
        table.push(vec![
            r.n.into(),
            r.gain_n.into(),
            r.amplification.into(),
            r.analytic_sigma_n.into(),
            r.empirical_sigma_n.into(),
            r.excess_mse.into(),
            r.excess_std_error.into(),
        ]);
    }
    render(&table, cfg.format, true)
}

pub fn sweep(cfg: &RunConfig) -> Result<Report> {
    let param = cfg
        .param
        .ok_or_else(|| ConfigError("sweep needs --param (c, kappa, kw or n)".into()))?;
    if cfg.grid.is_empty() {
        return Err(ConfigError("sweep needs --grid".into()).into());
    }
    let mut table = Table::new(&["param", "value", "problem", "n", "rate", "rate_bits", "converged"]);
    let mut converged = true;
    for &value in &cfg.grid {
        let mut point = cfg.clone();
        match param {
            SweepParam::C => point.c = value,
            SweepParam::Kappa => point.kappa = value,
            SweepParam::Kw => point.kw = value,
            SweepParam::N => {
                if !(value >= 1.0 && value.fract() == 0.0 && value <= u32::MAX as f64) {
                    return Err(ConfigError(format!("grid value {value} is not a horizon")).into());
                }
                point.n = value as usize;
            }
        }
        for &problem in &cfg.problems {
            let (n, rate, ok) = if problem == ProblemName::Asymptote {
                (Cell::Empty, solve_asymptote(point.kappa, point.kw, point.c)?.rate, true)
            } else {
                let r = solve(&point, problem, point.n)?;
                (point.n.into(), r.rate, r.converged)
            };
            converged &= ok;
            table.push(vec![
                param.as_str().into(),
                value.into(),
                problem.as_str().into(),
                n,
                rate.into(),
                bits(rate).into(),
                ok.into(),
            ]);
        }
    }
    render(&table, cfg.format, converged)
}

pub fn asymptote(cfg: &RunConfig) -> Result<Report> {
    let a = solve_asymptote(cfg.kappa, cfg.kw, cfg.c)?;
    let fp = chi_fixed_point_iteration(cfg.kappa, cfg.kw, cfg.c, FIXED_POINT_CAP, cfg.tol)?;
    let mut table = Table::new(&[
        "kappa",
        "kw",
        "c",
        "chi",
        "rate",
        "rate_bits",
        "residual",
        "fixed_point_limit",
        "fixed_point_steps",
        "fixed_point_converged",
    ]);
    table.push(vec![
        cfg.kappa.into(),
        cfg.kw.into(),
        cfg.c.into(),
        a.chi.into(),
        a.rate.into(),
        bits(a.rate).into(),
        a.residual.into(),
        fp.limit.into(),
        fp.sequence.len().into(),
        fp.converged.into(),
    ]);
    render(&table, cfg.format, fp.converged)
}
