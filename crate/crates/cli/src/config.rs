//! Run configuration: built-in defaults, then a flat `key = value` file,
//! then command-line flags. Every layer goes through [`RunConfig::set`].

use std::fmt;
use std::path::{Path, PathBuf};

use agnlab_core::optimizer::{OptimizerConfig, P2Branch};
use agnlab_core::{ChannelParams, ConstraintKind, StateKind};

pub const CONFIG_ENV: &str = "AGNLAB_CONFIG";

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemName {
    B1,
    B2,
    P1,
    P2,
    Asymptote,
}

impl ProblemName {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "b1" => Ok(ProblemName::B1),
            "b2" => Ok(ProblemName::B2),
            "p1" => Ok(ProblemName::P1),
            "p2" => Ok(ProblemName::P2),
            "asymptote" | "b_asymptote" => Ok(ProblemName::Asymptote),
            other => Err(bad(format!("unknown problem `{other}` (b1, b2, p1, p2, asymptote)"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemName::B1 => "b1",
            ProblemName::B2 => "b2",
            ProblemName::P1 => "p1",
            ProblemName::P2 => "p2",
            ProblemName::Asymptote => "asymptote",
        }
    }

    pub fn constraint(self) -> Option<ConstraintKind> {
        match self {
            ProblemName::B1 | ProblemName::P1 => Some(ConstraintKind::TotalAverage),
            ProblemName::B2 | ProblemName::P2 => Some(ConstraintKind::PointwisePerSymbol),
            ProblemName::Asymptote => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    C,
    Kappa,
    Kw,
    N,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::C => "c",
            SweepParam::Kappa => "kappa",
            SweepParam::Kw => "kw",
            SweepParam::N => "n",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub c: f64,
    pub kw: f64,
    pub ktheta: f64,
    pub kv1: f64,
    pub kappa: f64,
    pub constraint: Option<ConstraintKind>,
    pub state: StateKind,
    pub trials: usize,
    pub seed: u64,
    pub eps: f64,
    pub format: Format,
    pub out: Option<PathBuf>,

    pub problem: Option<ProblemName>,
    pub param: Option<SweepParam>,
    pub grid: Vec<f64>,
    pub problems: Vec<ProblemName>,
    pub n_list: Vec<usize>,
    pub b2_n: Vec<usize>,
    pub p2_n: Vec<usize>,

    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub sign_limit: usize,
    pub p2_branch: P2Branch,
}

impl Default for RunConfig {
    fn default() -> Self {
        let opt = OptimizerConfig::default();
        RunConfig {
            n: 10,
            c: 0.5,
            kw: 1.0,
            ktheta: 1.0,
            kv1: 1.0,
            kappa: 1.0,
            constraint: None,
            state: StateKind::KnownInitialState,
            trials: 100_000,
            seed: 0,
            eps: 1e-6,
            format: Format::Csv,
            out: None,
            problem: None,
            param: None,
            grid: Vec::new(),
            problems: vec![ProblemName::B2, ProblemName::Asymptote],
            n_list: vec![5, 10, 15, 20],
            b2_n: vec![10, 20],
            p2_n: vec![10],
            restarts: opt.restarts,
            max_iter: opt.max_iter,
            tol: opt.tol,
            sign_limit: opt.sign_search_limit,
            p2_branch: opt.p2_branch,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse()
        .map_err(|_| bad(format!("invalid value `{v}` for `{key}`")))
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, ConfigError> {
    let out = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect::<Result<Vec<T>, _>>()?;
    if out.is_empty() {
        return Err(bad(format!("`{key}` needs at least one value")));
    }
    Ok(out)
}

impl RunConfig {
    /// Applies one `key = value` setting. Keys accept `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        let v = value.trim();
        match key.as_str() {
            "n" => self.n = num(&key, v)?,
            "c" => self.c = num(&key, v)?,
            "kw" => self.kw = num(&key, v)?,
            "ktheta" => self.ktheta = num(&key, v)?,
            "kv1" => self.kv1 = num(&key, v)?,
            "kappa" => self.kappa = num(&key, v)?,
            "constraint" => {
                self.constraint = Some(match v.to_ascii_lowercase().as_str() {
                    "total" => ConstraintKind::TotalAverage,
                    "pointwise" => ConstraintKind::PointwisePerSymbol,
                    _ => return Err(bad(format!("constraint must be total or pointwise, got `{v}`"))),
                })
            }
            "state" => {
                self.state = match v.to_ascii_lowercase().as_str() {
                    "none" => StateKind::NoInitialState,
                    "known" => StateKind::KnownInitialState,
                    _ => return Err(bad(format!("state must be none or known, got `{v}`"))),
                }
            }
            "trials" => self.trials = num(&key, v)?,
            "seed" => self.seed = num(&key, v)?,
            "eps" => self.eps = num(&key, v)?,
            "format" => {
                self.format = match v.to_ascii_lowercase().as_str() {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    _ => return Err(bad(format!("format must be csv or json, got `{v}`"))),
                }
            }
            "out" => self.out = (!v.is_empty()).then(|| PathBuf::from(v)),
            "problem" => self.problem = Some(ProblemName::parse(v)?),
            "param" => {
                self.param = Some(match v.to_ascii_lowercase().as_str() {
                    "c" => SweepParam::C,
                    "kappa" => SweepParam::Kappa,
                    "kw" => SweepParam::Kw,
                    "n" => SweepParam::N,
                    _ => return Err(bad(format!("unknown sweep parameter `{v}` (c, kappa, kw, n)"))),
                })
            }
            "grid" => self.grid = list(&key, v)?,
            "problems" => {
                self.problems = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(ProblemName::parse)
                    .collect::<Result<_, _>>()?;
                if self.problems.is_empty() {
                    return Err(bad("`problems` needs at least one value"));
                }
            }
            "n_list" => self.n_list = list(&key, v)?,
            "b2_n" => self.b2_n = list(&key, v)?,
            "p2_n" => self.p2_n = list(&key, v)?,
            "restarts" => self.restarts = num(&key, v)?,
            "max_iter" => self.max_iter = num(&key, v)?,
            "tol" => self.tol = num(&key, v)?,
            "sign_limit" => self.sign_limit = num(&key, v)?,
            "p2_branch" => {
                self.p2_branch = match v.to_ascii_lowercase().as_str() {
                    "both" => P2Branch::Both,
                    "exhaustive" => P2Branch::Exhaustive,
                    "continuous" => P2Branch::Continuous,
                    _ => {
                        return Err(bad(format!(
                            "p2-branch must be both, exhaustive or continuous, got `{v}`"
                        )))
                    }
                }
            }
            _ => return Err(bad(format!("unknown configuration key `{key}`"))),
        }
        Ok(())
    }

    /// Parses flat `key = value` text; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("{origin}:{}: expected key = value", i + 1)))?;
            self.set(k, v)
                .map_err(|e| bad(format!("{origin}:{}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// Defaults, then the config file (flag path or `AGNLAB_CONFIG`), then flags.
    pub fn layered(
        config_flag: Option<&Path>,
        env_path: Option<&str>,
        flags: &[(&str, &str)],
    ) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let path = config_flag
            .map(Path::to_path_buf)
            .or_else(|| env_path.filter(|s| !s.is_empty()).map(PathBuf::from));
        if let Some(p) = path {
            cfg.apply_file(&p)?;
        }
        for (k, v) in flags {
            cfg.set(k, v).map_err(|e| bad(format!("--{}: {e}", k.replace('_', "-"))))?;
        }
        Ok(cfg)
    }

    /// The problem selected by `--problem`, falling back on `--constraint`.
    pub fn resolved_problem(&self) -> Result<ProblemName, ConfigError> {
        match (self.problem, self.constraint) {
            (Some(p), None) => Ok(p),
            (Some(p), Some(k)) if p.constraint() == Some(k) => Ok(p),
            (Some(p), Some(_)) => Err(bad(format!(
                "problem {} conflicts with the requested constraint",
                p.as_str()
            ))),
            (None, Some(ConstraintKind::TotalAverage)) => Ok(ProblemName::B1),
            (None, _) => Ok(ProblemName::B2),
        }
    }

    pub fn channel(&self) -> ChannelParams {
        self.channel_at(self.n)
    }

    pub fn channel_at(&self, n: usize) -> ChannelParams {
        let mut p = ChannelParams::constant(n, self.c, self.kw, self.kv1, self.ktheta, self.kappa)
            .with_state(self.state);
        if let Some(k) = self.constraint {
            p = p.with_constraint(k);
        }
        p
    }

    pub fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            sign_search_limit: self.sign_limit,
            restarts: self.restarts,
            seed: self.seed,
            p2_branch: self.p2_branch,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_figure_parameters() {
        let cfg = RunConfig::default();
        let p = cfg.channel();
        assert_eq!(p, ChannelParams::figure_defaults(10));
    }

    #[test]
    fn text_parsing_handles_comments_and_dashes() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("# header\n n = 4 \nkappa=2 # trailing\n\np2-branch = continuous\n", "t")
            .unwrap();
        assert_eq!(cfg.n, 4);
        assert_eq!(cfg.kappa, 2.0);
        assert_eq!(cfg.p2_branch, P2Branch::Continuous);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let mut cfg = RunConfig::default();
        let err = cfg.apply_text("n = 3\nbogus = 1\n", "f.cfg").unwrap_err();
        assert!(err.0.starts_with("f.cfg:2:"), "{err}");
        assert!(cfg.apply_text("novalue\n", "f").is_err());
        assert!(cfg.apply_text("n = -1\n", "f").is_err());
    }

    #[test]
    fn flags_beat_file() {
        let dir = std::env::temp_dir().join(format!("agnlab-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("a.cfg");
        std::fs::write(&path, "n = 7\nc = 0.25\n").unwrap();
        let cfg = RunConfig::layered(Some(&path), None, &[("c", "0.75")]).unwrap();
        assert_eq!((cfg.n, cfg.c), (7, 0.75));
        let cfg = RunConfig::layered(None, Some(path.to_str().unwrap()), &[]).unwrap();
        assert_eq!((cfg.n, cfg.c), (7, 0.25));
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn problem_and_constraint_resolution() {
        let mut cfg = RunConfig::default();
        assert_eq!(cfg.resolved_problem().unwrap(), ProblemName::B2);
        cfg.set("constraint", "total").unwrap();
        assert_eq!(cfg.resolved_problem().unwrap(), ProblemName::B1);
        cfg.set("problem", "p2").unwrap();
        assert!(cfg.resolved_problem().is_err());
        cfg.set("problem", "p1").unwrap();
        assert_eq!(cfg.resolved_problem().unwrap(), ProblemName::P1);
    }

    #[test]
    fn lists_parse() {
        let mut cfg = RunConfig::default();
        cfg.set("grid", "0, 0.5,1").unwrap();
        assert_eq!(cfg.grid, vec![0.0, 0.5, 1.0]);
        cfg.set("problems", "b2,p2,asymptote").unwrap();
        assert_eq!(cfg.problems.len(), 3);
        assert!(cfg.set("n-list", "").is_err());
        assert!(cfg.set("problems", "b3").is_err());
    }
}
