//! Flat `key = value` run configuration.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use gradflux_core::bregman::SolverConfig;
use gradflux_core::duality::DEFAULT_ETA;
use gradflux_core::fmt::fmt_f64;
use gradflux_core::perturbation::PerturbMode;
use gradflux_core::stability::{SweepMode, SweepParam, TABLE1_DELTAS};

use crate::CliError;

pub const KEYS: [&str; 17] = [
    "n", "lambda", "tol", "max_iter", "eta", "delta", "deltas", "seeds", "param", "epsilons",
    "mode", "problem", "a_file", "f_file", "h_file", "u_file", "levels",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemSource {
    Example1,
    Files,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub lambda: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub eta: f64,
    /// Noise level applied by `solve`; `0` solves the clean instance.
    pub delta: f64,
    pub deltas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub param: SweepParam,
    pub epsilons: Vec<f64>,
    pub mode: SweepMode,
    pub problem: ProblemSource,
    pub a_file: Option<PathBuf>,
    pub f_file: Option<PathBuf>,
    pub h_file: Option<PathBuf>,
    pub u_file: Option<PathBuf>,
    /// Number of sampled levels for `contour`.
    pub levels: usize,
    /// Keys given explicitly in the file.
    pub explicit: BTreeSet<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 100,
            lambda: 1.0,
            tol: 1e-7,
            max_iter: 5000,
            eta: DEFAULT_ETA,
            delta: 0.0,
            deltas: TABLE1_DELTAS.to_vec(),
            seeds: (1..=10).collect(),
            param: SweepParam::Weight,
            epsilons: vec![0.04, 0.02, 0.01, 0.005],
            mode: SweepMode::Structured(PerturbMode::ConstantShift),
            problem: ProblemSource::Example1,
            a_file: None,
            f_file: None,
            h_file: None,
            u_file: None,
            levels: 50,
            explicit: BTreeSet::new(),
        }
    }
}

fn usage(msg: String) -> CliError {
    CliError::Usage(msg)
}

fn number<T: std::str::FromStr>(key: &str, v: &str, line: usize) -> Result<T, CliError> {
    v.parse().map_err(|_| {
        usage(format!(
            "config line {line}: `{key}` has invalid value `{v}`"
        ))
    })
}

fn list<T: std::str::FromStr>(key: &str, v: &str, line: usize) -> Result<Vec<T>, CliError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| number(key, s, line))
        .collect()
}

impl RunConfig {
    /// Parses config text; relative file paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| {
                usage(format!(
                    "config line {line}: expected `key = value`, got `{content}`"
                ))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(usage(format!(
                    "config line {line}: unknown key `{key}` (allowed: {})",
                    KEYS.join(", ")
                )));
            }
            if !cfg.explicit.insert(key.to_string()) {
                return Err(usage(format!("config line {line}: duplicate key `{key}`")));
            }
            let path = || Some(base.join(value));
            match key {
                "n" => cfg.n = number(key, value, line)?,
                "lambda" => cfg.lambda = number(key, value, line)?,
                "tol" => cfg.tol = number(key, value, line)?,
                "max_iter" => cfg.max_iter = number(key, value, line)?,
                "eta" => cfg.eta = number(key, value, line)?,
                "delta" => cfg.delta = number(key, value, line)?,
                "deltas" => cfg.deltas = list(key, value, line)?,
                "seeds" => cfg.seeds = list(key, value, line)?,
                "epsilons" => cfg.epsilons = list(key, value, line)?,
                "levels" => cfg.levels = number(key, value, line)?,
                "param" => {
                    cfg.param = value
                        .parse()
                        .map_err(|e| usage(format!("config line {line}: {e}")))?
                }
                "mode" => {
                    cfg.mode = value
                        .parse()
                        .map_err(|e| usage(format!("config line {line}: {e}")))?
                }
                "problem" => cfg.problem = match value {
                    "example1" => ProblemSource::Example1,
                    "files" => ProblemSource::Files,
                    other => return Err(usage(format!(
                        "config line {line}: `problem` must be example1 or files, got `{other}`"
                    ))),
                },
                "a_file" => cfg.a_file = path(),
                "f_file" => cfg.f_file = path(),
                "h_file" => cfg.h_file = path(),
                "u_file" => cfg.u_file = path(),
                _ => unreachable!("key list checked above"),
            }
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config `{}`: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Range checks, run before any compute.
    fn check(&self) -> Result<(), CliError> {
        let bad = |key: &str, why: &str| Err(usage(format!("config key `{key}`: {why}")));
        if self.n < 2 {
            return bad("n", "must be at least 2");
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad("lambda", "must be positive");
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad("tol", "must be positive");
        }
        if self.max_iter == 0 {
            return bad("max_iter", "must be positive");
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad("eta", "must be positive");
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return bad("delta", "must be nonnegative");
        }
        if self.deltas.is_empty() || self.deltas.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
            return bad("deltas", "needs one or more nonnegative values");
        }
        if self.seeds.is_empty() {
            return bad("seeds", "needs at least one seed");
        }
        if self.epsilons.is_empty() {
            return bad("epsilons", "list is empty");
        }
        if self.levels == 0 {
            return bad("levels", "must be positive");
        }
        if self.problem == ProblemSource::Files {
            for (key, v) in [
                ("a_file", &self.a_file),
                ("f_file", &self.f_file),
                ("h_file", &self.h_file),
            ] {
                if v.is_none() {
                    return bad(key, "required when problem = files");
                }
            }
        }
        Ok(())
    }

    pub fn solver(&self, record_history: bool) -> SolverConfig {
        SolverConfig {
            lambda: self.lambda,
            tol: self.tol,
            max_iter: self.max_iter,
            record_history,
        }
    }

    /// Every resolved key, for embedding in outputs.
    pub fn comment_lines(&self) -> Vec<String> {
        let floats = |v: &[f64]| v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",");
        let path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map_or("none".to_string(), |p| p.display().to_string())
        };
        vec![
            format!("n = {}", self.n),
            format!("lambda = {}", fmt_f64(self.lambda)),
            format!("tol = {}", fmt_f64(self.tol)),
            format!("max_iter = {}", self.max_iter),
            format!("eta = {}", fmt_f64(self.eta)),
            format!("delta = {}", fmt_f64(self.delta)),
            format!("deltas = {}", floats(&self.deltas)),
            format!(
                "seeds = {}",
                self.seeds
                    .iter()
                    .map(u64::to_string)
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            format!("param = {}", self.param.name()),
            format!("epsilons = {}", floats(&self.epsilons)),
            format!("mode = {}", self.mode.name()),
            format!(
                "problem = {}",
                match self.problem {
                    ProblemSource::Example1 => "example1",
                    ProblemSource::Files => "files",
                }
            ),
            format!("a_file = {}", path(&self.a_file)),
            format!("f_file = {}", path(&self.f_file)),
            format!("h_file = {}", path(&self.h_file)),
            format!("u_file = {}", path(&self.u_file)),
            format!("levels = {}", self.levels),
            "noise_norm = frobenius".to_string(),
            "noise_streams = H:0,a:1,F:2".to_string(),
        ]
    }
}
