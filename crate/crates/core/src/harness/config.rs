//! Run and sweep configuration, and the right-hand-side grammar.
//!
//! ```text
//! rhs   := "manufacture:" body | term (("+" | "-") term)*
//! term  := number | number "*" mode | mode
//! mode  := "cos(" k "θ)" | "cos(" k "*theta)" | "Y(" l "," m ")"
//! body  := "ball(r)" | "ellipse(a,b)" | "ellipsoid(a,b,c)" | "perturbed(amp,mode)"
//! ```
//!
//! Only even modes are accepted.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::body::{analytic_support, AnalyticBody, Mode, ModeSpec};
use crate::error::{Error, Result};
use crate::solver::SolverConfig;
use crate::sphere::{Resolution, SphereGrid};
use crate::verifier::dual_density;

/// Prescribed dual curvature density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum RhsSpec {
    /// `constant + Σ amplitude · mode`.
    Modes {
        constant: f64,
        terms: Vec<(f64, Mode)>,
    },
    /// The density of a closed-form body at the run's q.
    Manufactured(AnalyticBody),
}

impl RhsSpec {
    pub fn constant(c: f64) -> Self {
        RhsSpec::Modes {
            constant: c,
            terms: Vec::new(),
        }
    }

    /// `1 + ε · mode`.
    pub fn perturbation(eps: f64, mode: Mode) -> Self {
        RhsSpec::Modes {
            constant: 1.0,
            terms: vec![(eps, mode)],
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            RhsSpec::Modes { constant, terms } => {
                if !constant.is_finite() || terms.iter().any(|(a, _)| !a.is_finite()) {
                    return Err(Error::InvalidParameter(format!("non-finite coefficient in `{self}`")));
                }
                terms.iter().try_for_each(|(_, m)| m.validate(dim))
            }
            RhsSpec::Manufactured(body) => body.validate(dim),
        }
    }

    /// Samples the density; fails unless it is positive at every node.
    pub fn sample(&self, grid: &Arc<SphereGrid>, q: f64) -> Result<Vec<f64>> {
        self.validate(grid.dim())?;
        let values = match self {
            RhsSpec::Modes { constant, terms } => {
                let mut v = vec![*constant; grid.len()];
                for (a, m) in terms {
                    for (vi, mi) in v.iter_mut().zip(m.sample(grid)) {
                        *vi += a * mi;
                    }
                }
                v
            }
            RhsSpec::Manufactured(body) => {
                let dim = grid.dim();
                let exact: Option<Vec<f64>> = grid
                    .nodes()
                    .iter()
                    .map(|x| body.exact_dual_density(x, dim, q))
                    .collect();
                match exact {
                    Some(v) => grid.project_even(&v)?,
                    None => {
                        let h = analytic_support(body, grid.clone())?;
                        dual_density(&h.geometry(), q)?.g
                    }
                }
            }
        };
        if let Some(bad) = values.iter().find(|v| !(**v > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "density `{self}` is not positive (found {bad})"
            )));
        }
        Ok(values)
    }

    /// Support function of the body that generated a manufactured density.
    pub fn exact_solution(&self, grid: &Arc<SphereGrid>) -> Result<Option<Vec<f64>>> {
        match self {
            RhsSpec::Manufactured(body) => {
                Ok(Some(analytic_support(body, grid.clone())?.into_values()))
            }
            RhsSpec::Modes { .. } => Ok(None),
        }
    }
}

impl fmt::Display for RhsSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RhsSpec::Manufactured(body) => write!(f, "manufacture:{body}"),
            RhsSpec::Modes { constant, terms } => {
                write!(f, "{constant}")?;
                for (a, m) in terms {
                    if a.is_sign_negative() {
                        write!(f, " - {}*{m}", -a)?;
                    } else {
                        write!(f, " + {a}*{m}")?;
                    }
                }
                Ok(())
            }
        }
    }
}

/// Splits at top-level `+`/`-`, keeping exponent signs and signs inside
/// parentheses attached.
fn split_terms(s: &str) -> Result<Vec<(f64, &str)>> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    let mut sign = 1.0;
    for (i, &c) in bytes.iter().enumerate() {
        match c {
            b'(' => depth += 1,
            b')' => depth -= 1,
            b'+' | b'-' if depth == 0 => {
                let exponent = i >= 2
                    && matches!(bytes[i - 1], b'e' | b'E')
                    && (bytes[i - 2].is_ascii_digit() || bytes[i - 2] == b'.');
                if exponent {
                    continue;
                }
                if i > start {
                    out.push((sign, &s[start..i]));
                } else if i != 0 {
                    return Err(Error::Parse(format!("dangling sign in `{s}`")));
                }
                sign = if c == b'-' { -1.0 } else { 1.0 };
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(Error::Parse(format!("unbalanced parentheses in `{s}`")));
    }
    if start >= s.len() {
        return Err(Error::Parse(format!("missing term in `{s}`")));
    }
    out.push((sign, &s[start..]));
    Ok(out)
}

impl FromStr for RhsSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if let Some(body) = t.strip_prefix("manufacture:") {
            return Ok(RhsSpec::Manufactured(body.parse()?));
        }
        let number = |x: &str| {
            x.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number `{x}` in `{s}`")))
        };
        let mut constant = 0.0;
        let mut terms = Vec::new();
        for (sign, term) in split_terms(&t)? {
            let (amp, mode) = match term.split_once('*') {
                Some((a, m)) if !a.starts_with("cos") => (number(a)?, Some(m)),
                _ if term.starts_with("cos") || term.starts_with("Y(") => (1.0, Some(term)),
                _ => (number(term)?, None),
            };
            match mode {
                Some(m) => {
                    let mode: Mode = m.parse()?;
                    if !mode.is_even() {
                        return Err(Error::Parse(format!("odd mode {mode} in `{s}`")));
                    }
                    terms.push((sign * amp, mode));
                }
                None => constant += sign * amp,
            }
        }
        Ok(RhsSpec::Modes { constant, terms })
    }
}

impl TryFrom<String> for RhsSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<RhsSpec> for String {
    fn from(r: RhsSpec) -> Self {
        r.to_string()
    }
}

/// One solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dim: usize,
    pub resolution: Resolution,
    pub q: f64,
    pub f: RhsSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Drives the random test-function battery in verification.
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn new(resolution: Resolution, q: f64, f: RhsSpec) -> Self {
        Self {
            dim: resolution.dim(),
            resolution,
            q,
            f,
            solver: SolverConfig::default(),
            output_dir: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution.dim() != self.dim {
            return Err(Error::InvalidResolution(format!(
                "resolution {} does not match n = {}",
                self.resolution, self.dim
            )));
        }
        if !self.q.is_finite() {
            return Err(Error::InvalidParameter(format!("q = {}", self.q)));
        }
        if self.seed > i64::MAX as u64 {
            return Err(Error::InvalidParameter(format!("seed {} exceeds 2^63 - 1", self.seed)));
        }
        self.solver.validate()?;
        self.f.validate(self.dim)
    }
}

fn default_repetitions() -> usize {
    1
}

fn default_cap() -> usize {
    1000
}

fn default_workers() -> usize {
    1
}

/// Cartesian sweep over q, ε and modes with `f = 1 + ε · mode`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub dim: usize,
    pub resolution: Resolution,
    pub q: Vec<f64>,
    pub eps: Vec<f64>,
    pub modes: Vec<ModeSpec>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    /// Largest admissible run matrix.
    #[serde(default = "default_cap")]
    pub max_runs: usize,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub solver: SolverConfig,
}

/// One row of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub q: f64,
    pub eps: f64,
    pub mode: Mode,
    pub repetition: usize,
    pub config: RunConfig,
}

impl SweepSpec {
    pub fn matrix_size(&self) -> usize {
        self.q.len() * self.eps.len() * self.modes.len() * self.repetitions
    }

    /// The run matrix, validated against the cap before anything runs.
    pub fn run_matrix(&self) -> Result<Vec<SweepRow>> {
        if self.resolution.dim() != self.dim {
            return Err(Error::InvalidResolution(format!(
                "resolution {} does not match n = {}",
                self.resolution, self.dim
            )));
        }
        let size = self.matrix_size();
        if size == 0 {
            return Err(Error::InvalidParameter("empty run matrix".into()));
        }
        if size > self.max_runs {
            return Err(Error::InvalidParameter(format!(
                "run matrix has {size} rows, cap is {}",
                self.max_runs
            )));
        }
        if self.workers == 0 {
            return Err(Error::InvalidParameter("workers must be positive".into()));
        }
        for m in &self.modes {
            m.0.validate(self.dim)?;
        }
        let mut rows = Vec::with_capacity(size);
        for &q in &self.q {
            for &eps in &self.eps {
                for m in &self.modes {
                    for repetition in 0..self.repetitions {
                        let mut config =
                            RunConfig::new(self.resolution, q, RhsSpec::perturbation(eps, m.0));
                        config.solver = self.solver.clone();
                        config.seed = self.seed.wrapping_add(repetition as u64) & (i64::MAX as u64);
                        config.validate()?;
                        rows.push(SweepRow {
                            index: rows.len(),
                            q,
                            eps,
                            mode: m.0,
                            repetition,
                            config,
                        });
                    }
                }
            }
        }
        Ok(rows)
    }
}
