//! TOML run configuration. Parsing is strict: unknown keys are rejected so
//! a misspelled tolerance cannot silently fall back to a default.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use depcag::criteria::{CriteriaHints, IntegralOptions, TailHint};
use depcag::expr::Expr;
use depcag::model::{InitialCondition, ProblemSpec};
use depcag::pca::ArgumentSchedule;
use depcag::solver::SolverOptions;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub schedule: ScheduleSection,
    pub initial: Option<InitialSection>,
    pub simulation: Option<SimulationSection>,
    pub criteria: Option<CriteriaSection>,
    pub hints: Option<HintsSection>,
    pub output: Option<OutputSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub r: String,
    pub f: String,
    pub p: String,
    pub phi: String,
    pub tau: f64,
    pub linear_kappa: Option<f64>,
    pub label: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub kind: String,
    pub m: Option<f64>,
    pub alpha: Option<f64>,
    pub node_rule: Option<String>,
    pub switch_fraction: Option<String>,
    pub index_origin: Option<i64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub x0: f64,
    pub v0: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub horizon: f64,
    pub dense_per_interval: Option<usize>,
    pub quad_tol: Option<f64>,
    pub fp_tol: Option<f64>,
    pub max_iter: Option<u32>,
    pub blowup_bound: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriteriaSection {
    pub theorem: Option<u8>,
    pub epsilon: Option<f64>,
    pub n_max: Option<i64>,
    pub delta: Option<f64>,
    pub i_max: Option<u32>,
    pub divergence_threshold: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HintsSection {
    pub r_inv: Option<String>,
    pub p: Option<String>,
    pub phi_inv_pos: Option<String>,
    pub phi_inv_neg: Option<String>,
    pub series: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dense: Option<PathBuf>,
    pub nodes: Option<PathBuf>,
    pub verdict: Option<PathBuf>,
    pub sweep: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    pub fn build_spec(&self) -> Result<ProblemSpec, CliError> {
        let parse = |key: &str, src: &str| {
            Expr::parse(src).map_err(|e| CliError::Config(format!("problem.{key} = {src:?}: {e}")))
        };
        let r = parse("r", &self.problem.r)?;
        let f = parse("f", &self.problem.f)?;
        let p = parse("p", &self.problem.p)?;
        let phi = parse("phi", &self.problem.phi)?;
        let schedule = self.build_schedule()?;
        let label = self
            .problem
            .label
            .clone()
            .unwrap_or_else(|| "problem".to_owned());
        ProblemSpec::new(
            label,
            r,
            f,
            p,
            phi,
            self.problem.tau,
            schedule,
            self.problem.linear_kappa,
        )
        .map_err(CliError::from)
    }

    pub fn build_schedule(&self) -> Result<ArgumentSchedule, CliError> {
        let s = &self.schedule;
        match s.kind.as_str() {
            "uniform" => {
                let m = s.m.ok_or_else(|| {
                    CliError::Config("schedule.m is required for kind = \"uniform\"".into())
                })?;
                let alpha = s.alpha.ok_or_else(|| {
                    CliError::Config("schedule.alpha is required for kind = \"uniform\"".into())
                })?;
                ArgumentSchedule::uniform_with_origin(m, alpha, s.index_origin.unwrap_or(0))
                    .map_err(|e| CliError::Config(format!("schedule: {e}")))
            }
            "custom" => {
                let node_rule = s.node_rule.as_deref().ok_or_else(|| {
                    CliError::Config("schedule.node_rule is required for kind = \"custom\"".into())
                })?;
                let fraction = s.switch_fraction.as_deref().ok_or_else(|| {
                    CliError::Config(
                        "schedule.switch_fraction is required for kind = \"custom\"".into(),
                    )
                })?;
                let node_rule = Expr::parse(node_rule).map_err(|e| {
                    CliError::Config(format!("schedule.node_rule = {node_rule:?}: {e}"))
                })?;
                let fraction = Expr::parse(fraction).map_err(|e| {
                    CliError::Config(format!("schedule.switch_fraction = {fraction:?}: {e}"))
                })?;
                ArgumentSchedule::custom(node_rule, fraction, s.index_origin.unwrap_or(0))
                    .map_err(|e| CliError::Config(format!("schedule: {e}")))
            }
            other => Err(CliError::Config(format!(
                "schedule.kind must be \"uniform\" or \"custom\", got {other:?}"
            ))),
        }
    }

    pub fn build_initial(&self) -> Result<InitialCondition, CliError> {
        let section = self
            .initial
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [initial] section with keys x0, v0".into()))?;
        InitialCondition::new(section.x0, section.v0).map_err(CliError::from)
    }

    pub fn solver_options(&self) -> SolverOptions {
        let mut opts = SolverOptions::default();
        if let Some(sim) = &self.simulation {
            if let Some(v) = sim.quad_tol {
                opts.quad_tol = v;
            }
            if let Some(v) = sim.fp_tol {
                opts.fp_tol = v;
            }
            if let Some(v) = sim.max_iter {
                opts.max_iter = v;
            }
            if let Some(v) = sim.blowup_bound {
                opts.blowup_bound = v;
            }
        }
        opts
    }

    pub fn integral_options(&self) -> IntegralOptions {
        let mut opts = IntegralOptions::default();
        if let Some(c) = &self.criteria {
            if let Some(v) = c.delta {
                opts.delta = v;
            }
            if let Some(v) = c.i_max {
                opts.i_max = v;
            }
            if let Some(v) = c.divergence_threshold {
                opts.divergence_threshold = v;
            }
        }
        opts
    }

    pub fn hints(&self) -> Result<CriteriaHints, CliError> {
        let mut hints = CriteriaHints::default();
        if let Some(section) = &self.hints {
            if let Some(s) = &section.r_inv {
                hints.r_inv = parse_hint("hints.r_inv", s)?;
            }
            if let Some(s) = &section.p {
                hints.p = parse_hint("hints.p", s)?;
            }
            if let Some(s) = &section.phi_inv_pos {
                hints.phi_inv_pos = parse_hint("hints.phi_inv_pos", s)?;
            }
            if let Some(s) = &section.phi_inv_neg {
                hints.phi_inv_neg = parse_hint("hints.phi_inv_neg", s)?;
            }
            if let Some(s) = &section.series {
                hints.series = parse_hint("hints.series", s)?;
            }
        }
        Ok(hints)
    }
}

/// Hint syntax: `power:<sigma>`, `exp:<lambda>`, or `none`.
fn parse_hint(key: &str, text: &str) -> Result<TailHint, CliError> {
    if text == "none" {
        return Ok(TailHint::None);
    }
    let (kind, value) = text.split_once(':').ok_or_else(|| {
        CliError::Config(format!(
            "{key} = {text:?}: expected \"power:<sigma>\", \"exp:<lambda>\", or \"none\""
        ))
    })?;
    let number: f64 = value
        .parse()
        .map_err(|_| CliError::Config(format!("{key} = {text:?}: {value:?} is not a number")))?;
    match kind {
        "power" => Ok(TailHint::PowerLaw(number)),
        "exp" => Ok(TailHint::Exponential(number)),
        other => Err(CliError::Config(format!(
            "{key} = {text:?}: unknown hint class {other:?}"
        ))),
    }
}
