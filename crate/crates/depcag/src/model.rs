//! Problem instances: the equation `(r(t)x'(t))' + f(t, x(gamma(t))) = 0`
//! on `[tau, infinity)` together with a minorant pair `(p, phi)` satisfying
//! `f(t,x)/phi(x) >= p(t)` for `x != 0`, and sampling-based checks of the
//! standing hypotheses.
//!
//! Hypotheses are sample-checked, not proven: a passing report means "no
//! violation found on the grid", never "verified".

use thiserror::Error;

use crate::expr::{EvalError, Expr, ParseError};
use crate::pca::{ArgumentSchedule, ScheduleError};

/// A full problem instance. Immutable value type; safe to share.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub label: String,
    /// Coefficient `r(t)`, expected positive.
    pub r: Expr,
    /// Forcing term `f(t, x)`.
    pub f: Expr,
    /// Minorant weight `p(t)`, expected nonnegative.
    pub p: Expr,
    /// Minorant shape `phi(u)`, expected nondecreasing with `u*phi(u) > 0`
    /// for `u != 0`.
    pub phi: Expr,
    /// Left endpoint of the time domain.
    pub tau: f64,
    pub schedule: ArgumentSchedule,
    /// Set when `f(t,x) = kappa*x` and `r = 1`; enables the exact linear
    /// stepper.
    pub linear_kappa: Option<f64>,
}

/// Initial data `x(tau)` and `x'(tau)`.
#[derive(Debug, Clone, Copy)]
pub struct InitialCondition {
    pub x0: f64,
    pub v0: f64,
}

impl InitialCondition {
    pub fn new(x0: f64, v0: f64) -> Result<Self, ModelError> {
        if !(x0.is_finite() && v0.is_finite()) {
            return Err(ModelError::InvalidParameter(format!(
                "initial condition must be finite, got ({x0}, {v0})"
            )));
        }
        Ok(InitialCondition { x0, v0 })
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown builtin problem `{0}`")]
    UnknownBuiltin(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("tau = {tau} lies before the first schedule node {first}")]
    TauBeforeFirstNode { tau: f64, first: f64 },
    #[error(
        "linear_kappa = {kappa} but f(t,x) differs from kappa*x at (t, x) = ({t}, {x}): \
         f = {f_value}, kappa*x = {expected}"
    )]
    LinearKappaMismatch {
        kappa: f64,
        t: f64,
        x: f64,
        f_value: f64,
        expected: f64,
    },
    #[error("linear_kappa requires r = 1, but r({t}) = {value}")]
    LinearKappaNonUnitR { t: f64, value: f64 },
    #[error("evaluating {what} at (t, x) = ({t}, {x:?}): {source}")]
    Eval {
        what: &'static str,
        t: f64,
        x: Option<f64>,
        source: EvalError,
    },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

impl ProblemSpec {
    /// Build and check construction invariants: `tau` at or after the first
    /// node, and the `linear_kappa` flag consistent with `f` and `r` on a
    /// 32x32 sample grid (relative 1e-12).
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        label: impl Into<String>,
        r: Expr,
        f: Expr,
        p: Expr,
        phi: Expr,
        tau: f64,
        schedule: ArgumentSchedule,
        linear_kappa: Option<f64>,
    ) -> Result<Self, ModelError> {
        if !tau.is_finite() {
            return Err(ModelError::InvalidParameter(format!(
                "tau must be finite, got {tau}"
            )));
        }
        let first = schedule.node(schedule.index_origin())?;
        if tau < first {
            return Err(ModelError::TauBeforeFirstNode { tau, first });
        }
        let spec = ProblemSpec {
            label: label.into(),
            r,
            f,
            p,
            phi,
            tau,
            schedule,
            linear_kappa,
        };
        if let Some(kappa) = spec.linear_kappa {
            spec.check_linear_kappa(kappa)?;
        }
        Ok(spec)
    }

    fn check_linear_kappa(&self, kappa: f64) -> Result<(), ModelError> {
        let grid = 32;
        for i in 0..grid {
            let t = self.tau + 10.0 * i as f64 / (grid - 1) as f64;
            let r = self.eval_r(t)?;
            if (r - 1.0).abs() > 1e-12 {
                return Err(ModelError::LinearKappaNonUnitR { t, value: r });
            }
            for j in 0..grid {
                let x = -10.0 + 20.0 * j as f64 / (grid - 1) as f64;
                let f_value = self.eval_f(t, x)?;
                let expected = kappa * x;
                if (f_value - expected).abs() > 1e-12 * (1.0 + expected.abs()) {
                    return Err(ModelError::LinearKappaMismatch {
                        kappa,
                        t,
                        x,
                        f_value,
                        expected,
                    });
                }
            }
        }
        Ok(())
    }

    /// Same instance with a different schedule (re-validated).
    pub fn with_schedule(&self, schedule: ArgumentSchedule) -> Result<Self, ModelError> {
        ProblemSpec::new(
            self.label.clone(),
            self.r.clone(),
            self.f.clone(),
            self.p.clone(),
            self.phi.clone(),
            self.tau,
            schedule,
            self.linear_kappa,
        )
    }

    /// Same instance with the exact-stepper flag cleared, forcing the
    /// quadrature path.
    pub fn without_linear_kappa(&self) -> Self {
        let mut spec = self.clone();
        spec.linear_kappa = None;
        spec
    }

    pub fn eval_r(&self, t: f64) -> Result<f64, ModelError> {
        self.r.eval(&[("t", t)]).map_err(|source| ModelError::Eval {
            what: "r",
            t,
            x: None,
            source,
        })
    }

    pub fn eval_f(&self, t: f64, x: f64) -> Result<f64, ModelError> {
        self.f
            .eval(&[("t", t), ("x", x)])
            .map_err(|source| ModelError::Eval {
                what: "f",
                t,
                x: Some(x),
                source,
            })
    }

    pub fn eval_p(&self, t: f64) -> Result<f64, ModelError> {
        self.p.eval(&[("t", t)]).map_err(|source| ModelError::Eval {
            what: "p",
            t,
            x: None,
            source,
        })
    }

    pub fn eval_phi(&self, u: f64) -> Result<f64, ModelError> {
        self.phi
            .eval(&[("u", u)])
            .map_err(|source| ModelError::Eval {
                what: "phi",
                t: f64::NAN,
                x: Some(u),
                source,
            })
    }

    /// Sample-check the standing hypotheses on a `grid x grid` lattice of
    /// `(t, x)` in `[tau, t_max] x [-10, 10] \ {0}`.
    pub fn validate(&self, t_max: f64, grid: usize) -> Result<ValidationReport, ModelError> {
        self.validate_with_range(t_max, grid, 10.0)
    }

    pub fn validate_with_range(
        &self,
        t_max: f64,
        grid: usize,
        x_range: f64,
    ) -> Result<ValidationReport, ModelError> {
        if t_max <= self.tau {
            return Err(ModelError::InvalidParameter(format!(
                "t_max = {t_max} must exceed tau = {}",
                self.tau
            )));
        }
        if grid < 8 {
            return Err(ModelError::InvalidParameter(format!(
                "grid must be at least 8, got {grid}"
            )));
        }

        let ts: Vec<f64> = (0..grid)
            .map(|i| self.tau + (t_max - self.tau) * i as f64 / (grid - 1) as f64)
            .collect();
        let xs: Vec<f64> = (0..grid)
            .map(|j| -x_range + 2.0 * x_range * j as f64 / (grid - 1) as f64)
            .filter(|x| x.abs() > 1e-9 * x_range)
            .collect();

        let mut h1 = HypothesisCheck::passing("H1", "r(t) > 0");
        for &t in &ts {
            let r = self.eval_r(t)?;
            if r <= 0.0 {
                h1.fail(t, None, format!("r({t}) = {r}"));
                break;
            }
        }

        let mut h2 = HypothesisCheck::passing("H2", "x*f(t,x) > 0 for x != 0");
        'h2: for &t in &ts {
            for &x in &xs {
                let f = self.eval_f(t, x)?;
                if x * f <= 0.0 {
                    h2.fail(t, Some(x), format!("x*f = {}", x * f));
                    break 'h2;
                }
            }
        }

        let mut h3 = HypothesisCheck::passing("H3", "p(t) >= 0");
        for &t in &ts {
            let p = self.eval_p(t)?;
            if p < 0.0 {
                h3.fail(t, None, format!("p({t}) = {p}"));
                break;
            }
        }

        let mut h4 =
            HypothesisCheck::passing("H4", "phi nondecreasing and u*phi(u) > 0 for u != 0");
        let mut prev: Option<(f64, f64)> = None;
        for &u in &xs {
            let value = self.eval_phi(u)?;
            if u * value <= 0.0 {
                h4.fail(f64::NAN, Some(u), format!("u*phi(u) = {}", u * value));
                break;
            }
            if let Some((pu, pv)) = prev {
                if value < pv - 1e-12 {
                    h4.fail(
                        f64::NAN,
                        Some(u),
                        format!("phi({u}) = {value} < phi({pu}) = {pv}"),
                    );
                    break;
                }
            }
            prev = Some((u, value));
        }

        // Minorant inequality f(t,x)/phi(x) >= p(t), checked sign-aware so
        // it means the same thing on both sides of zero.
        let mut h5 = HypothesisCheck::passing("H5", "f(t,x)/phi(x) >= p(t) for x != 0");
        'h5: for &t in &ts {
            for &x in &xs {
                let f = self.eval_f(t, x)?;
                let bound = self.eval_p(t)? * self.eval_phi(x)?;
                let tol = 1e-12 * (1.0 + f.abs());
                let ok = if x > 0.0 {
                    f >= bound - tol
                } else {
                    f <= bound + tol
                };
                if !ok {
                    h5.fail(t, Some(x), format!("f = {f}, p*phi = {bound}"));
                    break 'h5;
                }
            }
        }

        Ok(ValidationReport {
            hypotheses: vec![h1, h2, h3, h4, h5],
            t_max,
            grid,
            x_range,
        })
    }
}

/// Outcome of one hypothesis check; a failure records the first witness
/// sample found.
#[derive(Debug, Clone)]
pub struct HypothesisCheck {
    pub id: &'static str,
    pub description: &'static str,
    pub passed: bool,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone)]
pub struct Witness {
    /// Sample time (NaN for checks on `phi` alone).
    pub t: f64,
    pub x: Option<f64>,
    pub detail: String,
}

impl HypothesisCheck {
    fn passing(id: &'static str, description: &'static str) -> Self {
        HypothesisCheck {
            id,
            description,
            passed: true,
            witness: None,
        }
    }

    fn fail(&mut self, t: f64, x: Option<f64>, detail: String) {
        self.passed = false;
        self.witness = Some(Witness { t, x, detail });
    }
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub hypotheses: Vec<HypothesisCheck>,
    pub t_max: f64,
    pub grid: usize,
    pub x_range: f64,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.hypotheses.iter().all(|h| h.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &HypothesisCheck> {
        self.hypotheses.iter().filter(|h| !h.passed)
    }
}

/// The bundled example problems.
pub fn builtin(name: &str) -> Result<(ProblemSpec, InitialCondition), ModelError> {
    match name {
        "example1" => {
            let spec = ProblemSpec::new(
                "example1",
                Expr::parse("1")?,
                Expr::parse("2*x")?,
                Expr::parse("2")?,
                Expr::parse("u")?,
                0.0,
                ArgumentSchedule::uniform(1.0, 0.0)?,
                Some(2.0),
            )?;
            Ok((spec, InitialCondition::new(1.0, 0.0)?))
        }
        "example2" => {
            let spec = ProblemSpec::new(
                "example2",
                Expr::parse("exp(-t)")?,
                Expr::parse("x*exp(t^2+x^2)")?,
                Expr::parse("exp(t^2)")?,
                Expr::parse("u")?,
                0.0,
                ArgumentSchedule::uniform(1.0, 0.0)?,
                None,
            )?;
            Ok((spec, InitialCondition::new(1.0, 0.0)?))
        }
        "criterion2-demo" => {
            let spec = ProblemSpec::new(
                "criterion2-demo",
                Expr::parse("1")?,
                Expr::parse("x^3/t^2")?,
                Expr::parse("1/t^2")?,
                Expr::parse("u^3")?,
                1.0,
                ArgumentSchedule::uniform(1.0, 0.5)?,
                None,
            )?;
            Ok((spec, InitialCondition::new(1.0, 0.0)?))
        }
        other => Err(ModelError::UnknownBuiltin(other.to_owned())),
    }
}
