//! Divergence/convergence decisions for the improper integrals and series
//! behind the two oscillation criteria, and the per-theorem verdicts.
//!
//! Divergence of an improper integral is undecidable from finitely many
//! samples, so verdicts are three-valued and carry their evidence. The
//! engine computes partial integrals at geometric checkpoints
//! `T_i = lower + 2^i * delta` and decides:
//!
//! * `Diverges` — a partial exceeded `divergence_threshold`; or a declared
//!   tail hint gives exponent `sigma >= -1` (power law) / rate
//!   `lambda >= 0` (exponential) with an eventually-positive integrand; or
//!   the partial increments are nondecreasing across at least 6 trailing
//!   checkpoints (slow divergence).
//! * `Converges(value, err_bound)` — a hint with `sigma < -1` or
//!   `lambda < 0` supplies an analytic tail; or the increments decay
//!   geometrically with ratio <= 0.5 across at least 4 trailing
//!   checkpoints.
//! * `Inconclusive` — anything else.
//!
//! The engine never claims analytic truth from numerics alone without a
//! hint; heuristic verdicts are labelled as such.

use thiserror::Error;

use crate::expr::{EvalError, Expr};
use crate::model::ProblemSpec;
use crate::pca::ScheduleError;
use crate::quad::{self, QuadError};

/// Declared asymptotic class of an integrand, supplied by the user when
/// known. `PowerLaw(sigma)` means `~ C * t^sigma`; `Exponential(lambda)`
/// means `~ C * e^(lambda t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailHint {
    PowerLaw(f64),
    Exponential(f64),
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntegralOutcome {
    Diverges,
    Converges { value: f64, err_bound: f64 },
    Inconclusive,
}

impl IntegralOutcome {
    pub fn is_diverges(&self) -> bool {
        matches!(self, IntegralOutcome::Diverges)
    }

    pub fn is_converges(&self) -> bool {
        matches!(self, IntegralOutcome::Converges { .. })
    }

    pub fn word(&self) -> &'static str {
        match self {
            IntegralOutcome::Diverges => "Diverges",
            IntegralOutcome::Converges { .. } => "Converges",
            IntegralOutcome::Inconclusive => "Inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Hinted,
    Heuristic,
    ShortCircuit,
}

impl Method {
    pub fn word(&self) -> &'static str {
        match self {
            Method::Hinted => "hinted",
            Method::Heuristic => "heuristic",
            Method::ShortCircuit => "short_circuit",
        }
    }
}

/// One evidence entry: the partial integral up to `t` (for series, `t` is
/// the last summed index).
#[derive(Debug, Clone, Copy)]
pub struct Checkpoint {
    pub t: f64,
    pub partial: f64,
}

#[derive(Debug, Clone)]
pub struct DivergenceVerdict {
    pub outcome: IntegralOutcome,
    pub method: Method,
    pub evidence: Vec<Checkpoint>,
}

#[derive(Debug, Clone, Copy)]
pub struct IntegralOptions {
    /// First checkpoint lies at `lower + delta`.
    pub delta: f64,
    /// Checkpoints run `i = 0..=i_max`.
    pub i_max: u32,
    pub divergence_threshold: f64,
    pub quad_tol: f64,
}

impl Default for IntegralOptions {
    fn default() -> Self {
        IntegralOptions {
            delta: 1.0,
            i_max: 40,
            divergence_threshold: 1e12,
            quad_tol: 1e-10,
        }
    }
}

#[derive(Debug, Error)]
pub enum CriteriaError {
    #[error("integrand error at t = {t}: {source}")]
    Integrand { t: f64, source: EvalError },
    #[error(transparent)]
    Quadrature(QuadError),
    #[error("integrand must use at most one variable, found {0:?}")]
    MultiVariable(Vec<String>),
    #[error("phi vanishes at u = {u} with |u| >= epsilon")]
    PhiVanishes { u: f64 },
    #[error("tail of p requested but its integral does not converge")]
    PTailOnDivergentIntegral,
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("invalid argument: {0}")]
    BadArgs(String),
}

impl From<QuadError> for CriteriaError {
    fn from(e: QuadError) -> Self {
        match e {
            QuadError::Eval { t, source } => CriteriaError::Integrand { t, source },
            QuadError::NonFinite { t } => CriteriaError::Integrand {
                t,
                source: EvalError::NonFinite { op: "integrand" },
            },
            other => CriteriaError::Quadrature(other),
        }
    }
}

/// Roundoff slack for the increment-shape heuristics.
const RATIO_SLACK: f64 = 1e-9;

fn single_var(expr: &Expr) -> Result<Option<String>, CriteriaError> {
    let vars: Vec<String> = expr.variables().into_iter().map(str::to_owned).collect();
    match vars.len() {
        0 => Ok(None),
        1 => Ok(Some(vars.into_iter().next().unwrap())),
        _ => Err(CriteriaError::MultiVariable(vars)),
    }
}

fn bind<'e>(expr: &'e Expr, var: Option<String>) -> impl Fn(f64) -> Result<f64, QuadError> + 'e {
    move |t: f64| {
        match &var {
            Some(name) => expr.eval(&[(name.as_str(), t)]),
            None => expr.eval(&[]),
        }
        .map_err(|source| QuadError::Eval { t, source })
    }
}

/// Decide `INT_lower^inf integrand` for an integrand in one variable.
pub fn improper_integral(
    integrand: &Expr,
    lower: f64,
    hint: TailHint,
    opts: &IntegralOptions,
) -> Result<DivergenceVerdict, CriteriaError> {
    let var = single_var(integrand)?;
    let f = bind(integrand, var);
    improper_integral_fn(&f, lower, hint, opts)
}

fn improper_integral_fn<F>(
    f: &F,
    lower: f64,
    hint: TailHint,
    opts: &IntegralOptions,
) -> Result<DivergenceVerdict, CriteriaError>
where
    F: Fn(f64) -> Result<f64, QuadError>,
{
    if opts.delta.is_nan() || opts.delta <= 0.0 || opts.divergence_threshold <= 0.0 {
        return Err(CriteriaError::BadArgs(
            "delta and divergence_threshold must be positive".into(),
        ));
    }

    let mut evidence: Vec<Checkpoint> = Vec::new();
    let mut partial = 0.0;
    let mut quad_err = 0.0;
    let mut prev_t = lower;

    for i in 0..=opts.i_max {
        let t_i = lower + (2.0f64).powi(i as i32) * opts.delta;
        let panel = quad::integrate(f, prev_t, t_i, opts.quad_tol, opts.quad_tol)?;
        partial += panel.value;
        quad_err += panel.abs_err;
        evidence.push(Checkpoint { t: t_i, partial });
        prev_t = t_i;

        if partial > opts.divergence_threshold {
            return Ok(DivergenceVerdict {
                outcome: IntegralOutcome::Diverges,
                method: Method::ShortCircuit,
                evidence,
            });
        }

        // With a convergent hint, stop once the declared analytic tail is
        // negligible against the accumulated partial.
        if let Some(tail) = hinted_tail(f, hint, t_i)? {
            if i >= 3 && tail.abs() <= 1e-9 * (1.0 + partial.abs()) {
                break;
            }
        }

        // With a divergent hint the verdict is already determined; a few
        // checkpoints of evidence are enough.
        if i >= 5 && hint_is_divergent(hint) {
            break;
        }
    }

    // Hint rules take precedence over shape heuristics.
    match hint {
        TailHint::PowerLaw(sigma) if sigma < -1.0 => {
            let last = evidence.last().expect("at least one checkpoint");
            let tail = hinted_tail(f, hint, last.t)?.expect("convergent hint");
            let spread = tail_model_spread(f, hint, &evidence)?;
            return Ok(DivergenceVerdict {
                outcome: IntegralOutcome::Converges {
                    value: partial + tail,
                    err_bound: quad_err + spread,
                },
                method: Method::Hinted,
                evidence,
            });
        }
        TailHint::Exponential(lambda) if lambda < 0.0 => {
            let last = evidence.last().expect("at least one checkpoint");
            let tail = hinted_tail(f, hint, last.t)?.expect("convergent hint");
            let spread = tail_model_spread(f, hint, &evidence)?;
            return Ok(DivergenceVerdict {
                outcome: IntegralOutcome::Converges {
                    value: partial + tail,
                    err_bound: quad_err + spread,
                },
                method: Method::Hinted,
                evidence,
            });
        }
        TailHint::PowerLaw(_) | TailHint::Exponential(_) => {
            // divergent class; requires an eventually-positive integrand
            if integrand_eventually_positive(f, &evidence)? {
                return Ok(DivergenceVerdict {
                    outcome: IntegralOutcome::Diverges,
                    method: Method::Hinted,
                    evidence,
                });
            }
        }
        TailHint::None => {}
    }

    let outcome = heuristic_outcome(&evidence, partial, quad_err);
    Ok(DivergenceVerdict {
        outcome,
        method: Method::Heuristic,
        evidence,
    })
}

fn hint_is_divergent(hint: TailHint) -> bool {
    match hint {
        TailHint::PowerLaw(sigma) => sigma >= -1.0,
        TailHint::Exponential(lambda) => lambda >= 0.0,
        TailHint::None => false,
    }
}

/// Analytic tail integral beyond `t` implied by a convergent hint, with the
/// constant calibrated from the integrand sample at `t`.
fn hinted_tail<F>(f: &F, hint: TailHint, t: f64) -> Result<Option<f64>, CriteriaError>
where
    F: Fn(f64) -> Result<f64, QuadError>,
{
    match hint {
        TailHint::PowerLaw(sigma) if sigma < -1.0 => {
            let sample = f(t).map_err(CriteriaError::from)?;
            // INT_t^inf C s^sigma ds with C = f(t) t^(-sigma)
            Ok(Some(sample * t / (-sigma - 1.0)))
        }
        TailHint::Exponential(lambda) if lambda < 0.0 => {
            let sample = f(t).map_err(CriteriaError::from)?;
            Ok(Some(sample / (-lambda)))
        }
        _ => Ok(None),
    }
}

/// Uncertainty of the hinted tail: how much the calibrated constant moves
/// between the last two checkpoints, scaled to the tail magnitude.
fn tail_model_spread<F>(
    f: &F,
    hint: TailHint,
    evidence: &[Checkpoint],
) -> Result<f64, CriteriaError>
where
    F: Fn(f64) -> Result<f64, QuadError>,
{
    if evidence.len() < 2 {
        return Ok(0.0);
    }
    let a = evidence[evidence.len() - 2].t;
    let b = evidence[evidence.len() - 1].t;
    let tail_a = hinted_tail(f, hint, a)?.unwrap_or(0.0);
    let tail_b = hinted_tail(f, hint, b)?.unwrap_or(0.0);
    // the tail estimated at `a` should absorb the measured panel [a, b]
    let panel = evidence[evidence.len() - 1].partial - evidence[evidence.len() - 2].partial;
    Ok((tail_a - panel - tail_b).abs())
}

fn integrand_eventually_positive<F>(f: &F, evidence: &[Checkpoint]) -> Result<bool, CriteriaError>
where
    F: Fn(f64) -> Result<f64, QuadError>,
{
    let last = match evidence.last() {
        Some(c) => c.t,
        None => return Ok(false),
    };
    for factor in [1.0, 0.75, 0.5] {
        let v = f(last * factor).map_err(CriteriaError::from)?;
        if v <= 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Shape heuristics over trailing checkpoint increments.
fn heuristic_outcome(evidence: &[Checkpoint], partial: f64, quad_err: f64) -> IntegralOutcome {
    let increments: Vec<f64> = evidence
        .iter()
        .scan(0.0, |prev, c| {
            let inc = c.partial - *prev;
            *prev = c.partial;
            Some(inc)
        })
        .collect();
    classify_increments(&increments, partial, quad_err)
}

fn classify_increments(increments: &[f64], partial: f64, quad_err: f64) -> IntegralOutcome {
    let scale = 1.0 + partial.abs();

    // A dead tail (increments indistinguishable from zero) is a converged
    // partial: covers integrands that underflow and degenerate series.
    if increments.len() >= 4 {
        let tail = &increments[increments.len() - 4..];
        if tail.iter().all(|g| g.abs() <= 1e-13 * scale + quad_err) {
            return IntegralOutcome::Converges {
                value: partial,
                err_bound: quad_err + 1e-12 * scale,
            };
        }
    }

    // Geometric decay with ratio <= 1/2 across >= 4 trailing ratios.
    if increments.len() >= 5 {
        let window = &increments[increments.len() - 5..];
        let mut ratios = Vec::with_capacity(4);
        let mut ok = true;
        for pair in window.windows(2) {
            if pair[0] <= 0.0 {
                ok = false;
                break;
            }
            ratios.push(pair[1] / pair[0]);
        }
        if ok && ratios.iter().all(|r| *r <= 0.5 + RATIO_SLACK) {
            let g_last = *window.last().unwrap();
            let r_max = ratios
                .iter()
                .cloned()
                .fold(0.0f64, f64::max)
                .min(0.5 + RATIO_SLACK);
            let tail = g_last * r_max / (1.0 - r_max);
            return IntegralOutcome::Converges {
                value: partial + tail,
                // remaining tail is bounded by g_last when the ratio stays <= 1/2
                err_bound: quad_err + g_last,
            };
        }
    }

    // Slow divergence: nondecreasing positive increments across >= 6
    // trailing checkpoints.
    if increments.len() >= 7 {
        let window = &increments[increments.len() - 7..];
        let nondecreasing = window
            .windows(2)
            .all(|pair| pair[1] >= pair[0] - RATIO_SLACK * (1.0 + pair[0].abs()));
        if nondecreasing && *window.last().unwrap() > 0.0 {
            return IntegralOutcome::Diverges;
        }
    }

    IntegralOutcome::Inconclusive
}

/// Both tails of `INT 1/phi` from `+-epsilon` outward. The negative tail is
/// rewritten through `u -> -u` as an integral of `-1/phi(-u)` over
/// `[epsilon, inf)`.
pub fn phi_tails(
    phi: &Expr,
    epsilon: f64,
    pos_hint: TailHint,
    neg_hint: TailHint,
    opts: &IntegralOptions,
) -> Result<(DivergenceVerdict, DivergenceVerdict), CriteriaError> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(CriteriaError::BadArgs(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let var = match single_var(phi)? {
        Some(v) => v,
        None => "u".to_owned(),
    };

    // phi must not vanish on the sampled range |u| >= epsilon
    for i in 0..=8 {
        let u = epsilon * (2.0f64).powi(i);
        for signed in [u, -u] {
            let value = phi
                .eval(&[(var.as_str(), signed)])
                .map_err(|source| CriteriaError::Integrand { t: signed, source })?;
            if value == 0.0 {
                return Err(CriteriaError::PhiVanishes { u: signed });
            }
        }
    }

    let one = Expr::number(1.0);
    let positive = Expr::div(one.clone(), phi.clone());
    let reflected = phi.substitute(&var, &Expr::neg(Expr::var(&var)));
    let negative = Expr::neg(Expr::div(one, reflected));

    let pos = improper_integral(&positive, epsilon, pos_hint, opts)?;
    let neg = improper_integral(&negative, epsilon, neg_hint, opts)?;
    Ok((pos, neg))
}

/// `P(t) = INT_t^inf p(u) du` for a weight whose improper integral
/// converges: quadrature out to the checkpoint horizon plus the hinted
/// analytic tail when available.
#[derive(Debug, Clone, Copy)]
pub struct TailValue {
    pub value: f64,
    pub err_bound: f64,
}

pub fn p_tail(
    p: &Expr,
    t: f64,
    hint: TailHint,
    opts: &IntegralOptions,
) -> Result<TailValue, CriteriaError> {
    let var = single_var(p)?;
    let f = bind(p, var);

    let mut partial = 0.0;
    let mut quad_err = 0.0;
    let mut prev = t;
    let mut last_increment = 0.0;
    let mut cut = t;
    for i in 0..=opts.i_max {
        let t_i = t + (2.0f64).powi(i as i32) * opts.delta;
        let panel = quad::integrate(&f, prev, t_i, opts.quad_tol, opts.quad_tol)?;
        partial += panel.value;
        quad_err += panel.abs_err;
        last_increment = panel.value.abs();
        prev = t_i;
        cut = t_i;
        if partial.abs() > opts.divergence_threshold {
            return Err(CriteriaError::PTailOnDivergentIntegral);
        }
        if let Some(tail) = hinted_tail(&f, hint, t_i)? {
            if tail.abs() <= 1e-9 * (1.0 + partial.abs()) || i == opts.i_max {
                return Ok(TailValue {
                    value: partial + tail,
                    err_bound: quad_err + 1e-2 * tail.abs(),
                });
            }
        }
    }
    // no usable hint: best effort, with the leftover reported through the
    // last panel increment
    let _ = cut;
    Ok(TailValue {
        value: partial,
        err_bound: quad_err + last_increment,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conclusion {
    Oscillatory,
    NotApplicable,
    Inconclusive,
}

impl Conclusion {
    pub fn word(&self) -> &'static str {
        match self {
            Conclusion::Oscillatory => "Oscillatory",
            Conclusion::NotApplicable => "NotApplicable",
            Conclusion::Inconclusive => "Inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Requirement {
    Diverges,
    Converges,
}

impl Requirement {
    pub fn word(&self) -> &'static str {
        match self {
            Requirement::Diverges => "Diverges",
            Requirement::Converges => "Converges",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub label: &'static str,
    pub required: Requirement,
    pub verdict: DivergenceVerdict,
    pub note: Option<String>,
}

impl ConditionReport {
    pub fn satisfied(&self) -> bool {
        match self.required {
            Requirement::Diverges => self.verdict.outcome.is_diverges(),
            Requirement::Converges => self.verdict.outcome.is_converges(),
        }
    }

    pub fn decisively_fails(&self) -> bool {
        match self.required {
            Requirement::Diverges => self.verdict.outcome.is_converges(),
            Requirement::Converges => self.verdict.outcome.is_diverges(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub theorem: u8,
    pub conditions: Vec<ConditionReport>,
    pub conclusion: Conclusion,
    pub warnings: Vec<String>,
    pub narrative: String,
}

impl CriterionReport {
    pub fn condition(&self, label: &str) -> Option<&ConditionReport> {
        self.conditions.iter().find(|c| c.label == label)
    }
}

/// Hints per coefficient, as supplied through configuration.
#[derive(Debug, Clone, Copy)]
pub struct CriteriaHints {
    pub r_inv: TailHint,
    pub p: TailHint,
    pub phi_inv_pos: TailHint,
    pub phi_inv_neg: TailHint,
    pub series: TailHint,
}

impl Default for CriteriaHints {
    fn default() -> Self {
        CriteriaHints {
            r_inv: TailHint::None,
            p: TailHint::None,
            phi_inv_pos: TailHint::None,
            phi_inv_neg: TailHint::None,
            series: TailHint::None,
        }
    }
}

fn conclude(conditions: &[ConditionReport]) -> Conclusion {
    if conditions.iter().all(ConditionReport::satisfied) {
        Conclusion::Oscillatory
    } else if conditions.iter().any(ConditionReport::decisively_fails) {
        Conclusion::NotApplicable
    } else {
        Conclusion::Inconclusive
    }
}

fn narrative_for(theorem: u8, conditions: &[ConditionReport], conclusion: Conclusion) -> String {
    let mut text = format!("criterion {theorem}: ");
    for (i, c) in conditions.iter().enumerate() {
        if i > 0 {
            text.push_str(", ");
        }
        text.push_str(&format!(
            "{} {} (need {})",
            c.label,
            c.verdict.outcome.word(),
            c.required.word()
        ));
    }
    text.push_str(&format!(" => {}", conclusion.word()));
    text
}

/// First criterion: both `INT 1/r` and `INT p` must diverge.
pub fn check_theorem_1(
    spec: &ProblemSpec,
    hints: &CriteriaHints,
    opts: &IntegralOptions,
) -> Result<CriterionReport, CriteriaError> {
    let r_inv = Expr::div(Expr::number(1.0), spec.r.clone());
    let eq6 = improper_integral(&r_inv, spec.tau, hints.r_inv, opts)?;
    let eq11 = improper_integral(&spec.p, spec.tau, hints.p, opts)?;

    let conditions = vec![
        ConditionReport {
            label: "Eq6",
            required: Requirement::Diverges,
            verdict: eq6,
            note: None,
        },
        ConditionReport {
            label: "Eq11",
            required: Requirement::Diverges,
            verdict: eq11,
            note: None,
        },
    ];
    let conclusion = conclude(&conditions);
    let narrative = narrative_for(1, &conditions, conclusion);
    Ok(CriterionReport {
        theorem: 1,
        conditions,
        conclusion,
        warnings: Vec::new(),
        narrative,
    })
}

/// Second criterion: `INT 1/r` diverges, both tails of `INT 1/phi`
/// converge, `INT p` converges, and the advanced-subinterval series
///
/// ```text
/// SUM_(j=k(tau)) INT_(t_j)^(zeta_j) (1/r(s)) P(t_(j+1)) ds,   P(t) = INT_t^inf p
/// ```
///
/// diverges. For `s` in `[t_j, zeta_j]` the interval index `k(s)` is `j`,
/// so the inner tail starts at `t_(j+1)`.
pub fn check_theorem_2(
    spec: &ProblemSpec,
    epsilon: f64,
    n_max: i64,
    hints: &CriteriaHints,
    opts: &IntegralOptions,
) -> Result<CriterionReport, CriteriaError> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(CriteriaError::BadArgs(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if n_max < 16 {
        return Err(CriteriaError::BadArgs(format!(
            "n_max must be at least 16, got {n_max}"
        )));
    }

    let r_inv = Expr::div(Expr::number(1.0), spec.r.clone());
    let eq6 = improper_integral(&r_inv, spec.tau, hints.r_inv, opts)?;
    let (eq12_pos, eq12_neg) = phi_tails(
        &spec.phi,
        epsilon,
        hints.phi_inv_pos,
        hints.phi_inv_neg,
        opts,
    )?;
    let eq13a = improper_integral(&spec.p, spec.tau, hints.p, opts)?;

    let mut warnings = Vec::new();
    let mut eq13b_note = None;

    let eq13b = if !eq13a.outcome.is_converges() {
        eq13b_note = Some("skipped: the series needs a convergent weight integral".to_owned());
        DivergenceVerdict {
            outcome: IntegralOutcome::Inconclusive,
            method: Method::Heuristic,
            evidence: Vec::new(),
        }
    } else {
        let (verdict, degenerate) = advanced_series(spec, n_max, hints, opts)?;
        if degenerate {
            warnings.push(
                "degenerate schedule: zeta_j = t_j for every index, so every series term \
                 is zero and the series cannot diverge"
                    .to_owned(),
            );
        }
        verdict
    };

    let conditions = vec![
        ConditionReport {
            label: "Eq6",
            required: Requirement::Diverges,
            verdict: eq6,
            note: None,
        },
        ConditionReport {
            label: "Eq12+",
            required: Requirement::Converges,
            verdict: eq12_pos,
            note: None,
        },
        ConditionReport {
            label: "Eq12-",
            required: Requirement::Converges,
            verdict: eq12_neg,
            note: None,
        },
        ConditionReport {
            label: "Eq13a",
            required: Requirement::Converges,
            verdict: eq13a,
            note: None,
        },
        ConditionReport {
            label: "Eq13b",
            required: Requirement::Diverges,
            verdict: eq13b,
            note: eq13b_note,
        },
    ];
    let conclusion = conclude(&conditions);
    let narrative = narrative_for(2, &conditions, conclusion);
    Ok(CriterionReport {
        theorem: 2,
        conditions,
        conclusion,
        warnings,
        narrative,
    })
}

/// Sum the series over advanced subintervals, recording partial sums after
/// every one of the first 16 terms and at doubling term counts. The shape
/// heuristics run over the doubling subsequence only. Returns the verdict
/// and whether the schedule was degenerate throughout.
fn advanced_series(
    spec: &ProblemSpec,
    n_max: i64,
    hints: &CriteriaHints,
    opts: &IntegralOptions,
) -> Result<(DivergenceVerdict, bool), CriteriaError> {
    let k_tau = spec.schedule.interval_index(spec.tau)?;
    if n_max < k_tau {
        return Err(CriteriaError::BadArgs(format!(
            "n_max = {n_max} is below the first series index k(tau) = {k_tau}"
        )));
    }

    let r_inv_var = single_var(&spec.r)?;
    let r_inv = {
        let r = spec.r.clone();
        move |s: f64| {
            let value = match &r_inv_var {
                Some(name) => r.eval(&[(name.as_str(), s)]),
                None => r.eval(&[]),
            }
            .map_err(|source| QuadError::Eval { t: s, source })?;
            Ok(1.0 / value)
        }
    };

    let mut partial = 0.0;
    let mut evidence = Vec::new();
    let mut geometric: Vec<f64> = Vec::new();
    let mut degenerate = true;
    let mut count: u64 = 0;
    let mut short_circuit = false;

    for j in k_tau..=n_max {
        let t_j = spec.schedule.node(j)?;
        let zeta_j = spec.schedule.switch_point(j)?;
        let t_next = spec.schedule.node(j + 1)?;
        if zeta_j > t_j {
            degenerate = false;
        }
        let weight = quad::integrate(&r_inv, t_j, zeta_j, opts.quad_tol, opts.quad_tol)?;
        let tail = p_tail(&spec.p, t_next, hints.p, opts)?;
        partial += weight.value * tail.value;
        count += 1;

        if count <= 16 || count.is_power_of_two() {
            evidence.push(Checkpoint {
                t: j as f64,
                partial,
            });
        }
        if count.is_power_of_two() {
            geometric.push(partial);
        }
        if partial > opts.divergence_threshold {
            short_circuit = true;
            break;
        }
    }

    if degenerate {
        return Ok((
            DivergenceVerdict {
                outcome: IntegralOutcome::Converges {
                    value: 0.0,
                    err_bound: 0.0,
                },
                method: Method::Heuristic,
                evidence,
            },
            true,
        ));
    }

    if short_circuit {
        return Ok((
            DivergenceVerdict {
                outcome: IntegralOutcome::Diverges,
                method: Method::ShortCircuit,
                evidence,
            },
            false,
        ));
    }

    // hint over term counts, mirroring the integral rules
    if hint_is_divergent(hints.series) && geometric.iter().all(|p| *p >= 0.0) {
        return Ok((
            DivergenceVerdict {
                outcome: IntegralOutcome::Diverges,
                method: Method::Hinted,
                evidence,
            },
            false,
        ));
    }

    let increments: Vec<f64> = geometric
        .iter()
        .scan(0.0, |prev, p| {
            let inc = p - *prev;
            *prev = *p;
            Some(inc)
        })
        .collect();
    let outcome = classify_increments(&increments, partial, 0.0);
    Ok((
        DivergenceVerdict {
            outcome,
            method: Method::Heuristic,
            evidence,
        },
        false,
    ))
}
