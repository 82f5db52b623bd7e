//! Method-of-steps integration.
//!
//! On each interval `I_k = [t_k, t_(k+1))` the argument is frozen at the
//! constant `c_k = x(zeta_k)`, which turns the equation into
//! `(r(t)x')' = -f(t, c_k)` — exactly solvable by two nested quadratures:
//!
//! ```text
//! v(t) = (r(t_k) v_k - INT_{t_k}^{t} f(s, c_k) ds) / r(t)
//! x(t) = x_k + INT_{t_k}^{t} v(s) ds
//! ```
//!
//! On the advanced subinterval the frozen value is implicit: `c_k` must
//! equal the solution value it produces at `zeta_k`. It is resolved by a
//! damped fixed-point iteration. For the linear problem `f = kappa*x`,
//! `r = 1` the step has a closed form (`linear_step_exact`), used
//! automatically when the spec carries `linear_kappa`.
//!
//! Continuity contract: `x` and `x'` are continuous everywhere (each step
//! seeds the next interval with the left limit), while `(r x')'` jumps
//! with the frozen argument and only has one-sided limits at the nodes.

use thiserror::Error;

use crate::model::{InitialCondition, ModelError, ProblemSpec};
use crate::pca::ScheduleError;
use crate::quad::{self, QuadError};

/// Numerical controls for the stepper.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Absolute and relative tolerance of every inner quadrature.
    pub quad_tol: f64,
    /// Fixed-point stop: `|Phi(c) - c| <= fp_tol * (1 + |c|)`.
    pub fp_tol: f64,
    pub max_iter: u32,
    /// `|x|` or `|v|` beyond this declares termination, not an error.
    pub blowup_bound: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            quad_tol: 1e-10,
            fp_tol: 1e-12,
            max_iter: 100,
            blowup_bound: 1e12,
        }
    }
}

/// State at the entry of interval `k`, with the frozen value for that
/// interval already resolved.
#[derive(Debug, Clone, Copy)]
pub struct NodeState {
    pub k: i64,
    /// Entry time: `t_k`, or `tau` for a clipped first interval.
    pub t_k: f64,
    pub x: f64,
    pub v: f64,
    pub zeta: f64,
    /// The resolved frozen value `c_k = x(zeta_k)`.
    pub x_at_zeta: f64,
    pub fp_iterations: u32,
}

#[derive(Debug, Clone, Copy)]
pub struct DenseSample {
    pub t: f64,
    pub x: f64,
    pub v: f64,
    pub k: i64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrajectoryStatus {
    Completed,
    /// `|x|`, `|v|`, or an integrand left the representable range.
    Blowup {
        t: f64,
    },
    /// The advanced-interval fixed point did not contract within
    /// `max_iter`.
    FixedPointFailure {
        k: i64,
    },
}

/// Output of `integrate`: per-interval node records plus dense samples.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub label: String,
    pub nodes: Vec<NodeState>,
    pub dense: Vec<DenseSample>,
    pub status: TrajectoryStatus,
    pub options: SolverOptions,
    pub horizon: f64,
}

impl Trajectory {
    pub fn completed(&self) -> bool {
        self.status == TrajectoryStatus::Completed
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("fixed point did not converge on interval k = {k} (residual {residual:e})")]
    FixedPoint { k: i64, residual: f64 },
    #[error("state exceeded representable range near t = {t}")]
    Blowup { t: f64 },
    #[error("r({t}) = {value} is not positive")]
    NonPositiveR { t: f64, value: f64 },
    #[error(transparent)]
    Quadrature(QuadError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid argument: {0}")]
    BadArgs(String),
}

impl From<QuadError> for SolverError {
    fn from(e: QuadError) -> Self {
        match e {
            // overflow in the state or the forcing term, not a structural
            // failure: the solution left the representable range
            QuadError::NonFinite { t } => SolverError::Blowup { t },
            QuadError::Eval {
                t,
                source: crate::expr::EvalError::NonFinite { .. },
            } => SolverError::Blowup { t },
            other => SolverError::Quadrature(other),
        }
    }
}

/// Frozen-argument propagation over one interval, from an explicit start
/// point (`t0` is `t_k` except for a clipped first interval).
struct Frozen<'a> {
    spec: &'a ProblemSpec,
    t0: f64,
    x0: f64,
    c: f64,
    rv0: f64,
    opts: SolverOptions,
}

impl<'a> Frozen<'a> {
    fn new(
        spec: &'a ProblemSpec,
        t0: f64,
        x0: f64,
        v0: f64,
        c: f64,
        opts: SolverOptions,
    ) -> Result<Self, SolverError> {
        let r0 = eval_r(spec, t0)?;
        Ok(Frozen {
            spec,
            t0,
            x0,
            c,
            rv0: r0 * v0,
            opts,
        })
    }

    fn forcing_integral(&self, upto: f64) -> Result<f64, QuadError> {
        let f = &self.spec.f;
        let c = self.c;
        let integrand = move |s: f64| {
            f.eval(&[("t", s), ("x", c)])
                .map_err(|source| QuadError::Eval { t: s, source })
        };
        Ok(quad::integrate(
            &integrand,
            self.t0,
            upto,
            self.opts.quad_tol,
            self.opts.quad_tol,
        )?
        .value)
    }

    fn velocity(&self, t: f64) -> Result<f64, QuadError> {
        let accumulated = self.forcing_integral(t)?;
        let r = self
            .spec
            .r
            .eval(&[("t", t)])
            .map_err(|source| QuadError::Eval { t, source })?;
        if r <= 0.0 {
            return Err(QuadError::Eval {
                t,
                source: crate::expr::EvalError::Domain { func: "r", arg: t },
            });
        }
        Ok((self.rv0 - accumulated) / r)
    }

    /// `(x(t), v(t))` for `t` inside the interval (either side of `t0`).
    fn evaluate(&self, t: f64) -> Result<(f64, f64), SolverError> {
        let r_t = eval_r(self.spec, t)?;
        let v = (self.rv0 - self.forcing_integral(t)?) / r_t;
        let vel = |s: f64| self.velocity(s);
        let dx = quad::integrate(&vel, self.t0, t, self.opts.quad_tol, self.opts.quad_tol)?;
        let x = self.x0 + dx.value;
        if !(x.is_finite() && v.is_finite()) {
            return Err(SolverError::Blowup { t });
        }
        Ok((x, v))
    }
}

fn eval_r(spec: &ProblemSpec, t: f64) -> Result<f64, SolverError> {
    let value = spec.eval_r(t)?;
    if value <= 0.0 {
        return Err(SolverError::NonPositiveR { t, value });
    }
    Ok(value)
}

/// Evaluate the frozen-argument solution of interval `k` (entered at
/// `(t_k, x_k, v_k)` with frozen value `c`) at time `t`.
pub fn frozen_solution(
    spec: &ProblemSpec,
    k: i64,
    x_k: f64,
    v_k: f64,
    c: f64,
    t: f64,
    opts: &SolverOptions,
) -> Result<(f64, f64), SolverError> {
    let t0 = spec.schedule.node(k)?;
    Frozen::new(spec, t0, x_k, v_k, c, *opts)?.evaluate(t)
}

fn resolve_from(
    spec: &ProblemSpec,
    k: i64,
    t0: f64,
    x0: f64,
    v0: f64,
    opts: &SolverOptions,
) -> Result<(f64, f64, u32), SolverError> {
    let zeta = spec.schedule.switch_point(k)?;
    if zeta == t0 {
        return Ok((x0, zeta, 0));
    }
    if let Some(kappa) = spec.linear_kappa {
        let c = linear_frozen_value(kappa, t0, x0, v0, zeta)?;
        return Ok((c, zeta, 0));
    }

    let phi = |c: f64| -> Result<f64, SolverError> {
        Ok(Frozen::new(spec, t0, x0, v0, c, *opts)?.evaluate(zeta)?.0)
    };

    let mut c = x0 + v0 * (zeta - t0);
    let mut lambda = 1.0;
    let mut prev_residual = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for iter in 1..=opts.max_iter {
        let image = phi(c)?;
        let delta = image - c;
        residual = delta.abs();
        if !residual.is_finite() {
            return Err(SolverError::Blowup { t: zeta });
        }
        if residual <= opts.fp_tol * (1.0 + c.abs()) {
            return Ok((c, zeta, iter));
        }
        // Halve the damping whenever the residual fails to contract
        // decisively; a merely non-increasing residual (step map with
        // derivative -1) would otherwise ping-pong forever.
        if residual > 0.7 * prev_residual {
            lambda *= 0.5;
            if lambda < 1e-8 {
                return Err(SolverError::FixedPoint { k, residual });
            }
        }
        prev_residual = residual;
        c += lambda * delta;
    }
    Err(SolverError::FixedPoint { k, residual })
}

/// Resolve the implicit frozen value of the advanced subinterval of `k` by
/// damped fixed-point iteration, starting from the tangent-line guess
/// `x_k + v_k (zeta_k - t_k)`. Returns `(c, iterations)`; a degenerate
/// subinterval (`zeta_k = t_k`) resolves immediately to `x_k`.
pub fn resolve_advanced(
    spec: &ProblemSpec,
    k: i64,
    x_k: f64,
    v_k: f64,
    opts: &SolverOptions,
) -> Result<(f64, u32), SolverError> {
    let t0 = spec.schedule.node(k)?;
    let (c, _, iters) = resolve_from(spec, k, t0, x_k, v_k, opts)?;
    Ok((c, iters))
}

fn linear_frozen_value(
    kappa: f64,
    t0: f64,
    x0: f64,
    v0: f64,
    zeta: f64,
) -> Result<f64, SolverError> {
    let delta = zeta - t0;
    let denom = 1.0 + kappa * delta * delta / 2.0;
    if denom.abs() < 1e-300 {
        return Err(SolverError::BadArgs(format!(
            "linear frozen value singular: 1 + kappa*delta^2/2 = {denom}"
        )));
    }
    Ok((x0 + v0 * delta) / denom)
}

/// Closed-form step for `x'' + kappa*x(gamma(t)) = 0` with `r = 1`.
/// Returns `(x_(k+1), v_(k+1), c_k)`.
pub fn linear_step_exact(
    kappa: f64,
    schedule: &crate::pca::ArgumentSchedule,
    k: i64,
    x_k: f64,
    v_k: f64,
) -> Result<(f64, f64, f64), SolverError> {
    let t0 = schedule.node(k)?;
    let zeta = schedule.switch_point(k)?;
    let h = schedule.node(k + 1)? - t0;
    let c = linear_frozen_value(kappa, t0, x_k, v_k, zeta)?;
    let x_next = x_k + v_k * h - kappa * c / 2.0 * h * h;
    let v_next = v_k - kappa * c * h;
    Ok((x_next, v_next, c))
}

fn make_state(
    spec: &ProblemSpec,
    k: i64,
    t0: f64,
    x: f64,
    v: f64,
    opts: &SolverOptions,
) -> Result<NodeState, SolverError> {
    if !(x.is_finite() && v.is_finite())
        || x.abs() > opts.blowup_bound
        || v.abs() > opts.blowup_bound
    {
        return Err(SolverError::Blowup { t: t0 });
    }
    let (c, zeta, iters) = resolve_from(spec, k, t0, x, v, opts)?;
    Ok(NodeState {
        k,
        t_k: t0,
        x,
        v,
        zeta,
        x_at_zeta: c,
        fp_iterations: iters,
    })
}

/// Advance one interval: evaluate the frozen solution of `state`'s interval
/// at the next node (left limit; `x` and `v` are continuous across it) and
/// resolve the next interval's frozen value.
pub fn step(
    spec: &ProblemSpec,
    state: &NodeState,
    opts: &SolverOptions,
) -> Result<NodeState, SolverError> {
    let t_next = spec.schedule.node(state.k + 1)?;
    let (x, v) = propagate(spec, state, t_next, opts)?;
    make_state(spec, state.k + 1, t_next, x, v, opts)
}

fn propagate(
    spec: &ProblemSpec,
    state: &NodeState,
    t: f64,
    opts: &SolverOptions,
) -> Result<(f64, f64), SolverError> {
    if let Some(kappa) = spec.linear_kappa {
        let dt = t - state.t_k;
        let c = state.x_at_zeta;
        let x = state.x + state.v * dt - kappa * c / 2.0 * dt * dt;
        let v = state.v - kappa * c * dt;
        if !(x.is_finite() && v.is_finite()) {
            return Err(SolverError::Blowup { t });
        }
        Ok((x, v))
    } else {
        Frozen::new(spec, state.t_k, state.x, state.v, state.x_at_zeta, *opts)?.evaluate(t)
    }
}

/// Integrate from `(tau, x0, v0)` through the last node below `horizon`,
/// recording `dense_per_interval` samples per interval. A `tau` strictly
/// inside an interval starts with a clipped first interval whose frozen
/// value still lives at its switch point. Failures that are properties of
/// the trajectory (blowup, fixed-point breakdown) come back as a partial
/// `Trajectory` with the matching status; structural failures are errors.
pub fn integrate(
    spec: &ProblemSpec,
    ic: &InitialCondition,
    horizon: f64,
    dense_per_interval: usize,
    opts: &SolverOptions,
) -> Result<Trajectory, SolverError> {
    if horizon <= spec.tau {
        return Err(SolverError::BadArgs(format!(
            "horizon = {horizon} must exceed tau = {}",
            spec.tau
        )));
    }
    if dense_per_interval < 2 {
        return Err(SolverError::BadArgs(format!(
            "dense_per_interval must be at least 2, got {dense_per_interval}"
        )));
    }

    let mut traj = Trajectory {
        label: spec.label.clone(),
        nodes: Vec::new(),
        dense: Vec::new(),
        status: TrajectoryStatus::Completed,
        options: *opts,
        horizon,
    };

    let k0 = spec.schedule.interval_index(spec.tau)?;
    let mut state = match make_state(spec, k0, spec.tau, ic.x0, ic.v0, opts) {
        Ok(s) => s,
        Err(e) => return finish_with_failure(traj, e),
    };

    loop {
        traj.nodes.push(state);
        let t_next = spec.schedule.node(state.k + 1)?;
        let seg_end = t_next.min(horizon);

        for j in 0..dense_per_interval {
            let t = state.t_k + (seg_end - state.t_k) * j as f64 / dense_per_interval as f64;
            match propagate(spec, &state, t, opts) {
                Ok((x, v)) => traj.dense.push(DenseSample {
                    t,
                    x,
                    v,
                    k: state.k,
                    gamma: state.zeta,
                }),
                Err(e) => return finish_with_failure(traj, e),
            }
        }

        if t_next >= horizon {
            return Ok(traj);
        }

        let (x, v) = match propagate(spec, &state, t_next, opts) {
            Ok(pair) => pair,
            Err(e) => return finish_with_failure(traj, e),
        };
        state = match make_state(spec, state.k + 1, t_next, x, v, opts) {
            Ok(s) => s,
            Err(e) => return finish_with_failure(traj, e),
        };
    }
}

fn finish_with_failure(
    mut traj: Trajectory,
    error: SolverError,
) -> Result<Trajectory, SolverError> {
    match error {
        SolverError::Blowup { t } => {
            traj.status = TrajectoryStatus::Blowup { t };
            Ok(traj)
        }
        SolverError::FixedPoint { k, .. } => {
            traj.status = TrajectoryStatus::FixedPointFailure { k };
            Ok(traj)
        }
        other => Err(other),
    }
}
