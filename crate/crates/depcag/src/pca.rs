//! The generalized piecewise constant argument.
//!
//! A schedule is a strictly increasing node sequence `t_n` together with
//! switch points `zeta_n` in `[t_n, t_(n+1)]`. The argument function is
//! `gamma(t) = zeta_k` on the half-open interval `I_k = [t_k, t_(k+1))`,
//! right-continuous at nodes. Each interval splits into an advanced part
//! `[t_k, zeta_k]` (argument ahead of time) and a delayed part
//! `[zeta_k, t_(k+1)]`.
//!
//! Custom schedules are defined by expressions in `n` rather than stored
//! tables, so horizons are unbounded; computed values are memoized per
//! index behind a lock, which keeps concurrent reads safe.

use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::expr::{EvalError, Expr};

/// Position of `t` within its interval relative to the switch point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgumentClass {
    /// `t < zeta_k`: the frozen argument is ahead of `t`.
    Advanced,
    /// `t = zeta_k`.
    AtSwitch,
    /// `t > zeta_k`: the frozen argument lags behind `t`.
    Delayed,
}

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("node sequence not increasing at n = {n}: t_n = {left}, t_(n+1) = {right}")]
    NonMonotonic { n: i64, left: f64, right: f64 },
    #[error("switch point for n = {n} outside [{left}, {right}]: zeta = {zeta}")]
    SwitchOutsideInterval {
        n: i64,
        zeta: f64,
        left: f64,
        right: f64,
    },
    #[error("t = {t} is below the first node t_({origin}) = {first}")]
    BelowFirstNode { t: f64, origin: i64, first: f64 },
    #[error("index n = {n} is below the schedule origin {origin}")]
    IndexBelowOrigin { n: i64, origin: i64 },
    #[error("invalid schedule parameter: {0}")]
    InvalidParameter(String),
    #[error("evaluating schedule rule at n = {n}: {source}")]
    Rule { n: i64, source: EvalError },
}

#[derive(Debug, Clone)]
enum Kind {
    Uniform {
        m: f64,
        alpha: f64,
    },
    Custom {
        node_rule: Expr,
        switch_fraction: Expr,
    },
}

#[derive(Debug, Default)]
struct Memo {
    nodes: Vec<f64>,
    fractions: Vec<f64>,
}

/// Node/switch sequences defining `gamma(t)`. Immutable after construction.
#[derive(Debug, Clone)]
pub struct ArgumentSchedule {
    kind: Kind,
    index_origin: i64,
    memo: Arc<Mutex<Memo>>,
}

/// Cap on lazy node generation per lookup; a bounded-above custom rule
/// would otherwise loop forever searching for an interval.
const MAX_MEMO_FILL: usize = 4_000_000;

impl ArgumentSchedule {
    /// Uniform schedule `t_n = n*m`, `zeta_n = (n+alpha)*m` with origin 0.
    pub fn uniform(m: f64, alpha: f64) -> Result<Self, ScheduleError> {
        Self::uniform_with_origin(m, alpha, 0)
    }

    pub fn uniform_with_origin(
        m: f64,
        alpha: f64,
        index_origin: i64,
    ) -> Result<Self, ScheduleError> {
        if !(m.is_finite() && m > 0.0) {
            return Err(ScheduleError::InvalidParameter(format!(
                "m must be a positive real, got {m}"
            )));
        }
        if !(alpha.is_finite() && (0.0..=1.0).contains(&alpha)) {
            return Err(ScheduleError::InvalidParameter(format!(
                "alpha must lie in [0, 1], got {alpha}"
            )));
        }
        Ok(ArgumentSchedule {
            kind: Kind::Uniform { m, alpha },
            index_origin,
            memo: Arc::new(Mutex::new(Memo::default())),
        })
    }

    /// Custom schedule: `node_rule` gives `t_n` and `switch_fraction` gives
    /// `theta_n` in [0, 1] with `zeta_n = t_n + theta_n*(t_(n+1) - t_n)`.
    /// Both are expressions in the single variable `n`.
    pub fn custom(
        node_rule: Expr,
        switch_fraction: Expr,
        index_origin: i64,
    ) -> Result<Self, ScheduleError> {
        for (label, rule) in [
            ("node_rule", &node_rule),
            ("switch_fraction", &switch_fraction),
        ] {
            let vars = rule.variables();
            if !vars.iter().all(|v| *v == "n") {
                return Err(ScheduleError::InvalidParameter(format!(
                    "{label} may only use the variable `n`, found {vars:?}"
                )));
            }
        }
        Ok(ArgumentSchedule {
            kind: Kind::Custom {
                node_rule,
                switch_fraction,
            },
            index_origin,
            memo: Arc::new(Mutex::new(Memo::default())),
        })
    }

    pub fn index_origin(&self) -> i64 {
        self.index_origin
    }

    /// The node `t_n`.
    pub fn node(&self, n: i64) -> Result<f64, ScheduleError> {
        if n < self.index_origin {
            return Err(ScheduleError::IndexBelowOrigin {
                n,
                origin: self.index_origin,
            });
        }
        match &self.kind {
            Kind::Uniform { m, .. } => Ok(n as f64 * m),
            Kind::Custom { node_rule, .. } => self.custom_node(node_rule, n),
        }
    }

    /// The switch point `zeta_n` in `[t_n, t_(n+1)]`.
    pub fn switch_point(&self, n: i64) -> Result<f64, ScheduleError> {
        if n < self.index_origin {
            return Err(ScheduleError::IndexBelowOrigin {
                n,
                origin: self.index_origin,
            });
        }
        match &self.kind {
            Kind::Uniform { m, alpha } => Ok((n as f64 + alpha) * m),
            Kind::Custom {
                node_rule,
                switch_fraction,
            } => {
                let left = self.custom_node(node_rule, n)?;
                let right = self.custom_node(node_rule, n + 1)?;
                let theta = self.custom_fraction(switch_fraction, n)?;
                let zeta = left + theta * (right - left);
                if !(0.0..=1.0).contains(&theta) || !zeta.is_finite() {
                    return Err(ScheduleError::SwitchOutsideInterval {
                        n,
                        zeta,
                        left,
                        right,
                    });
                }
                Ok(zeta)
            }
        }
    }

    /// The unique `k` with `t` in `[t_k, t_(k+1))`; right-continuous at
    /// nodes, so `interval_index(t_k) = k`.
    pub fn interval_index(&self, t: f64) -> Result<i64, ScheduleError> {
        if !t.is_finite() {
            return Err(ScheduleError::InvalidParameter(format!(
                "interval lookup needs a finite t, got {t}"
            )));
        }
        let first = self.node(self.index_origin)?;
        if t < first {
            return Err(ScheduleError::BelowFirstNode {
                t,
                origin: self.index_origin,
                first,
            });
        }
        match &self.kind {
            Kind::Uniform { m, .. } => {
                let mut k = (t / m).floor() as i64;
                // floating-point guards at node boundaries
                while (k + 1) as f64 * m <= t {
                    k += 1;
                }
                while t < k as f64 * m {
                    k -= 1;
                }
                Ok(k.max(self.index_origin))
            }
            Kind::Custom { node_rule, .. } => {
                let mut probe = self.index_origin + 1;
                let mut filled = 0usize;
                loop {
                    let value = self.custom_node(node_rule, probe)?;
                    if value > t {
                        break;
                    }
                    probe += 1;
                    filled += 1;
                    if filled > MAX_MEMO_FILL {
                        return Err(ScheduleError::InvalidParameter(format!(
                            "node sequence did not pass t = {t} within {MAX_MEMO_FILL} indices"
                        )));
                    }
                }
                let memo = self.memo.lock().unwrap();
                let count = memo.nodes.partition_point(|&v| v <= t);
                Ok(self.index_origin + count as i64 - 1)
            }
        }
    }

    /// `gamma(t) = zeta_k` for `k = interval_index(t)`.
    pub fn gamma(&self, t: f64) -> Result<f64, ScheduleError> {
        self.switch_point(self.interval_index(t)?)
    }

    /// Advanced/delayed classification of `t` relative to its switch point.
    pub fn classify(&self, t: f64) -> Result<ArgumentClass, ScheduleError> {
        let zeta = self.gamma(t)?;
        Ok(if t < zeta {
            ArgumentClass::Advanced
        } else if t == zeta {
            ArgumentClass::AtSwitch
        } else {
            ArgumentClass::Delayed
        })
    }

    fn custom_node(&self, rule: &Expr, n: i64) -> Result<f64, ScheduleError> {
        let mut memo = self.memo.lock().unwrap();
        let idx = (n - self.index_origin) as usize;
        while memo.nodes.len() <= idx {
            let at = self.index_origin + memo.nodes.len() as i64;
            let value = rule
                .eval(&[("n", at as f64)])
                .map_err(|source| ScheduleError::Rule { n: at, source })?;
            if let Some(&prev) = memo.nodes.last() {
                if value <= prev {
                    return Err(ScheduleError::NonMonotonic {
                        n: at - 1,
                        left: prev,
                        right: value,
                    });
                }
            }
            memo.nodes.push(value);
        }
        Ok(memo.nodes[idx])
    }

    fn custom_fraction(&self, rule: &Expr, n: i64) -> Result<f64, ScheduleError> {
        let mut memo = self.memo.lock().unwrap();
        let idx = (n - self.index_origin) as usize;
        while memo.fractions.len() <= idx {
            let at = self.index_origin + memo.fractions.len() as i64;
            let value = rule
                .eval(&[("n", at as f64)])
                .map_err(|source| ScheduleError::Rule { n: at, source })?;
            memo.fractions.push(value);
        }
        Ok(memo.fractions[idx])
    }
}
