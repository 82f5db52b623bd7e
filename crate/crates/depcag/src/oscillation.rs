//! Sign-behavior classification of computed trajectories.
//!
//! A function is oscillatory when it does not eventually become strictly
//! positive or strictly negative: there are arbitrarily late points `a_n`
//! with `x(a_n) <= 0` and `b_n` with `x(b_n) >= 0`. Over a finite horizon
//! the classifier can only collect evidence, so every outcome is
//! horizon-relative: witnesses are strict sign-change events bracketed to
//! sample resolution, and "eventually positive/negative" means the sign
//! stabilized with at least `margin` intervals of tail data.

use crate::criteria::DivergenceVerdict;
use crate::solver::Trajectory;

/// One sign-change witness: `x(a) <= sign_tol` and `x(b) >= -sign_tol`,
/// with a strict crossing between the two samples.
#[derive(Debug, Clone, Copy)]
pub struct WitnessPair {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Oscillatory {
        witnesses: Vec<WitnessPair>,
        count: usize,
    },
    EventuallyPositive {
        from: f64,
    },
    EventuallyNegative {
        from: f64,
    },
    Undetermined,
}

impl Outcome {
    pub fn word(&self) -> &'static str {
        match self {
            Outcome::Oscillatory { .. } => "Oscillatory",
            Outcome::EventuallyPositive { .. } => "EventuallyPositive",
            Outcome::EventuallyNegative { .. } => "EventuallyNegative",
            Outcome::Undetermined => "Undetermined",
        }
    }

    pub fn witness_count(&self) -> usize {
        match self {
            Outcome::Oscillatory { count, .. } => *count,
            _ => 0,
        }
    }
}

/// Classification result over the examined horizon.
#[derive(Debug, Clone)]
pub struct Classification {
    pub outcome: Outcome,
    pub horizon: f64,
    pub sign_tol: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ClassifyOptions {
    /// Absolute sign tolerance; default `1e-9 * max(1, max|x|)` absorbs
    /// quadrature noise near zeros.
    pub sign_tol: Option<f64>,
    pub min_witnesses: usize,
    /// Sign stabilization must happen at least this many intervals before
    /// the horizon to be reported.
    pub margin_intervals: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            sign_tol: None,
            min_witnesses: 3,
            margin_intervals: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SignState {
    Positive,
    Band,
    Negative,
}

/// Classify a trajectory's dense samples per the oscillation definition.
/// Fewer than 10 intervals of data yields `Undetermined`.
pub fn classify_trajectory(traj: &Trajectory, opts: &ClassifyOptions) -> Classification {
    let samples: Vec<(f64, f64)> = traj.dense.iter().map(|s| (s.t, s.x)).collect();
    let max_abs = samples.iter().fold(0.0f64, |m, (_, x)| m.max(x.abs()));
    let sign_tol = opts.sign_tol.unwrap_or(1e-9 * max_abs.max(1.0));

    if traj.nodes.len() < 10 || samples.is_empty() {
        return Classification {
            outcome: Outcome::Undetermined,
            horizon: traj.horizon,
            sign_tol,
        };
    }

    let state = |x: f64| {
        if x > sign_tol {
            SignState::Positive
        } else if x < -sign_tol {
            SignState::Negative
        } else {
            SignState::Band
        }
    };

    // Strict sign-change events: Positive and Negative separated by any
    // run of band samples. The witness pair takes the nonpositive side as
    // `a` and the nonnegative side as `b`.
    let mut witnesses = Vec::new();
    let mut last_strict: Option<(SignState, f64)> = None;
    for &(t, x) in &samples {
        let s = state(x);
        if s == SignState::Band {
            continue;
        }
        if let Some((prev, prev_t)) = last_strict {
            if prev != s {
                let (a, b) = if s == SignState::Positive {
                    (prev_t, t)
                } else {
                    (t, prev_t)
                };
                witnesses.push(WitnessPair { a, b });
            }
        }
        last_strict = Some((s, t));
    }

    if witnesses.len() >= opts.min_witnesses {
        let count = witnesses.len();
        return Classification {
            outcome: Outcome::Oscillatory { witnesses, count },
            horizon: traj.horizon,
            sign_tol,
        };
    }

    // Everything inside the band: the (tolerance-)zero function, which is
    // oscillatory with coincident witness sequences.
    if samples.iter().all(|(_, x)| x.abs() <= sign_tol) {
        let count = samples.len() - 1;
        let witnesses = samples
            .windows(2)
            .take(opts.min_witnesses.max(1))
            .map(|w| WitnessPair {
                a: w[0].0,
                b: w[1].0,
            })
            .collect();
        return Classification {
            outcome: Outcome::Oscillatory { witnesses, count },
            horizon: traj.horizon,
            sign_tol,
        };
    }

    let first_t = samples[0].0;
    let last_node_t = traj.nodes.last().map(|n| n.t_k).unwrap_or(first_t);
    let mean_interval = if traj.nodes.len() > 1 {
        (last_node_t - traj.nodes[0].t_k) / (traj.nodes.len() - 1) as f64
    } else {
        traj.horizon - first_t
    };
    let margin = opts.margin_intervals as f64 * mean_interval;
    let data_end = samples.last().unwrap().0;

    // Sign stabilization: earliest time after which no sample dips below
    // -tol (resp. above +tol), with genuine excursions past the band.
    let last_negative = samples
        .iter()
        .filter(|(_, x)| *x < -sign_tol)
        .map(|(t, _)| *t)
        .next_back();
    let last_positive = samples
        .iter()
        .filter(|(_, x)| *x > sign_tol)
        .map(|(t, _)| *t)
        .next_back();

    let from_positive = match last_negative {
        None => Some(first_t),
        Some(t_neg) => samples.iter().map(|(t, _)| *t).find(|t| *t > t_neg),
    };
    if let Some(from) = from_positive {
        let positive_after = samples.iter().any(|(t, x)| *t >= from && *x > sign_tol);
        if positive_after && from <= data_end - margin {
            return Classification {
                outcome: Outcome::EventuallyPositive { from },
                horizon: traj.horizon,
                sign_tol,
            };
        }
    }

    let from_negative = match last_positive {
        None => Some(first_t),
        Some(t_pos) => samples.iter().map(|(t, _)| *t).find(|t| *t > t_pos),
    };
    if let Some(from) = from_negative {
        let negative_after = samples.iter().any(|(t, x)| *t >= from && *x < -sign_tol);
        if negative_after && from <= data_end - margin {
            return Classification {
                outcome: Outcome::EventuallyNegative { from },
                horizon: traj.horizon,
                sign_tol,
            };
        }
    }

    Classification {
        outcome: Outcome::Undetermined,
        horizon: traj.horizon,
        sign_tol,
    }
}

/// Conclusion check for the supporting lemma: a solution that stays
/// nonnegative while `INT 1/r` diverges must eventually have nonnegative
/// derivative at the nodes.
///
/// Nodes inside the final five mean intervals are excluded from the
/// derivative check: a horizon that truncates a positive arc mid-descent
/// always shows trailing negative derivatives, which says nothing about
/// the asymptotics.
#[derive(Debug, Clone)]
pub enum LemmaReport {
    /// Nonnegative window starts at node `window_from`; node derivatives
    /// are clean from node `derivative_from` onward.
    Holds {
        window_from: i64,
        derivative_from: i64,
    },
    /// A node inside the nonnegative window keeps a negative derivative
    /// through the end of the data.
    Violated {
        node: i64,
        t: f64,
        v: f64,
    },
    NotApplicable {
        reason: String,
    },
}

impl LemmaReport {
    pub fn is_violated(&self) -> bool {
        matches!(self, LemmaReport::Violated { .. })
    }
}

pub fn lemma_check(traj: &Trajectory, eq6: &DivergenceVerdict, deriv_tol: f64) -> LemmaReport {
    if !eq6.outcome.is_diverges() {
        return LemmaReport::NotApplicable {
            reason: "integral of 1/r not classified divergent".into(),
        };
    }
    if traj.nodes.is_empty() || traj.dense.is_empty() {
        return LemmaReport::NotApplicable {
            reason: "no trajectory data".into(),
        };
    }

    // earliest node M with x >= -tol on every sample from t_M onward
    let mut window_idx = None;
    for (idx, node) in traj.nodes.iter().enumerate() {
        let clean = traj
            .dense
            .iter()
            .filter(|s| s.t >= node.t_k)
            .all(|s| s.x >= -deriv_tol);
        if clean {
            window_idx = Some(idx);
            break;
        }
    }
    let window_idx = match window_idx {
        Some(idx) if traj.nodes.len() - idx >= 10 => idx,
        Some(_) => {
            return LemmaReport::NotApplicable {
                reason: "nonnegative window shorter than 10 nodes".into(),
            }
        }
        None => {
            return LemmaReport::NotApplicable {
                reason: "solution has no eventually-nonnegative window".into(),
            }
        }
    };

    // earliest node N >= M with v(t_k) >= -tol for every later node that
    // is clear of the horizon margin
    let data_end = traj.dense.last().map(|s| s.t).unwrap_or(traj.horizon);
    let mean_interval = if traj.nodes.len() > 1 {
        (traj.nodes.last().unwrap().t_k - traj.nodes[0].t_k) / (traj.nodes.len() - 1) as f64
    } else {
        data_end - traj.nodes[0].t_k
    };
    let cutoff = data_end - 5.0 * mean_interval;
    let nodes: Vec<&crate::solver::NodeState> = traj.nodes[window_idx..]
        .iter()
        .filter(|n| n.t_k <= cutoff)
        .collect();
    if nodes.is_empty() {
        return LemmaReport::NotApplicable {
            reason: "nonnegative window lies entirely within the horizon margin".into(),
        };
    }
    let mut derivative_idx = None;
    for start in 0..nodes.len() {
        if nodes[start..].iter().all(|n| n.v >= -deriv_tol) {
            derivative_idx = Some(start);
            break;
        }
    }
    match derivative_idx {
        Some(start) => LemmaReport::Holds {
            window_from: traj.nodes[window_idx].k,
            derivative_from: nodes[start].k,
        },
        None => {
            let offender = nodes
                .iter()
                .rev()
                .find(|n| n.v < -deriv_tol)
                .expect("some node must violate when no suffix is clean");
            LemmaReport::Violated {
                node: offender.k,
                t: offender.t_k,
                v: offender.v,
            }
        }
    }
}
