//! Simulation and oscillation analysis for second-order equations with a
//! piecewise constant argument of generalized type:
//!
//! ```text
//! (r(t) x'(t))' + f(t, x(gamma(t))) = 0,    t >= tau,
//! ```
//!
//! where `gamma(t)` is constant on each interval `[t_n, t_(n+1))` of a
//! node/switch schedule. The crate provides:
//!
//! * [`expr`] — the expression language for coefficients,
//! * [`pca`] — schedules and the argument function `gamma`,
//! * [`model`] — problem instances and hypothesis validation,
//! * [`solver`] — method-of-steps integration with an implicit
//!   advanced-interval fixed point,
//! * [`criteria`] — divergence decisions for the Leighton–Wintner-type
//!   oscillation criteria,
//! * [`oscillation`] — sign-behavior classification of trajectories.

pub mod criteria;
pub mod expr;
pub mod model;
pub mod oscillation;
pub mod pca;
pub mod quad;
pub mod solver;

pub use criteria::{
    check_theorem_1, check_theorem_2, improper_integral, p_tail, phi_tails, Conclusion,
    CriteriaHints, CriterionReport, DivergenceVerdict, IntegralOptions, IntegralOutcome, TailHint,
};
pub use expr::Expr;
pub use model::{builtin, InitialCondition, ProblemSpec, ValidationReport};
pub use oscillation::{classify_trajectory, lemma_check, Classification, ClassifyOptions};
pub use pca::{ArgumentClass, ArgumentSchedule};
pub use solver::{integrate, linear_step_exact, SolverOptions, Trajectory, TrajectoryStatus};
