//! Acceptance suite. Each test prints one `acceptance N: PASS/FAIL` line
//! and pins its tolerance in code. The randomized batteries are seeded
//! deterministically; set `DEPCAG_SEED` to rerun them elsewhere.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use depcag::criteria::{
    check_theorem_1, check_theorem_2, improper_integral, Conclusion, CriteriaHints,
    IntegralOptions, IntegralOutcome, TailHint,
};
use depcag::expr::{BinOp, Expr, Func};
use depcag::model::{builtin, InitialCondition, ProblemSpec};
use depcag::oscillation::{classify_trajectory, lemma_check, ClassifyOptions, Outcome};
use depcag::pca::{ArgumentClass, ArgumentSchedule};
use depcag::solver::{frozen_solution, integrate, linear_step_exact, SolverOptions, Trajectory};

fn battery_seed() -> u64 {
    std::env::var("DEPCAG_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0xDE9C_A61D)
}

fn conclude(criterion: u32, ok: bool, elapsed: Duration, detail: String) {
    println!(
        "acceptance {criterion}: {} ({:.2}s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    assert!(ok, "criterion {criterion}: {detail}");
}

fn run_binary(args: &[&str], dir: &Path) -> (String, String, Option<i32>) {
    let out = Command::new(env!("CARGO_BIN_EXE_depcag"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs");
    (
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
        out.status.code(),
    )
}

fn machine_value(verdict: &str, key: &str) -> Option<String> {
    verdict
        .lines()
        .find_map(|line| line.strip_prefix(&format!("{key}=")))
        .map(str::to_owned)
}

// ---------------------------------------------------------------------
// 1. The linear demo's node values against the closed form built from the
//    characteristic roots (1 +/- i sqrt(7)) / 2.
// ---------------------------------------------------------------------

#[derive(Clone, Copy)]
struct Complex {
    re: f64,
    im: f64,
}

impl Complex {
    fn new(re: f64, im: f64) -> Self {
        Complex { re, im }
    }

    fn mul(self, o: Complex) -> Complex {
        Complex::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }

    fn powu(self, n: u32) -> Complex {
        let mut acc = Complex::new(1.0, 0.0);
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }
}

fn closed_form_node(n: u32) -> f64 {
    let s7 = 7.0f64.sqrt();
    let lam_plus = Complex::new(0.5, s7 / 2.0);
    let lam_minus = Complex::new(0.5, -s7 / 2.0);
    let a = lam_minus.powu(n).mul(Complex::new(s7, -1.0));
    let b = lam_plus.powu(n).mul(Complex::new(s7, 1.0));
    (a.re + b.re) / (2.0 * s7)
}

#[test]
fn acceptance_1_example1_closed_form() {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let (_, stderr, code) = run_binary(&["demo", "example1"], tmp.path());
    assert_eq!(code, Some(0), "{stderr}");
    let nodes = std::fs::read_to_string(tmp.path().join("nodes.csv")).unwrap();

    let mut ok = true;
    let mut detail = String::new();
    let mut seen = 0u32;
    for line in nodes.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let n: u32 = fields[0].parse().unwrap();
        if n > 25 {
            continue;
        }
        seen += 1;
        let x: f64 = fields[3].parse().unwrap();
        let oracle = closed_form_node(n);
        let bound = 1e-9 * (1.0 + oracle.abs());
        if (x - oracle).abs() > bound {
            ok = false;
            detail = format!("node {n}: computed {x}, closed form {oracle}");
        }
    }
    if seen != 26 {
        ok = false;
        detail = format!("expected nodes 0..=25, saw {seen}");
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(1) {
        ok = false;
        detail = format!("runtime {elapsed:?} exceeds 1 s");
    }
    conclude(1, ok, elapsed, detail);
}

// ---------------------------------------------------------------------
// 2. Quadrature-path solver against the exact linear stepper across
//    stiffness and schedule combinations.
// ---------------------------------------------------------------------

#[test]
fn acceptance_2_recurrence_oracle() {
    let start = Instant::now();
    let opts = SolverOptions::default();
    let mut ok = true;
    let mut detail = String::new();

    'outer: for kappa in [0.5, 1.0, 2.0, 4.0] {
        for (m, alpha) in [(1.0, 0.0), (1.0, 0.5), (2.0, 0.5)] {
            let schedule = ArgumentSchedule::uniform(m, alpha).unwrap();
            let spec = ProblemSpec::new(
                format!("oracle-k{kappa}-m{m}-a{alpha}"),
                Expr::parse("1").unwrap(),
                Expr::parse(&format!("{kappa}*x")).unwrap(),
                Expr::parse(&format!("{kappa}")).unwrap(),
                Expr::parse("u").unwrap(),
                0.0,
                schedule.clone(),
                None, // force the quadrature path
            )
            .unwrap();
            let ic = InitialCondition::new(1.0, 0.0).unwrap();
            let traj = match integrate(&spec, &ic, m * 25.5, 2, &opts) {
                Ok(t) if t.completed() => t,
                other => {
                    ok = false;
                    detail = format!("{}: {other:?}", spec.label);
                    break 'outer;
                }
            };

            let (mut x, mut v) = (ic.x0, ic.v0);
            for node in traj.nodes.iter().skip(1) {
                let (xn, vn, _) = linear_step_exact(kappa, &schedule, node.k - 1, x, v).unwrap();
                x = xn;
                v = vn;
                let scale = 1.0f64.max(x.abs()).max(v.abs());
                if (node.x - x).abs() > 1e-8 * scale || (node.v - v).abs() > 1e-8 * scale {
                    ok = false;
                    detail = format!(
                        "{} node {}: ({}, {}) vs exact ({x}, {v})",
                        spec.label, node.k, node.x, node.v
                    );
                    break 'outer;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(10) {
        ok = false;
        detail = format!("runtime {elapsed:?} exceeds 10 s");
    }
    conclude(2, ok, elapsed, detail);
}

// ---------------------------------------------------------------------
// 3. First-criterion verdicts through the CLI.
// ---------------------------------------------------------------------

#[test]
fn acceptance_3_theorem_1_verdicts() {
    let start = Instant::now();
    let mut ok = true;
    let mut detail = String::new();

    for (name, expected) in [("example1", "Oscillatory"), ("example2", "Oscillatory")] {
        let tmp = tempfile::tempdir().unwrap();
        let (_, stderr, code) =
            run_binary(&["check", "--builtin", name, "--theorem", "1"], tmp.path());
        let verdict = std::fs::read_to_string(tmp.path().join("verdict.txt")).unwrap_or_default();
        let conclusion = machine_value(&verdict, "conclusion").unwrap_or_default();
        if code != Some(0) || conclusion != expected {
            ok = false;
            detail = format!("{name}: exit {code:?}, conclusion {conclusion:?} ({stderr})");
        }
    }

    // the variant with an integrable weight: p = exp(-t)
    let tmp = tempfile::tempdir().unwrap();
    let config = r#"
[problem]
r = "1"
f = "x*exp(-t)"
p = "exp(-t)"
phi = "u"
tau = 0.0
label = "convergent-weight"

[schedule]
kind = "uniform"
m = 1.0
alpha = 0.0
"#;
    std::fs::write(tmp.path().join("mod.toml"), config).unwrap();
    let (_, stderr, code) = run_binary(
        &["check", "--config", "mod.toml", "--theorem", "1"],
        tmp.path(),
    );
    let verdict = std::fs::read_to_string(tmp.path().join("verdict.txt")).unwrap_or_default();
    let conclusion = machine_value(&verdict, "conclusion").unwrap_or_default();
    if code != Some(0) || conclusion != "NotApplicable" {
        ok = false;
        detail = format!("modified spec: exit {code:?}, conclusion {conclusion:?} ({stderr})");
    }
    if machine_value(&verdict, "Eq11").as_deref() != Some("Converges") {
        ok = false;
        detail = format!("modified spec: Eq11 verdict missing or wrong:\n{verdict}");
    }

    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(5) {
        ok = false;
        detail = format!("runtime {elapsed:?} exceeds 5 s");
    }
    conclude(3, ok, elapsed, detail);
}

// ---------------------------------------------------------------------
// 4. Second criterion on the derived instance, with the harmonic-number
//    oracle for the series partial sum and the degenerate-schedule
//    variant.
// ---------------------------------------------------------------------

#[test]
fn acceptance_4_theorem_2_derived_instance() {
    let start = Instant::now();
    let mut ok = true;
    let mut detail = String::new();

    let tmp = tempfile::tempdir().unwrap();
    let (_, stderr, code) = run_binary(
        &["check", "--builtin", "criterion2-demo", "--theorem", "2"],
        tmp.path(),
    );
    let verdict = std::fs::read_to_string(tmp.path().join("verdict.txt")).unwrap_or_default();
    if code != Some(0) || machine_value(&verdict, "conclusion").as_deref() != Some("Oscillatory") {
        ok = false;
        detail = format!("CLI check: exit {code:?} ({stderr})\n{verdict}");
    }

    let (spec, _) = builtin("criterion2-demo").unwrap();
    let report = check_theorem_2(
        &spec,
        1.0,
        4096,
        &CriteriaHints::default(),
        &IntegralOptions::default(),
    )
    .unwrap();
    if report.conclusion != Conclusion::Oscillatory {
        ok = false;
        detail = format!("library conclusion: {:?}", report.conclusion);
    }
    let partial_9 = report
        .condition("Eq13b")
        .and_then(|c| c.verdict.evidence.iter().find(|cp| cp.t == 9.0))
        .map(|cp| cp.partial);
    let h10: f64 = (1..=10).map(|k| 1.0 / k as f64).sum();
    let oracle = (h10 - 1.0) / 2.0;
    match partial_9 {
        Some(s9) if (s9 - oracle).abs() <= 1e-8 => {}
        other => {
            ok = false;
            detail = format!("series partial through j = 9: {other:?}, oracle {oracle}");
        }
    }

    let degenerate = spec
        .with_schedule(ArgumentSchedule::uniform(1.0, 0.0).unwrap())
        .unwrap();
    let report = check_theorem_2(
        &degenerate,
        1.0,
        4096,
        &CriteriaHints::default(),
        &IntegralOptions::default(),
    )
    .unwrap();
    if report.conclusion != Conclusion::NotApplicable || report.warnings.is_empty() {
        ok = false;
        detail = format!(
            "degenerate variant: {:?}, warnings {:?}",
            report.conclusion, report.warnings
        );
    }

    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(10) {
        ok = false;
        detail = format!("runtime {elapsed:?} exceeds 10 s");
    }
    conclude(4, ok, elapsed, detail);
}

// ---------------------------------------------------------------------
// Randomized instance battery shared by criteria 5 and 6.
// ---------------------------------------------------------------------

fn random_divergent_instance(rng: &mut StdRng) -> (ProblemSpec, InitialCondition) {
    // weights strong enough that oscillation arcs stay well inside the
    // horizon and much shorter than the lemma's 10-node window
    let a = rng.random_range(1.2..3.0);
    let sigma = rng.random_range(0.05..0.35);
    let p_src = format!("{a}*(1+t)^{sigma}");
    let r_src = match rng.random_range(0..3u32) {
        0 => "1".to_owned(),
        1 => format!("1+t/{}", rng.random_range(4.0..12.0)),
        _ => "sqrt(1+t)".to_owned(),
    };

    let family = rng.random_range(0..10u32);
    let (phi_src, f_src, m, alpha, x0, v0): (String, String, f64, f64, f64, f64) = if family < 7 {
        let m = rng.random_range(0.5..0.9);
        let alpha = rng.random_range(0.0..1.0);
        let (mut x0, mut v0) = (0.0, 0.0);
        while f64::abs(x0) + f64::abs(v0) < 0.3 {
            x0 = rng.random_range(-2.0..2.0);
            v0 = rng.random_range(-2.0..2.0);
        }
        ("u".into(), format!("x*{p_src}"), m, alpha, x0, v0)
    } else if family < 9 {
        // superlinear: keep the advanced subinterval degenerate so the
        // frozen value is explicit
        let m = rng.random_range(0.5..1.0);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let x0 = sign * rng.random_range(1.0..2.0);
        let v0 = rng.random_range(-0.5..0.5);
        ("u^3".into(), format!("x^3*{p_src}"), m, 0.0, x0, v0)
    } else {
        let m = rng.random_range(0.5..1.0);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let x0 = sign * rng.random_range(0.8..1.5);
        let v0 = rng.random_range(-0.5..0.5);
        (
            "u*(1+u^2)".into(),
            format!("x*(1+x^2)*{p_src}"),
            m,
            0.0,
            x0,
            v0,
        )
    };

    let spec = ProblemSpec::new(
        format!("battery-{family}"),
        Expr::parse(&r_src).unwrap(),
        Expr::parse(&f_src).unwrap(),
        Expr::parse(&p_src).unwrap(),
        Expr::parse(&phi_src).unwrap(),
        0.0,
        ArgumentSchedule::uniform(m, alpha).unwrap(),
        None,
    )
    .unwrap();
    (spec, InitialCondition::new(x0, v0).unwrap())
}

/// Instances where the solver qualifies: the first criterion holds and the
/// integration completes to the horizon.
fn qualifying_battery(
    count: usize,
    horizon: f64,
) -> Vec<(ProblemSpec, InitialCondition, Trajectory)> {
    let mut rng = StdRng::seed_from_u64(battery_seed());
    let opts = SolverOptions::default();
    let iopts = IntegralOptions::default();
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        assert!(
            attempts < 40 * count,
            "battery generation stalled: {} qualifying of {attempts} attempts",
            out.len()
        );
        let (spec, ic) = random_divergent_instance(&mut rng);
        let report = match check_theorem_1(&spec, &CriteriaHints::default(), &iopts) {
            Ok(r) => r,
            Err(_) => continue,
        };
        if report.conclusion != Conclusion::Oscillatory {
            continue;
        }
        let traj = match integrate(&spec, &ic, horizon, 8, &opts) {
            Ok(t) if t.completed() => t,
            _ => continue,
        };
        out.push((spec, ic, traj));
    }
    out
}

#[test]
fn acceptance_5_consistency_cross_check() {
    let start = Instant::now();
    let battery = qualifying_battery(50, 40.0);
    let copts = ClassifyOptions::default();

    let mut oscillatory = 0usize;
    let mut stabilized = 0usize;
    let mut detail = String::new();
    for (spec, ic, traj) in &battery {
        let c = classify_trajectory(traj, &copts);
        match c.outcome {
            Outcome::Oscillatory { count, .. } if count >= 3 => oscillatory += 1,
            Outcome::EventuallyPositive { .. } | Outcome::EventuallyNegative { .. } => {
                stabilized += 1;
                detail = format!(
                    "{} from ({}, {}): classified {}",
                    spec.label,
                    ic.x0,
                    ic.v0,
                    c.outcome.word()
                );
            }
            _ => {
                detail = format!(
                    "{} from ({}, {}): classified {} with {} witnesses",
                    spec.label,
                    ic.x0,
                    ic.v0,
                    c.outcome.word(),
                    c.outcome.witness_count()
                );
            }
        }
    }

    let rate = oscillatory as f64 / battery.len() as f64;
    let mut ok = true;
    if rate < 0.95 {
        ok = false;
        detail = format!("oscillatory rate {rate} below 0.95; last miss: {detail}");
    }
    if stabilized > 0 {
        ok = false;
        detail = format!("{stabilized} runs classified eventually-signed: {detail}");
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(120) {
        ok = false;
        detail = format!("runtime {elapsed:?} exceeds 2 min");
    }
    conclude(5, ok, elapsed, detail);
}

// ---------------------------------------------------------------------
// 6. The supporting lemma is never observed violated: on the oscillatory
//    battery plus instances with integrable weight whose positive
//    solutions persist.
// ---------------------------------------------------------------------

fn random_persistent_instance(rng: &mut StdRng) -> (ProblemSpec, InitialCondition) {
    let x0 = rng.random_range(0.5..2.0);
    let v0 = rng.random_range(0.5..2.0);
    // coupling small enough that v(t) stays positive for all time:
    // the total impulse a * INT exp(-rate t) (x0 + v0 t) dt stays below v0
    let rate = rng.random_range(0.8..2.0);
    let a = 0.3 * v0 / (x0 + v0) * rng.random_range(0.5..1.0);
    let alpha = if rng.random_bool(0.5) { 0.0 } else { 0.5 };
    let m = rng.random_range(0.5..1.0);
    let spec = ProblemSpec::new(
        "persistent",
        Expr::parse("1").unwrap(),
        Expr::parse(&format!("x*{a}*exp(-{rate}*t)")).unwrap(),
        Expr::parse(&format!("{a}*exp(-{rate}*t)")).unwrap(),
        Expr::parse("u").unwrap(),
        0.0,
        ArgumentSchedule::uniform(m, alpha).unwrap(),
        None,
    )
    .unwrap();
    (spec, InitialCondition::new(x0, v0).unwrap())
}

#[test]
fn acceptance_6_lemma_property_suite() {
    let start = Instant::now();
    let opts = SolverOptions::default();
    let iopts = IntegralOptions::default();
    let mut ok = true;
    let mut detail = String::new();
    let mut checked = 0usize;

    let mut run_check = |spec: &ProblemSpec, traj: &Trajectory| {
        let r_inv = Expr::div(Expr::number(1.0), spec.r.clone());
        let eq6 = improper_integral(&r_inv, spec.tau, TailHint::None, &iopts).unwrap();
        let max_x = traj.dense.iter().fold(0.0f64, |m, s| m.max(s.x.abs()));
        let deriv_tol = 1e-8 * max_x.max(1.0);
        let report = lemma_check(traj, &eq6, deriv_tol);
        checked += 1;
        if report.is_violated() {
            ok = false;
            detail = format!("{}: {report:?}", spec.label);
        }
    };

    for (spec, _, traj) in &qualifying_battery(50, 40.0) {
        run_check(spec, traj);
    }

    let mut rng = StdRng::seed_from_u64(battery_seed() ^ 0x6EA5);
    let mut holds = 0usize;
    for _ in 0..20 {
        let (spec, ic) = random_persistent_instance(&mut rng);
        let traj = integrate(&spec, &ic, 40.0, 8, &opts).unwrap();
        assert!(traj.completed(), "persistent instance must complete");
        let r_inv = Expr::div(Expr::number(1.0), spec.r.clone());
        let eq6 = improper_integral(&r_inv, spec.tau, TailHint::None, &iopts).unwrap();
        let report = lemma_check(&traj, &eq6, 1e-8);
        checked += 1;
        match report {
            depcag::oscillation::LemmaReport::Violated { .. } => {
                ok = false;
                detail = format!("persistent instance: {report:?}");
            }
            depcag::oscillation::LemmaReport::Holds { .. } => holds += 1,
            _ => {}
        }
    }
    // positive persistent solutions must actually exercise the Holds path
    if holds < 15 {
        ok = false;
        detail = format!("only {holds}/20 persistent instances reported Holds");
    }

    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(60) {
        ok = false;
        detail = format!("runtime {elapsed:?} exceeds 1 min; checked {checked}");
    }
    conclude(6, ok, elapsed, detail);
}

// ---------------------------------------------------------------------
// 7. Divergence-engine battery over power laws with hints.
// ---------------------------------------------------------------------

#[test]
fn acceptance_7_divergence_engine_battery() {
    let start = Instant::now();
    let opts = IntegralOptions::default();
    let mut ok = true;
    let mut detail = String::new();

    for sigma in [-3.0, -2.0, -1.5] {
        let integrand = Expr::parse(&format!("t^({sigma})")).unwrap();
        let verdict = improper_integral(&integrand, 1.0, TailHint::PowerLaw(sigma), &opts).unwrap();
        let analytic = 1.0 / (-sigma - 1.0);
        match verdict.outcome {
            IntegralOutcome::Converges { value, .. } if (value - analytic).abs() <= 1e-6 => {}
            other => {
                ok = false;
                detail = format!("sigma {sigma}: {other:?}, analytic {analytic}");
            }
        }
    }
    for sigma in [-1.0, -0.5, 0.0, 1.0] {
        let integrand = Expr::parse(&format!("t^({sigma})")).unwrap();
        let verdict = improper_integral(&integrand, 1.0, TailHint::PowerLaw(sigma), &opts).unwrap();
        if !verdict.outcome.is_diverges() {
            ok = false;
            detail = format!("sigma {sigma}: {:?}", verdict.outcome);
        }
    }

    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(5) {
        ok = false;
        detail = format!("runtime {elapsed:?} exceeds 5 s");
    }
    conclude(7, ok, elapsed, detail);
}

// ---------------------------------------------------------------------
// 8. Module invariant suites under 10 seeds.
// ---------------------------------------------------------------------

fn random_expr(rng: &mut StdRng, depth: u32) -> Expr {
    if depth == 0 || rng.random_bool(0.3) {
        return if rng.random_bool(0.5) {
            Expr::number(rng.random_range(0.01..20.0))
        } else {
            Expr::var(["t", "x", "u"][rng.random_range(0..3usize)])
        };
    }
    match rng.random_range(0..3u32) {
        0 => Expr::neg(random_expr(rng, depth - 1)),
        1 => {
            let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow]
                [rng.random_range(0..5usize)];
            Expr::binary(op, random_expr(rng, depth - 1), random_expr(rng, depth - 1))
        }
        _ => {
            let func = [
                Func::Exp,
                Func::Ln,
                Func::Sin,
                Func::Cos,
                Func::Sqrt,
                Func::Abs,
                Func::Sign,
                Func::Floor,
            ][rng.random_range(0..8usize)];
            Expr::call(func, random_expr(rng, depth - 1))
        }
    }
}

fn suite_parser_round_trip(rng: &mut StdRng) -> Result<(), String> {
    for _ in 0..20 {
        let e = random_expr(rng, 4);
        let printed = e.to_string();
        let reparsed =
            Expr::parse(&printed).map_err(|err| format!("reparse of {printed}: {err}"))?;
        if reparsed != e {
            return Err(format!("tree changed through print/parse: {printed}"));
        }
        for _ in 0..100 {
            let bindings = [
                ("t", rng.random_range(-10.0..10.0)),
                ("x", rng.random_range(-10.0..10.0)),
                ("u", rng.random_range(-10.0..10.0)),
            ];
            match (e.eval(&bindings), reparsed.eval(&bindings)) {
                (Ok(a), Ok(b)) if a == b => {}
                (Err(_), Err(_)) => {}
                (a, b) => return Err(format!("{printed}: {a:?} vs {b:?}")),
            }
        }
    }
    Ok(())
}

fn suite_schedule_properties(rng: &mut StdRng) -> Result<(), String> {
    let schedules = vec![
        ArgumentSchedule::uniform(rng.random_range(0.2..3.0), rng.random_range(0.0..1.0)).unwrap(),
        ArgumentSchedule::uniform(1.0, 0.0).unwrap(),
        ArgumentSchedule::custom(Expr::parse("n^2").unwrap(), Expr::parse("0.5").unwrap(), 1)
            .unwrap(),
    ];
    for schedule in &schedules {
        let first = schedule.node(schedule.index_origin()).unwrap();
        for _ in 0..500 {
            let t = first + rng.random_range(0.0..500.0);
            let k = schedule.interval_index(t).map_err(|e| e.to_string())?;
            let left = schedule.node(k).unwrap();
            let right = schedule.node(k + 1).unwrap();
            if !(left <= t && t < right) {
                return Err(format!("t = {t} escaped [{left}, {right})"));
            }
            let gamma = schedule.gamma(t).unwrap();
            if !(left..=right).contains(&gamma) {
                return Err(format!("gamma({t}) = {gamma} outside its interval"));
            }
            let class = schedule.classify(t).unwrap();
            let okc = match class {
                ArgumentClass::Advanced => t < gamma,
                ArgumentClass::AtSwitch => t == gamma,
                ArgumentClass::Delayed => t > gamma,
            };
            if !okc {
                return Err(format!("classify({t}) = {class:?} but gamma = {gamma}"));
            }
        }
    }
    // the unit schedule is the greatest-integer function
    let unit = ArgumentSchedule::uniform(1.0, 0.0).unwrap();
    for _ in 0..1000 {
        let t: f64 = rng.random_range(0.0..1000.0);
        if unit.gamma(t).unwrap() != t.floor() {
            return Err(format!("gamma({t}) != floor"));
        }
    }
    Ok(())
}

fn suite_solver_invariants(rng: &mut StdRng) -> Result<(), String> {
    let opts = SolverOptions::default();
    let kappa = rng.random_range(0.5..2.5);
    let alpha = rng.random_range(0.0..1.0);
    let spec = ProblemSpec::new(
        "suite",
        Expr::parse("1").unwrap(),
        Expr::parse(&format!("{kappa}*x")).unwrap(),
        Expr::parse(&format!("{kappa}")).unwrap(),
        Expr::parse("u").unwrap(),
        0.0,
        ArgumentSchedule::uniform(1.0, alpha).unwrap(),
        None,
    )
    .unwrap();
    let ic =
        InitialCondition::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)).unwrap();
    let traj = integrate(&spec, &ic, 10.0, 8, &opts).map_err(|e| e.to_string())?;
    if !traj.completed() {
        return Err(format!("trajectory did not complete: {:?}", traj.status));
    }

    // continuity at nodes
    for win in traj.nodes.windows(2) {
        let (a, b) = (&win[0], &win[1]);
        let last_dense = traj.dense.iter().rfind(|s| s.k == a.k).unwrap();
        let spacing = (b.t_k - a.t_k) / 8.0;
        let f_at = kappa * a.x_at_zeta;
        let bound = (10.0 * spacing * (b.v.abs() + f_at.abs())).max(1e-9);
        if (last_dense.x - b.x).abs() > bound {
            return Err(format!(
                "continuity gap {} at node {}",
                last_dense.x - b.x,
                b.k
            ));
        }
    }

    // integrated-equation residual at probes (r = 1)
    for node in traj.nodes.iter().take(8) {
        let t1 = node.t_k + 1.0;
        for i in 1..=5 {
            let t = node.t_k + (t1 - node.t_k) * i as f64 / 5.0;
            let (_, v) = frozen_solution(&spec, node.k, node.x, node.v, node.x_at_zeta, t, &opts)
                .map_err(|e| e.to_string())?;
            let forcing = kappa * node.x_at_zeta * (t - node.t_k);
            let residual = (v - node.v + forcing).abs();
            let bound = 10.0 * opts.quad_tol * (1.0 + node.v.abs());
            if residual > bound {
                return Err(format!("residual {residual} at t = {t}"));
            }
        }
    }

    // fixed-point postcondition
    for node in &traj.nodes {
        let (phi_c, _) = frozen_solution(
            &spec,
            node.k,
            node.x,
            node.v,
            node.x_at_zeta,
            node.zeta,
            &opts,
        )
        .map_err(|e| e.to_string())?;
        let bound = (opts.fp_tol + 100.0 * opts.quad_tol) * (1.0 + node.x_at_zeta.abs());
        if (phi_c - node.x_at_zeta).abs() > bound {
            return Err(format!("fixed point drifted at node {}", node.k));
        }
    }
    Ok(())
}

fn suite_verdict_monotonicity(rng: &mut StdRng) -> Result<(), String> {
    let scale = rng.random_range(0.5..2.0);
    let base_opts = IntegralOptions::default();
    let mut long_opts = base_opts;
    long_opts.i_max += 1;
    for src in [
        format!("{scale}/t^2"),
        format!("{scale}/t"),
        format!("{scale}*exp(-t)"),
        format!("{scale}"),
    ] {
        let integrand = Expr::parse(&src).unwrap();
        let a = improper_integral(&integrand, 1.0, TailHint::None, &base_opts)
            .map_err(|e| e.to_string())?;
        let b = improper_integral(&integrand, 1.0, TailHint::None, &long_opts)
            .map_err(|e| e.to_string())?;
        let flipped = matches!(
            (&a.outcome, &b.outcome),
            (IntegralOutcome::Diverges, IntegralOutcome::Converges { .. })
                | (IntegralOutcome::Converges { .. }, IntegralOutcome::Diverges)
                | (IntegralOutcome::Diverges, IntegralOutcome::Inconclusive)
                | (
                    IntegralOutcome::Converges { .. },
                    IntegralOutcome::Inconclusive
                )
        );
        if flipped {
            return Err(format!("{src}: {:?} -> {:?}", a.outcome, b.outcome));
        }
    }
    Ok(())
}

fn suite_classification_symmetry(rng: &mut StdRng) -> Result<(), String> {
    let amp = rng.random_range(0.5..5.0);
    let (spec, _) = builtin("example1").unwrap();
    let opts = SolverOptions::default();
    let base = integrate(
        &spec,
        &InitialCondition::new(amp, 0.0).unwrap(),
        20.0,
        8,
        &opts,
    )
    .map_err(|e| e.to_string())?;
    let copts = ClassifyOptions::default();
    let c = classify_trajectory(&base, &copts);
    if c.outcome.word() != "Oscillatory" {
        return Err(format!("scaled linear run classified {}", c.outcome.word()));
    }
    // synthetic negation symmetry
    let mut negated = base.clone();
    for s in &mut negated.dense {
        s.x = -s.x;
    }
    for n in &mut negated.nodes {
        n.x = -n.x;
    }
    let cn = classify_trajectory(&negated, &copts);
    if cn.outcome.word() != "Oscillatory" || cn.outcome.witness_count() != c.outcome.witness_count()
    {
        return Err("negation changed the oscillatory classification".into());
    }
    Ok(())
}

#[test]
fn acceptance_8_invariant_suites_under_seeds() {
    let start = Instant::now();
    let mut ok = true;
    let mut detail = String::new();

    type Suite = (&'static str, fn(&mut StdRng) -> Result<(), String>);
    'seeds: for seed in 0..10u64 {
        let suites: Vec<Suite> = vec![
            ("parser round-trip", suite_parser_round_trip),
            ("schedule properties", suite_schedule_properties),
            ("solver invariants", suite_solver_invariants),
            ("verdict monotonicity", suite_verdict_monotonicity),
            ("classification symmetry", suite_classification_symmetry),
        ];
        for (name, suite) in suites {
            let mut rng = StdRng::seed_from_u64(battery_seed() ^ (seed * 7919));
            if let Err(e) = suite(&mut rng) {
                ok = false;
                detail = format!("seed {seed}, {name}: {e}");
                break 'seeds;
            }
        }
    }

    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(120) {
        ok = false;
        detail = format!("runtime {elapsed:?} exceeds 2 min");
    }
    conclude(8, ok, elapsed, detail);
}
