//! Adaptive quadrature on finite intervals: 15-point Gauss–Kronrod panels
//! with bisection refinement. Integration direction may be reversed
//! (`b < a` negates the result). Integrands report evaluation failures and
//! non-finite samples instead of propagating them.

use thiserror::Error;

use crate::expr::EvalError;

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    /// Accumulated error estimate (absolute).
    pub abs_err: f64,
}

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("integrand is not finite at t = {t}")]
    NonFinite { t: f64 },
    #[error("quadrature did not converge on [{a}, {b}] (error estimate {err:e})")]
    NonConvergence { a: f64, b: f64, err: f64 },
    #[error("integrand evaluation failed at t = {t}: {source}")]
    Eval { t: f64, source: EvalError },
}

// 15-point Kronrod abscissae/weights and the embedded 7-point Gauss
// weights (QUADPACK qk15).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const MAX_SPLITS: usize = 4096;

/// Integrate `f` from `a` to `b` so that the combined error estimate stays
/// below `max(abs_tol, rel_tol * |value|)`. Globally adaptive: the panel
/// with the largest error estimate is bisected until the budget is met.
pub fn integrate<F>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<QuadResult, QuadError>
where
    F: Fn(f64) -> Result<f64, QuadError>,
{
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            abs_err: 0.0,
        });
    }
    if b < a {
        let flipped = integrate(f, b, a, abs_tol, rel_tol)?;
        return Ok(QuadResult {
            value: -flipped.value,
            abs_err: flipped.abs_err,
        });
    }

    struct Panel {
        a: f64,
        b: f64,
        value: f64,
        err: f64,
        resabs: f64,
        splittable: bool,
    }

    // a panel whose error estimate sits at the rounding floor of its own
    // magnitude cannot improve by splitting
    let at_floor = |err: f64, resabs: f64| err <= 55.0 * f64::EPSILON * resabs;

    let (value, err, resabs) = kronrod_panel(f, a, b)?;
    let mut panels = vec![Panel {
        a,
        b,
        value,
        err,
        resabs,
        splittable: !at_floor(err, resabs),
    }];
    let mut total_value = value;
    let mut total_err = err;
    let mut total_resabs = resabs;

    for _ in 0..MAX_SPLITS {
        let tol = abs_tol.max(rel_tol * total_value.abs());
        if total_err <= tol.max(100.0 * f64::EPSILON * total_resabs) {
            break;
        }
        let worst = panels
            .iter()
            .enumerate()
            .filter(|(_, p)| p.splittable)
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i);
        let Some(idx) = worst else { break };
        let panel = panels.swap_remove(idx);
        let mid = 0.5 * (panel.a + panel.b);
        let width_floor = f64::EPSILON * (panel.a.abs() + panel.b.abs() + 1.0);
        if mid <= panel.a || mid >= panel.b || panel.b - panel.a <= width_floor {
            // panel at floating-point resolution; keep its estimate
            panels.push(Panel {
                splittable: false,
                ..panel
            });
            continue;
        }
        let (v1, e1, r1) = kronrod_panel(f, panel.a, mid)?;
        let (v2, e2, r2) = kronrod_panel(f, mid, panel.b)?;
        total_value += v1 + v2 - panel.value;
        total_err += e1 + e2 - panel.err;
        total_resabs += r1 + r2 - panel.resabs;
        panels.push(Panel {
            a: panel.a,
            b: mid,
            value: v1,
            err: e1,
            resabs: r1,
            splittable: !at_floor(e1, r1),
        });
        panels.push(Panel {
            a: mid,
            b: panel.b,
            value: v2,
            err: e2,
            resabs: r2,
            splittable: !at_floor(e2, r2),
        });
    }

    let tol = abs_tol.max(rel_tol * total_value.abs());
    // attainable precision is bounded below by rounding in the integrand
    // magnitudes; do not demand more than that
    let floor = 100.0 * f64::EPSILON * total_resabs;
    if total_err > 10.0 * tol.max(floor) {
        return Err(QuadError::NonConvergence {
            a,
            b,
            err: total_err,
        });
    }
    Ok(QuadResult {
        value: total_value,
        abs_err: total_err,
    })
}

/// One 15-point Kronrod panel; returns (value, error estimate, resabs).
fn kronrod_panel<F>(f: &F, a: f64, b: f64) -> Result<(f64, f64, f64), QuadError>
where
    F: Fn(f64) -> Result<f64, QuadError>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let eval = |t: f64| -> Result<f64, QuadError> {
        let v = f(t)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QuadError::NonFinite { t })
        }
    };

    let f_center = eval(center)?;
    let mut kronrod = f_center * WGK[7];
    let mut gauss = f_center * WG[3];
    let mut res_abs = kronrod.abs();
    let mut samples = [0.0f64; 14];

    for j in 0..7 {
        let abscissa = half * XGK[j];
        let f_lo = eval(center - abscissa)?;
        let f_hi = eval(center + abscissa)?;
        samples[2 * j] = f_lo;
        samples[2 * j + 1] = f_hi;
        let sum = f_lo + f_hi;
        kronrod += WGK[j] * sum;
        res_abs += WGK[j] * (f_lo.abs() + f_hi.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }

    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((samples[2 * j] - mean).abs() + (samples[2 * j + 1] - mean).abs());
    }

    let value = kronrod * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let raw_err = ((kronrod - gauss) * half).abs();

    let mut err = raw_err;
    if res_asc != 0.0 && raw_err != 0.0 {
        let scale = (200.0 * raw_err / res_asc).powf(1.5);
        err = if scale < 1.0 {
            res_asc * scale
        } else {
            res_asc
        };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }

    Ok((value, err, res_abs))
}
