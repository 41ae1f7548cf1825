//! Adaptive Simpson quadrature with Richardson error control, plus a
//! log-substituted variant for integrands spread over many decades.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 60;

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    let s = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    (m, fm, s)
}

#[allow(clippy::too_many_arguments)]
fn adapt(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let (lm, flm, left) = simpson(f, a, fa, m, fm);
    let (rm, frm, right) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return Err(Error::Numerical(format!(
            "integrand not finite near [{a}, {b}]"
        )));
    }
    if delta.abs() <= 15.0 * tol {
        // Richardson extrapolation of the composite rule
        return Ok(left + right + delta / 15.0);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::Numerical(format!(
            "adaptive quadrature failed to converge on [{a}, {b}] (requested tol {tol:.2e})"
        )));
    }
    let l = adapt(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth + 1)?;
    let r = adapt(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth + 1)?;
    Ok(l + r)
}

/// Adaptive Simpson integral of f over [a, b] to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(b >= a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::input(format!("bad integration interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    adapt(f, a, fa, b, fb, m, fm, whole, tol, 0)
}

/// Integral of f over [a, b] with 0 < a < b via the substitution u = e^s,
/// which evens out integrands that vary over many decades.
pub fn adaptive_simpson_log(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a > 0.0) || !(b >= a) {
        return Err(Error::input(format!(
            "log-substituted quadrature needs 0 < a <= b, got [{a}, {b}]"
        )));
    }
    let g = move |s: f64| {
        let u = s.exp();
        f(u) * u
    };
    adaptive_simpson(&g, a.ln(), b.ln(), tol)
}
