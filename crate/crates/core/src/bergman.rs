//! Truncated evaluation of the weight-k reproducing kernel of the cusp-form
//! space: signed complex values in a common-exponent log scale, Petersson
//! magnitude bounds, Hecke translates, and an empirical (shell-doubling)
//! certification of the truncation tail.
//!
//! Sums run over matrix elements by default: the group contains -Id, and at
//! even weight each +-pair contributes twice. The `psl` flag halves the
//! total for unit-group sums, i.e. counts +- classes once.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{j_factor, mobius, UhpPoint};
use crate::lattice::{enumerate_ball, enumerate_ball_pair, BallElement};
use crate::logscale::LogScaledReal;
use crate::order::Order;
use crate::primes::gcd_u64;

/// A complex number (re + i im) * e^{ln_scale}.
#[derive(Clone, Copy, Debug)]
pub struct LogComplex {
    pub re: f64,
    pub im: f64,
    pub ln_scale: f64,
}

impl LogComplex {
    pub fn zero() -> Self {
        LogComplex {
            re: 0.0,
            im: 0.0,
            ln_scale: f64::NEG_INFINITY,
        }
    }

    pub fn magnitude(&self) -> LogScaledReal {
        let m = (self.re * self.re + self.im * self.im).sqrt();
        if m == 0.0 {
            return LogScaledReal::ZERO;
        }
        LogScaledReal::pos_from_ln(m.ln() + self.ln_scale)
    }

    /// Signed real part as a log-scaled real.
    pub fn real_part(&self) -> LogScaledReal {
        if self.re == 0.0 {
            return LogScaledReal::ZERO;
        }
        LogScaledReal::from_ln(
            if self.re > 0.0 { 1 } else { -1 },
            self.re.abs().ln() + self.ln_scale,
        )
    }

    pub fn relative_imaginary(&self) -> f64 {
        let m = (self.re * self.re + self.im * self.im).sqrt();
        if m == 0.0 {
            0.0
        } else {
            self.im.abs() / m
        }
    }
}

/// Petersson magnitude of a single group term at distance d:
/// ((k-1)/4pi) cosh^{-k}(d/2).
pub fn term_magnitude(d: f64, k: u32) -> Result<LogScaledReal> {
    check_weight(k)?;
    if !(d >= 0.0) {
        return Err(Error::input("distance must be >= 0"));
    }
    Ok(term_magnitude_from_coshd(d.cosh(), k))
}

/// Same, parameterized by cosh d; cosh^2(d/2) = (1 + cosh d)/2.
pub fn term_magnitude_from_coshd(cosh_d: f64, k: u32) -> LogScaledReal {
    let ln = ((k - 1) as f64).ln() - (4.0 * PI).ln() - 0.5 * k as f64 * (0.5 * (1.0 + cosh_d)).ln();
    LogScaledReal::pos_from_ln(ln)
}

fn check_weight(k: u32) -> Result<()> {
    if k % 2 != 0 {
        return Err(Error::input(format!(
            "weight {k} is odd: the cusp-form space is empty (-Id acts by -1)"
        )));
    }
    if k < 4 {
        return Err(Error::input(format!("weight must be >= 4, got {k}")));
    }
    Ok(())
}

/// Marker carried by every tail bound: the shell growth model is measured
/// from the last two enumerated shells, not proved.
pub const TAIL_NOTE: &str = "UNCERTIFIED-EMPIRICAL";

const TAIL_SAFETY: f64 = 2.0;
const TAIL_MAX_SHELLS: usize = 400;

/// Empirical tail bound for a truncated group sum: shell counts at
/// [cap/4, cap/2) and [cap/2, cap] extrapolate geometrically with a clamped
/// measured ratio, each shell majorized by the term magnitude at its inner
/// radius.
fn empirical_tail_of(elements: &[BallElement], cap: f64, k: u32) -> LogScaledReal {
    let mut n1 = 0usize;
    let mut n2 = 0usize;
    for e in elements {
        if e.cosh_dist >= cap / 4.0 && e.cosh_dist < cap / 2.0 {
            n1 += 1;
        } else if e.cosh_dist >= cap / 2.0 {
            n2 += 1;
        }
    }
    // hyperbolic area grows linearly in cosh d, so doubling a shell roughly
    // doubles its count; clamp the measured ratio to [2, 8]
    let measured = if n1 > 0 { n2 as f64 / n1 as f64 } else { 2.0 };
    let ratio = measured.clamp(2.0, 8.0);
    let decay_per_shell = ratio * (-(0.5 * k as f64) * 2.0f64.ln()).exp();
    if decay_per_shell >= 0.95 {
        return LogScaledReal::pos_from_ln(f64::INFINITY);
    }
    let mut tail = LogScaledReal::ZERO;
    let mut count = (n2.max(1)) as f64 * TAIL_SAFETY;
    for s in 1..=TAIL_MAX_SHELLS {
        count *= ratio;
        let inner = cap * 2f64.powi(s as i32 - 1);
        let term = term_magnitude_from_coshd(inner, k);
        let shell = LogScaledReal::from_f64(count).mul(&term);
        tail = tail.add(&shell);
        if s > 4 && shell.ln_abs() < tail.ln_abs() - 60.0 {
            break;
        }
    }
    tail
}

/// A truncated kernel evaluation between two points.
#[derive(Clone, Debug)]
pub struct KernelEvaluation {
    pub z: UhpPoint,
    pub w: UhpPoint,
    pub k: u32,
    pub cosh_cap: f64,
    /// Signed Petersson-scaled value y^{k/2} v^{k/2} B(z, w).
    pub signed_value: LogComplex,
    /// Sum of the term magnitudes over the enumerated ball; always an upper
    /// bound for |signed_value|.
    pub magnitude_bound: LogScaledReal,
    /// Empirical bound on the dropped tail (see `TAIL_NOTE`).
    pub tail_bound: LogScaledReal,
    pub tail_note: &'static str,
    pub terms_used: usize,
}

fn signed_sum(
    order: &Order,
    z: UhpPoint,
    w: UhpPoint,
    k: u32,
    elements: &[BallElement],
    psl: bool,
) -> Result<LogComplex> {
    let zc = z.to_complex();
    let kf = k as f64;
    let mut lnmags = Vec::with_capacity(elements.len());
    let mut phases = Vec::with_capacity(elements.len());
    for e in elements {
        let m = order.real_image(e.coords);
        let img = mobius(&m, w)?; // det = 1 exactly for unit balls
        let jf = j_factor(&m, w);
        let base = zc - img.to_complex().conj();
        lnmags.push(-kf * (base.norm().ln() + jf.norm().ln()));
        phases.push(-kf * base.arg() + kf * jf.arg());
    }
    let ln_max = lnmags.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if ln_max == f64::NEG_INFINITY {
        return Ok(LogComplex::zero());
    }
    let mut re = 0.0f64;
    let mut im = 0.0f64;
    for (ln, ph) in lnmags.iter().zip(&phases) {
        let m = (ln - ln_max).exp();
        re += m * ph.cos();
        im += m * ph.sin();
    }
    // prefactor (k-1) (2i)^k / 4pi and the Petersson scale y^{k/2} v^{k/2}
    let ln_pref = ((k - 1) as f64).ln() + kf * 2.0f64.ln() - (4.0 * PI).ln()
        + 0.5 * kf * (z.y.ln() + w.y.ln());
    let phase_pref = kf * std::f64::consts::FRAC_PI_2;
    let (sin_p, cos_p) = phase_pref.sin_cos();
    let (re, im) = (re * cos_p - im * sin_p, re * sin_p + im * cos_p);
    let mut ln_scale = ln_max + ln_pref;
    if psl {
        ln_scale -= std::f64::consts::LN_2;
    }
    Ok(LogComplex { re, im, ln_scale })
}

/// Evaluates the weight-k kernel between z and w, truncated to the group
/// elements with cosh d(z, gamma w) <= cosh_cap.
pub fn kernel_petersson(
    order: &Order,
    z: UhpPoint,
    w: UhpPoint,
    k: u32,
    cosh_cap: f64,
    budget: usize,
    psl: bool,
) -> Result<KernelEvaluation> {
    check_weight(k)?;
    let ball = enumerate_ball_pair(order, 1, z, w, cosh_cap, budget)?;
    let signed_value = signed_sum(order, z, w, k, &ball.elements, psl)?;
    let mut magnitude_bound = LogScaledReal::ZERO;
    for e in &ball.elements {
        magnitude_bound = magnitude_bound.add(&term_magnitude_from_coshd(e.cosh_dist, k));
    }
    let mut tail_bound = empirical_tail_of(&ball.elements, cosh_cap, k);
    if psl {
        let two = LogScaledReal::from_f64(2.0);
        magnitude_bound = magnitude_bound.div(&two);
        tail_bound = tail_bound.div(&two);
    }
    Ok(KernelEvaluation {
        z,
        w,
        k,
        cosh_cap,
        signed_value,
        magnitude_bound,
        tail_bound,
        tail_note: TAIL_NOTE,
        terms_used: ball.len(),
    })
}

/// Two truncations of the same kernel from a single enumeration at the
/// larger cap: (evaluation at cap_lo, evaluation at cap_hi). Used by
/// truncation-stability runs, where enumerating twice would double the
/// dominant cost.
#[allow(clippy::too_many_arguments)]
pub fn kernel_petersson_two_caps(
    order: &Order,
    z: UhpPoint,
    w: UhpPoint,
    k: u32,
    cap_lo: f64,
    cap_hi: f64,
    budget: usize,
    psl: bool,
) -> Result<(KernelEvaluation, KernelEvaluation)> {
    check_weight(k)?;
    if !(cap_hi >= cap_lo) {
        return Err(Error::input("cap_hi must be >= cap_lo"));
    }
    let ball = enumerate_ball_pair(order, 1, z, w, cap_hi, budget)?;
    // the membership filter is the same one enumeration at cap_lo applies,
    // so this subset equals the cap_lo ball element-for-element
    let inner: Vec<BallElement> = ball
        .elements
        .iter()
        .filter(|e| e.cosh_dist <= cap_lo * (1.0 + 1e-9))
        .cloned()
        .collect();
    let two = LogScaledReal::from_f64(2.0);
    let make = |elements: &[BallElement], cap: f64| -> Result<KernelEvaluation> {
        let signed_value = signed_sum(order, z, w, k, elements, psl)?;
        let mut magnitude_bound = LogScaledReal::ZERO;
        for e in elements {
            magnitude_bound = magnitude_bound.add(&term_magnitude_from_coshd(e.cosh_dist, k));
        }
        let mut tail_bound = empirical_tail_of(elements, cap, k);
        if psl {
            magnitude_bound = magnitude_bound.div(&two);
            tail_bound = tail_bound.div(&two);
        }
        Ok(KernelEvaluation {
            z,
            w,
            k,
            cosh_cap: cap,
            signed_value,
            magnitude_bound,
            tail_bound,
            tail_note: TAIL_NOTE,
            terms_used: elements.len(),
        })
    };
    let lo = make(&inner, cap_lo)?;
    let hi = make(&ball.elements, cap_hi)?;
    Ok((lo, hi))
}

/// Kernel evaluation that enforces a requested tail tolerance.
#[allow(clippy::too_many_arguments)]
pub fn kernel_petersson_with_tol(
    order: &Order,
    z: UhpPoint,
    w: UhpPoint,
    k: u32,
    cosh_cap: f64,
    budget: usize,
    psl: bool,
    tol: f64,
) -> Result<KernelEvaluation> {
    let eval = kernel_petersson(order, z, w, k, cosh_cap, budget, psl)?;
    let tail = eval.tail_bound.to_f64();
    if !(tail <= tol) {
        return Err(Error::Precision {
            tail,
            tol,
            hint: format!("increase cosh_cap beyond {cosh_cap}"),
        });
    }
    Ok(eval)
}

/// Truncated norm-n translate sum at a point: ((k-1)/4pi) times the sum of
/// cosh^{-k}(d(z, gamma z)/2) over enumerated norm-n elements, split at the
/// small-ball cut u <= n^{-3}.
#[derive(Clone, Debug)]
pub struct HeckeKernelValue {
    pub n: i64,
    pub k: u32,
    pub cosh_cap: f64,
    pub total: LogScaledReal,
    pub small_ball: LogScaledReal,
    pub remainder: LogScaledReal,
    pub tail_bound: LogScaledReal,
    pub tail_note: &'static str,
    pub terms_used: usize,
    pub small_ball_count: usize,
}

pub fn hecke_translate_kernel(
    order: &Order,
    z: UhpPoint,
    n: i64,
    k: u32,
    cosh_cap: f64,
    budget: usize,
    psl: bool,
) -> Result<HeckeKernelValue> {
    check_weight(k)?;
    if n < 1 {
        return Err(Error::input("norm must be positive"));
    }
    if gcd_u64(n as u64, order.level()) != 1 {
        return Err(Error::input(format!(
            "translate sums need gcd(n, level) = 1; n = {n} shares a factor with level {}",
            order.level()
        )));
    }
    let ball = enumerate_ball(order, n, z, cosh_cap, budget)?;
    let small_cut = 1.0 + 2.0 * (n as f64).powi(-3);
    let mut small_ball = LogScaledReal::ZERO;
    let mut remainder = LogScaledReal::ZERO;
    let mut small_count = 0usize;
    for e in &ball.elements {
        let t = term_magnitude_from_coshd(e.cosh_dist, k);
        if e.cosh_dist <= small_cut * (1.0 + 1e-12) {
            small_ball = small_ball.add(&t);
            small_count += 1;
        } else {
            remainder = remainder.add(&t);
        }
    }
    let mut tail_bound = empirical_tail_of(&ball.elements, cosh_cap, k);
    if psl {
        let two = LogScaledReal::from_f64(2.0);
        small_ball = small_ball.div(&two);
        remainder = remainder.div(&two);
        tail_bound = tail_bound.div(&two);
    }
    Ok(HeckeKernelValue {
        n,
        k,
        cosh_cap,
        total: small_ball.add(&remainder),
        small_ball,
        remainder,
        tail_bound,
        tail_note: TAIL_NOTE,
        terms_used: ball.len(),
        small_ball_count: small_count,
    })
}

/// One row of the small-ball/remainder table: per n, the split translate
/// sums against the comparison integral n * tail_integral(n, k).
#[derive(Clone, Debug, serde::Serialize)]
pub struct SmallBallRow {
    pub n: i64,
    pub small_count: usize,
    pub small_sum_ln: f64,
    pub remainder_count: usize,
    pub remainder_sum_ln: f64,
    /// ln of n * integral_{n^{-3}}^inf ((1+u)^{-k/2} + u^{-3/4}(1+u)^{-k/2}) du
    pub comparison_ln: f64,
    pub terms_used: usize,
}

/// Scans n = 1..n_max (coprime to the level) and tabulates the small-ball
/// sum, the remainder over the enumerated ball, and the comparison integral.
pub fn small_ball_scan(
    order: &Order,
    z: UhpPoint,
    n_max: i64,
    k: u32,
    cosh_cap: f64,
    budget: usize,
) -> Result<Vec<SmallBallRow>> {
    check_weight(k)?;
    let mut rows = Vec::new();
    for n in 1..=n_max {
        if gcd_u64(n as u64, order.level()) != 1 {
            continue;
        }
        let h = hecke_translate_kernel(order, z, n, k, cosh_cap, budget, false)?;
        let comparison = (n as f64) * crate::amplifier::tail_integral(n as u64, k)?;
        rows.push(SmallBallRow {
            n,
            small_count: h.small_ball_count,
            small_sum_ln: h.small_ball.ln_abs(),
            remainder_count: h.terms_used - h.small_ball_count,
            remainder_sum_ln: h.remainder.ln_abs(),
            comparison_ln: comparison.ln(),
            terms_used: h.terms_used,
        });
    }
    Ok(rows)
}

/// Suggested cosh cap for a requested tail tolerance at weight k, inverted
/// from the linear shell-growth model tail(C) ~ rho (k-1)/4pi ((1+C)/2)^{1-k/2}.
pub fn suggest_cosh_cap(k: u32, tol: f64) -> f64 {
    let rho = 12.0f64;
    let kf = k as f64;
    let ln_target = (tol / (rho * (kf - 1.0) / (4.0 * PI))).ln();
    let e = 1.0 - 0.5 * kf;
    let ln_half_c = ln_target / e;
    (2.0 * ln_half_c.exp() - 1.0).clamp(4.0, 1e18)
}

/// Diagonal kernel values over a list of points, in parallel; result order
/// matches input order.
pub fn diagonal_grid_scan(
    order: &Order,
    points: &[UhpPoint],
    k: u32,
    cosh_cap: f64,
    budget: usize,
    psl: bool,
) -> Result<Vec<KernelEvaluation>> {
    use rayon::prelude::*;
    points
        .par_iter()
        .map(|&z| kernel_petersson(order, z, z, k, cosh_cap, budget, psl))
        .collect()
}
