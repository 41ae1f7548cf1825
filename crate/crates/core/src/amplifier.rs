//! The amplifier bound calculus: coefficient plans over primes up to sqrt N,
//! worst-case moment sums under the eigenvalue cap, the displacement tail
//! integral, the two-term bound right-hand side, its optimization in N, and
//! the exponent fit that recovers the 5/6 slope of the squared sup-norm
//! bound.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::bergman::{hecke_translate_kernel, HeckeKernelValue};
use crate::cosets::coset_reps;
use crate::error::{Error, Result};
use crate::geometry::{j_factor, mobius, UhpPoint};
use crate::logscale::{logsumexp, LogScaledReal};
use crate::order::Order;
use crate::primes::{divisors, gcd_u64, num_divisors, primes_upto};
use crate::quadrature::adaptive_simpson_log;

/// Role of a supported coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CoefRole {
    /// n = p <= sqrt(N), p coprime to the level: coefficient is the (unknown)
    /// normalized eigenvalue at p, handled through its cap.
    Prime,
    /// n = p^2 <= N: coefficient is exactly -1.
    PrimeSquare,
}

/// The coefficient scheme: support indices with their roles.
#[derive(Clone, Debug, Serialize)]
pub struct AmplifierPlan {
    pub n_param: u64,
    pub level: u64,
    pub support: BTreeMap<u64, CoefRole>,
    pub prime_count: usize,
}

/// Builds the plan: primes p <= sqrt(N) away from the level contribute at
/// p and at p^2.
pub fn build_amplifier(n_param: u64, level: u64) -> AmplifierPlan {
    let sqrt_n = (n_param as f64).sqrt().floor() as u64;
    let mut support = BTreeMap::new();
    let mut prime_count = 0usize;
    for p in primes_upto(sqrt_n) {
        if level % p == 0 {
            continue;
        }
        support.insert(p, CoefRole::Prime);
        if p * p <= n_param {
            support.insert(p * p, CoefRole::PrimeSquare);
        }
        prime_count += 1;
    }
    AmplifierPlan {
        n_param,
        level,
        support,
        prime_count,
    }
}

/// Worst-case eigenvalue cap |eta(n)| <= d(n) n^epsilon (divisor bound; 2 at
/// primes), plus the exact prime relation eta(p)^2 - eta(p^2) = 1 used
/// symbolically for the amplifier lower bound.
#[derive(Clone, Copy, Debug)]
pub struct EigenvalueBoundModel {
    pub epsilon: f64,
}

impl EigenvalueBoundModel {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0) {
            return Err(Error::input("epsilon must be >= 0"));
        }
        Ok(EigenvalueBoundModel { epsilon })
    }

    pub fn eta_bound(&self, n: u64) -> f64 {
        num_divisors(n) as f64 * (n as f64).powf(self.epsilon)
    }

    /// Cap on |alpha_n| for a supported index.
    pub fn coefficient_cap(&self, n: u64, role: CoefRole) -> f64 {
        match role {
            CoefRole::Prime => self.eta_bound(n),
            CoefRole::PrimeSquare => 1.0,
        }
    }
}

/// S1 = sum |alpha|^2, S2 = (sum |alpha|)^2 under the worst-case caps, and
/// the amplifier lower bound L = prime_count^2 coming from the exact prime
/// relation (each p contributes eta(p)^2 - eta(p^2) = 1).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MomentSums {
    pub s1: f64,
    pub s2: f64,
    pub l: f64,
}

pub fn moment_sums(plan: &AmplifierPlan, model: &EigenvalueBoundModel) -> Result<MomentSums> {
    if plan.support.is_empty() {
        return Err(Error::DegenerateAmplifier(format!(
            "no primes <= sqrt({}) away from level {}; the amplifier lower bound is zero",
            plan.n_param, plan.level
        )));
    }
    let mut s1 = 0.0;
    let mut abs_sum = 0.0;
    for (&n, &role) in &plan.support {
        let cap = model.coefficient_cap(n, role);
        s1 += cap * cap;
        abs_sum += cap;
    }
    Ok(MomentSums {
        s1,
        s2: abs_sum * abs_sum,
        l: (plan.prime_count * plan.prime_count) as f64,
    })
}

/// Parts of the displacement tail integral from the cut T = n^{-3}:
/// integral of (1+u)^{-k/2} + u^{-3/4} (1+u)^{-k/2} over [T, infinity).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TailIntegralParts {
    pub first_quadrature: f64,
    pub first_closed_form: f64,
    pub second_quadrature: f64,
    pub total: f64,
}

/// The closed form of the first summand is (1+T)^{1-k/2} / (k/2 - 1), used
/// as an independent check on the quadrature.
pub fn tail_integral_parts(n: u64, k: u32) -> Result<TailIntegralParts> {
    if k < 6 {
        return Err(Error::input(format!(
            "tail integral needs k >= 6 (k/2 > 1 with margin), got {k}"
        )));
    }
    if n < 1 {
        return Err(Error::input("n must be >= 1"));
    }
    let kh = 0.5 * k as f64;
    let t = (n as f64).powi(-3);
    let first_closed = ((1.0 + t).ln() * (1.0 - kh)).exp() / (kh - 1.0);

    // cutoff with remainder below 1e-12 of the closed form: beyond U >= 1
    // both summands are bounded by 2 (1+u)^{-k/2}
    let mut upper = (2.0 * t).max(4.0);
    let target = 1e-12 * first_closed;
    while 2.0 * ((1.0 + upper).ln() * (1.0 - kh)).exp() / (kh - 1.0) > target {
        upper *= 2.0;
        if upper > 1e300 {
            break;
        }
    }

    let pow_term = move |u: f64| ((1.0 + u).ln() * -kh).exp();
    let tol = (1e-13 * first_closed).max(1e-280);
    let first_quad = adaptive_simpson_log(&pow_term, t, upper, tol)?;
    let second_quad = adaptive_simpson_log(&|u| u.powf(-0.75) * pow_term(u), t, upper, tol)?;
    Ok(TailIntegralParts {
        first_quadrature: first_quad,
        first_closed_form: first_closed,
        second_quadrature: second_quad,
        total: first_quad + second_quad,
    })
}

/// Numeric value of the full tail integral.
pub fn tail_integral(n: u64, k: u32) -> Result<f64> {
    Ok(tail_integral_parts(n, k)?.total)
}

/// One row of the tail-envelope comparison.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TailEstimateRow {
    pub n: u64,
    pub k: u32,
    /// n^{1+eps} k * tail integral
    pub lhs: f64,
    /// n^{13/4+eps} (n^3/(n^3+1))^{k/2}
    pub envelope: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TailEstimateReport {
    pub rows: Vec<TailEstimateRow>,
    /// Fitted constant: the maximum of lhs/envelope over the scan.
    pub fitted_constant: f64,
}

pub fn tail_estimate_check(n: u64, k: u32, epsilon: f64) -> Result<TailEstimateRow> {
    if n < 2 {
        return Err(Error::input("envelope comparison needs n >= 2"));
    }
    let ti = tail_integral(n, k)?;
    let nf = n as f64;
    let lhs = nf.powf(1.0 + epsilon) * k as f64 * ti;
    let n3 = nf.powi(3);
    let ln_env = (3.25 + epsilon) * nf.ln() + 0.5 * k as f64 * (n3 / (n3 + 1.0)).ln();
    let envelope = ln_env.exp();
    Ok(TailEstimateRow {
        n,
        k,
        lhs,
        envelope,
        ratio: lhs / envelope,
    })
}

pub fn tail_estimate_scan(n_max: u64, ks: &[u32], epsilon: f64) -> Result<TailEstimateReport> {
    let mut rows = Vec::new();
    let mut fitted = 0.0f64;
    for n in 2..=n_max {
        for &k in ks {
            let row = tail_estimate_check(n, k, epsilon)?;
            if !row.ratio.is_finite() {
                return Err(Error::Numerical(format!(
                    "tail ratio not finite at n = {n}, k = {k}"
                )));
            }
            fitted = fitted.max(row.ratio);
            rows.push(row);
        }
    }
    Ok(TailEstimateReport {
        rows,
        fitted_constant: fitted,
    })
}

/// The two terms of the bound: term1 = k / N^{1/2-eps} and
/// term2 = N^{e2+eps} (1 - 1/(N^3+1))^{k/2}, with e2 = 11/2 by default.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoundTerms {
    pub term1: f64,
    pub term2_ln: f64,
    pub rhs_ln: f64,
}

impl BoundTerms {
    pub fn term2(&self) -> f64 {
        self.term2_ln.exp()
    }

    pub fn rhs(&self) -> f64 {
        self.rhs_ln.exp()
    }
}

pub const DEFAULT_TERM2_EXPONENT: f64 = 5.5;
/// Alternative exponent seen in intermediate displays of the estimate chain.
pub const ALT_TERM2_EXPONENT: f64 = 6.5;

pub fn bound_rhs_with_exponent(
    k: f64,
    n: u64,
    epsilon: f64,
    term2_exponent: f64,
) -> Result<BoundTerms> {
    if n < 1 {
        return Err(Error::input("N must be >= 1"));
    }
    if !(k >= 4.0) {
        return Err(Error::input("k must be >= 4"));
    }
    let nf = n as f64;
    let term1 = k / nf.powf(0.5 - epsilon);
    let n3p1 = nf.powi(3) + 1.0;
    let term2_ln = (term2_exponent + epsilon) * nf.ln() + 0.5 * k * (-1.0 / n3p1).ln_1p();
    let rhs_ln = logsumexp(term1.ln(), term2_ln);
    Ok(BoundTerms {
        term1,
        term2_ln,
        rhs_ln,
    })
}

pub fn bound_rhs(k: f64, n: u64, epsilon: f64) -> Result<BoundTerms> {
    bound_rhs_with_exponent(k, n, epsilon, DEFAULT_TERM2_EXPONENT)
}

/// The balance point and the integer-grid optimum of the bound.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct OptimalN {
    /// Solution of 12 N^3 ln N = k (natural log), by bracketed Newton.
    pub n_balance: f64,
    pub residual: f64,
    pub rhs_balance_ln: f64,
    /// Arg-min of the rhs over integers 2..=ceil(k^{1/3})+2.
    pub n_grid: u64,
    pub rhs_grid_ln: f64,
}

/// Solves 12 N^3 ln N = k for N > 1 by Newton iteration inside a bisection
/// bracket.
pub fn solve_balance_n(k: f64) -> Result<f64> {
    if !(k >= 100.0) {
        return Err(Error::input("balance point is solved for k >= 100"));
    }
    let g = |n: f64| 12.0 * n.powi(3) * n.ln() - k;
    let gp = |n: f64| 36.0 * n.powi(2) * n.ln() + 12.0 * n.powi(2);
    let mut lo = 1.0 + 1e-9;
    let mut hi = (k / 12.0).powf(1.0 / 3.0) * 2.0 + 4.0;
    debug_assert!(g(lo) < 0.0 && g(hi) > 0.0);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let gx = g(x);
        if gx.abs() <= 1e-9 * k {
            break;
        }
        if gx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let step = x - gx / gp(x);
        x = if step > lo && step < hi {
            step
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(x)
}

pub fn optimal_n(k: f64, epsilon: f64) -> Result<OptimalN> {
    let n_balance = solve_balance_n(k)?;
    let residual = 12.0 * n_balance.powi(3) * n_balance.ln() - k;
    let n_round = (n_balance.round().max(1.0)) as u64;
    let rhs_balance_ln = bound_rhs(k, n_round.max(1), epsilon)?.rhs_ln;
    let n_cap = (k.powf(1.0 / 3.0).ceil() as u64 + 2).max(3);
    let mut best = (2u64, f64::INFINITY);
    for n in 2..=n_cap {
        let rhs = bound_rhs(k, n, epsilon)?.rhs_ln;
        if rhs < best.1 {
            best = (n, rhs);
        }
    }
    Ok(OptimalN {
        n_balance,
        residual,
        rhs_balance_ln,
        n_grid: best.0,
        rhs_grid_ln: best.1,
    })
}

/// ln of (1 - 1/(N^3+1))^{6 N^3 ln N} * N^6; tends to 0 as N grows.
pub fn balance_asymptotic_ln(n: f64) -> f64 {
    let n3p1 = n.powi(3) + 1.0;
    6.0 * n.powi(3) * n.ln() * (-1.0 / n3p1).ln_1p() + 6.0 * n.ln()
}

/// One sampled point of the bound curve.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CurveRow {
    pub k: f64,
    pub n_balance: f64,
    pub n_grid: u64,
    pub term1: f64,
    pub term2: f64,
    pub rhs: f64,
    pub rhs_ln: f64,
    /// Slope of ln rhs against ln k relative to the previous row; NaN on the
    /// first row.
    pub log_slope: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub rows: Vec<CurveRow>,
}

/// Samples the bound along k with N at the balance point and fits the
/// least-squares slope of ln rhs against ln k. `include_term2 = false`
/// ablates the second term to show which one binds.
pub fn exponent_fit(
    k_min: f64,
    k_max: f64,
    samples: usize,
    epsilon: f64,
    include_term2: bool,
) -> Result<ExponentFit> {
    if samples < 2 {
        return Err(Error::input("need at least 2 samples"));
    }
    if !(k_max / k_min >= 10.0) {
        return Err(Error::input(
            "fit range must span at least one decade (k_max/k_min >= 10)",
        ));
    }
    use rayon::prelude::*;
    let lk_min = k_min.ln();
    let lk_max = k_max.ln();
    let points: Vec<(f64, f64, f64, u64, f64, f64)> = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64, f64, u64, f64, f64)> {
            let lk = lk_min + (lk_max - lk_min) * i as f64 / (samples - 1) as f64;
            let k = lk.exp();
            let opt = optimal_n(k, epsilon)?;
            let n_round = (opt.n_balance.round().max(2.0)) as u64;
            let terms = bound_rhs(k, n_round, epsilon)?;
            let rhs_ln = if include_term2 {
                terms.rhs_ln
            } else {
                terms.term1.ln()
            };
            Ok((k, lk, opt.n_balance, opt.n_grid, terms.term2_ln, rhs_ln))
        })
        .collect::<Result<Vec<_>>>()?;

    let m = points.len() as f64;
    let mean_x: f64 = points.iter().map(|p| p.1).sum::<f64>() / m;
    let mean_y: f64 = points.iter().map(|p| p.5).sum::<f64>() / m;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for p in &points {
        sxx += (p.1 - mean_x) * (p.1 - mean_x);
        sxy += (p.1 - mean_x) * (p.5 - mean_y);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;

    let mut rows = Vec::with_capacity(points.len());
    let mut prev: Option<(f64, f64)> = None;
    for (k, lk, n_balance, n_grid, term2_ln, rhs_ln) in points {
        let log_slope = match prev {
            Some((plk, prl)) => (rhs_ln - prl) / (lk - plk),
            None => f64::NAN,
        };
        let n_round = (n_balance.round().max(2.0)) as u64;
        let term1 = bound_rhs(k, n_round, epsilon)?.term1;
        rows.push(CurveRow {
            k,
            n_balance,
            n_grid,
            term1,
            term2: term2_ln.exp(),
            rhs: rhs_ln.exp(),
            rhs_ln,
            log_slope,
        });
        prev = Some((lk, rhs_ln));
    }
    Ok(ExponentFit {
        slope,
        intercept,
        rows,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PairTerm {
    pub m: u64,
    pub n: u64,
    pub d: u64,
    pub nu: u64,
    pub degree: usize,
    pub coefficient_cap: f64,
    pub weight: f64,
    pub translate_ln: f64,
    pub contribution_ln: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AmplifiedCheckReport {
    pub k: u32,
    pub n_param: u64,
    pub z: (f64, f64),
    pub pair_terms: Vec<PairTerm>,
    pub rhs_total_ln: f64,
    /// S1 N^eps k
    pub package_diag_term: f64,
    /// S2 N^{11/2+eps} (1 - 1/(N^3+1))^{k/2}
    pub package_offdiag_ln: f64,
    pub fitted_constant: f64,
    pub termwise_checks: usize,
    pub max_termwise_mismatch: f64,
}

/// Desk-scale audit of the amplified inequality. Assembles the right-hand
/// side from enumerated translate sums with worst-case coefficient caps;
/// for every coset representative the operator-side prefactor bookkeeping
/// y^k (d^2/mn)^{(k-1)/2} nu^{k-1} |j(gamma,z)|^{-k} is checked against the
/// direct route (d/sqrt(mn)) (y Im gamma z)^{k/2}, which must agree exactly
/// up to rounding; finally the total is compared against the two-term
/// moment package and the fitted constant is reported.
#[allow(clippy::map_entry)] // two caches fill together under one key test
pub fn amplified_inequality_check(
    order: &Order,
    z: UhpPoint,
    k: u32,
    n_param: u64,
    epsilon: f64,
    kernel_cosh_cap: f64,
    budget: usize,
) -> Result<AmplifiedCheckReport> {
    if k > 60 {
        return Err(Error::input("desk check is limited to k <= 60"));
    }
    if n_param > 30 {
        return Err(Error::input("desk check is limited to N <= 30"));
    }
    let plan = build_amplifier(n_param, order.level());
    let model = EigenvalueBoundModel::new(epsilon)?;
    let moments = moment_sums(&plan, &model)?;

    let mut translate_cache: BTreeMap<u64, HeckeKernelValue> = BTreeMap::new();
    let mut degree_cache: BTreeMap<u64, usize> = BTreeMap::new();
    let mut mismatch_count = 0usize;
    let mut max_mismatch = 0.0f64;
    let kf = k as f64;

    let mut pair_terms = Vec::new();
    let mut rhs_total = LogScaledReal::ZERO;
    for (&m, &role_m) in &plan.support {
        for (&n, &role_n) in &plan.support {
            let cap_pair = model.coefficient_cap(m, role_m) * model.coefficient_cap(n, role_n);
            for d in divisors(gcd_u64(m, n)) {
                let nu = (m / d) * (n / d);
                if !translate_cache.contains_key(&nu) {
                    let t = hecke_translate_kernel(
                        order,
                        z,
                        nu as i64,
                        k,
                        kernel_cosh_cap,
                        budget,
                        false,
                    )?;
                    translate_cache.insert(nu, t);
                    let dec = coset_reps(order, nu as i64, budget)?;
                    // termwise audit on every representative
                    for rep in &dec.reps {
                        let gamma = order.real_image(rep.coords);
                        let img = mobius(&gamma, z)?;
                        let jabs = j_factor(&gamma, z).norm();
                        let ln_op = kf * z.y.ln()
                            + 0.5 * (kf - 1.0) * ((d * d) as f64 / (m as f64 * n as f64)).ln()
                            + (kf - 1.0) * (nu as f64).ln()
                            - kf * jabs.ln();
                        let ln_pet = (d as f64 / (m as f64 * n as f64).sqrt()).ln()
                            + 0.5 * kf * (z.y * img.y).ln();
                        let mismatch = (ln_op - ln_pet).abs();
                        max_mismatch = max_mismatch.max(mismatch);
                        mismatch_count += 1;
                    }
                    degree_cache.insert(nu, dec.degree);
                }
                let t = &translate_cache[&nu];
                let weight = d as f64 / (m as f64 * n as f64).sqrt();
                let contribution = t.total.mul(&LogScaledReal::from_f64(weight * cap_pair));
                rhs_total = rhs_total.add(&contribution);
                pair_terms.push(PairTerm {
                    m,
                    n,
                    d,
                    nu,
                    degree: degree_cache[&nu],
                    coefficient_cap: cap_pair,
                    weight,
                    translate_ln: t.total.ln_abs(),
                    contribution_ln: contribution.ln_abs(),
                });
            }
        }
    }

    let nf = n_param as f64;
    let package_diag = moments.s1 * nf.powf(epsilon) * kf;
    let package_offdiag_ln = moments.s2.ln()
        + (5.5 + epsilon) * nf.ln()
        + 0.5 * kf * (-1.0 / (nf.powi(3) + 1.0)).ln_1p();
    let package_ln = logsumexp(package_diag.ln(), package_offdiag_ln);
    let fitted_constant = (rhs_total.ln_abs() - package_ln).exp();

    Ok(AmplifiedCheckReport {
        k,
        n_param,
        z: (z.x, z.y),
        pair_terms,
        rhs_total_ln: rhs_total.ln_abs(),
        package_diag_term: package_diag,
        package_offdiag_ln,
        fitted_constant,
        termwise_checks: mismatch_count,
        max_termwise_mismatch: max_mismatch,
    })
}
