//! Enumeration of order elements with prescribed reduced norm inside
//! hyperbolic balls. The ball condition cosh d(z, alpha w) <= C is pulled
//! back to the positive-definite constraint |g_z^{-1} phi(alpha) g_w|_F^2
//! <= 2 n C on integer order coordinates, which a pruned depth-first search
//! over the Cholesky factor enumerates exhaustively.

use crate::error::{Error, Result};
use crate::geometry::{
    base_point_frame, base_point_frame_inv, cosh_dist, mobius, RealMatrix2, UhpPoint,
};
use crate::order::Order;
use crate::quaternion::QuaternionElement;

/// Relative safety margin applied to the quadratic-form cap before the exact
/// norm filter, so no exact solution is lost to rounding.
const PRUNE_MARGIN: f64 = 1e-6;

/// Relative tolerance of the final ball-membership test on cosh d.
const MEMBERSHIP_TOL: f64 = 1e-9;

pub const DEFAULT_BUDGET: usize = 4_000_000;

/// Positive-definite Gram form Q on order coordinates with
/// Q(alpha) = 2 N(alpha) cosh d(z, alpha w) for N(alpha) > 0.
#[derive(Clone, Debug)]
pub struct MajorantForm {
    pub z: UhpPoint,
    pub w: UhpPoint,
    pub gram: [[f64; 4]; 4],
    /// Upper-triangular Cholesky factor R with gram = R^T R.
    pub chol: [[f64; 4]; 4],
}

impl MajorantForm {
    pub fn value(&self, c: [i64; 4]) -> f64 {
        let mut q = 0.0;
        for (r, row) in self.gram.iter().enumerate() {
            for (s, g) in row.iter().enumerate() {
                q += c[r] as f64 * c[s] as f64 * g;
            }
        }
        q
    }

    /// Diagonal of the inverse Gram matrix; coordinate i of any point with
    /// Q <= cap is bounded by sqrt(cap * inv_diag[i]).
    pub fn inverse_diagonal(&self) -> [f64; 4] {
        let inv = invert4(&self.gram);
        [inv[0][0], inv[1][1], inv[2][2], inv[3][3]]
    }
}

/// Majorant at a single base point (two-point form with w = z).
pub fn majorant(order: &Order, z: UhpPoint) -> Result<MajorantForm> {
    majorant_pair(order, z, z)
}

/// Two-point majorant: Gram matrix of the conjugated basis images
/// g_z^{-1} E_r g_w under the Frobenius inner product.
pub fn majorant_pair(order: &Order, z: UhpPoint, w: UhpPoint) -> Result<MajorantForm> {
    let gz_inv = base_point_frame_inv(z);
    let gw = base_point_frame(w);
    let conj: Vec<RealMatrix2> = order
        .real_basis()
        .iter()
        .map(|e| gz_inv.mul(e).mul(&gw))
        .collect();
    let mut gram = [[0.0f64; 4]; 4];
    for r in 0..4 {
        for s in 0..4 {
            let x = &conj[r];
            let y = &conj[s];
            gram[r][s] = x.a * y.a + x.b * y.b + x.c * y.c + x.d * y.d;
        }
    }
    let chol = cholesky4(&gram).ok_or_else(|| {
        Error::Numerical(format!(
            "majorant form at z = {:?}, w = {:?} is not numerically positive definite",
            z, w
        ))
    })?;
    Ok(MajorantForm { z, w, gram, chol })
}

/// One enumerated order element.
#[derive(Clone, Debug)]
pub struct BallElement {
    /// Integer coordinates in the order basis.
    pub coords: [i64; 4],
    pub quat: QuaternionElement,
    /// cosh d(z, alpha w), from the real embedding.
    pub cosh_dist: f64,
}

/// All order elements of reduced norm n with cosh d(z, alpha w) <= cap,
/// sorted by coordinate tuple.
#[derive(Clone, Debug)]
pub struct LatticeBall {
    pub n: i64,
    pub z: UhpPoint,
    pub w: UhpPoint,
    pub cosh_cap: f64,
    pub elements: Vec<BallElement>,
}

impl LatticeBall {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn coords_set(&self) -> Vec<[i64; 4]> {
        self.elements.iter().map(|e| e.coords).collect()
    }
}

fn cholesky4(g: &[[f64; 4]; 4]) -> Option<[[f64; 4]; 4]> {
    let mut r = [[0.0f64; 4]; 4];
    for i in 0..4 {
        let mut d = g[i][i];
        for k in 0..i {
            d -= r[k][i] * r[k][i];
        }
        if !(d > 0.0) {
            return None;
        }
        r[i][i] = d.sqrt();
        for j in (i + 1)..4 {
            let mut v = g[i][j];
            for k in 0..i {
                v -= r[k][i] * r[k][j];
            }
            r[i][j] = v / r[i][i];
        }
    }
    Some(r)
}

fn invert4(g: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    // Gauss-Jordan; the majorant is well-conditioned at desk scale.
    let mut a = *g;
    let mut inv = [[0.0f64; 4]; 4];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for col in 0..4 {
        let mut pivot = col;
        for r in (col + 1)..4 {
            if a[r][col].abs() > a[pivot][col].abs() {
                pivot = r;
            }
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        for j in 0..4 {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..4 {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for j in 0..4 {
                        a[r][j] -= f * a[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    inv
}

struct DfsState<'a> {
    order: &'a Order,
    form: &'a MajorantForm,
    /// Integer Gram matrix of den^2 * reduced norm over order coordinates.
    norm_gram: [[i128; 4]; 4],
    n: i64,
    q_cap: f64,
    cosh_cap: f64,
    budget: usize,
    visited: usize,
    out: Vec<BallElement>,
}

fn isqrt_i128(v: i128) -> Option<i128> {
    if v < 0 {
        return None;
    }
    let mut r = (v as f64).sqrt() as i128;
    while r > 0 && r * r > v {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= v {
        r += 1;
    }
    if r * r == v {
        Some(r)
    } else {
        None
    }
}

impl DfsState<'_> {
    /// Depth-first descent over coordinates c3, c2, c1 with partial-sum
    /// pruning on the Cholesky factor; the innermost coordinate is not
    /// scanned but solved exactly from the norm equation, which cuts the
    /// visit count from ~cap^2 to ~cap^{3/2}.
    fn descend(
        &mut self,
        level: usize,
        c: &mut [i64; 4],
        partial: f64,
        lin: [f64; 4],
    ) -> Result<()> {
        let r = &self.form.chol;
        let rii = r[level][level];
        // level-th partial linear term: sum_{j > level} R[level][j] c_j
        let s = lin[level];
        let room = ((self.q_cap - partial).max(0.0)).sqrt();
        let lo = ((-room - s) / rii).floor() as i64;
        let hi = ((room - s) / rii).ceil() as i64;
        for ci in lo..=hi {
            let t = rii * ci as f64 + s;
            let q = partial + t * t;
            if q > self.q_cap {
                continue;
            }
            c[level] = ci;
            if level == 1 {
                self.visited += 1;
                if self.visited > self.budget {
                    return Err(Error::Resource {
                        what: format!(
                            "ball enumeration exceeded {} prefix visits (found {} so far)",
                            self.budget,
                            self.out.len()
                        ),
                        partial: true,
                    });
                }
                self.solve_innermost(c);
            } else {
                let mut lin_next = lin;
                let next = level - 1;
                let mut acc = 0.0;
                for j in (next + 1)..4 {
                    acc += r[next][j] * c[j] as f64;
                }
                lin_next[next] = acc;
                self.descend(next, c, q, lin_next)?;
            }
        }
        c[level] = 0;
        Ok(())
    }

    /// With c1..c3 fixed, den^2 N(c) = n den^2 is a quadratic in c0 with
    /// integer coefficients; solve it exactly instead of scanning.
    fn solve_innermost(&mut self, c: &mut [i64; 4]) {
        let m = &self.norm_gram;
        let a = m[0][0];
        let mut b = 0i128;
        let mut d = 0i128;
        for i in 1..4 {
            b += m[0][i] * c[i] as i128;
            for j in 1..4 {
                d += m[i][j] * c[i] as i128 * c[j] as i128;
            }
        }
        b *= 2;
        let den2 = (self.order.den as i128) * (self.order.den as i128);
        let rhs = d - self.n as i128 * den2;
        // a c0^2 + b c0 + rhs = 0; a != 0 since the norm form is anisotropic
        let disc = b * b - 4 * a * rhs;
        let Some(root) = isqrt_i128(disc) else {
            return;
        };
        let two_a = 2 * a;
        let mut candidates = [0i128; 2];
        let mut count = 0usize;
        for sign in [1i128, -1] {
            let num = -b + sign * root;
            if num % two_a == 0 {
                let c0 = num / two_a;
                if count == 0 || candidates[0] != c0 {
                    candidates[count] = c0;
                    count += 1;
                }
            }
        }
        for &c0 in &candidates[..count] {
            if c0.unsigned_abs() > i64::MAX as u128 {
                continue;
            }
            c[0] = c0 as i64;
            self.take_if_member(*c);
        }
        c[0] = 0;
    }

    fn take_if_member(&mut self, c: [i64; 4]) {
        if c == [0, 0, 0, 0] {
            return;
        }
        if self.form.value(c) > self.q_cap {
            return;
        }
        let w = self.order.w_coords(c);
        let den2 = (self.order.den as i128) * (self.order.den as i128);
        if self.order.norm_times_den2(&w) != self.n as i128 * den2 {
            debug_assert!(false, "quadratic solve produced a wrong-norm candidate");
            return;
        }
        let m = self.order.real_image(c);
        let img = match mobius(&m, self.form.w) {
            Ok(p) => p,
            Err(_) => return, // cannot happen for exact norm n > 0
        };
        let cd = cosh_dist(self.form.z, img);
        if cd <= self.cosh_cap * (1.0 + MEMBERSHIP_TOL) {
            self.out.push(BallElement {
                coords: c,
                quat: self.order.element_from_coords(c),
                cosh_dist: cd,
            });
        }
    }
}

/// Enumerates every order element of reduced norm n with
/// cosh d(z, alpha w) <= cosh_cap; exhaustive up to the work budget.
pub fn enumerate_ball_pair(
    order: &Order,
    n: i64,
    z: UhpPoint,
    w: UhpPoint,
    cosh_cap: f64,
    budget: usize,
) -> Result<LatticeBall> {
    if n < 1 {
        return Err(Error::input(format!(
            "norm must be a positive integer, got {n}"
        )));
    }
    if !(cosh_cap >= 1.0) {
        return Err(Error::input(format!(
            "cosh cap must be >= 1, got {cosh_cap}"
        )));
    }
    let form = majorant_pair(order, z, w)?;
    let q_cap = 2.0 * n as f64 * cosh_cap * (1.0 + PRUNE_MARGIN);
    let mut st = DfsState {
        order,
        form: &form,
        norm_gram: order.norm_gram(),
        n,
        q_cap,
        cosh_cap,
        budget,
        visited: 0,
        out: Vec::new(),
    };
    let mut c = [0i64; 4];
    st.descend(3, &mut c, 0.0, [0.0; 4])?;
    let mut elements = st.out;
    elements.sort_by_key(|e| e.coords);
    Ok(LatticeBall {
        n,
        z,
        w,
        cosh_cap,
        elements,
    })
}

/// Single-base-point ball: elements moving z by at most the given cosh cap.
pub fn enumerate_ball(
    order: &Order,
    n: i64,
    z: UhpPoint,
    cosh_cap: f64,
    budget: usize,
) -> Result<LatticeBall> {
    enumerate_ball_pair(order, n, z, z, cosh_cap, budget)
}

/// Counting function: norm-n elements with displacement u(z, alpha z) <= rho,
/// realized through cosh d = 1 + 2u.
pub fn counting_function(
    order: &Order,
    n: i64,
    z: UhpPoint,
    rho: f64,
    budget: usize,
) -> Result<LatticeBall> {
    if !(rho >= 0.0) {
        return Err(Error::input(format!(
            "displacement cap must be >= 0, got {rho}"
        )));
    }
    enumerate_ball(order, n, z, 1.0 + 2.0 * rho, budget)
}

/// Brute-force reference enumerations. Kept deliberately independent of the
/// pruned search: candidate boxes come from the inverse Gram diagonal and
/// every tuple is scanned. Used by the test suites only.
pub mod oracle {
    use super::*;

    /// Exhaustive box scan equivalent of `enumerate_ball_pair`.
    pub fn box_scan_pair(
        order: &Order,
        n: i64,
        z: UhpPoint,
        w: UhpPoint,
        cosh_cap: f64,
    ) -> Result<LatticeBall> {
        let form = majorant_pair(order, z, w)?;
        let q_cap = 2.0 * n as f64 * cosh_cap * (1.0 + PRUNE_MARGIN);
        let inv_diag = form.inverse_diagonal();
        let bound: Vec<i64> = inv_diag
            .iter()
            .map(|&d| ((q_cap * d).max(0.0).sqrt() * (1.0 + 1e-9)).floor() as i64 + 1)
            .collect();
        let den2 = (order.den as i128) * (order.den as i128);
        let mut elements = Vec::new();
        for c0 in -bound[0]..=bound[0] {
            for c1 in -bound[1]..=bound[1] {
                for c2 in -bound[2]..=bound[2] {
                    for c3 in -bound[3]..=bound[3] {
                        let c = [c0, c1, c2, c3];
                        if c == [0, 0, 0, 0] {
                            continue;
                        }
                        let wc = order.w_coords(c);
                        if order.norm_times_den2(&wc) != n as i128 * den2 {
                            continue;
                        }
                        let m = order.real_image(c);
                        let img = mobius(&m, w)?;
                        let cd = cosh_dist(z, img);
                        if cd <= cosh_cap * (1.0 + MEMBERSHIP_TOL) {
                            elements.push(BallElement {
                                coords: c,
                                quat: order.element_from_coords(c),
                                cosh_dist: cd,
                            });
                        }
                    }
                }
            }
        }
        elements.sort_by_key(|e| e.coords);
        Ok(LatticeBall {
            n,
            z,
            w,
            cosh_cap,
            elements,
        })
    }

    pub fn box_scan(order: &Order, n: i64, z: UhpPoint, cosh_cap: f64) -> Result<LatticeBall> {
        box_scan_pair(order, n, z, z, cosh_cap)
    }
}
