//! Hyperbolic upper half-plane geometry: distance, displacement, Moebius
//! action, automorphy factors, and Petersson magnitudes.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::logscale::LogScaledReal;

/// A point x + iy with y > 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UhpPoint {
    pub x: f64,
    pub y: f64,
}

impl UhpPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(y > 0.0) || !x.is_finite() || !y.is_finite() {
            return Err(Error::input(format!(
                "point ({x}, {y}) is not in the upper half-plane"
            )));
        }
        Ok(UhpPoint { x, y })
    }

    pub fn i() -> Self {
        UhpPoint { x: 0.0, y: 1.0 }
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }
}

/// Real 2x2 matrix acting on the upper half-plane when det > 0.
#[derive(Clone, Copy, Debug)]
pub struct RealMatrix2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl RealMatrix2 {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        RealMatrix2 { a, b, c, d }
    }

    pub fn identity() -> Self {
        RealMatrix2::new(1.0, 0.0, 0.0, 1.0)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn mul(&self, o: &RealMatrix2) -> RealMatrix2 {
        RealMatrix2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn scale(&self, s: f64) -> RealMatrix2 {
        RealMatrix2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn add(&self, o: &RealMatrix2) -> RealMatrix2 {
        RealMatrix2::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }

    /// Sum of squares of the entries.
    pub fn frobenius_sq(&self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }
}

/// cosh^2 of half the hyperbolic distance:
/// ((x-u)^2 + (y+v)^2) / (4yv), >= 1 with equality iff z = w.
pub fn cosh2_half_dist(z: UhpPoint, w: UhpPoint) -> f64 {
    let dx = z.x - w.x;
    let sy = z.y + w.y;
    (dx * dx + sy * sy) / (4.0 * z.y * w.y)
}

/// Displacement u(z, w) = sinh^2(d/2) = |z - w|^2 / (4yv).
///
/// Computed directly from the difference, so there is no cancellation when
/// z is close to w (cosh2_half_dist - 1 would lose all precision there).
pub fn u_value(z: UhpPoint, w: UhpPoint) -> f64 {
    let dx = z.x - w.x;
    let dy = z.y - w.y;
    (dx * dx + dy * dy) / (4.0 * z.y * w.y)
}

/// Hyperbolic distance, via d = 2 asinh(sqrt(u)).
pub fn dist(z: UhpPoint, w: UhpPoint) -> f64 {
    2.0 * u_value(z, w).sqrt().asinh()
}

/// cosh of the full distance; cosh d = 1 + 2u.
pub fn cosh_dist(z: UhpPoint, w: UhpPoint) -> f64 {
    1.0 + 2.0 * u_value(z, w)
}

/// Moebius action z -> (az + b) / (cz + d) for det > 0.
pub fn mobius(m: &RealMatrix2, z: UhpPoint) -> Result<UhpPoint> {
    let det = m.det();
    if !(det > 0.0) {
        return Err(Error::input(format!(
            "Moebius action needs det > 0, got {det}"
        )));
    }
    let zc = z.to_complex();
    let num = Complex64::new(m.a, 0.0) * zc + m.b;
    let den = Complex64::new(m.c, 0.0) * zc + m.d;
    let img = num / den;
    UhpPoint::new(img.re, img.im)
}

/// Automorphy factor j(m, w) = c w + d.
pub fn j_factor(m: &RealMatrix2, w: UhpPoint) -> Complex64 {
    Complex64::new(m.c, 0.0) * w.to_complex() + m.d
}

/// The unipotent-diagonal matrix g_z sending i to z; det = 1.
pub fn base_point_frame(z: UhpPoint) -> RealMatrix2 {
    let s = z.y.sqrt();
    RealMatrix2::new(s, z.x / s, 0.0, 1.0 / s)
}

/// Inverse of `base_point_frame`.
pub fn base_point_frame_inv(z: UhpPoint) -> RealMatrix2 {
    let s = z.y.sqrt();
    RealMatrix2::new(1.0 / s, -z.x / s, 0.0, s)
}

/// Pointwise Petersson magnitude v^{k/2} |value| in the log domain.
pub fn petersson_magnitude(value: Complex64, w: UhpPoint, k: u32) -> Result<LogScaledReal> {
    if k < 1 {
        return Err(Error::input("weight must be >= 1"));
    }
    let m = value.norm();
    if m == 0.0 {
        return Ok(LogScaledReal::ZERO);
    }
    Ok(LogScaledReal::pos_from_ln(
        0.5 * k as f64 * w.y.ln() + m.ln(),
    ))
}

/// Axis-aligned sampling box in the upper half-plane.
#[derive(Clone, Copy, Debug)]
pub struct GridBox {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl GridBox {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(y0 > 0.0) {
            return Err(Error::input(format!(
                "grid box must stay above y = 0, got y0 = {y0}"
            )));
        }
        if !(x1 >= x0) || !(y1 >= y0) {
            return Err(Error::input("grid box must satisfy x1 >= x0 and y1 >= y0"));
        }
        Ok(GridBox { x0, x1, y0, y1 })
    }
}

/// Deterministic lattice of sample points: endpoints included when a side
/// has more than one sample, midpoint otherwise. Row-major, y fastest.
pub fn sample_grid(bx: GridBox, nx: usize, ny: usize) -> Result<Vec<UhpPoint>> {
    if nx == 0 || ny == 0 {
        return Err(Error::input("grid must have at least one point per side"));
    }
    let coord = |lo: f64, hi: f64, n: usize, i: usize| -> f64 {
        if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    };
    let mut pts = Vec::with_capacity(nx * ny);
    for ix in 0..nx {
        for iy in 0..ny {
            let x = coord(bx.x0, bx.x1, nx, ix);
            let y = coord(bx.y0, bx.y1, ny, iy);
            pts.push(UhpPoint::new(x, y)?);
        }
    }
    Ok(pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(x: f64, y: f64) -> UhpPoint {
        UhpPoint::new(x, y).unwrap()
    }

    #[test]
    fn cosh2_half_dist_examples() {
        assert_eq!(cosh2_half_dist(pt(0.0, 1.0), pt(0.0, 1.0)), 1.0);
        assert!((cosh2_half_dist(pt(0.0, 1.0), pt(0.0, 2.0)) - 9.0 / 8.0).abs() < 1e-15);
        assert!((cosh2_half_dist(pt(1.0, 1.0), pt(0.0, 1.0)) - 5.0 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn dist_on_imaginary_axis_is_log_ratio() {
        let d = dist(pt(0.0, 1.0), pt(0.0, 2.0));
        assert!((d - std::f64::consts::LN_2).abs() < 1e-14);
    }

    #[test]
    fn u_value_examples() {
        assert_eq!(u_value(pt(0.3, 0.7), pt(0.3, 0.7)), 0.0);
        assert!((u_value(pt(0.0, 1.0), pt(0.0, 2.0)) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn u_value_near_coincident_points_keeps_precision() {
        let z = pt(0.5, 1.0);
        let w = pt(0.5 + 1e-9, 1.0);
        let u = u_value(z, w);
        // direct formula keeps ~16 digits where cosh2 - 1 would cancel to ~7
        assert!((u - 0.25e-18).abs() < 1e-25 * 0.25);
        assert!(u > 0.0);
        assert!(dist(z, w) > 0.0);
    }

    #[test]
    fn mobius_examples() {
        let id = RealMatrix2::identity();
        let z = pt(0.3, 1.7);
        let img = mobius(&id, z).unwrap();
        assert!((img.x - z.x).abs() < 1e-15 && (img.y - z.y).abs() < 1e-15);

        let scale2 = RealMatrix2::new(2.0, 0.0, 0.0, 1.0);
        let img = mobius(&scale2, pt(0.0, 1.0)).unwrap();
        assert!((img.x - 0.0).abs() < 1e-15 && (img.y - 2.0).abs() < 1e-15);

        let jf = j_factor(&RealMatrix2::new(1.0, 0.0, 1.0, 1.0), pt(0.0, 1.0));
        assert!((jf - Complex64::new(1.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn mobius_rejects_nonpositive_det() {
        let m = RealMatrix2::new(1.0, 0.0, 0.0, -1.0);
        assert!(mobius(&m, pt(0.0, 1.0)).is_err());
    }

    #[test]
    fn petersson_examples() {
        let one = Complex64::new(1.0, 0.0);
        let v = petersson_magnitude(one, pt(0.0, 1.0), 12).unwrap();
        assert!((v.to_f64() - 1.0).abs() < 1e-14);
        let v = petersson_magnitude(one, pt(0.0, 4.0), 2).unwrap();
        assert!((v.to_f64() - 4.0).abs() < 1e-13);
        let v = petersson_magnitude(Complex64::new(0.0, 0.0), pt(0.0, 4.0), 2).unwrap();
        assert!(v.is_zero());
        // huge weight stays finite in log scale
        let v = petersson_magnitude(one, pt(0.0, 4.0), 10_000).unwrap();
        assert!((v.ln_abs() - 5000.0 * 4.0f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn grid_is_deterministic_and_validated() {
        let bx = GridBox::new(-0.5, 0.5, 0.6, 1.6).unwrap();
        let g1 = sample_grid(bx, 10, 10).unwrap();
        let g2 = sample_grid(bx, 10, 10).unwrap();
        assert_eq!(g1.len(), 100);
        assert!(g1.iter().zip(&g2).all(|(p, q)| p == q));
        assert!(GridBox::new(-1.0, 1.0, 0.0, 1.0).is_err());
        assert!(sample_grid(bx, 0, 3).is_err());
    }

    fn arb_point() -> impl Strategy<Value = UhpPoint> {
        (-5.0f64..5.0, 0.05f64..20.0).prop_map(|(x, y)| pt(x, y))
    }

    fn arb_sl2() -> impl Strategy<Value = RealMatrix2> {
        // random product of shears and a scaling keeps det = 1 exactly-ish
        (-2.0f64..2.0, -2.0f64..2.0, 0.2f64..5.0).prop_map(|(s, t, l)| {
            let upper = RealMatrix2::new(1.0, s, 0.0, 1.0);
            let lower = RealMatrix2::new(1.0, 0.0, t, 1.0);
            let diag = RealMatrix2::new(l, 0.0, 0.0, 1.0 / l);
            upper.mul(&lower).mul(&diag)
        })
    }

    proptest! {
        #[test]
        fn dist_symmetry_and_triangle(z in arb_point(), w in arb_point(), v in arb_point()) {
            let dzw = dist(z, w);
            let dwz = dist(w, z);
            prop_assert!((dzw - dwz).abs() <= 1e-10 * (1.0 + dzw));
            prop_assert!(dist(z, v) <= dzw + dist(w, v) + 1e-9);
        }

        #[test]
        fn isometry_under_det_one(m in arb_sl2(), z in arb_point(), w in arb_point()) {
            let mz = mobius(&m, z).unwrap();
            let mw = mobius(&m, w).unwrap();
            let d0 = dist(z, w);
            let d1 = dist(mz, mw);
            prop_assert!((d0 - d1).abs() <= 1e-10 * (1.0 + d0));
        }

        #[test]
        fn imaginary_part_transform(m in arb_sl2(), z in arb_point()) {
            let mz = mobius(&m, z).unwrap();
            let j = j_factor(&m, z).norm_sqr();
            prop_assert!((mz.y * j - m.det() * z.y).abs() <= 1e-10 * (1.0 + z.y * j));
        }

        #[test]
        fn frame_sends_i_to_z(z in arb_point()) {
            let g = base_point_frame(z);
            prop_assert!((g.det() - 1.0).abs() < 1e-12);
            let img = mobius(&g, UhpPoint::i()).unwrap();
            prop_assert!((img.x - z.x).abs() < 1e-10 && (img.y - z.y).abs() < 1e-10 * z.y);
            let gi = base_point_frame_inv(z);
            let prod = g.mul(&gi);
            prop_assert!((prod.a - 1.0).abs() < 1e-12 && (prod.d - 1.0).abs() < 1e-12);
            prop_assert!(prod.b.abs() < 1e-12 && prod.c.abs() < 1e-12);
        }
    }
}
