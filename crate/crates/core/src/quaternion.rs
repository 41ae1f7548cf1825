//! Exact arithmetic in the rational quaternion algebra (a,b) with basis
//! 1, i, j, ij where i^2 = a, j^2 = b, ij = -ji, together with the
//! embedding into 2x2 matrices over a real quadratic field.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::geometry::RealMatrix2;

pub type Rational = BigRational;

pub fn rat(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn rat_frac(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Structure constants (a, b) of the algebra, with the search height used by
/// the desk-scale anisotropy check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AlgebraParams {
    pub a: i64,
    pub b: i64,
    pub height_check: i64,
}

pub const DEFAULT_HEIGHT_CHECK: i64 = 50;

impl AlgebraParams {
    /// Validates that the pair can define a division algebra split at
    /// infinity: a, b nonzero, at least one positive, and no nonzero integer
    /// zero of the norm form x0^2 - a x1^2 - b x2^2 + ab x3^2 up to the
    /// configured height.
    pub fn new(a: i64, b: i64, height_check: i64) -> Result<Self> {
        if a == 0 || b == 0 {
            return Err(Error::config("algebra parameters a, b must be nonzero"));
        }
        if a < 0 && b < 0 {
            return Err(Error::config(
                "algebra is not split at infinity: both a and b are negative",
            ));
        }
        if height_check < 1 {
            return Err(Error::config("height_check must be >= 1"));
        }
        let params = AlgebraParams { a, b, height_check };
        if let Some(zero) = params.isotropy_witness() {
            return Err(Error::config(format!(
                "norm form is isotropic: nonzero zero {:?} of height <= {} (not a division algebra)",
                zero, height_check
            )));
        }
        Ok(params)
    }

    /// Searches for a nonzero integer zero of the norm form with all
    /// coordinates bounded by `height_check`. The x3 coordinate is solved
    /// for, so the scan is cubic, not quartic.
    fn isotropy_witness(&self) -> Option<[i64; 4]> {
        let h = self.height_check;
        let (a, b) = (self.a as i128, self.b as i128);
        for x0 in 0..=h as i128 {
            for x1 in -(h as i128)..=h as i128 {
                for x2 in -(h as i128)..=h as i128 {
                    // x0^2 - a x1^2 - b x2^2 + ab x3^2 = 0
                    let rest = x0 * x0 - a * x1 * x1 - b * x2 * x2;
                    // ab * x3^2 = -rest
                    let ab = a * b;
                    if rest == 0 {
                        if x0 != 0 || x1 != 0 || x2 != 0 {
                            return Some([x0 as i64, x1 as i64, x2 as i64, 0]);
                        }
                        continue;
                    }
                    if rest % ab != 0 {
                        continue;
                    }
                    let sq = -rest / ab;
                    if sq < 0 {
                        continue;
                    }
                    let x3 = (sq as f64).sqrt().round() as i128;
                    for t in [x3 - 1, x3, x3 + 1] {
                        if t >= 0 && t <= h as i128 && t * t == sq {
                            return Some([x0 as i64, x1 as i64, x2 as i64, t as i64]);
                        }
                    }
                }
            }
        }
        None
    }
}

/// A quaternion x0 + x1 i + x2 j + x3 ij with exact rational coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct QuaternionElement {
    pub coords: [Rational; 4],
    pub a: i64,
    pub b: i64,
}

impl QuaternionElement {
    pub fn new(coords: [Rational; 4], params: &AlgebraParams) -> Self {
        QuaternionElement {
            coords,
            a: params.a,
            b: params.b,
        }
    }

    pub fn from_ints(c: [i64; 4], params: &AlgebraParams) -> Self {
        Self::new([rat(c[0]), rat(c[1]), rat(c[2]), rat(c[3])], params)
    }

    pub fn one(params: &AlgebraParams) -> Self {
        Self::from_ints([1, 0, 0, 0], params)
    }

    pub fn zero(params: &AlgebraParams) -> Self {
        Self::from_ints([0, 0, 0, 0], params)
    }

    fn check_same_algebra(&self, other: &Self) -> Result<()> {
        if self.a != other.a || self.b != other.b {
            return Err(Error::config(format!(
                "mismatched algebras: ({}, {}) vs ({}, {})",
                self.a, self.b, other.a, other.b
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_algebra(other)?;
        let c = [
            &self.coords[0] + &other.coords[0],
            &self.coords[1] + &other.coords[1],
            &self.coords[2] + &other.coords[2],
            &self.coords[3] + &other.coords[3],
        ];
        Ok(QuaternionElement {
            coords: c,
            a: self.a,
            b: self.b,
        })
    }

    pub fn neg(&self) -> Self {
        QuaternionElement {
            coords: [
                -self.coords[0].clone(),
                -self.coords[1].clone(),
                -self.coords[2].clone(),
                -self.coords[3].clone(),
            ],
            a: self.a,
            b: self.b,
        }
    }

    pub fn scale(&self, s: &Rational) -> Self {
        QuaternionElement {
            coords: [
                &self.coords[0] * s,
                &self.coords[1] * s,
                &self.coords[2] * s,
                &self.coords[3] * s,
            ],
            a: self.a,
            b: self.b,
        }
    }

    /// Bilinear product respecting i^2 = a, j^2 = b, ij = -ji.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_same_algebra(other)?;
        let a = rat(self.a);
        let b = rat(self.b);
        let ab = &a * &b;
        let [x0, x1, x2, x3] = &self.coords;
        let [y0, y1, y2, y3] = &other.coords;
        let c0 = x0 * y0 + &a * (x1 * y1) + &b * (x2 * y2) - &ab * (x3 * y3);
        let c1 = x0 * y1 + x1 * y0 - &b * (x2 * y3) + &b * (x3 * y2);
        let c2 = x0 * y2 + x2 * y0 + &a * (x1 * y3) - &a * (x3 * y1);
        let c3 = x0 * y3 + x3 * y0 + x1 * y2 - x2 * y1;
        Ok(QuaternionElement {
            coords: [c0, c1, c2, c3],
            a: self.a,
            b: self.b,
        })
    }

    /// Reduced norm x0^2 - a x1^2 - b x2^2 + ab x3^2.
    pub fn norm(&self) -> Rational {
        let a = rat(self.a);
        let b = rat(self.b);
        let ab = &a * &b;
        let [x0, x1, x2, x3] = &self.coords;
        x0 * x0 - &a * (x1 * x1) - &b * (x2 * x2) + &ab * (x3 * x3)
    }

    /// Reduced trace 2 x0.
    pub fn trace(&self) -> Rational {
        &self.coords[0] + &self.coords[0]
    }

    /// Quaternion conjugate x0 - x1 i - x2 j - x3 ij.
    pub fn conjugate(&self) -> Self {
        QuaternionElement {
            coords: [
                self.coords[0].clone(),
                -self.coords[1].clone(),
                -self.coords[2].clone(),
                -self.coords[3].clone(),
            ],
            a: self.a,
            b: self.b,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }
}

/// Element u + v sqrt(rad) of a real quadratic extension.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadExt {
    pub u: Rational,
    pub v: Rational,
    pub rad: i64,
}

impl QuadExt {
    pub fn new(u: Rational, v: Rational, rad: i64) -> Self {
        QuadExt { u, v, rad }
    }

    pub fn zero(rad: i64) -> Self {
        QuadExt::new(Rational::zero(), Rational::zero(), rad)
    }

    pub fn add(&self, o: &QuadExt) -> QuadExt {
        debug_assert_eq!(self.rad, o.rad);
        QuadExt::new(&self.u + &o.u, &self.v + &o.v, self.rad)
    }

    pub fn sub(&self, o: &QuadExt) -> QuadExt {
        debug_assert_eq!(self.rad, o.rad);
        QuadExt::new(&self.u - &o.u, &self.v - &o.v, self.rad)
    }

    pub fn mul(&self, o: &QuadExt) -> QuadExt {
        debug_assert_eq!(self.rad, o.rad);
        let r = rat(self.rad);
        QuadExt::new(
            &self.u * &o.u + &r * (&self.v * &o.v),
            &self.u * &o.v + &self.v * &o.u,
            self.rad,
        )
    }

    /// Galois conjugate u - v sqrt(rad).
    pub fn conj(&self) -> QuadExt {
        QuadExt::new(self.u.clone(), -self.v.clone(), self.rad)
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.u) + rational_to_f64(&self.v) * (self.rad as f64).sqrt()
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or_else(|| {
        // fall back for huge numerator/denominator pairs
        let digits = |x: &BigInt| x.abs().to_string().len() as f64;
        let sign = if r.is_negative() { -1.0 } else { 1.0 };
        sign * 10f64.powf(digits(r.numer()) - digits(r.denom()))
    })
}

/// 2x2 matrix over a quadratic extension; image of the algebra embedding.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedMatrix {
    pub e: [[QuadExt; 2]; 2],
}

impl EmbeddedMatrix {
    pub fn mul(&self, o: &EmbeddedMatrix) -> EmbeddedMatrix {
        let rad = self.e[0][0].rad;
        let mut out = [
            [QuadExt::zero(rad), QuadExt::zero(rad)],
            [QuadExt::zero(rad), QuadExt::zero(rad)],
        ];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = self.e[r][0]
                    .mul(&o.e[0][c])
                    .add(&self.e[r][1].mul(&o.e[1][c]));
            }
        }
        EmbeddedMatrix { e: out }
    }

    pub fn det(&self) -> QuadExt {
        self.e[0][0]
            .mul(&self.e[1][1])
            .sub(&self.e[0][1].mul(&self.e[1][0]))
    }

    pub fn trace(&self) -> QuadExt {
        self.e[0][0].add(&self.e[1][1])
    }

    pub fn to_real(&self) -> RealMatrix2 {
        RealMatrix2::new(
            self.e[0][0].to_f64(),
            self.e[0][1].to_f64(),
            self.e[1][0].to_f64(),
            self.e[1][1].to_f64(),
        )
    }
}

/// The real-split embedding of the algebra into 2x2 matrices.
///
/// With a > 0 the classical matrices over Q(sqrt a) work directly. When
/// a < 0 <= b the roles of i and j are exchanged (an isomorphism of the
/// algebra onto (b, a)) so the image lands in matrices over Q(sqrt b).
#[derive(Clone, Copy, Debug)]
pub struct Embedding {
    pub rad: i64,
    pub swapped: bool,
    a: i64,
    b: i64,
}

impl Embedding {
    pub fn for_params(params: &AlgebraParams) -> Result<Self> {
        if params.a > 0 {
            Ok(Embedding {
                rad: params.a,
                swapped: false,
                a: params.a,
                b: params.b,
            })
        } else if params.b > 0 {
            Ok(Embedding {
                rad: params.b,
                swapped: true,
                a: params.a,
                b: params.b,
            })
        } else {
            Err(Error::config(
                "no real embedding: both a and b negative contradicts split at infinity",
            ))
        }
    }

    /// phi(x0 + x1 i + x2 j + x3 ij) as an exact matrix over Q(sqrt rad).
    pub fn embed(&self, q: &QuaternionElement) -> Result<EmbeddedMatrix> {
        if q.a != self.a || q.b != self.b {
            return Err(Error::config("element does not belong to this algebra"));
        }
        let [x0, x1, x2, x3] = &q.coords;
        let rad = self.rad;
        let e = if !self.swapped {
            // [[x0 + x1 s, x2 + x3 s], [b (x2 - x3 s), x0 - x1 s]], s = sqrt(a)
            let bq = rat(self.b);
            [
                [
                    QuadExt::new(x0.clone(), x1.clone(), rad),
                    QuadExt::new(x2.clone(), x3.clone(), rad),
                ],
                [
                    QuadExt::new(&bq * x2, -(&bq * x3), rad),
                    QuadExt::new(x0.clone(), -x1.clone(), rad),
                ],
            ]
        } else {
            // i <-> j swap: [[x0 + x2 s, x1 - x3 s], [a (x1 + x3 s), x0 - x2 s]],
            // s = sqrt(b)
            let aq = rat(self.a);
            [
                [
                    QuadExt::new(x0.clone(), x2.clone(), rad),
                    QuadExt::new(x1.clone(), -x3.clone(), rad),
                ],
                [
                    QuadExt::new(&aq * x1, &aq * x3, rad),
                    QuadExt::new(x0.clone(), -x2.clone(), rad),
                ],
            ]
        };
        Ok(EmbeddedMatrix { e })
    }

    pub fn embed_real(&self, q: &QuaternionElement) -> Result<RealMatrix2> {
        Ok(self.embed(q)?.to_real())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn default_params() -> AlgebraParams {
        AlgebraParams::new(-1, 3, 50).unwrap()
    }

    fn q(c: [i64; 4]) -> QuaternionElement {
        QuaternionElement::from_ints(c, &default_params())
    }

    #[test]
    fn basis_relations() {
        let i = q([0, 1, 0, 0]);
        let j = q([0, 0, 1, 0]);
        let k = q([0, 0, 0, 1]);
        assert_eq!(i.multiply(&j).unwrap(), k);
        assert_eq!(j.multiply(&i).unwrap(), k.neg());
        // i^2 = a = -1
        assert_eq!(i.multiply(&i).unwrap(), q([-1, 0, 0, 0]));
        // j^2 = b = 3
        assert_eq!(j.multiply(&j).unwrap(), q([3, 0, 0, 0]));
        // (ij)^2 = -ab = 3
        assert_eq!(k.multiply(&k).unwrap(), q([3, 0, 0, 0]));
    }

    #[test]
    fn norm_of_one_plus_i() {
        let p = q([1, 1, 0, 0]);
        let pc = q([1, -1, 0, 0]);
        assert_eq!(p.multiply(&pc).unwrap(), q([2, 0, 0, 0]));
        assert_eq!(p.norm(), rat(2));
        assert_eq!(p.norm() * pc.norm(), p.multiply(&pc).unwrap().norm());
    }

    #[test]
    fn norm_trace_examples() {
        assert_eq!(q([1, 0, 0, 0]).norm(), rat(1));
        let i = q([0, 1, 0, 0]);
        assert_eq!(i.norm(), rat(1));
        assert_eq!(i.trace(), rat(0));
        // omega = (1 + i + j + ij) / 2
        let params = default_params();
        let omega = QuaternionElement::new(
            [
                rat_frac(1, 2),
                rat_frac(1, 2),
                rat_frac(1, 2),
                rat_frac(1, 2),
            ],
            &params,
        );
        assert_eq!(omega.trace(), rat(1));
        assert_eq!(omega.norm(), rat(-1));
    }

    #[test]
    fn conjugation_identity() {
        let alpha = q([2, -1, 3, 1]);
        let prod = alpha.multiply(&alpha.conjugate()).unwrap();
        assert_eq!(prod.coords[0], alpha.norm());
        assert!(prod.coords[1].is_zero() && prod.coords[2].is_zero() && prod.coords[3].is_zero());
        let sum = alpha.add(&alpha.conjugate()).unwrap();
        assert_eq!(sum.coords[0], alpha.trace());
    }

    #[test]
    fn mismatched_algebras_rejected() {
        let other = AlgebraParams::new(2, 3, 50).unwrap();
        let x = QuaternionElement::from_ints([1, 0, 0, 0], &other);
        assert!(q([1, 0, 0, 0]).multiply(&x).is_err());
    }

    #[test]
    fn isotropic_params_rejected() {
        // 1 - 1 = 0 at (1,1,0,0)
        assert!(AlgebraParams::new(1, 1, 50).is_err());
        // x^2 - 2y^2 - 7z^2 + 14w^2: (3,1,1,0) gives 9-2-7=0
        assert!(AlgebraParams::new(2, 7, 50).is_err());
        assert!(AlgebraParams::new(0, 3, 50).is_err());
        assert!(AlgebraParams::new(-1, -1, 50).is_err());
    }

    #[test]
    fn embedding_identity_and_diag() {
        let params = default_params();
        let emb = Embedding::for_params(&params).unwrap();
        assert!(emb.swapped && emb.rad == 3);
        let one = QuaternionElement::one(&params);
        let m = emb.embed(&one).unwrap();
        assert_eq!(m.det().u, rat(1));
        assert_eq!(m.trace().u, rat(2));
        let r = m.to_real();
        assert!((r.a - 1.0).abs() < 1e-15 && (r.d - 1.0).abs() < 1e-15);
        assert!(r.b.abs() < 1e-15 && r.c.abs() < 1e-15);

        // (3, -1): a > 0, standard slot, i -> diag(sqrt 3, -sqrt 3)
        let p2 = AlgebraParams::new(3, -1, 50).unwrap();
        let emb2 = Embedding::for_params(&p2).unwrap();
        assert!(!emb2.swapped && emb2.rad == 3);
        let i2 = QuaternionElement::from_ints([0, 1, 0, 0], &p2);
        let m2 = emb2.embed(&i2).unwrap();
        assert_eq!(m2.e[0][0], QuadExt::new(rat(0), rat(1), 3));
        assert_eq!(m2.e[1][1], QuadExt::new(rat(0), rat(-1), 3));
        assert!(m2.e[0][1].u.is_zero() && m2.e[0][1].v.is_zero());
        assert!(m2.e[1][0].u.is_zero() && m2.e[1][0].v.is_zero());
    }

    fn arb_elt() -> impl Strategy<Value = QuaternionElement> {
        (-6i64..6, -6i64..6, -6i64..6, -6i64..6, 1i64..3).prop_map(|(c0, c1, c2, c3, d)| {
            QuaternionElement::new(
                [
                    rat_frac(c0, d),
                    rat_frac(c1, d),
                    rat_frac(c2, d),
                    rat_frac(c3, d),
                ],
                &default_params(),
            )
        })
    }

    proptest! {
        #[test]
        fn norm_is_multiplicative(x in arb_elt(), y in arb_elt()) {
            let lhs = x.multiply(&y).unwrap().norm();
            prop_assert_eq!(lhs, x.norm() * y.norm());
        }

        #[test]
        fn embedding_is_ring_homomorphism(x in arb_elt(), y in arb_elt()) {
            let emb = Embedding::for_params(&default_params()).unwrap();
            let lhs = emb.embed(&x.multiply(&y).unwrap()).unwrap();
            let rhs = emb.embed(&x).unwrap().mul(&emb.embed(&y).unwrap());
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn embedding_det_is_norm_trace_is_trace(x in arb_elt()) {
            let emb = Embedding::for_params(&default_params()).unwrap();
            let m = emb.embed(&x).unwrap();
            let det = m.det();
            prop_assert_eq!(det.u, x.norm());
            prop_assert!(det.v.is_zero());
            let tr = m.trace();
            prop_assert_eq!(tr.u, x.trace());
            prop_assert!(tr.v.is_zero());
        }
    }
}
