//! A rank-4 order in the quaternion algebra: basis handling, integrality and
//! discriminant verification, and the integer-coordinate fast paths that the
//! lattice enumeration and coset machinery run on.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::config::AlgebraConfig;
use crate::error::{Error, Result};
use crate::geometry::RealMatrix2;
use crate::hilbert::{ramified_primes, RamificationData};
use crate::quaternion::{rat, AlgebraParams, Embedding, QuaternionElement, Rational};

/// Basis of a candidate order: four elements with rational coordinates in
/// the 1, i, j, ij basis.
#[derive(Clone, Debug)]
pub struct OrderBasis {
    pub basis: [QuaternionElement; 4],
}

impl OrderBasis {
    /// Trace pairing matrix T[r][s] = trd(e_r e_s).
    pub fn gram_matrix(&self) -> Result<[[Rational; 4]; 4]> {
        let mut t: [[Rational; 4]; 4] = Default::default();
        for r in 0..4 {
            for s in 0..4 {
                t[r][s] = self.basis[r].multiply(&self.basis[s])?.trace();
            }
        }
        Ok(t)
    }
}

/// Result of a single verification check.
#[derive(Clone, Debug, Serialize)]
pub struct OrderCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Full verification report; serializable as JSON.
#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub all_passed: bool,
    pub discriminant: String,
    pub expected_discriminant: String,
    pub checks: Vec<OrderCheck>,
}

/// A validated order with everything precomputed: integerized basis for the
/// hot paths, real embedding matrices, and ramification data.
#[derive(Clone, Debug)]
pub struct Order {
    pub params: AlgebraParams,
    pub basis: [QuaternionElement; 4],
    pub embedding: Embedding,
    pub ramification: RamificationData,
    /// Common denominator of all basis coordinates.
    pub den: i64,
    /// g[r] = den * (1,i,j,ij)-coordinates of basis[r]; integer entries.
    g: [[i64; 4]; 4],
    /// Adjugate of g^T and det(g), for exact conversion back to basis coords.
    gt_adj: [[i128; 4]; 4],
    det_g: i128,
    /// Real images of the basis elements.
    real_basis: [RealMatrix2; 4],
}

fn rational_to_i64(r: &Rational) -> Option<i64> {
    if !r.denom().is_one() {
        return None;
    }
    r.numer().to_i64()
}

fn det4(m: &[[i128; 4]; 4]) -> i128 {
    let mut det = 0i128;
    // expansion over permutations is fine for a 4x4
    let idx = [0usize, 1, 2, 3];
    fn perms(v: Vec<usize>) -> Vec<(Vec<usize>, i128)> {
        if v.len() == 1 {
            return vec![(v, 1)];
        }
        let mut out = Vec::new();
        for (pos, &x) in v.iter().enumerate() {
            let mut rest = v.clone();
            rest.remove(pos);
            let sign = if pos % 2 == 0 { 1 } else { -1 };
            for (p, s) in perms(rest) {
                let mut full = vec![x];
                full.extend(p);
                out.push((full, sign * s));
            }
        }
        out
    }
    for (p, s) in perms(idx.to_vec()) {
        let mut term = s;
        for (r, &c) in p.iter().enumerate() {
            term *= m[r][c];
        }
        det += term;
    }
    det
}

fn adjugate4(m: &[[i128; 4]; 4]) -> [[i128; 4]; 4] {
    let minor = |r: usize, c: usize| -> i128 {
        let mut sub = [[0i128; 3]; 3];
        let mut ri = 0;
        for rr in 0..4 {
            if rr == r {
                continue;
            }
            let mut ci = 0;
            for cc in 0..4 {
                if cc == c {
                    continue;
                }
                sub[ri][ci] = m[rr][cc];
                ci += 1;
            }
            ri += 1;
        }
        sub[0][0] * (sub[1][1] * sub[2][2] - sub[1][2] * sub[2][1])
            - sub[0][1] * (sub[1][0] * sub[2][2] - sub[1][2] * sub[2][0])
            + sub[0][2] * (sub[1][0] * sub[2][1] - sub[1][1] * sub[2][0])
    };
    let mut adj = [[0i128; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            let sign = if (r + c) % 2 == 0 { 1 } else { -1 };
            // adjugate transposes the cofactor matrix
            adj[c][r] = sign * minor(r, c);
        }
    }
    adj
}

impl Order {
    pub fn from_config(cfg: &AlgebraConfig) -> Result<Self> {
        let params = AlgebraParams::new(
            cfg.a,
            cfg.b,
            cfg.height_check
                .unwrap_or(crate::quaternion::DEFAULT_HEIGHT_CHECK),
        )?;
        let mut basis_vec = Vec::with_capacity(4);
        for row in &cfg.order_basis {
            let mut coords: [Rational; 4] = Default::default();
            for (c, s) in coords.iter_mut().zip(row.iter()) {
                *c = s
                    .parse::<BigRational>()
                    .map_err(|e| Error::config(format!("bad coordinate '{s}': {e}")))?;
            }
            basis_vec.push(QuaternionElement::new(coords, &params));
        }
        let basis: [QuaternionElement; 4] = basis_vec
            .try_into()
            .map_err(|_| Error::config("order basis must have exactly 4 elements"))?;
        Self::new(params, basis)
    }

    pub fn new(params: AlgebraParams, basis: [QuaternionElement; 4]) -> Result<Self> {
        let embedding = Embedding::for_params(&params)?;
        let ramification = ramified_primes(&params)?;

        // common denominator of all coordinates
        let mut den_big = BigInt::one();
        for e in &basis {
            for c in &e.coords {
                den_big = den_big.lcm(c.denom());
            }
        }
        let den = den_big
            .to_i64()
            .filter(|&d| d > 0 && d <= 1 << 16)
            .ok_or_else(|| Error::config("order basis denominators too large"))?;

        let mut g = [[0i64; 4]; 4];
        for (r, e) in basis.iter().enumerate() {
            for (c, coord) in e.coords.iter().enumerate() {
                let scaled = coord * rat(den);
                g[r][c] = rational_to_i64(&scaled)
                    .ok_or_else(|| Error::config("denominator lcm failed to clear coordinates"))?;
            }
        }

        let gt: [[i128; 4]; 4] = std::array::from_fn(|r| std::array::from_fn(|c| g[c][r] as i128));
        let det_gt = det4(&gt);
        if det_gt == 0 {
            return Err(Error::config("order basis is not linearly independent"));
        }
        let gt_adj = adjugate4(&gt);

        let real_basis = std::array::from_fn(|r| {
            embedding
                .embed(&basis[r])
                .expect("basis elements belong to the algebra")
                .to_real()
        });

        Ok(Order {
            params,
            basis,
            embedding,
            ramification,
            den,
            g,
            gt_adj,
            det_g: det_gt,
            real_basis,
        })
    }

    /// The default discriminant-6 instance: (a, b) = (-1, 3) with basis
    /// {1, i, j, (1 + i + j + ij)/2}.
    pub fn default_disc6() -> Order {
        Order::from_config(&AlgebraConfig::default_disc6())
            .expect("built-in configuration is valid")
    }

    /// Like `default_disc6`/`from_config`, but refuses to hand out orders
    /// that fail verification.
    pub fn verified_from_config(cfg: &AlgebraConfig) -> Result<(Order, VerificationReport)> {
        let order = Order::from_config(cfg)?;
        let report = order.verify()?;
        if !report.all_passed {
            let failed: Vec<&str> = report
                .checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| c.name.as_str())
                .collect();
            return Err(Error::config(format!(
                "order verification failed: {}",
                failed.join(", ")
            )));
        }
        Ok((order, report))
    }

    pub fn algebra(&self) -> &AlgebraParams {
        &self.params
    }

    pub fn level(&self) -> u64 {
        self.ramification.level
    }

    pub fn real_basis(&self) -> &[RealMatrix2; 4] {
        &self.real_basis
    }

    /// Quaternion from integer coordinates in the order basis.
    pub fn element_from_coords(&self, c: [i64; 4]) -> QuaternionElement {
        let mut acc = QuaternionElement::zero(&self.params);
        for (r, e) in self.basis.iter().enumerate() {
            if c[r] != 0 {
                acc = acc.add(&e.scale(&rat(c[r]))).expect("same algebra");
            }
        }
        acc
    }

    /// Real 2x2 image of the element with the given order coordinates.
    pub fn real_image(&self, c: [i64; 4]) -> RealMatrix2 {
        let mut m = RealMatrix2::new(0.0, 0.0, 0.0, 0.0);
        for (r, e) in self.real_basis.iter().enumerate() {
            if c[r] != 0 {
                m = m.add(&e.scale(c[r] as f64));
            }
        }
        m
    }

    /// (1,i,j,ij)-numerators over `den` of the element with order
    /// coordinates c: value = (w . (1,i,j,ij)) / den.
    pub fn w_coords(&self, c: [i64; 4]) -> [i128; 4] {
        let mut w = [0i128; 4];
        for (r, &cr) in c.iter().enumerate() {
            if cr != 0 {
                for (j, wj) in w.iter_mut().enumerate() {
                    *wj += cr as i128 * self.g[r][j] as i128;
                }
            }
        }
        w
    }

    /// Integer Gram matrix M with c^T M c = den^2 * (reduced norm) for order
    /// coordinates c.
    pub fn norm_gram(&self) -> [[i128; 4]; 4] {
        let a = self.params.a as i128;
        let b = self.params.b as i128;
        let s = [1i128, -a, -b, a * b];
        let mut m = [[0i128; 4]; 4];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                let mut acc = 0i128;
                for (j, sj) in s.iter().enumerate() {
                    acc += self.g[r][j] as i128 * sj * self.g[c][j] as i128;
                }
                *cell = acc;
            }
        }
        m
    }

    /// den^2 * reduced norm of (w . (1,i,j,ij)) / den.
    pub fn norm_times_den2(&self, w: &[i128; 4]) -> i128 {
        let a = self.params.a as i128;
        let b = self.params.b as i128;
        w[0] * w[0] - a * w[1] * w[1] - b * w[2] * w[2] + a * b * w[3] * w[3]
    }

    /// Product of two elements given by (1,i,j,ij)-numerators; the implied
    /// denominator multiplies.
    pub fn mul_w(&self, x: &[i128; 4], y: &[i128; 4]) -> [i128; 4] {
        let a = self.params.a as i128;
        let b = self.params.b as i128;
        [
            x[0] * y[0] + a * x[1] * y[1] + b * x[2] * y[2] - a * b * x[3] * y[3],
            x[0] * y[1] + x[1] * y[0] - b * x[2] * y[3] + b * x[3] * y[2],
            x[0] * y[2] + x[2] * y[0] + a * x[1] * y[3] - a * x[3] * y[1],
            x[0] * y[3] + x[3] * y[0] + x[1] * y[2] - x[2] * y[1],
        ]
    }

    pub fn conj_w(&self, w: &[i128; 4]) -> [i128; 4] {
        [w[0], -w[1], -w[2], -w[3]]
    }

    /// Order coordinates of (w . (1,i,j,ij)) / d, or None when the value is
    /// not in the order lattice. Exact integer arithmetic throughout.
    pub fn order_coords_of_w(&self, w: &[i128; 4], d: i128) -> Option<[i128; 4]> {
        // solve g^T c / den = w / d  =>  c = den * adj(g^T) w / (det * d)
        let den = self.den as i128;
        let div = self.det_g.checked_mul(d)?;
        let mut c = [0i128; 4];
        for (r, cr) in c.iter_mut().enumerate() {
            let mut t = 0i128;
            for (j, wj) in w.iter().enumerate() {
                t = t.checked_add(self.gt_adj[r][j].checked_mul(*wj)?)?;
            }
            let t = t.checked_mul(den)?;
            if t % div != 0 {
                return None;
            }
            *cr = t / div;
        }
        Some(c)
    }

    /// Index of the standard lattice Z<1,i,j,ij> sublattice relation:
    /// |disc(Z<1,i,j,ij>)| / |disc(order)| is the square of the index.
    fn standard_disc_abs(&self) -> BigInt {
        // trace pairing of {1,i,j,ij} is diag(2, -2a, -2b, 2ab)
        let a = BigInt::from(self.params.a);
        let b = BigInt::from(self.params.b);
        (BigInt::from(16) * &a * &a * &b * &b).abs()
    }

    /// Runs every order check and reports each failure; never errors on a
    /// failed check (the report carries them).
    pub fn verify(&self) -> Result<VerificationReport> {
        let mut checks = Vec::new();
        let ob = OrderBasis {
            basis: self.basis.clone(),
        };

        // ring closure: all products of basis elements have integer
        // coordinates in the basis
        let mut closure_ok = true;
        let mut closure_detail = String::from("all 16 structure products lie in the lattice");
        'outer: for r in 0..4 {
            for s in 0..4 {
                let prod = self.basis[r].multiply(&self.basis[s])?;
                match self.coords_in_basis(&prod) {
                    Some(c) if c.iter().all(|x| x.denom().is_one()) => {}
                    _ => {
                        closure_ok = false;
                        closure_detail =
                            format!("product e{r} * e{s} is not an integer combination");
                        break 'outer;
                    }
                }
            }
        }
        checks.push(OrderCheck {
            name: "ring_closure".into(),
            passed: closure_ok,
            detail: closure_detail,
        });

        // integrality: integer reduced trace and norm for each basis element
        let mut integral_ok = true;
        let mut integral_detail = String::from("all basis elements have integral trace and norm");
        for (r, e) in self.basis.iter().enumerate() {
            if !e.trace().denom().is_one() || !e.norm().denom().is_one() {
                integral_ok = false;
                integral_detail = format!("basis element e{r} has non-integral trace or norm");
                break;
            }
        }
        checks.push(OrderCheck {
            name: "integrality".into(),
            passed: integral_ok,
            detail: integral_detail,
        });

        // unit containment: 1 is an integer combination of the basis
        let one = QuaternionElement::one(&self.params);
        let unit_ok = matches!(
            self.coords_in_basis(&one),
            Some(c) if c.iter().all(|x| x.denom().is_one())
        );
        checks.push(OrderCheck {
            name: "unit_containment".into(),
            passed: unit_ok,
            detail: if unit_ok {
                "1 lies in the lattice".into()
            } else {
                "1 is not an integer combination of the basis".into()
            },
        });

        // discriminant: |det trace pairing| must equal (product of ramified
        // primes)^2 for a maximal order
        let gram = ob.gram_matrix()?;
        let disc = rational_det4(&gram);
        let expected = BigInt::from(self.ramification.q) * BigInt::from(self.ramification.q);
        let disc_abs = disc.abs();
        let disc_ok = disc_abs == BigRational::from_integer(expected.clone());
        checks.push(OrderCheck {
            name: "discriminant".into(),
            passed: disc_ok,
            detail: format!(
                "|det trace pairing| = {disc_abs}, expected {expected} = (prod ramified)^2"
            ),
        });

        // denominator bound: the coordinate denominator lcm must divide the
        // lattice index over Z<1,i,j,ij>, whose square is the discriminant
        // ratio
        let mut index_str = String::from("undefined");
        let denominator_ok = if disc_abs.is_zero() {
            false
        } else {
            let ratio = BigRational::from_integer(self.standard_disc_abs()) / &disc_abs;
            if ratio.denom().is_one() {
                let sq = ratio.numer().clone();
                let root = sq.sqrt();
                if &root * &root == sq {
                    index_str = root.to_string();
                    root.is_multiple_of(&BigInt::from(self.den))
                } else {
                    false
                }
            } else {
                false
            }
        };
        checks.push(OrderCheck {
            name: "denominator_bound".into(),
            passed: denominator_ok,
            detail: format!(
                "basis denominator lcm {} divides lattice index {}",
                self.den, index_str
            ),
        });

        let all_passed = checks.iter().all(|c| c.passed);
        Ok(VerificationReport {
            all_passed,
            discriminant: disc_abs.to_string(),
            expected_discriminant: expected.to_string(),
            checks,
        })
    }

    /// Rational coordinates of an arbitrary algebra element in the order
    /// basis, if the basis spans (it does for validated orders).
    pub fn coords_in_basis(&self, q: &QuaternionElement) -> Option<[Rational; 4]> {
        // solve g^T c / den = x  =>  c = den adj(g^T) x / det
        let den = rat(self.den);
        let det = BigRational::from_integer(BigInt::from(self.det_g));
        let mut c: [Rational; 4] = Default::default();
        for (r, cr) in c.iter_mut().enumerate() {
            let mut t = Rational::zero();
            for (j, xj) in q.coords.iter().enumerate() {
                t += BigRational::from_integer(BigInt::from(self.gt_adj[r][j])) * xj;
            }
            *cr = t * &den / &det;
        }
        Some(c)
    }
}

fn rational_det4(m: &[[Rational; 4]; 4]) -> Rational {
    // cofactor expansion along the first row
    let minor3 = |rows: [usize; 3], cols: [usize; 3]| -> Rational {
        let e = |r: usize, c: usize| m[rows[r]][cols[c]].clone();
        e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1))
            - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
            + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
    };
    let cols = [
        [1usize, 2, 3],
        [0usize, 2, 3],
        [0usize, 1, 3],
        [0usize, 1, 2],
    ];
    let mut det = Rational::zero();
    for c0 in 0..4 {
        let sign = if c0 % 2 == 0 { 1 } else { -1 };
        det += rat(sign) * &m[0][c0] * minor3([1, 2, 3], cols[c0]);
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::AlgebraConfig;

    #[test]
    fn default_order_verifies_with_discriminant_36() {
        let order = Order::default_disc6();
        let report = order.verify().unwrap();
        assert!(report.all_passed, "{report:?}");
        assert_eq!(report.discriminant, "36");
        assert_eq!(order.ramification.ramified_primes, vec![2, 3]);
        assert_eq!(order.level(), 6);
        assert_eq!(order.den, 2);
    }

    #[test]
    fn standard_lattice_is_not_maximal() {
        // {1, i, j, ij} has discriminant 144 = (12)^2, not 36
        let cfg = AlgebraConfig {
            a: -1,
            b: 3,
            order_basis: [
                ["1", "0", "0", "0"].map(String::from),
                ["0", "1", "0", "0"].map(String::from),
                ["0", "0", "1", "0"].map(String::from),
                ["0", "0", "0", "1"].map(String::from),
            ],
            height_check: Some(50),
        };
        let order = Order::from_config(&cfg).unwrap();
        let report = order.verify().unwrap();
        let by_name = |n: &str| report.checks.iter().find(|c| c.name == n).unwrap();
        assert!(by_name("ring_closure").passed);
        assert!(by_name("integrality").passed);
        assert!(by_name("unit_containment").passed);
        assert!(!by_name("discriminant").passed);
        assert_eq!(report.discriminant, "144");
        assert!(!report.all_passed);
    }

    #[test]
    fn basis_missing_one_fails_unit_containment() {
        // {2, i, j, ij}: unit 1 is not an integer combination
        let cfg = AlgebraConfig {
            a: -1,
            b: 3,
            order_basis: [
                ["2", "0", "0", "0"].map(String::from),
                ["0", "1", "0", "0"].map(String::from),
                ["0", "0", "1", "0"].map(String::from),
                ["0", "0", "0", "1"].map(String::from),
            ],
            height_check: Some(50),
        };
        let order = Order::from_config(&cfg).unwrap();
        let report = order.verify().unwrap();
        let unit = report
            .checks
            .iter()
            .find(|c| c.name == "unit_containment")
            .unwrap();
        assert!(!unit.passed);
        assert!(!report.all_passed);
    }

    #[test]
    fn w_coords_roundtrip_and_norm() {
        let order = Order::default_disc6();
        let c = [3, -2, 1, 5];
        let w = order.w_coords(c);
        let q = order.element_from_coords(c);
        // norm via integer path equals exact rational norm
        let n_int = order.norm_times_den2(&w);
        let n_rat = q.norm() * rat(order.den) * rat(order.den);
        assert_eq!(n_rat, BigRational::from_integer(BigInt::from(n_int)));
        // conversion back is exact
        let back = order.order_coords_of_w(&w, order.den as i128).unwrap();
        assert_eq!(back, [3i128, -2, 1, 5]);
    }

    #[test]
    fn mul_w_matches_exact_multiplication() {
        let order = Order::default_disc6();
        let c1 = [1, 2, 0, -1];
        let c2 = [0, 1, 1, 3];
        let w1 = order.w_coords(c1);
        let w2 = order.w_coords(c2);
        let prod_w = order.mul_w(&w1, &w2);
        let q1 = order.element_from_coords(c1);
        let q2 = order.element_from_coords(c2);
        let prod = q1.multiply(&q2).unwrap();
        let d = rat(order.den) * rat(order.den);
        for (j, pw) in prod_w.iter().enumerate() {
            assert_eq!(
                &prod.coords[j] * &d,
                BigRational::from_integer(BigInt::from(*pw))
            );
        }
    }

    #[test]
    fn verified_from_config_rejects_non_maximal() {
        let cfg = AlgebraConfig {
            a: -1,
            b: 3,
            order_basis: [
                ["1", "0", "0", "0"].map(String::from),
                ["0", "1", "0", "0"].map(String::from),
                ["0", "0", "1", "0"].map(String::from),
                ["0", "0", "0", "1"].map(String::from),
            ],
            height_check: Some(50),
        };
        assert!(Order::verified_from_config(&cfg).is_err());
        assert!(Order::verified_from_config(&AlgebraConfig::default_disc6()).is_ok());
    }
}
