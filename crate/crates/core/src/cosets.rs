//! Decomposition of the norm-n order elements into left cosets under the
//! norm-one unit group. The left ideal R*alpha is a complete coset
//! invariant (alpha ~ beta iff R alpha = R beta for equal norms), so reps
//! are bucketed by the Hermite normal form of that ideal and then
//! cross-checked pairwise with the exact divisibility test.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::UhpPoint;
use crate::lattice::{enumerate_ball, LatticeBall};
use crate::order::Order;
use crate::primes::{factor, gcd_u64};
use crate::quaternion::QuaternionElement;

/// Coset representatives for the norm-n elements under left unit action.
#[derive(Clone, Debug)]
pub struct CosetDecomposition {
    pub n: i64,
    /// One representative per coset, each of minimal displacement from the
    /// enumeration base point; sorted by coordinate tuple.
    pub reps: Vec<CosetRep>,
    pub degree: usize,
    /// cosh cap at which the decomposition stabilized.
    pub stabilized_at: f64,
}

#[derive(Clone, Debug)]
pub struct CosetRep {
    pub coords: [i64; 4],
    pub quat: QuaternionElement,
    /// Minimal cosh displacement seen in this coset during enumeration.
    pub min_cosh_dist: f64,
}

/// Exact test: alpha and beta (both of reduced norm n) lie in the same left
/// coset iff alpha * conj(beta) has all order coordinates divisible by n.
pub fn same_coset(
    order: &Order,
    alpha: &QuaternionElement,
    beta: &QuaternionElement,
    n: i64,
) -> Result<bool> {
    let nq = crate::quaternion::rat(n);
    if alpha.norm() != nq || beta.norm() != nq {
        return Err(Error::input(format!(
            "same_coset needs both elements of reduced norm {n}"
        )));
    }
    let prod = alpha.multiply(&beta.conjugate())?;
    let coords = order
        .coords_in_basis(&prod)
        .ok_or_else(|| Error::Inconsistency("order basis failed to span".into()))?;
    for c in &coords {
        let scaled = c / nq.clone();
        if !num_traits::One::is_one(scaled.denom()) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
fn same_coset_coords(order: &Order, a: [i64; 4], b: [i64; 4], n: i64) -> Result<bool> {
    let alpha = order.element_from_coords(a);
    let beta = order.element_from_coords(b);
    same_coset(order, &alpha, &beta, n)
}

/// Hermite normal form of the 4x4 integer matrix whose rows span the left
/// ideal R*alpha in order coordinates. Canonical: row-echelon with positive
/// pivots and entries below each pivot reduced into [0, pivot).
fn hnf4(mut m: [[i128; 4]; 4]) -> [[i128; 4]; 4] {
    let mut row = 0usize;
    for col in 0..4 {
        // find a nonzero entry in this column at or below `row`
        let mut pivot = None;
        for r in row..4 {
            if m[r][col] != 0 {
                pivot = Some(r);
                break;
            }
        }
        let Some(p) = pivot else { continue };
        m.swap(row, p);
        // eliminate below via gcd steps
        for r in (row + 1)..4 {
            while m[r][col] != 0 {
                let q = m[row][col] / m[r][col];
                for j in 0..4 {
                    m[row][j] -= q * m[r][j];
                }
                m.swap(row, r);
            }
        }
        if m[row][col] < 0 {
            for j in 0..4 {
                m[row][j] = -m[row][j];
            }
        }
        // reduce entries above the pivot
        for r in 0..row {
            let q = m[r][col].div_euclid(m[row][col]);
            if q != 0 {
                for j in 0..4 {
                    m[r][j] -= q * m[row][j];
                }
            }
        }
        row += 1;
        if row == 4 {
            break;
        }
    }
    m
}

/// Canonical key of the left ideal R*alpha for an element with the given
/// order coordinates.
pub fn left_ideal_key(order: &Order, coords: [i64; 4]) -> [i128; 16] {
    let alpha_w = order.w_coords(coords);
    let mut rows = [[0i128; 4]; 4];
    for r in 0..4 {
        let mut basis_c = [0i64; 4];
        basis_c[r] = 1;
        let e_w = order.w_coords(basis_c);
        let prod = order.mul_w(&e_w, &alpha_w);
        // product of two den-denominator elements has denominator den^2
        let d = (order.den as i128) * (order.den as i128);
        let c = order
            .order_coords_of_w(&prod, d)
            .expect("ring closure puts e_r * alpha back in the order");
        rows[r] = c;
    }
    let h = hnf4(rows);
    let mut key = [0i128; 16];
    for r in 0..4 {
        for c in 0..4 {
            key[4 * r + c] = h[r][c];
        }
    }
    key
}

fn reduce_ball_to_reps(order: &Order, ball: &LatticeBall) -> Vec<CosetRep> {
    let mut buckets: HashMap<[i128; 16], CosetRep> = HashMap::new();
    for e in &ball.elements {
        let key = left_ideal_key(order, e.coords);
        buckets
            .entry(key)
            .and_modify(|rep| {
                if e.cosh_dist < rep.min_cosh_dist
                    || (e.cosh_dist == rep.min_cosh_dist && e.coords < rep.coords)
                {
                    rep.coords = e.coords;
                    rep.quat = e.quat.clone();
                    rep.min_cosh_dist = e.cosh_dist;
                }
            })
            .or_insert_with(|| CosetRep {
                coords: e.coords,
                quat: e.quat.clone(),
                min_cosh_dist: e.cosh_dist,
            });
    }
    let mut reps: Vec<CosetRep> = buckets.into_values().collect();
    reps.sort_by_key(|r| r.coords);
    reps
}

/// Base point for coset enumeration; any point works, this one is fixed for
/// reproducibility.
fn base_point() -> UhpPoint {
    UhpPoint::new(0.0, 1.0).expect("valid base point")
}

const INITIAL_CAP: f64 = 8.0;
const MAX_CAP: f64 = 16384.0;

/// Coset representatives of the norm-n elements, found by enumerating balls
/// of doubling radius until the coset count stabilizes across two doublings,
/// then audited against the multiplicative degree relation.
pub fn coset_reps(order: &Order, n: i64, budget: usize) -> Result<CosetDecomposition> {
    let mut memo = HashMap::new();
    coset_reps_memo(order, n, budget, &mut memo)
}

fn coset_reps_memo(
    order: &Order,
    n: i64,
    budget: usize,
    memo: &mut HashMap<i64, CosetDecomposition>,
) -> Result<CosetDecomposition> {
    if let Some(d) = memo.get(&n) {
        return Ok(d.clone());
    }
    let dec = coset_reps_unaudited(order, n, budget)?;
    memo.insert(n, dec.clone());
    audit_degree_relation(order, n, budget, memo)?;
    Ok(dec)
}

fn coset_reps_unaudited(order: &Order, n: i64, budget: usize) -> Result<CosetDecomposition> {
    if n < 1 {
        return Err(Error::input("coset decomposition needs n >= 1"));
    }
    let z = base_point();
    let mut cap = INITIAL_CAP;
    let mut history: Vec<(f64, usize)> = Vec::new();
    let mut last: Option<(Vec<CosetRep>, f64)> = None;
    while cap <= MAX_CAP {
        let ball = enumerate_ball(order, n, z, cap, budget)?;
        let reps = reduce_ball_to_reps(order, &ball);
        history.push((cap, reps.len()));
        let hn = history.len();
        if hn >= 3
            && history[hn - 1].1 == history[hn - 2].1
            && history[hn - 2].1 == history[hn - 3].1
            && history[hn - 1].1 > 0
        {
            return Ok(CosetDecomposition {
                n,
                degree: reps.len(),
                reps,
                stabilized_at: history[hn - 3].0,
            });
        }
        last = Some((reps, cap));
        cap *= 2.0;
    }
    let found = last.map(|(r, _)| r.len()).unwrap_or(0);
    Err(Error::Resource {
        what: format!(
            "coset count for n = {n} failed to stabilize below cosh cap {MAX_CAP} (last count {found})"
        ),
        partial: true,
    })
}

/// Degree of the coset decomposition (the Hecke operator degree).
pub fn degree(order: &Order, n: i64, budget: usize) -> Result<usize> {
    Ok(coset_reps(order, n, budget)?.degree)
}

/// Checks deg(p) deg(p^{e-1}) = deg(p^e) + p deg(p^{e-2}) along prime-power
/// chains and multiplicativity across coprime factors, for n coprime to the
/// level. A violation is reported as an inconsistency, never ignored.
fn audit_degree_relation(
    order: &Order,
    n: i64,
    budget: usize,
    memo: &mut HashMap<i64, CosetDecomposition>,
) -> Result<()> {
    if n <= 1 {
        return Ok(());
    }
    if gcd_u64(n as u64, order.level()) != 1 {
        return Ok(()); // relation only asserted away from the level
    }
    let deg_of = |m: i64, memo: &mut HashMap<i64, CosetDecomposition>| -> Result<usize> {
        if m == 1 {
            return Ok(1);
        }
        if let Some(d) = memo.get(&m) {
            return Ok(d.degree);
        }
        let dec = coset_reps_unaudited(order, m, budget)?;
        memo.insert(m, dec.clone());
        Ok(dec.degree)
    };
    let fac = factor(n as u64);
    // multiplicativity across coprime prime powers
    if fac.len() > 1 {
        let mut prod = 1usize;
        for &(p, e) in &fac {
            let pe = (p as i64).pow(e);
            prod *= deg_of(pe, memo)?;
        }
        let dn = deg_of(n, memo)?;
        if prod != dn {
            return Err(Error::Inconsistency(format!(
                "degree multiplicativity failed at n = {n}: product over prime powers {prod} != {dn}"
            )));
        }
    }
    // prime power chains
    for &(p, e) in &fac {
        let p64 = p as i64;
        for j in 2..=e {
            let d_hi = deg_of(p64.pow(j), memo)?;
            let d_mid = deg_of(p64.pow(j - 1), memo)?;
            let d_lo = deg_of(p64.pow(j - 2), memo)?;
            let d_p = deg_of(p64, memo)?;
            if d_p * d_mid != d_hi + (p as usize) * d_lo {
                return Err(Error::Inconsistency(format!(
                    "degree relation failed at p = {p}, e = {j}: {d_p} * {d_mid} != {d_hi} + {p} * {d_lo}"
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::DEFAULT_BUDGET;

    fn order() -> Order {
        Order::default_disc6()
    }

    #[test]
    fn same_coset_reflexive_and_sign_blind() {
        let ord = order();
        let ball = enumerate_ball(&ord, 5, base_point(), 12.0, DEFAULT_BUDGET).unwrap();
        assert!(!ball.is_empty());
        for e in ball.elements.iter().take(6) {
            assert!(same_coset(&ord, &e.quat, &e.quat, 5).unwrap());
            assert!(same_coset(&ord, &e.quat, &e.quat.neg(), 5).unwrap());
        }
    }

    #[test]
    fn unit_translates_stay_in_coset() {
        let ord = order();
        let units = enumerate_ball(&ord, 1, base_point(), 20.0, DEFAULT_BUDGET).unwrap();
        assert!(units.len() > 4, "need nontrivial units for this test");
        let ball = enumerate_ball(&ord, 5, base_point(), 10.0, DEFAULT_BUDGET).unwrap();
        let alpha = &ball.elements[0].quat;
        for u in units.elements.iter().take(8) {
            let moved = u.quat.multiply(alpha).unwrap();
            assert!(same_coset(&ord, &moved, alpha, 5).unwrap());
        }
    }

    #[test]
    fn same_coset_rejects_norm_mismatch() {
        let ord = order();
        let one = QuaternionElement::one(&ord.params);
        assert!(same_coset(&ord, &one, &one, 5).is_err());
        assert!(same_coset(&ord, &one, &one, 1).unwrap());
    }

    #[test]
    fn degree_one_is_trivial() {
        let ord = order();
        assert_eq!(degree(&ord, 1, DEFAULT_BUDGET).unwrap(), 1);
    }

    #[test]
    fn degree_five_is_six() {
        let ord = order();
        assert_eq!(degree(&ord, 5, DEFAULT_BUDGET).unwrap(), 6);
    }

    #[test]
    fn degree_twenty_five_and_relation() {
        let ord = order();
        let d25 = degree(&ord, 25, DEFAULT_BUDGET).unwrap();
        assert_eq!(d25, 31);
        let d5 = degree(&ord, 5, DEFAULT_BUDGET).unwrap();
        assert_eq!(d5 * d5, d25 + 5);
    }

    #[test]
    fn hnf_bucket_agrees_with_divisibility_test() {
        let ord = order();
        let ball = enumerate_ball(&ord, 5, base_point(), 14.0, DEFAULT_BUDGET).unwrap();
        let n = ball.elements.len().min(24);
        for i in 0..n {
            for j in i..n {
                let a = &ball.elements[i];
                let b = &ball.elements[j];
                let by_key = left_ideal_key(&ord, a.coords) == left_ideal_key(&ord, b.coords);
                let by_test = same_coset_coords(&ord, a.coords, b.coords, 5).unwrap();
                assert_eq!(by_key, by_test, "{:?} vs {:?}", a.coords, b.coords);
            }
        }
    }

    #[test]
    fn reps_partition_the_ball() {
        let ord = order();
        let dec = coset_reps(&ord, 5, DEFAULT_BUDGET).unwrap();
        // reps pairwise inequivalent
        for i in 0..dec.reps.len() {
            for j in (i + 1)..dec.reps.len() {
                assert!(
                    !same_coset_coords(&ord, dec.reps[i].coords, dec.reps[j].coords, 5).unwrap()
                );
            }
        }
        // every enumerated element is equivalent to exactly one rep
        let ball = enumerate_ball(&ord, 5, base_point(), 20.0, DEFAULT_BUDGET).unwrap();
        for e in &ball.elements {
            let matches = dec
                .reps
                .iter()
                .filter(|r| same_coset_coords(&ord, e.coords, r.coords, 5).unwrap())
                .count();
            assert_eq!(matches, 1, "element {:?} matched {matches} reps", e.coords);
        }
    }
}
