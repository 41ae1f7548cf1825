//! Local Hilbert symbols and the ramification data of the algebra: the even
//! set of primes where it stays a division algebra, and the level those
//! primes assemble into.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::primes::is_prime;
use crate::quaternion::AlgebraParams;

/// A place of the rationals: a finite prime or the archimedean place.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Place {
    Prime(u64),
    Infinity,
}

/// Ramified primes, the integer q they multiply to (maximal-order setting),
/// and the level divisible by exactly those primes.
#[derive(Clone, Debug, Serialize)]
pub struct RamificationData {
    pub ramified_primes: Vec<u64>,
    pub q: u64,
    pub level: u64,
}

fn modpow(mut base: u64, mut exp: u64, modulus: u64) -> u64 {
    let mut acc: u128 = 1;
    let m = modulus as u128;
    let mut b = (base % modulus) as u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    base = acc as u64;
    base
}

/// Legendre symbol (u | p) for odd prime p and u coprime to p.
fn legendre(u: i64, p: u64) -> i32 {
    let up = u.rem_euclid(p as i64) as u64;
    debug_assert!(up != 0, "legendre symbol needs gcd(u, p) = 1");
    let e = modpow(up, (p - 1) / 2, p);
    if e == 1 {
        1
    } else {
        -1
    }
}

/// Strips the exact power of p, returning (valuation, unit part).
fn split_valuation(mut n: i64, p: u64) -> (u32, i64) {
    let p = p as i64;
    let mut v = 0u32;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    (v, n)
}

/// Hilbert symbol (a, b)_p in {+1, -1}; -1 exactly when the quaternion
/// algebra (a, b) is division over the completion at `place`.
pub fn hilbert_symbol(a: i64, b: i64, place: Place) -> Result<i32> {
    if a == 0 || b == 0 {
        return Err(Error::input("hilbert symbol needs nonzero arguments"));
    }
    match place {
        Place::Infinity => Ok(if a < 0 && b < 0 { -1 } else { 1 }),
        Place::Prime(p) => {
            if !is_prime(p) {
                return Err(Error::input(format!("{p} is not prime")));
            }
            if p == 2 {
                let (alpha, u) = split_valuation(a, 2);
                let (beta, v) = split_valuation(b, 2);
                let eps = |x: i64| ((x - 1) / 2).rem_euclid(2);
                let omega = |x: i64| ((x * x - 1) / 8).rem_euclid(2);
                let e = eps(u) * eps(v) + alpha as i64 * omega(v) + beta as i64 * omega(u);
                Ok(if e % 2 == 0 { 1 } else { -1 })
            } else {
                let (alpha, u) = split_valuation(a, p);
                let (beta, v) = split_valuation(b, p);
                let mut s = 1i32;
                if alpha % 2 == 1 && beta % 2 == 1 {
                    s *= legendre(-1, p);
                }
                if beta % 2 == 1 {
                    s *= legendre(u, p);
                }
                if alpha % 2 == 1 {
                    s *= legendre(v, p);
                }
                Ok(s)
            }
        }
    }
}

/// Computes the full ramification data of validated algebra parameters.
///
/// Only primes dividing 2ab can ramify; the resulting set must have even
/// cardinality (an odd count signals a broken symbol implementation) and,
/// for a maximal order, q equals the product of the ramified primes and the
/// level equals q.
pub fn ramified_primes(params: &AlgebraParams) -> Result<RamificationData> {
    let mut candidates = vec![2u64];
    for &x in &[params.a, params.b] {
        let mut n = x.unsigned_abs();
        let mut p = 3u64;
        while p * p <= n {
            if n % p == 0 {
                candidates.push(p);
                while n % p == 0 {
                    n /= p;
                }
            }
            p += 2;
        }
        if n > 2 {
            candidates.push(n);
        }
    }
    candidates.sort_unstable();
    candidates.dedup();

    let mut ramified = Vec::new();
    for &p in &candidates {
        if hilbert_symbol(params.a, params.b, Place::Prime(p))? == -1 {
            ramified.push(p);
        }
    }
    if hilbert_symbol(params.a, params.b, Place::Infinity)? == -1 {
        return Err(Error::config(
            "algebra ramifies at infinity, contradicting the split assumption",
        ));
    }
    if ramified.len() % 2 != 0 {
        return Err(Error::Inconsistency(format!(
            "ramified set {ramified:?} has odd cardinality; the local symbols cannot all be right"
        )));
    }
    let q: u64 = ramified.iter().product();
    Ok(RamificationData {
        ramified_primes: ramified,
        q,
        level: q,
    })
}
