//! Extended-precision cross-check route for the bound terms.
//!
//! The delicate factor (1 - 1/(N^3+1))^{k/2} is computed as an exact big
//! rational power (times one square root when k is odd), so the only
//! floating step is the final logarithm of a big integer. This route shares
//! no code with the double-precision path and serves as its oracle.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};

/// Natural log of a positive big integer to ~1e-15 relative accuracy: the
/// top 53 bits give the mantissa, the rest contribute bits * ln 2.
pub fn ln_bigint(x: &BigInt) -> Result<f64> {
    if !x.is_positive() {
        return Err(Error::input("ln needs a positive integer"));
    }
    let bits = x.bits();
    if bits <= 53 {
        let v: f64 = x.to_string().parse().expect("small integer parses");
        return Ok(v.ln());
    }
    let shift = bits - 53;
    let top: BigInt = x >> shift;
    let v: f64 = top.to_string().parse().expect("53-bit integer parses");
    Ok(v.ln() + shift as f64 * std::f64::consts::LN_2)
}

/// Natural log of a positive rational.
pub fn ln_bigrational(x: &BigRational) -> Result<f64> {
    if x.is_zero() || x.is_negative() {
        return Err(Error::input("ln needs a positive rational"));
    }
    Ok(ln_bigint(x.numer())? - ln_bigint(x.denom())?)
}

/// High-precision bound terms at integer k and epsilon = 0:
/// (term1, ln term2) with term2 = N^{11/2} (N^3/(N^3+1))^{k/2}.
pub fn bound_terms_extended(k: u64, n: u64) -> Result<(f64, f64)> {
    if n < 1 || k < 4 {
        return Err(Error::input("need N >= 1 and k >= 4"));
    }
    let nf = n as f64;
    let term1 = k as f64 / nf.sqrt();

    let n3 = BigInt::from(n).pow(3);
    let base = BigRational::new(n3.clone(), n3 + 1);
    let half_k = (k / 2) as i32;
    let pow = base.pow(half_k);
    let mut ln_term2 = ln_bigrational(&pow)? + 5.5 * nf.ln();
    if k % 2 == 1 {
        ln_term2 += 0.5 * ln_bigrational(&base)?;
    }
    Ok((term1, ln_term2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_bigint_small_and_large() {
        assert!((ln_bigint(&BigInt::from(8)).unwrap() - 8f64.ln()).abs() < 1e-15);
        // ln(10^100) = 100 ln 10
        let big = BigInt::from(10).pow(100);
        let expected = 100.0 * 10f64.ln();
        assert!((ln_bigint(&big).unwrap() - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn extended_terms_match_reference_point() {
        let (t1, ln_t2) = bound_terms_extended(27631, 10).unwrap();
        assert!((t1 - 8737.6894).abs() < 1e-3, "term1 = {t1}");
        let t2 = ln_t2.exp();
        assert!((t2 - 0.3184).abs() < 1e-3, "term2 = {t2}");
    }

    #[test]
    fn agrees_with_double_route() {
        for &(k, n) in &[(27631u64, 10u64), (1001, 5), (40, 25), (2_000_001, 31)] {
            let (t1, ln_t2) = bound_terms_extended(k, n).unwrap();
            let d = crate::amplifier::bound_rhs(k as f64, n, 0.0).unwrap();
            assert!((t1 - d.term1).abs() <= 1e-9 * t1.abs());
            assert!(
                (ln_t2 - d.term2_ln).abs() <= 1e-9 * ln_t2.abs().max(1.0),
                "k={k} N={n}: {ln_t2} vs {}",
                d.term2_ln
            );
        }
    }
}
