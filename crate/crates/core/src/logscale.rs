//! Log-scaled reals: exact under multiplication, stable log-sum-exp under
//! addition. Weights up to k ~ 10^4 make quantities like v^{k/2} wildly
//! overflow f64, so every magnitude in the kernel/bound pipeline lives here.

use std::cmp::Ordering;
use std::fmt;

/// A real number stored as sign and natural log of its absolute value.
#[derive(Clone, Copy, Debug)]
pub struct LogScaledReal {
    sign: i8,
    ln_abs: f64,
}

impl LogScaledReal {
    pub const ZERO: LogScaledReal = LogScaledReal {
        sign: 0,
        ln_abs: f64::NEG_INFINITY,
    };

    pub const ONE: LogScaledReal = LogScaledReal {
        sign: 1,
        ln_abs: 0.0,
    };

    pub fn from_ln(sign: i8, ln_abs: f64) -> Self {
        if sign == 0 || ln_abs == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        LogScaledReal {
            sign: sign.signum(),
            ln_abs,
        }
    }

    /// Positive value from its natural log.
    pub fn pos_from_ln(ln_abs: f64) -> Self {
        Self::from_ln(1, ln_abs)
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogScaledReal {
                sign: if x > 0.0 { 1 } else { -1 },
                ln_abs: x.abs().ln(),
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn ln_abs(&self) -> f64 {
        self.ln_abs
    }

    pub fn log10_abs(&self) -> f64 {
        self.ln_abs / std::f64::consts::LN_10
    }

    /// May overflow to +-inf or underflow to 0; intended for display and
    /// for quantities known to fit.
    pub fn to_f64(&self) -> f64 {
        self.sign as f64 * self.ln_abs.exp()
    }

    pub fn abs(&self) -> Self {
        LogScaledReal {
            sign: if self.sign == 0 { 0 } else { 1 },
            ln_abs: self.ln_abs,
        }
    }

    pub fn neg(&self) -> Self {
        LogScaledReal {
            sign: -self.sign,
            ln_abs: self.ln_abs,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::ZERO;
        }
        LogScaledReal {
            sign: self.sign * other.sign,
            ln_abs: self.ln_abs + other.ln_abs,
        }
    }

    pub fn div(&self, other: &Self) -> Self {
        assert!(!other.is_zero(), "division by log-scaled zero");
        if self.is_zero() {
            return Self::ZERO;
        }
        LogScaledReal {
            sign: self.sign * other.sign,
            ln_abs: self.ln_abs - other.ln_abs,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return *other;
        }
        if other.is_zero() {
            return *self;
        }
        let (big, small) = if self.ln_abs >= other.ln_abs {
            (self, other)
        } else {
            (other, self)
        };
        let delta = small.ln_abs - big.ln_abs;
        if big.sign == small.sign {
            LogScaledReal {
                sign: big.sign,
                ln_abs: big.ln_abs + delta.exp().ln_1p(),
            }
        } else {
            // ln|e^a - e^b| = a + ln(1 - e^(b-a)), a >= b
            let m = -delta.exp();
            if m <= -1.0 {
                return Self::ZERO; // exact cancellation
            }
            LogScaledReal {
                sign: big.sign,
                ln_abs: big.ln_abs + m.ln_1p(),
            }
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn powi(&self, e: i32) -> Self {
        if self.is_zero() {
            return if e == 0 { Self::ONE } else { Self::ZERO };
        }
        let sign = if e % 2 == 0 {
            self.sign.abs()
        } else {
            self.sign
        };
        LogScaledReal {
            sign,
            ln_abs: self.ln_abs * e as f64,
        }
    }

    /// Ratio |self/other| as f64; 1.0 when both are zero.
    pub fn ratio_abs(&self, other: &Self) -> f64 {
        if self.is_zero() && other.is_zero() {
            return 1.0;
        }
        (self.ln_abs - other.ln_abs).exp()
    }
}

impl PartialEq for LogScaledReal {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for LogScaledReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => {}
            ord => return Some(ord),
        }
        if self.sign == 0 {
            return Some(Ordering::Equal);
        }
        let ord = self.ln_abs.partial_cmp(&other.ln_abs)?;
        Some(if self.sign > 0 { ord } else { ord.reverse() })
    }
}

impl fmt::Display for LogScaledReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let l10 = self.log10_abs();
        let e = l10.floor();
        let mantissa = 10f64.powf(l10 - e) * self.sign as f64;
        write!(f, "{:.6}e{}", mantissa, e as i64)
    }
}

/// Stable ln(e^a + e^b).
pub fn logsumexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if a > b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// ln cosh(x) without overflow for large |x|.
pub fn ln_cosh(x: f64) -> f64 {
    let x = x.abs();
    x + (-2.0 * x).exp().ln_1p() - std::f64::consts::LN_2
}
