//! Log2-domain arithmetic over exact rationals.
//!
//! Information sums have the shape `log2 Σ 2^{i} · w` where the exponents
//! `i` are integers and the weights `w` are rationals. Whenever every term
//! is rational the sum is accumulated exactly and only the final `log2`
//! is floating point.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// 2^k as an exact rational, for any sign of k.
pub fn pow2(k: i64) -> BigRational {
    let mag = BigInt::from(BigUint::one() << k.unsigned_abs() as usize);
    if k >= 0 {
        BigRational::from_integer(mag)
    } else {
        BigRational::new(BigInt::one(), mag)
    }
}

/// Exact rational from a finite f64 (every finite double is dyadic).
pub fn rational_from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

fn log2_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 60 {
        return (n.to_u64().unwrap() as f64).log2();
    }
    // keep the top 60 bits for the mantissa, track the shift
    let shift = bits - 60;
    let top = (n >> shift).to_u64().unwrap();
    (top as f64).log2() + shift as f64
}

/// log2 of a positive rational; `None` when the value is zero,
/// panics on negatives (callers accumulate nonnegative mass only).
pub fn log2_rational(r: &BigRational) -> Option<f64> {
    if r.is_zero() {
        return None;
    }
    assert!(r.is_positive(), "log2 of a negative rational");
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    Some(log2_biguint(num) - log2_biguint(den))
}

/// Stable `log2(2^a + 2^b)` in the log domain.
pub fn log2_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (1.0 + ((lo - hi) * std::f64::consts::LN_2).exp()).log2()
}

/// Accumulates `Σ 2^{x_i}` in the log domain with max-plus stabilization.
#[derive(Debug, Clone, Default)]
pub struct Log2Sum {
    total: Option<f64>,
}

impl Log2Sum {
    pub fn new() -> Self {
        Log2Sum { total: None }
    }

    pub fn add_log(&mut self, x: f64) {
        self.total = Some(match self.total {
            None => x,
            Some(t) => log2_add(t, x),
        });
    }

    /// Adds a plain (linear-domain) nonnegative value.
    pub fn add_value(&mut self, v: f64) {
        if v > 0.0 {
            self.add_log(v.log2());
        }
    }

    /// log2 of the accumulated sum; −∞ when nothing was added.
    pub fn log2(&self) -> f64 {
        self.total.unwrap_or(f64::NEG_INFINITY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    #[test]
    fn pow2_signs() {
        assert_eq!(pow2(3), BigRational::from_integer(8.into()));
        assert_eq!(pow2(-2), BigRational::new(1.into(), 4.into()));
        assert_eq!(pow2(0), BigRational::one());
    }

    #[test]
    fn log2_rational_matches_f64() {
        let r = BigRational::new(3.into(), 8.into());
        let got = log2_rational(&r).unwrap();
        assert!((got - (3.0f64 / 8.0).log2()).abs() < 1e-12);
        assert_eq!(log2_rational(&BigRational::zero()), None);
    }

    #[test]
    fn log2_rational_huge_values() {
        // 2^200 / 3: far outside f64 integer range
        let r = pow2(200) / BigRational::from_i64(3).unwrap();
        let got = log2_rational(&r).unwrap();
        assert!((got - (200.0 - 3f64.log2())).abs() < 1e-9);
    }

    #[test]
    fn log2_sum_stable() {
        let mut s = Log2Sum::new();
        s.add_log(1000.0);
        s.add_log(1000.0);
        assert!((s.log2() - 1001.0).abs() < 1e-12);
        s.add_log(f64::NEG_INFINITY);
        assert!((s.log2() - 1001.0).abs() < 1e-12);
    }

    #[test]
    fn log2_sum_empty_is_neg_inf() {
        assert_eq!(Log2Sum::new().log2(), f64::NEG_INFINITY);
    }
}
