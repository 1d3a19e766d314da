//! Exact-rational arithmetic support for the correlation cores: f64 inputs
//! become exact rationals, sums of squares stay exact, and only the final
//! value returns to floating point.

use num::bigint::Sign;
use num::{BigRational, BigUint, ToPrimitive, Zero};

use super::StatsError;

/// Exact rational image of a finite f64.
pub fn big(x: f64, index: usize) -> Result<BigRational, StatsError> {
    BigRational::from_float(x).ok_or(StatsError::NonFinite(index))
}

/// Rounds an arbitrary-size rational to f64 by shifting the quotient into a
/// ~64-bit window first. The naive numerator/denominator conversion
/// overflows to inf/inf = NaN once either side outgrows f64 range; this
/// stays exact to a couple of ulps regardless of magnitude.
pub fn rat_to_f64(r: &BigRational) -> f64 {
    if r.numer().is_zero() {
        return 0.0;
    }
    let negative = r.numer().sign() == Sign::Minus;
    let n = r.numer().magnitude();
    let d = r.denom().magnitude();
    let shift = 64 + d.bits() as i64 - n.bits() as i64;
    let q: BigUint = if shift >= 0 {
        (n.clone() << shift as u64) / d
    } else {
        n / (d.clone() << (-shift) as u64)
    };
    // scale back in two half-steps: 2^-shift alone can under/overflow even
    // when q * 2^-shift is representable (q carries ~64 bits of headroom)
    let total = (-shift).clamp(-2000, 2000);
    let e1 = total.clamp(-1000, 1000) as i32;
    let e2 = (total - e1 as i64) as i32;
    let v = q.to_f64().unwrap_or(f64::INFINITY) * 2f64.powi(e1) * 2f64.powi(e2);
    if negative {
        -v
    } else {
        v
    }
}

/// Mean of an exact series.
pub fn mean(values: &[BigRational]) -> BigRational {
    let sum: BigRational = values.iter().sum();
    sum / BigRational::from_integer(values.len().into())
}
