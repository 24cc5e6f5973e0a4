//! Exact amplitude arithmetic.
//!
//! Every coefficient produced by the ideal cascade circuits has the form
//! ±(1/√2)^k for a non-negative integer k: wave plates and beam splitters
//! contribute factors of 1/√2 and signs, and crystals contribute factors of
//! one. Representing amplitudes as a sign plus a half-power keeps state
//! comparison bit-exact, so the verification path needs no tolerances.

use std::fmt;

use num_traits::Float;

use crate::error::{Error, Result};

/// Sign of an amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl std::ops::Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

/// An exact amplitude sign·(1/√2)^k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Amplitude {
    pub sign: Sign,
    /// The exponent k in (1/√2)^k. Always ≥ 0.
    pub half_pow: u32,
}

impl Amplitude {
    pub const fn new(sign: Sign, half_pow: u32) -> Self {
        Amplitude { sign, half_pow }
    }

    /// The multiplicative unit, +(1/√2)^0.
    pub const fn one() -> Self {
        Amplitude {
            sign: Sign::Plus,
            half_pow: 0,
        }
    }

    pub fn negated(self) -> Self {
        Amplitude {
            sign: self.sign.flip(),
            half_pow: self.half_pow,
        }
    }

    /// Multiply by 1/√2 (one beam-splitter or wave-plate branch).
    pub fn times_inv_sqrt2(self) -> Amplitude {
        Amplitude {
            sign: self.sign,
            half_pow: self.half_pow + 1,
        }
    }

    /// Exact sum of two amplitudes on the same term.
    ///
    /// Returns `Ok(None)` on exact cancellation. Sums that leave the
    /// ±(1/√2)^k ring (different half-powers, or a doubling that would need
    /// a negative exponent) are rejected; the ideal circuits never produce
    /// them.
    pub fn checked_add(self, other: Amplitude) -> Result<Option<Amplitude>> {
        if self.half_pow != other.half_pow {
            return Err(Error::AmplitudeOverflow(format!(
                "cannot add (1/√2)^{} to (1/√2)^{} exactly",
                self.half_pow, other.half_pow
            )));
        }
        if self.sign != other.sign {
            return Ok(None);
        }
        // 2·(1/√2)^k = (1/√2)^(k−2); representable only for k ≥ 2.
        if self.half_pow < 2 {
            return Err(Error::AmplitudeOverflow(format!(
                "2·(1/√2)^{} needs a negative half-power",
                self.half_pow
            )));
        }
        Ok(Some(Amplitude {
            sign: self.sign,
            half_pow: self.half_pow - 2,
        }))
    }

    /// Squared magnitude as an exact dyadic: |amp|² = 2^(−half_pow).
    pub fn prob_log2_denom(self) -> u32 {
        self.half_pow
    }

    /// Numeric value, for reporting only. The symbolic path never calls this.
    pub fn value<F: Float>(self) -> F {
        let half = F::from(0.5).unwrap();
        let mag = half.powi(self.half_pow as i32 / 2)
            * if self.half_pow % 2 == 1 {
                F::from(std::f64::consts::FRAC_1_SQRT_2).unwrap()
            } else {
                F::one()
            };
        match self.sign {
            Sign::Plus => mag,
            Sign::Minus => -mag,
        }
    }
}

/// Signs multiply, half-powers add.
impl std::ops::Mul for Amplitude {
    type Output = Amplitude;
    fn mul(self, other: Amplitude) -> Amplitude {
        Amplitude {
            sign: self.sign * other.sign,
            half_pow: self.half_pow + other.half_pow,
        }
    }
}

impl fmt::Display for Amplitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.sign {
            Sign::Plus => "+",
            Sign::Minus => "-",
        };
        match self.half_pow {
            0 => write!(f, "{sign}1"),
            k => write!(f, "{sign}(1/√2)^{k}"),
        }
    }
}

/// Exact accumulator for sums of squared amplitudes Σ 2^(−k).
///
/// Stored as numerator/2^scale with the scale growing as needed; the circuit
/// states involved here keep both well within u128 range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicSum {
    numer: u128,
    scale: u32,
}

impl DyadicSum {
    pub fn zero() -> Self {
        DyadicSum { numer: 0, scale: 0 }
    }

    pub fn one() -> Self {
        DyadicSum { numer: 1, scale: 0 }
    }

    /// Add 2^(−k).
    pub fn add_pow2(&mut self, k: u32) {
        assert!(k < 120, "dyadic accumulator exponent out of range");
        if k > self.scale {
            let shift = k - self.scale;
            self.numer <<= shift;
            self.scale = k;
        }
        self.numer += 1u128 << (self.scale - k);
        self.reduce();
    }

    fn reduce(&mut self) {
        while self.scale > 0 && self.numer.is_multiple_of(2) {
            self.numer /= 2;
            self.scale -= 1;
        }
    }

    pub fn is_one(&self) -> bool {
        self.numer == 1 && self.scale == 0
    }

    /// If the sum equals 2^(−t), return t.
    pub fn as_pow2(&self) -> Option<u32> {
        if self.numer == 1 {
            Some(self.scale)
        } else {
            None
        }
    }

    pub fn value<F: Float>(&self) -> F {
        F::from(self.numer).unwrap() / F::from(2.0).unwrap().powi(self.scale as i32)
    }
}

impl fmt::Display for DyadicSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale == 0 {
            write!(f, "{}", self.numer)
        } else {
            write!(f, "{}/2^{}", self.numer, self.scale)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_adds_half_powers() {
        let a = Amplitude::new(Sign::Plus, 1);
        let b = Amplitude::new(Sign::Minus, 2);
        assert_eq!(a * b, Amplitude::new(Sign::Minus, 3));
        assert_eq!(b * b, Amplitude::new(Sign::Plus, 4));
    }

    #[test]
    fn cancellation_is_exact() {
        let a = Amplitude::new(Sign::Plus, 1);
        assert_eq!(a.checked_add(a.negated()).unwrap(), None);
    }

    #[test]
    fn doubling_needs_headroom() {
        let a = Amplitude::new(Sign::Plus, 1);
        assert!(matches!(
            a.checked_add(a),
            Err(Error::AmplitudeOverflow(_))
        ));
        let b = Amplitude::new(Sign::Plus, 4);
        assert_eq!(
            b.checked_add(b).unwrap(),
            Some(Amplitude::new(Sign::Plus, 2))
        );
    }

    #[test]
    fn mixed_half_powers_rejected() {
        let a = Amplitude::new(Sign::Plus, 1);
        let b = Amplitude::new(Sign::Plus, 2);
        assert!(a.checked_add(b).is_err());
    }

    #[test]
    fn dyadic_sum_of_four_quarters_is_one() {
        let mut s = DyadicSum::zero();
        for _ in 0..4 {
            s.add_pow2(2);
        }
        assert!(s.is_one());
    }

    #[test]
    fn dyadic_half_is_pow2() {
        let mut s = DyadicSum::zero();
        s.add_pow2(2);
        s.add_pow2(2);
        assert_eq!(s.as_pow2(), Some(1));
        assert!((s.value::<f64>() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn value_matches_float() {
        let a = Amplitude::new(Sign::Minus, 3);
        let expect = -(0.5f64).sqrt().powi(3);
        assert!((a.value::<f64>() - expect).abs() < 1e-15);
    }

    #[test]
    fn display_forms() {
        assert_eq!(Amplitude::one().to_string(), "+1");
        assert_eq!(Amplitude::new(Sign::Minus, 2).to_string(), "-(1/√2)^2");
    }
}
