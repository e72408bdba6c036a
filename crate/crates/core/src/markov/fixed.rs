//! Signed Q-format words with saturating arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::MaxPlus;

/// Signed fixed-point format: `word_bits` total bits, `frac_bits` of them
/// fractional. Values are held in `i64` and always lie in the word range.
///
/// The most negative word doubles as the log(0) sentinel and is absorbing
/// under [`QFormat::add`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QFormat {
    pub word_bits: u32,
    pub frac_bits: u32,
}

impl Default for QFormat {
    fn default() -> Self {
        QFormat {
            word_bits: 32,
            frac_bits: 16,
        }
    }
}

impl QFormat {
    pub fn new(word_bits: u32, frac_bits: u32) -> Result<Self> {
        let q = QFormat {
            word_bits,
            frac_bits,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frac_bits == 0 || self.frac_bits >= self.word_bits || self.word_bits > 64 {
            return Err(Error::Parameter(format!(
                "invalid Q format: need 0 < frac_bits ({}) < word_bits ({}) <= 64",
                self.frac_bits, self.word_bits
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn min_word(&self) -> i64 {
        if self.word_bits == 64 {
            i64::MIN
        } else {
            -(1i64 << (self.word_bits - 1))
        }
    }

    #[inline]
    pub fn max_word(&self) -> i64 {
        if self.word_bits == 64 {
            i64::MAX
        } else {
            (1i64 << (self.word_bits - 1)) - 1
        }
    }

    /// The log(0) sentinel.
    #[inline]
    pub fn neg_inf(&self) -> i64 {
        self.min_word()
    }

    /// Value of one least-significant bit.
    pub fn resolution(&self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    /// `round(x * 2^frac_bits)`, half away from zero, saturated to the word
    /// range. `-inf` and NaN map to the sentinel.
    pub fn quantize(&self, x: f64) -> i64 {
        if x.is_nan() || x == f64::NEG_INFINITY {
            return self.min_word();
        }
        let scaled = (x * (self.frac_bits as f64).exp2()).round();
        if scaled <= self.min_word() as f64 {
            self.min_word()
        } else if scaled >= self.max_word() as f64 {
            self.max_word()
        } else {
            scaled as i64
        }
    }

    /// Real value of a word; the sentinel maps to `-inf`.
    pub fn dequantize(&self, raw: i64) -> f64 {
        if raw <= self.min_word() {
            f64::NEG_INFINITY
        } else {
            raw as f64 * self.resolution()
        }
    }

    /// Saturating addition with an absorbing sentinel.
    #[inline]
    pub fn add(&self, a: i64, b: i64) -> i64 {
        let min = self.min_word();
        if a <= min || b <= min {
            return min;
        }
        a.saturating_add(b).clamp(min, self.max_word())
    }
}

/// Free-function form of [`QFormat::quantize`].
pub fn quantize_value(x: f64, q: QFormat) -> i64 {
    q.quantize(x)
}

impl MaxPlus for QFormat {
    type Value = i64;

    fn neg_inf(&self) -> i64 {
        self.min_word()
    }

    fn add(&self, a: i64, b: i64) -> i64 {
        QFormat::add(self, a, b)
    }

    fn lift_log(&self, x: f64) -> i64 {
        self.quantize(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_values() {
        let q = QFormat::default();
        assert_eq!(q.quantize(0.0), 0);
        // -0.6931471805599453 * 65536 = -45426.09...
        assert_eq!(q.quantize(-std::f64::consts::LN_2), -45426);
        assert_eq!(q.quantize(-1e9), -2_147_483_648);
        assert_eq!(q.quantize(-1e9), q.neg_inf());
        assert_eq!(q.quantize(1e9), 2_147_483_647);
        assert_eq!(q.quantize(f64::NEG_INFINITY), q.neg_inf());
    }

    #[test]
    fn rounds_half_away_from_zero() {
        let q = QFormat::new(32, 1).unwrap();
        assert_eq!(q.quantize(0.25), 1);
        assert_eq!(q.quantize(-0.25), -1);
        assert_eq!(q.quantize(0.75), 2);
        assert_eq!(q.quantize(-0.75), -2);
    }

    #[test]
    fn format_bounds() {
        assert!(QFormat::new(32, 0).is_err());
        assert!(QFormat::new(16, 16).is_err());
        assert!(QFormat::new(65, 16).is_err());
        let q = QFormat::new(64, 32).unwrap();
        assert_eq!(q.min_word(), i64::MIN);
        assert_eq!(q.max_word(), i64::MAX);
        assert_eq!(q.quantize(1e300), i64::MAX);
        assert_eq!(q.quantize(-1e300), i64::MIN);
        let q8 = QFormat::new(8, 4).unwrap();
        assert_eq!((q8.min_word(), q8.max_word()), (-128, 127));
    }

    #[test]
    fn sentinel_is_absorbing() {
        let q = QFormat::default();
        let s = q.neg_inf();
        assert_eq!(q.add(s, 0), s);
        assert_eq!(q.add(s, q.max_word()), s);
        assert_eq!(q.add(q.max_word(), s), s);
        assert_eq!(q.add(q.max_word(), 5), q.max_word());
        assert_eq!(q.add(q.min_word() + 1, -5), s);
    }

    proptest! {
        #[test]
        fn quantize_is_monotone(a in -1.0e5f64..1.0e5, b in -1.0e5f64..1.0e5, frac in 1u32..31) {
            let q = QFormat::new(32, frac).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(q.quantize(lo) <= q.quantize(hi));
        }

        #[test]
        fn rounding_error_bounded(x in -1000.0f64..1000.0, frac in 1u32..20) {
            let q = QFormat::new(48, frac).unwrap();
            let err = (q.dequantize(q.quantize(x)) - x).abs();
            prop_assert!(err <= q.resolution() / 2.0 + 1e-12);
        }
    }
}
