//! Conversion between floats and tape bits.
//!
//! [`FloatCodec::Passthrough64`] copies the IEEE-754 bit pattern, most
//! significant bit first. [`FloatCodec::MantissaExponent`] uses the word
//! `sigma, b_0..b_{n-1}, a_0..a_m` for the value
//! `(-1)^sigma (sum_i a_i 2^{-i}) 2^E` with `E = sum_j b_j 2^j`.
//! The mantissa bit `a_0` is set for every nonzero value, so the all-zero
//! word is the canonical zero.

use serde::{Deserialize, Serialize};

use crate::tm::Symbol;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CodecError {
    #[error("{0} is not finite")]
    NonFinite(f64),
    #[error("|{value}| is outside the representable range [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },
    #[error("word has {got} bits, expected {expected}")]
    WordLength { got: usize, expected: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FloatCodec {
    #[default]
    Passthrough64,
    MantissaExponent {
        /// Mantissa bits after the leading one.
        mantissa: u32,
        /// Exponent bits.
        exponent: u32,
    },
}

/// Width of the linear ramp replacing the step function in
/// [`quantize_surrogate`]; far below the float spacing at `|x| >= 1`.
pub const SURROGATE_EPS: f64 = 1.0 / (1u128 << 80) as f64;

/// Piecewise-linear step: 0 below 0, `x / eps` on `(0, eps]`, 1 above.
pub fn psi(x: f64, eps: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x <= eps {
        x / eps
    } else {
        1.0
    }
}

impl FloatCodec {
    pub fn word_len(&self) -> usize {
        match *self {
            FloatCodec::Passthrough64 => 64,
            FloatCodec::MantissaExponent { mantissa, exponent } => 1 + exponent as usize + mantissa as usize + 1,
        }
    }

    fn max_exponent(exponent: u32) -> i32 {
        ((1u64 << exponent) - 1).min(1000) as i32
    }

    /// Smallest and largest magnitudes of nonzero representable values.
    pub fn range(&self) -> (f64, f64) {
        match *self {
            FloatCodec::Passthrough64 => (f64::MIN_POSITIVE, f64::MAX),
            FloatCodec::MantissaExponent { mantissa, exponent } => {
                let e = 2f64.powi(Self::max_exponent(exponent));
                (1.0, e * (2.0 - 2f64.powi(-(mantissa as i32))))
            }
        }
    }

    pub fn quantize(&self, x: f64) -> Result<Vec<bool>, CodecError> {
        self.quantize_with(x, |value, threshold| value >= threshold)
    }

    /// Same as [`Self::quantize`] with every comparison `x >= t` computed
    /// as `psi(x - t + eps) >= 1/2`.
    pub fn quantize_surrogate(&self, x: f64) -> Result<Vec<bool>, CodecError> {
        self.quantize_with(x, |value, threshold| psi(value - threshold + SURROGATE_EPS, SURROGATE_EPS) >= 0.5)
    }

    fn quantize_with(&self, x: f64, ge: impl Fn(f64, f64) -> bool) -> Result<Vec<bool>, CodecError> {
        if !x.is_finite() {
            return Err(CodecError::NonFinite(x));
        }
        let (mantissa, exponent) = match *self {
            FloatCodec::Passthrough64 => {
                let bits = x.to_bits();
                return Ok((0..64).rev().map(|i| (bits >> i) & 1 == 1).collect());
            }
            FloatCodec::MantissaExponent { mantissa, exponent } => (mantissa, exponent),
        };
        let mut word = vec![false; self.word_len()];
        if x == 0.0 {
            return Ok(word);
        }
        let (min, max) = self.range();
        let mag = x.abs();
        word[0] = x < 0.0;
        // Exponent window 2e > |x| >= e.
        let top = Self::max_exponent(exponent);
        let found = (0..=top).find(|&k| {
            let e = 2f64.powi(k);
            ge(mag, e) && !ge(mag, 2.0 * e)
        });
        let Some(k) = found else {
            return Err(CodecError::OutOfRange { value: x, min, max });
        };
        for j in 0..exponent as usize {
            word[1 + j] = (k >> j) & 1 == 1;
        }
        let e = 2f64.powi(k);
        let mut rest = mag;
        let base = 1 + exponent as usize;
        for i in 0..=mantissa as usize {
            let weight = e * 2f64.powi(-(i as i32));
            if ge(rest, weight) {
                word[base + i] = true;
                rest -= weight;
            }
        }
        Ok(word)
    }

    pub fn dequantize(&self, word: &[bool]) -> Result<f64, CodecError> {
        if word.len() != self.word_len() {
            return Err(CodecError::WordLength {
                got: word.len(),
                expected: self.word_len(),
            });
        }
        match *self {
            FloatCodec::Passthrough64 => Ok(f64::from_bits(word.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b)))),
            FloatCodec::MantissaExponent { exponent, .. } => {
                let base = 1 + exponent as usize;
                let k: i32 = (0..exponent as usize).map(|j| i32::from(word[1 + j]) << j).sum();
                let e = 2f64.powi(k);
                let mag: f64 = word[base..]
                    .iter()
                    .enumerate()
                    .filter(|(_, &a)| a)
                    .map(|(i, _)| e * 2f64.powi(-(i as i32)))
                    .sum();
                Ok(if word[0] { -mag } else { mag })
            }
        }
    }

    /// True if `x` survives a round trip unchanged.
    pub fn representable(&self, x: f64) -> bool {
        self.quantize(x)
            .and_then(|w| self.dequantize(&w))
            .is_ok_and(|y| y.to_bits() == x.to_bits() || (x == 0.0 && y == 0.0))
    }

    /// Concatenated words of `values`.
    pub fn quantize_all(&self, values: &[f64]) -> Result<Vec<bool>, CodecError> {
        let mut out = Vec::with_capacity(values.len() * self.word_len());
        for &x in values {
            out.extend(self.quantize(x)?);
        }
        Ok(out)
    }

    pub fn dequantize_all(&self, bits: &[bool]) -> Result<Vec<f64>, CodecError> {
        let n = self.word_len();
        if bits.len() % n != 0 {
            return Err(CodecError::WordLength {
                got: bits.len() % n,
                expected: n,
            });
        }
        bits.chunks(n).map(|w| self.dequantize(w)).collect()
    }

    /// Word of `x` as tape symbols.
    pub fn quantize_symbols(&self, x: f64) -> Result<Vec<Symbol>, CodecError> {
        Ok(self.quantize(x)?.into_iter().map(Symbol::from_bit).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ME3: FloatCodec = FloatCodec::MantissaExponent {
        mantissa: 3,
        exponent: 3,
    };

    #[test]
    fn six_with_three_mantissa_bits() {
        let w = ME3.quantize(6.0).unwrap();
        // sigma, exponent bits of 2 (little-endian), mantissa a_0..a_3.
        assert_eq!(w, vec![false, false, true, false, true, true, false, false]);
        assert_eq!(ME3.dequantize(&w).unwrap(), 6.0);
        let mut neg = w.clone();
        neg[0] = true;
        assert_eq!(ME3.dequantize(&neg).unwrap(), -6.0);
        assert_eq!(ME3.quantize(-6.0).unwrap(), neg);
    }

    #[test]
    fn zero_is_all_blank() {
        let w = ME3.quantize(0.0).unwrap();
        assert!(w.iter().all(|&b| !b));
        assert_eq!(ME3.dequantize(&w).unwrap(), 0.0);
    }

    #[test]
    fn range_errors() {
        assert!(matches!(ME3.quantize(0.5), Err(CodecError::OutOfRange { .. })));
        assert!(matches!(ME3.quantize(1e6), Err(CodecError::OutOfRange { .. })));
        assert!(FloatCodec::Passthrough64.quantize(f64::NAN).is_err());
        assert!(ME3.dequantize(&[true]).is_err());
    }

    #[test]
    fn passthrough_is_bit_exact() {
        let c = FloatCodec::Passthrough64;
        for x in [0.0, -0.0, 1.5, -3.25e-300, f64::MAX, f64::MIN_POSITIVE, 5e-324] {
            let y = c.dequantize(&c.quantize(x).unwrap()).unwrap();
            assert_eq!(y.to_bits(), x.to_bits());
        }
        assert_eq!(c.quantize(1.0).unwrap()[..12], [false, false, true, true, true, true, true, true, true, true, true, true]);
    }

    #[test]
    fn truncation_keeps_leading_digits() {
        // 6.5 = 4 (1 + 1/2 + 1/8) fits in three fractional digits; 6.25 needs a fourth.
        assert!(ME3.representable(6.5));
        assert!(!ME3.representable(6.25));
        assert_eq!(ME3.dequantize(&ME3.quantize(6.25).unwrap()).unwrap(), 6.0);
    }
}
