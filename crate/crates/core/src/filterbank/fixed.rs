//! Integer emulation of the filter datapath.
//!
//! Coefficients are signed 16-bit words with `coeff_frac_bits` fractional
//! bits (Q2.14 by default). Each section is direct form I: products are
//! summed in an accumulator of `accumulator_bits`, rescaled to the sample
//! width and saturated. The rescaling residual is carried into the next
//! accumulation (first-order error feedback), which keeps narrow low-band
//! resonators out of their dead band at small signal levels.

use super::biquad::BiquadCoeffs;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounding {
    /// `floor(v + 1/2)`
    HalfUp,
    Truncate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Overflow {
    Saturate,
    Wrap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedPointFormat {
    pub coeff_frac_bits: u32,
    pub sample_bits: u32,
    pub accumulator_bits: u32,
    pub rounding: Rounding,
    pub overflow: Overflow,
}

impl Default for FixedPointFormat {
    fn default() -> Self {
        Self {
            coeff_frac_bits: 14,
            sample_bits: 16,
            accumulator_bits: 32,
            rounding: Rounding::HalfUp,
            overflow: Overflow::Saturate,
        }
    }
}

impl FixedPointFormat {
    pub fn validate(&self) -> Result<()> {
        if self.coeff_frac_bits == 0 || self.coeff_frac_bits >= 16 {
            return Err(Error::invalid(format!(
                "coeff_frac_bits {} outside 1..16",
                self.coeff_frac_bits
            )));
        }
        if !(2..=16).contains(&self.sample_bits) {
            return Err(Error::invalid(format!("sample_bits {} outside 2..=16", self.sample_bits)));
        }
        if self.accumulator_bits < self.sample_bits + self.coeff_frac_bits
            || self.accumulator_bits > 48
        {
            return Err(Error::invalid(format!(
                "accumulator_bits {} too narrow or too wide",
                self.accumulator_bits
            )));
        }
        Ok(())
    }

    pub fn sample_range(&self) -> (i64, i64) {
        let half = 1i64 << (self.sample_bits - 1);
        (-half, half - 1)
    }

    /// Largest magnitude a 16-bit coefficient word can hold.
    pub fn coeff_limit(&self) -> f64 {
        (1i64 << (15 - self.coeff_frac_bits)) as f64
    }

    pub fn quantize_coeff(&self, c: f64) -> Result<i64> {
        let scaled = c * (1i64 << self.coeff_frac_bits) as f64;
        let q = match self.rounding {
            Rounding::HalfUp => (scaled + 0.5).floor(),
            Rounding::Truncate => scaled.floor(),
        } as i64;
        if q < i16::MIN as i64 || q > i16::MAX as i64 {
            return Err(Error::Design(format!(
                "coefficient {c} does not fit Q{}.{}",
                16 - self.coeff_frac_bits,
                self.coeff_frac_bits
            )));
        }
        Ok(q)
    }

    pub fn quantize_sample(&self, v: f64) -> i64 {
        let (lo, hi) = self.sample_range();
        (v.round() as i64).clamp(lo, hi)
    }

    fn clamp_sample(&self, v: i64) -> i64 {
        let (lo, hi) = self.sample_range();
        match self.overflow {
            Overflow::Saturate => v.clamp(lo, hi),
            Overflow::Wrap => wrap(v, self.sample_bits),
        }
    }

    fn clamp_acc(&self, v: i64) -> i64 {
        let half = 1i64 << (self.accumulator_bits - 1);
        match self.overflow {
            Overflow::Saturate => v.clamp(-half, half - 1),
            Overflow::Wrap => wrap(v, self.accumulator_bits),
        }
    }

    fn rescale(&self, acc: i64) -> i64 {
        let f = self.coeff_frac_bits;
        match self.rounding {
            Rounding::HalfUp => (acc + (1 << (f - 1))) >> f,
            Rounding::Truncate => acc >> f,
        }
    }
}

fn wrap(v: i64, bits: u32) -> i64 {
    let shift = 64 - bits;
    (v << shift) >> shift
}

/// Quantized section.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedBiquad {
    pub b: [i64; 3],
    pub a: [i64; 2],
}

impl FixedBiquad {
    pub fn quantize(c: &BiquadCoeffs, fmt: &FixedPointFormat) -> Result<Self> {
        Ok(Self {
            b: [
                fmt.quantize_coeff(c.b0)?,
                fmt.quantize_coeff(c.b1)?,
                fmt.quantize_coeff(c.b2)?,
            ],
            a: [fmt.quantize_coeff(c.a1)?, fmt.quantize_coeff(c.a2)?],
        })
    }

    /// The coefficients the integer datapath actually realizes.
    pub fn realized(&self, fmt: &FixedPointFormat) -> BiquadCoeffs {
        let s = (1i64 << fmt.coeff_frac_bits) as f64;
        BiquadCoeffs {
            b0: self.b[0] as f64 / s,
            b1: self.b[1] as f64 / s,
            b2: self.b[2] as f64 / s,
            a1: self.a[0] as f64 / s,
            a2: self.a[1] as f64 / s,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FixedState {
    x1: i64,
    x2: i64,
    y1: i64,
    y2: i64,
    residual: i64,
}

impl FixedState {
    #[inline]
    pub fn step(&mut self, c: &FixedBiquad, fmt: &FixedPointFormat, x: i64) -> i64 {
        let acc = c.b[0] * x + c.b[1] * self.x1 + c.b[2] * self.x2
            - c.a[0] * self.y1
            - c.a[1] * self.y2
            + self.residual;
        let acc = fmt.clamp_acc(acc);
        let scaled = fmt.rescale(acc);
        let y = fmt.clamp_sample(scaled);
        self.residual = if y == scaled {
            acc - (y << fmt.coeff_frac_bits)
        } else {
            0
        };
        self.x2 = self.x1;
        self.x1 = x;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

pub fn fixed_filter(x: &[i64], c: &FixedBiquad, fmt: &FixedPointFormat, state: &mut FixedState) -> Vec<i64> {
    x.iter().map(|&v| state.step(c, fmt, v)).collect()
}

pub fn fixed_cascade(x: &[i64], chain: &[FixedBiquad], fmt: &FixedPointFormat) -> Vec<i64> {
    let mut states = vec![FixedState::default(); chain.len()];
    x.iter()
        .map(|&v| {
            chain
                .iter()
                .zip(states.iter_mut())
                .fold(v, |acc, (c, s)| s.step(c, fmt, acc))
        })
        .collect()
}
