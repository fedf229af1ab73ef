//! IIR mel filter bank: design, float and fixed-point execution, and the
//! log2 energy features.

mod biquad;
mod design;
mod fixed;
mod log2;

pub use biquad::{biquad_filter, cascade_filter, BiquadCoeffs, BiquadState};
pub use design::{
    band_pass, butterworth_lowpass, design_bank_with_lpf, design_mel_bank, hz_to_mel, mel_bands,
    mel_to_hz, FilterBankSpec, MelBand, DEFAULT_F_HIGH, DEFAULT_F_LOW, DEFAULT_LPF_CUTOFF,
    DEFAULT_LPF_SECTIONS, DEFAULT_N_BANDS,
};
pub use fixed::{
    fixed_cascade, fixed_filter, FixedBiquad, FixedPointFormat, FixedState, Overflow, Rounding,
};
pub use log2::{log2_feature, Log2Lut, DEFAULT_LOG_FLOOR, DEFAULT_LUT_ENTRIES};

use crate::error::{Error, Result};
use crate::sparsity::Stride;

/// Keeps the even-indexed samples.
pub fn stride2_decimate<T: Copy>(x: &[T]) -> Vec<T> {
    x.iter().step_by(2).copied().collect()
}

/// Runs the anti-alias cascade from rest. With `fmt` the integer datapath is
/// emulated and the output holds integers.
pub fn apply_lpf(x: &[f64], spec: &FilterBankSpec, fmt: Option<&FixedPointFormat>) -> Result<Vec<f64>> {
    if spec.lpf_chain.is_empty() {
        return Err(Error::invalid("filter bank has no low-pass sections"));
    }
    match fmt {
        None => {
            let mut states = vec![BiquadState::default(); spec.lpf_chain.len()];
            Ok(cascade_filter(x, &spec.lpf_chain, &mut states))
        }
        Some(fmt) => {
            fmt.validate()?;
            let chain = spec
                .lpf_chain
                .iter()
                .map(|c| FixedBiquad::quantize(c, fmt))
                .collect::<Result<Vec<_>>>()?;
            let xi = quantize_all(x, fmt);
            Ok(fixed_cascade(&xi, &chain, fmt).into_iter().map(|v| v as f64).collect())
        }
    }
}

fn quantize_all(x: &[f64], fmt: &FixedPointFormat) -> Vec<i64> {
    x.iter().map(|&v| fmt.quantize_sample(v)).collect()
}

/// Per-band `sum(y^2)` of a frame filtered from rest.
///
/// Stride-1 input is the pre-emphasized frame at the full rate. Stride-2
/// input must already be low-pass filtered and decimated; it runs through the
/// half-rate bank and bands that do not exist there report zero.
pub fn band_energies(
    samples: &[f64],
    stride: Stride,
    spec: &FilterBankSpec,
    fmt: Option<&FixedPointFormat>,
) -> Result<Vec<f64>> {
    let filters: Vec<Option<&BiquadCoeffs>> = match stride {
        Stride::Full => spec.band_filters.iter().map(Some).collect(),
        Stride::Half => spec.half_rate_filters.iter().map(Option::as_ref).collect(),
        Stride::Skip => return Err(Error::invalid("skipped frames are not filtered")),
    };
    match fmt {
        None => Ok(filters
            .iter()
            .map(|c| match c {
                Some(c) => {
                    let mut st = BiquadState::default();
                    samples.iter().map(|&x| st.step(c, x).powi(2)).sum()
                }
                None => 0.0,
            })
            .collect()),
        Some(fmt) => {
            fmt.validate()?;
            let xi = quantize_all(samples, fmt);
            filters
                .iter()
                .map(|c| match c {
                    Some(c) => {
                        let q = FixedBiquad::quantize(c, fmt)?;
                        let mut st = FixedState::default();
                        let e: i64 = xi.iter().map(|&x| st.step(&q, fmt, x).pow(2)).sum();
                        Ok(e as f64)
                    }
                    None => Ok(0.0),
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub frame_index: u32,
    pub stride: Stride,
    pub values: Vec<f32>,
}

/// log2 band energies of the retained frames, in frame order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub n_bands: usize,
    pub rows: Vec<FeatureRow>,
}

impl FeatureMatrix {
    pub fn new(n_bands: usize) -> Self {
        Self {
            n_bands,
            rows: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, frame_index: u32, stride: Stride, values: Vec<f32>) -> Result<()> {
        if values.len() != self.n_bands {
            return Err(Error::invalid(format!(
                "row has {} values, expected {}",
                values.len(),
                self.n_bands
            )));
        }
        if stride == Stride::Skip {
            return Err(Error::invalid("skipped frames have no feature row"));
        }
        self.rows.push(FeatureRow {
            frame_index,
            stride,
            values,
        });
        Ok(())
    }
}
