//! Mel-spaced band-pass bank and Butterworth anti-alias low-pass design.
//!
//! Band-pass sections come from the analog prototype
//! `H(s) = B s / (s^2 + B s + w0^2)` via the bilinear transform with both
//! band edges pre-warped, which puts the -3 dB points exactly on the
//! requested edges and the peak (0 dB) at their warped geometric mean.

use std::f64::consts::PI;

use super::biquad::BiquadCoeffs;
use crate::error::{Error, Result};

pub const DEFAULT_N_BANDS: usize = 40;
pub const DEFAULT_F_LOW: f64 = 20.0;
pub const DEFAULT_F_HIGH: f64 = 7600.0;
pub const DEFAULT_LPF_CUTOFF: f64 = 3000.0;
pub const DEFAULT_LPF_SECTIONS: usize = 3;

/// Bands whose upper edge reaches this fraction of the reduced rate are not
/// designed for stride-2 processing.
const HALF_RATE_EDGE_LIMIT: f64 = 0.475;

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Center and -3 dB edges of one band, in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MelBand {
    pub center: f64,
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterBankSpec {
    pub sample_rate: u32,
    pub n_bands: usize,
    pub f_low: f64,
    pub f_high: f64,
    pub bands: Vec<MelBand>,
    /// One section per band at the full sample rate.
    pub band_filters: Vec<BiquadCoeffs>,
    /// The same bands designed at half the sample rate for stride-2 frames.
    /// `None` where the band does not fit below the reduced Nyquist.
    pub half_rate_filters: Vec<Option<BiquadCoeffs>>,
    /// Anti-alias low-pass cascade applied before decimation.
    pub lpf_chain: Vec<BiquadCoeffs>,
}

impl FilterBankSpec {
    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        self.bands.iter().map(|b| b.center)
    }

    /// Every section in the bank, band-pass and low-pass alike.
    pub fn all_sections(&self) -> impl Iterator<Item = &BiquadCoeffs> {
        self.band_filters
            .iter()
            .chain(self.half_rate_filters.iter().flatten())
            .chain(self.lpf_chain.iter())
    }

    /// Combined low-pass magnitude at `freq_hz`.
    pub fn lpf_magnitude(&self, freq_hz: f64) -> f64 {
        let fs = self.sample_rate as f64;
        self.lpf_chain
            .iter()
            .map(|c| c.magnitude(freq_hz, fs))
            .product()
    }
}

impl Default for FilterBankSpec {
    fn default() -> Self {
        design_mel_bank(DEFAULT_N_BANDS, DEFAULT_F_LOW, DEFAULT_F_HIGH, 16_000)
            .expect("default bank parameters are valid")
    }
}

/// Second-order band-pass with -3 dB edges at `low` and `high`.
pub fn band_pass(low: f64, high: f64, fs: f64) -> Result<BiquadCoeffs> {
    if !(low > 0.0 && high > low && high < fs / 2.0) {
        return Err(Error::Design(format!(
            "band {low:.3}..{high:.3} Hz not realizable at {fs} Hz"
        )));
    }
    let c = 2.0 * fs;
    let w1 = c * (PI * low / fs).tan();
    let w2 = c * (PI * high / fs).tan();
    let bw = w2 - w1;
    if bw <= 0.0 || !bw.is_finite() {
        return Err(Error::Design(format!(
            "non-positive bandwidth for {low}..{high} Hz"
        )));
    }
    let w0_sq = w1 * w2;
    let coeffs = BiquadCoeffs::from_ba(
        [bw * c, 0.0, -bw * c],
        [c * c + bw * c + w0_sq, 2.0 * (w0_sq - c * c), c * c - bw * c + w0_sq],
    );
    check_stable(&coeffs)?;
    Ok(coeffs)
}

/// Even-order Butterworth low-pass as a cascade of `sections` biquads.
pub fn butterworth_lowpass(sections: usize, cutoff: f64, fs: f64) -> Result<Vec<BiquadCoeffs>> {
    if sections == 0 {
        return Err(Error::Design("low-pass needs at least one section".into()));
    }
    if !(cutoff > 0.0 && cutoff < fs / 2.0) {
        return Err(Error::Design(format!(
            "low-pass cutoff {cutoff} Hz outside (0, {})",
            fs / 2.0
        )));
    }
    let order = 2 * sections;
    let w0 = 2.0 * PI * cutoff / fs;
    let (sin, cos) = w0.sin_cos();
    (1..=sections)
        .map(|k| {
            // pole pair k of the analog prototype
            let q = 1.0 / (2.0 * ((2 * k - 1) as f64 * PI / (2 * order) as f64).sin());
            let alpha = sin / (2.0 * q);
            let b = (1.0 - cos) / 2.0;
            let c = BiquadCoeffs::from_ba([b, 1.0 - cos, b], [1.0 + alpha, -2.0 * cos, 1.0 - alpha]);
            check_stable(&c)?;
            Ok(c)
        })
        .collect()
}

fn check_stable(c: &BiquadCoeffs) -> Result<()> {
    if c.is_stable() {
        Ok(())
    } else {
        Err(Error::Design(format!("unstable section {c:?}")))
    }
}

/// Mel-spaced band centers with edges halfway (in mel) to each neighbor.
/// The outermost edges use `f_low` / `f_high` as phantom neighbors.
pub fn mel_bands(n_bands: usize, f_low: f64, f_high: f64) -> Vec<MelBand> {
    let (m_lo, m_hi) = (hz_to_mel(f_low), hz_to_mel(f_high));
    let step = (m_hi - m_lo) / (n_bands + 1) as f64;
    let point = |i: usize| m_lo + step * i as f64;
    (1..=n_bands)
        .map(|k| MelBand {
            center: mel_to_hz(point(k)),
            low: mel_to_hz(point(k) - step / 2.0),
            high: mel_to_hz(point(k) + step / 2.0),
        })
        .collect()
}

pub fn design_mel_bank(
    n_bands: usize,
    f_low: f64,
    f_high: f64,
    sample_rate: u32,
) -> Result<FilterBankSpec> {
    design_bank_with_lpf(
        n_bands,
        f_low,
        f_high,
        sample_rate,
        DEFAULT_LPF_SECTIONS,
        DEFAULT_LPF_CUTOFF,
    )
}

pub fn design_bank_with_lpf(
    n_bands: usize,
    f_low: f64,
    f_high: f64,
    sample_rate: u32,
    lpf_sections: usize,
    lpf_cutoff: f64,
) -> Result<FilterBankSpec> {
    let fs = sample_rate as f64;
    if n_bands == 0 {
        return Err(Error::Design("need at least one band".into()));
    }
    if !(f_low > 0.0 && f_low < f_high && f_high <= fs / 2.0) {
        return Err(Error::Design(format!(
            "need 0 < f_low < f_high <= {}; got {f_low}, {f_high}",
            fs / 2.0
        )));
    }
    let bands = mel_bands(n_bands, f_low, f_high);
    let band_filters = bands
        .iter()
        .map(|b| band_pass(b.low, b.high, fs))
        .collect::<Result<Vec<_>>>()?;
    let half = fs / 2.0;
    let half_rate_filters = bands
        .iter()
        .map(|b| {
            if b.high < HALF_RATE_EDGE_LIMIT * half {
                band_pass(b.low, b.high, half).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let lpf_chain = butterworth_lowpass(lpf_sections, lpf_cutoff, fs)?;
    Ok(FilterBankSpec {
        sample_rate,
        n_bands,
        f_low,
        f_high,
        bands,
        band_filters,
        half_rate_filters,
        lpf_chain,
    })
}
