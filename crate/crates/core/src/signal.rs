//! Audio containers, framing and pre-emphasis.
//!
//! Everything upstream of the filter bank lives here. Samples are kept as
//! signed 16-bit PCM; [`Frame::normalized`] gives the `[-1, 1)` view used by
//! the sparsity scores.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;
/// 16 ms at 16 kHz.
pub const DEFAULT_FRAME_LEN: usize = 256;
pub const DEFAULT_PRE_EMPHASIS: f64 = 0.97;

/// Scale between 16-bit PCM and normalized samples.
pub const PCM_FULL_SCALE: f64 = 32768.0;

/// One channel of PCM audio.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AudioClip {
    pub samples: Vec<i16>,
    pub sample_rate: u32,
    pub channel_id: u16,
}

impl AudioClip {
    pub fn new(samples: Vec<i16>, sample_rate: u32) -> Self {
        Self {
            samples,
            sample_rate,
            channel_id: 0,
        }
    }

    pub fn with_channel(mut self, channel_id: u16) -> Self {
        self.channel_id = channel_id;
        self
    }

    /// Builds a clip from normalized samples, rounding and clamping to 16 bits.
    pub fn from_normalized(samples: &[f64], sample_rate: u32) -> Self {
        let samples = samples.iter().map(|&s| to_pcm(s * PCM_FULL_SCALE)).collect();
        Self::new(samples, sample_rate)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Checks the invariants required by every processing call.
    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if self.samples.is_empty() {
            return Err(Error::invalid("audio clip is empty"));
        }
        Ok(())
    }
}

/// Rounds half away from zero and saturates to the 16-bit range.
pub(crate) fn to_pcm(v: f64) -> i16 {
    v.round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FramingStrategy {
    /// The whole clip as one frame (no frame-level parallelism).
    Streaming,
    /// Back-to-back frames, no overlap.
    Segmented,
    /// 50% overlap, the usual MFCC geometry.
    FullyOverlapped,
    /// Partial overlap: hop of two thirds of a frame.
    HalfOverlapped,
}

impl FramingStrategy {
    pub const ALL: [FramingStrategy; 4] = [
        FramingStrategy::Streaming,
        FramingStrategy::Segmented,
        FramingStrategy::FullyOverlapped,
        FramingStrategy::HalfOverlapped,
    ];

    /// Default hop for a frame of `frame_len` samples. Streaming has no hop;
    /// `frame_len` is returned so the geometry stays well formed.
    pub fn default_hop(self, frame_len: usize) -> usize {
        match self {
            FramingStrategy::Streaming | FramingStrategy::Segmented => frame_len,
            FramingStrategy::FullyOverlapped => (frame_len / 2).max(1),
            FramingStrategy::HalfOverlapped => (2 * frame_len).div_ceil(3),
        }
    }
}

/// Framing geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FramePlan {
    pub strategy: FramingStrategy,
    pub frame_len: usize,
    pub hop: usize,
}

impl FramePlan {
    pub fn new(strategy: FramingStrategy, frame_len: usize) -> Result<Self> {
        if frame_len == 0 {
            return Err(Error::invalid("frame length must be positive"));
        }
        Ok(Self {
            strategy,
            frame_len,
            hop: strategy.default_hop(frame_len),
        })
    }

    /// Overrides the derived hop.
    pub fn with_hop(mut self, hop: usize) -> Result<Self> {
        if hop == 0 || hop > self.frame_len {
            return Err(Error::invalid(format!(
                "hop {hop} outside 1..={}",
                self.frame_len
            )));
        }
        self.hop = hop;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.frame_len == 0 || self.hop == 0 || self.hop > self.frame_len {
            return Err(Error::invalid(format!(
                "invalid frame plan: frame_len {} hop {}",
                self.frame_len, self.hop
            )));
        }
        Ok(())
    }

    /// Frame length actually used for a clip of `clip_len` samples.
    pub fn effective_frame_len(&self, clip_len: usize) -> usize {
        match self.strategy {
            FramingStrategy::Streaming => clip_len.max(1),
            _ => self.frame_len,
        }
    }

    /// Number of frames needed so that the last frame covers the final sample.
    pub fn frame_count(&self, clip_len: usize) -> usize {
        match self.strategy {
            FramingStrategy::Streaming => 1,
            _ if clip_len <= self.frame_len => 1,
            _ => (clip_len - self.frame_len).div_ceil(self.hop) + 1,
        }
    }

    /// Samples pushed through the filters, padding included.
    pub fn processed_samples(&self, clip_len: usize) -> usize {
        self.frame_count(clip_len) * self.effective_frame_len(clip_len)
    }
}

/// A window of the clip. Samples past the clip end are zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub index: usize,
    pub start: usize,
    pub samples: Vec<i16>,
}

impl Frame {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn normalized(&self) -> Vec<f64> {
        self.samples
            .iter()
            .map(|&s| s as f64 / PCM_FULL_SCALE)
            .collect()
    }

    /// Samples as `f64` in PCM units (the filter-bank input domain).
    pub fn as_f64(&self) -> Vec<f64> {
        self.samples.iter().map(|&s| s as f64).collect()
    }
}

/// Copies the window `[start, start + len)` of `samples`, zero-padding past
/// the end.
pub fn window(samples: &[i16], start: usize, len: usize) -> Vec<i16> {
    let mut out = vec![0i16; len];
    if start < samples.len() {
        let end = (start + len).min(samples.len());
        out[..end - start].copy_from_slice(&samples[start..end]);
    }
    out
}

pub fn make_frames(clip: &AudioClip, plan: &FramePlan) -> Result<Vec<Frame>> {
    clip.validate()?;
    plan.validate()?;
    let len = plan.effective_frame_len(clip.len());
    let frames = (0..plan.frame_count(clip.len()))
        .map(|index| {
            let start = index * plan.hop;
            Frame {
                index,
                start,
                samples: window(&clip.samples, start, len),
            }
        })
        .collect();
    Ok(frames)
}

/// First-order pre-emphasis `y[n] = x[n] - coeff * x[n-1]`, `y[0] = x[0]`,
/// rounded and saturated to 16 bits.
pub fn pre_emphasize(clip: &AudioClip, coeff: f64) -> Result<AudioClip> {
    clip.validate()?;
    if !(0.0..1.0).contains(&coeff) {
        return Err(Error::invalid(format!(
            "pre-emphasis coefficient {coeff} outside [0, 1)"
        )));
    }
    let mut out = Vec::with_capacity(clip.len());
    let mut prev = 0.0;
    for (n, &s) in clip.samples.iter().enumerate() {
        let x = s as f64;
        let y = if n == 0 { x } else { x - coeff * prev };
        out.push(to_pcm(y));
        prev = x;
    }
    Ok(AudioClip {
        samples: out,
        sample_rate: clip.sample_rate,
        channel_id: clip.channel_id,
    })
}

/// Ratio of samples processed under `a` to those processed under `b`.
pub fn processed_sample_ratio(a: &FramePlan, b: &FramePlan, clip_len: usize) -> f64 {
    a.processed_samples(clip_len) as f64 / b.processed_samples(clip_len) as f64
}
