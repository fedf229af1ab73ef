//! Frame skipping and stride selection.
//!
//! Frames whose short-time energy falls below `th1 = 0.5^n1 * max(STE)` are
//! skipped. The rest are scored with
//! `S = alpha * ZCC / (L - 1) + beta * A_diff / 2` (both terms in `[0, 1]`
//! on normalized samples) and sent to half-rate filtering when
//! `S < th2 = r2 * max(S)`. Both thresholds are relative to the clip itself.

use serde::{Deserialize, Serialize};

use crate::signal::Frame;

/// Per-frame filtering decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Stride {
    Skip = 0,
    Full = 1,
    Half = 2,
}

impl Stride {
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Stride::Skip),
            1 => Some(Stride::Full),
            2 => Some(Stride::Half),
            _ => None,
        }
    }
}

impl From<Stride> for u8 {
    fn from(s: Stride) -> u8 {
        s.as_u8()
    }
}

impl TryFrom<u8> for Stride {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, String> {
        Stride::from_u8(v).ok_or_else(|| format!("invalid stride label {v}"))
    }
}

pub const DEFAULT_TH1_EXP: u32 = 6;
pub const DEFAULT_TH2_RATIO: f64 = 0.5;
pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_BETA: f64 = 0.5;
/// Boost applied when a stride-2 run has no usable stride-1 neighbor.
pub const FALLBACK_BOOST: f64 = 2.0;

pub fn short_time_energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Sign changes between consecutive samples; zero counts as positive.
pub fn zero_crossing_count(x: &[f64]) -> usize {
    x.windows(2)
        .filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0))
        .count()
}

pub fn amplitude_difference(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi - lo
}

pub fn sparsity_score(x: &[f64], alpha: f64, beta: f64) -> f64 {
    FrameScore::compute(x, alpha, beta).s_frame
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameScore {
    pub ste: f64,
    pub zcc: usize,
    pub a_diff: f64,
    pub s_frame: f64,
}

impl FrameScore {
    /// Scores normalized samples.
    pub fn compute(x: &[f64], alpha: f64, beta: f64) -> Self {
        let zcc = zero_crossing_count(x);
        let a_diff = amplitude_difference(x);
        let zcc_norm = if x.len() > 1 {
            zcc as f64 / (x.len() - 1) as f64
        } else {
            0.0
        };
        Self {
            ste: short_time_energy(x),
            zcc,
            a_diff,
            s_frame: alpha * zcc_norm + beta * a_diff / 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrideConfig {
    /// `n1` in `th1 = 0.5^n1 * max(STE)`.
    pub th1_exp: u32,
    /// `r2` in `th2 = r2 * max(S)`.
    pub th2_ratio: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for StrideConfig {
    fn default() -> Self {
        Self {
            th1_exp: DEFAULT_TH1_EXP,
            th2_ratio: DEFAULT_TH2_RATIO,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StridePlan {
    pub strides: Vec<Stride>,
    pub scores: Vec<FrameScore>,
    pub th1: f64,
    pub th2: f64,
    pub max_ste: f64,
    pub max_score: f64,
    /// `Some` exactly for stride-2 frames.
    pub boost_factors: Vec<Option<f64>>,
    pub frame_len: usize,
    /// Clip length the plan was built for; sizes the pre-emphasis pass.
    pub n_samples: usize,
}

/// A maximal run of consecutive stride-2 frames and its stride-1 neighbors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stride2Run {
    pub first: usize,
    pub last: usize,
    pub left: Option<usize>,
    pub right: Option<usize>,
}

pub fn stride2_runs(strides: &[Stride]) -> Vec<Stride2Run> {
    let mut runs = Vec::new();
    let mut i = 0;
    while i < strides.len() {
        if strides[i] != Stride::Half {
            i += 1;
            continue;
        }
        let first = i;
        while i + 1 < strides.len() && strides[i + 1] == Stride::Half {
            i += 1;
        }
        let last = i;
        let left = first
            .checked_sub(1)
            .filter(|&j| strides[j] == Stride::Full);
        let right = Some(last + 1).filter(|&j| strides.get(j) == Some(&Stride::Full));
        runs.push(Stride2Run {
            first,
            last,
            left,
            right,
        });
        i += 1;
    }
    runs
}

/// STE of one boundary frame computed at full rate and at half rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEnergy {
    pub stride1: f64,
    pub stride2: f64,
}

impl BoundaryEnergy {
    pub fn ratio(&self) -> Option<f64> {
        let r = self.stride1 / self.stride2;
        (self.stride1 > 0.0 && self.stride2 > 0.0 && r.is_finite()).then_some(r)
    }
}

/// Mean stride-1 / stride-2 energy ratio over the usable boundaries of a run.
pub fn boost_factor(boundaries: &[BoundaryEnergy]) -> f64 {
    let ratios: Vec<f64> = boundaries.iter().filter_map(BoundaryEnergy::ratio).collect();
    if ratios.is_empty() {
        FALLBACK_BOOST
    } else {
        ratios.iter().sum::<f64>() / ratios.len() as f64
    }
}

impl StridePlan {
    pub fn n_frames(&self) -> usize {
        self.strides.len()
    }

    pub fn count(&self, stride: Stride) -> usize {
        self.strides.iter().filter(|&&s| s == stride).count()
    }

    pub fn retained(&self) -> usize {
        self.n_frames() - self.count(Stride::Skip)
    }

    pub fn with_clip_len(mut self, n_samples: usize) -> Self {
        self.n_samples = n_samples;
        self
    }

    /// Samples filtered under this plan: full frames for stride 1, half
    /// frames for stride 2.
    pub fn processed_samples(&self) -> usize {
        self.count(Stride::Full) * self.frame_len + self.count(Stride::Half) * self.frame_len.div_ceil(2)
    }

    /// Recomputes every stride-2 boost from the boundary frames of its run.
    /// `energy_of(i)` evaluates frame `i` (a stride-1 neighbor) both ways.
    pub fn assign_boost<F>(&mut self, mut energy_of: F)
    where
        F: FnMut(usize) -> BoundaryEnergy,
    {
        for run in stride2_runs(&self.strides) {
            let boundaries: Vec<BoundaryEnergy> =
                run.left.into_iter().chain(run.right).map(&mut energy_of).collect();
            let g = boost_factor(&boundaries);
            for b in &mut self.boost_factors[run.first..=run.last] {
                *b = Some(g);
            }
        }
    }
}

/// Labels every frame. Boost factors start at [`FALLBACK_BOOST`]; call
/// [`StridePlan::assign_boost`] once boundary energies are known.
pub fn build_stride_plan(frames: &[Frame], cfg: &StrideConfig) -> StridePlan {
    let scores: Vec<FrameScore> = frames
        .iter()
        .map(|f| FrameScore::compute(&f.normalized(), cfg.alpha, cfg.beta))
        .collect();
    let frame_len = frames.first().map_or(0, Frame::len);
    let n_samples = frames.last().map_or(0, |f| f.start + f.len());
    plan_from_scores(scores, cfg, frame_len, n_samples)
}

pub fn plan_from_scores(
    scores: Vec<FrameScore>,
    cfg: &StrideConfig,
    frame_len: usize,
    n_samples: usize,
) -> StridePlan {
    let max_ste = scores.iter().map(|s| s.ste).fold(0.0, f64::max);
    let max_score = scores.iter().map(|s| s.s_frame).fold(0.0, f64::max);
    let th1 = 0.5f64.powi(cfg.th1_exp as i32) * max_ste;
    let th2 = cfg.th2_ratio * max_score;
    let strides: Vec<Stride> = scores
        .iter()
        .map(|s| {
            // silence: nothing to keep
            if max_ste <= 0.0 || s.ste < th1 {
                Stride::Skip
            } else if s.s_frame < th2 {
                Stride::Half
            } else {
                Stride::Full
            }
        })
        .collect();
    let boost_factors = strides
        .iter()
        .map(|&s| (s == Stride::Half).then_some(FALLBACK_BOOST))
        .collect();
    StridePlan {
        strides,
        scores,
        th1,
        th2,
        max_ste,
        max_score,
        boost_factors,
        frame_len,
        n_samples,
    }
}
