//! Shared by the golden and acceptance targets: test clips and a direct
//! re-evaluation of the float front end.
#![allow(dead_code)]

use std::path::PathBuf;

use kwsfe::filterbank::{BiquadCoeffs, FeatureMatrix};
use kwsfe::pipeline::{read_csv, PipelineConfig};
use kwsfe::signal::AudioClip;
use kwsfe::synth::tone_burst;

pub const L: usize = 256;
pub const HOP: usize = 171;

pub fn burst() -> AudioClip {
    tone_burst(1000.0, 0.5, 0.3, 0.7, 1.0, 16_000)
}

/// A bright burst followed by a soft low one; the second half lands on stride 2.
pub fn two_tone() -> AudioClip {
    let a = tone_burst(3000.0, 0.5, 0.15, 0.45, 1.0, 16_000);
    let b = tone_burst(300.0, 0.3, 0.45, 0.8, 1.0, 16_000);
    let samples = a.samples.iter().zip(&b.samples).map(|(x, y)| x.saturating_add(*y)).collect();
    AudioClip::new(samples, 16_000)
}

pub fn float_config() -> PipelineConfig {
    PipelineConfig {
        fixed_point: false,
        ..PipelineConfig::default()
    }
}

/// Direct form I, written out longhand.
pub fn df1(x: &[f64], c: &BiquadCoeffs) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    for n in 0..x.len() {
        let xm = |k: usize| if n >= k { x[n - k] } else { 0.0 };
        let ym = |y: &[f64], k: usize| if n >= k { y[n - k] } else { 0.0 };
        y[n] = c.b0 * xm(0) + c.b1 * xm(1) + c.b2 * xm(2) - c.a1 * ym(&y, 1) - c.a2 * ym(&y, 2);
    }
    y
}

struct OracleFrame {
    raw: Vec<f64>,
    emph: Vec<f64>,
    ste: f64,
    score: f64,
}

/// Strides and features computed from the definitions, sharing only the
/// designed coefficients with the library.
pub fn oracle(clip: &AudioClip, cfg: &PipelineConfig) -> (Vec<u8>, Vec<(usize, Vec<f64>)>) {
    let bank = cfg.filter_bank().unwrap();
    let x: Vec<f64> = clip.samples.iter().map(|&s| s as f64).collect();
    let emph: Vec<f64> = (0..x.len())
        .map(|n| {
            let v = if n == 0 { x[0] } else { x[n] - 0.97 * x[n - 1] };
            v.round().clamp(-32768.0, 32767.0)
        })
        .collect();
    let n_frames = (x.len() - L).div_ceil(HOP) + 1;
    let frames: Vec<OracleFrame> = (0..n_frames)
        .map(|i| {
            let take = |v: &[f64]| -> Vec<f64> {
                (0..L).map(|k| v.get(i * HOP + k).copied().unwrap_or(0.0)).collect()
            };
            let raw = take(&x);
            let norm: Vec<f64> = raw.iter().map(|v| v / 32768.0).collect();
            let ste: f64 = norm.iter().map(|v| v * v).sum();
            let mut zcc = 0;
            for k in 1..L {
                if (norm[k] >= 0.0) != (norm[k - 1] >= 0.0) {
                    zcc += 1;
                }
            }
            let hi = norm.iter().cloned().fold(f64::MIN, f64::max);
            let lo = norm.iter().cloned().fold(f64::MAX, f64::min);
            let score = zcc as f64 / (L - 1) as f64 + 0.5 * (hi - lo) / 2.0;
            OracleFrame {
                emph: take(&emph),
                raw,
                ste,
                score,
            }
        })
        .collect();

    let max_ste = frames.iter().map(|f| f.ste).fold(0.0, f64::max);
    let max_score = frames.iter().map(|f| f.score).fold(0.0, f64::max);
    let th1 = max_ste / 64.0;
    let th2 = max_score * 0.5;
    let strides: Vec<u8> = frames
        .iter()
        .map(|f| {
            if max_ste == 0.0 || f.ste < th1 {
                0
            } else if f.score < th2 {
                2
            } else {
                1
            }
        })
        .collect();

    let half = |raw: &[f64]| -> Vec<f64> {
        let mut y = raw.to_vec();
        for c in &bank.lpf_chain {
            y = df1(&y, c);
        }
        y.into_iter().step_by(2).collect()
    };
    let ste_of = |v: &[f64]| v.iter().map(|s| (s / 32768.0).powi(2)).sum::<f64>();

    // boost per frame: mean boundary ratio of the enclosing stride-2 run
    let mut gain = vec![2.0; n_frames];
    let mut i = 0;
    while i < n_frames {
        if strides[i] != 2 {
            i += 1;
            continue;
        }
        let first = i;
        while i + 1 < n_frames && strides[i + 1] == 2 {
            i += 1;
        }
        let mut ratios = Vec::new();
        for j in [first.wrapping_sub(1), i + 1] {
            if j < n_frames && strides[j] == 1 {
                let s2 = ste_of(&half(&frames[j].raw));
                if s2 > 0.0 {
                    ratios.push(frames[j].ste / s2);
                }
            }
        }
        if !ratios.is_empty() {
            let g = ratios.iter().sum::<f64>() / ratios.len() as f64;
            gain[first..=i].iter_mut().for_each(|v| *v = g);
        }
        i += 1;
    }

    let log2 = |e: f64| if e > 0.0 { e.log2() } else { 0.0 };
    let rows = (0..n_frames)
        .filter(|&i| strides[i] != 0)
        .map(|i| {
            let values = if strides[i] == 1 {
                bank.band_filters
                    .iter()
                    .map(|c| log2(df1(&frames[i].emph, c).iter().map(|v| v * v).sum()))
                    .collect()
            } else {
                let d = half(&frames[i].raw);
                bank.half_rate_filters
                    .iter()
                    .map(|c| match c {
                        Some(c) => log2(gain[i] * df1(&d, c).iter().map(|v| v * v).sum::<f64>()),
                        None => 0.0,
                    })
                    .collect()
            };
            (i, values)
        })
        .collect();
    (strides, rows)
}

pub fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/two_tone_features.csv")
}


pub fn load_fixture() -> FeatureMatrix {
    let path = fixture_path();
    let text = std::fs::read(&path).unwrap_or_else(|_| panic!("missing fixture {}", path.display()));
    read_csv(&text[..]).expect("fixture parses")
}

/// Largest per-value difference, or `None` when the shapes disagree.
pub fn fixture_gap(want: &FeatureMatrix, got: &FeatureMatrix) -> Option<f32> {
    if want.n_bands != got.n_bands || want.n_rows() != got.n_rows() {
        return None;
    }
    let mut worst = 0f32;
    for (a, b) in want.rows.iter().zip(&got.rows) {
        if a.frame_index != b.frame_index || a.stride != b.stride {
            return None;
        }
        for (x, y) in a.values.iter().zip(&b.values) {
            worst = worst.max((x - y).abs());
        }
    }
    Some(worst)
}
