//! Seeded synthetic clips: tone bursts and a speech-like corpus shaped after
//! one-second keyword recordings (a word in the middle, noise floor around
//! it, voiced syllables with fricative onsets).

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::signal::AudioClip;

fn db(v: f64) -> f64 {
    10f64.powf(v / 20.0)
}

/// A sine of `freq` Hz between `start_s` and `end_s`, silence elsewhere.
pub fn tone_burst(
    freq: f64,
    amplitude: f64,
    start_s: f64,
    end_s: f64,
    duration_s: f64,
    sample_rate: u32,
) -> AudioClip {
    let fs = sample_rate as f64;
    let n = (duration_s * fs).round() as usize;
    let (a, b) = ((start_s * fs) as usize, (end_s * fs) as usize);
    let x: Vec<f64> = (0..n)
        .map(|i| {
            if (a..b).contains(&i) {
                amplitude * (2.0 * PI * freq * i as f64 / fs).sin()
            } else {
                0.0
            }
        })
        .collect();
    AudioClip::from_normalized(&x, sample_rate)
}

/// Knobs for [`speech_like`]. Levels are dBFS.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeechParams {
    pub duration_s: f64,
    pub sample_rate: u32,
    pub noise_db: (f64, f64),
    /// Pole of the low-pass shaping the background noise.
    pub noise_pole: (f64, f64),
    pub word_s: (f64, f64),
    pub syllables: (usize, usize),
    pub peak_db: (f64, f64),
    pub f0_hz: (f64, f64),
    pub fricative_prob: f64,
    pub fricative_db: (f64, f64),
}

impl Default for SpeechParams {
    fn default() -> Self {
        Self {
            duration_s: 1.0,
            sample_rate: 16_000,
            noise_db: (-60.0, -45.0),
            noise_pole: (0.85, 0.98),
            word_s: (0.55, 0.9),
            syllables: (1, 3),
            peak_db: (-6.0, -0.5),
            f0_hz: (90.0, 240.0),
            fricative_prob: 0.35,
            fricative_db: (-26.0, -16.0),
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

/// Two-pole resonance gain at `f` for a formant at `fc` with bandwidth `bw`.
fn formant_gain(f: f64, fc: f64, bw: f64) -> f64 {
    let d = (f - fc) / (bw / 2.0);
    1.0 / (1.0 + d * d).sqrt()
}

fn add_voiced(x: &mut [f64], start: usize, len: usize, rng: &mut ChaCha8Rng, p: &SpeechParams, amp: f64) {
    let fs = p.sample_rate as f64;
    let f0 = uniform(rng, p.f0_hz);
    let glide = uniform(rng, (-0.15, 0.15));
    let f1 = uniform(rng, (300.0, 900.0));
    let f2 = uniform(rng, (900.0, 2500.0));
    let n_harm = ((3800.0 / f0) as usize).max(1);
    let phases: Vec<f64> = (0..n_harm).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
    let gains: Vec<f64> = (1..=n_harm)
        .map(|h| {
            let f = h as f64 * f0;
            (formant_gain(f, f1, 120.0) + 0.6 * formant_gain(f, f2, 200.0)) / (h as f64).sqrt()
        })
        .collect();
    let norm: f64 = gains.iter().sum();
    let mut phase = 0.0;
    for i in 0..len.min(x.len().saturating_sub(start)) {
        let t = i as f64 / len as f64;
        let env = (PI * t).sin().powf(0.6);
        phase += 2.0 * PI * f0 * (1.0 + glide * t) / fs;
        let s: f64 = gains
            .iter()
            .zip(&phases)
            .enumerate()
            .map(|(h, (g, ph))| g * ((h + 1) as f64 * phase + ph).sin())
            .sum();
        x[start + i] += amp * env * s / norm;
    }
}

fn add_fricative(x: &mut [f64], start: usize, len: usize, rng: &mut ChaCha8Rng, amp: f64) {
    let white = Normal::new(0.0, 1.0).expect("unit normal");
    for i in 0..len.min(x.len().saturating_sub(start)) {
        let t = i as f64 / len as f64;
        x[start + i] += amp * (PI * t).sin() * white.sample(rng);
    }
}

/// One speech-like clip. The same seed always gives the same samples.
pub fn speech_like(seed: u64, p: &SpeechParams) -> AudioClip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fs = p.sample_rate as f64;
    let n = (p.duration_s * fs).round() as usize;
    // room noise: one-pole low-passed white noise, rescaled to the drawn level
    let pole = uniform(&mut rng, p.noise_pole);
    let white = Normal::new(0.0, 1.0).expect("unit normal");
    let mut state = 0.0;
    let gain = db(uniform(&mut rng, p.noise_db)) * (1.0 - pole * pole).sqrt();
    let mut x: Vec<f64> = (0..n)
        .map(|_| {
            state = pole * state + white.sample(&mut rng);
            gain * state
        })
        .collect();

    let word = uniform(&mut rng, p.word_s).min(p.duration_s * 0.95);
    let onset = uniform(&mut rng, (0.02, (p.duration_s - word - 0.02).max(0.03)));
    let n_syl = rng.gen_range(p.syllables.0..=p.syllables.1.max(p.syllables.0));
    let peak = db(uniform(&mut rng, p.peak_db));

    // split the word into syllables with short gaps
    let weights: Vec<f64> = (0..n_syl).map(|_| rng.gen_range(0.6..1.4)).collect();
    let total: f64 = weights.iter().sum();
    let mut t = onset;
    for w in weights {
        let span = word * w / total;
        let gap = span * rng.gen_range(0.0..0.15);
        let mut body = span - gap;
        if rng.gen_bool(p.fricative_prob) {
            let fric = body * rng.gen_range(0.2..0.4);
            let amp = db(uniform(&mut rng, p.fricative_db));
            add_fricative(&mut x, (t * fs) as usize, (fric * fs) as usize, &mut rng, amp);
            t += fric * 0.8;
            body -= fric * 0.8;
        }
        let amp = peak * rng.gen_range(0.5..1.0);
        add_voiced(&mut x, (t * fs) as usize, (body * fs) as usize, &mut rng, p, amp);
        t += body + gap;
    }

    let max = x.iter().fold(0f64, |m, v| m.max(v.abs()));
    if max > 0.99 {
        x.iter_mut().for_each(|v| *v *= 0.99 / max);
    }
    AudioClip::from_normalized(&x, p.sample_rate)
}

/// `n` clips seeded `base_seed, base_seed + 1, ...`.
pub fn speech_corpus(n: usize, base_seed: u64, p: &SpeechParams) -> Vec<AudioClip> {
    (0..n as u64).map(|i| speech_like(base_seed + i, p)).collect()
}
