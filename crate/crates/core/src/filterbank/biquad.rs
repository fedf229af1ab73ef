use std::f64::consts::PI;

/// Second-order section, normalized so that `a0 = 1`:
///
/// `y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2]`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiquadCoeffs {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl BiquadCoeffs {
    pub const IDENTITY: BiquadCoeffs = BiquadCoeffs {
        b0: 1.0,
        b1: 0.0,
        b2: 0.0,
        a1: 0.0,
        a2: 0.0,
    };

    /// Normalizes `[b0, b1, b2] / [a0, a1, a2]`.
    pub fn from_ba(b: [f64; 3], a: [f64; 3]) -> Self {
        let a0 = a[0];
        Self {
            b0: b[0] / a0,
            b1: b[1] / a0,
            b2: b[2] / a0,
            a1: a[1] / a0,
            a2: a[2] / a0,
        }
    }

    /// Largest pole magnitude, i.e. the largest root of `z^2 + a1 z + a2`.
    pub fn pole_radius(&self) -> f64 {
        let disc = self.a1 * self.a1 - 4.0 * self.a2;
        if disc < 0.0 {
            // complex pair: |z|^2 = a2
            self.a2.sqrt()
        } else {
            let s = disc.sqrt();
            ((-self.a1 + s) / 2.0).abs().max(((-self.a1 - s) / 2.0).abs())
        }
    }

    pub fn is_stable(&self) -> bool {
        self.a2.abs() < 1.0 && self.a1.abs() < 1.0 + self.a2
    }

    /// Magnitude response at `freq_hz` for sample rate `fs`.
    pub fn magnitude(&self, freq_hz: f64, fs: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / fs;
        let (c1, s1) = (w.cos(), -w.sin());
        let (c2, s2) = ((2.0 * w).cos(), -(2.0 * w).sin());
        let num = (self.b0 + self.b1 * c1 + self.b2 * c2, self.b1 * s1 + self.b2 * s2);
        let den = (1.0 + self.a1 * c1 + self.a2 * c2, self.a1 * s1 + self.a2 * s2);
        (num.0.hypot(num.1)) / (den.0.hypot(den.1))
    }
}

/// Filter memory of a transposed direct-form II section.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BiquadState {
    pub s1: f64,
    pub s2: f64,
}

impl BiquadState {
    #[inline]
    pub fn step(&mut self, c: &BiquadCoeffs, x: f64) -> f64 {
        let y = c.b0 * x + self.s1;
        self.s1 = c.b1 * x - c.a1 * y + self.s2;
        self.s2 = c.b2 * x - c.a2 * y;
        y
    }
}

/// Runs `x` through one section starting from `state`; `state` is left
/// holding the memory after the last sample so calls can be chained.
pub fn biquad_filter(x: &[f64], c: &BiquadCoeffs, state: &mut BiquadState) -> Vec<f64> {
    x.iter().map(|&v| state.step(c, v)).collect()
}

/// Runs `x` through a cascade. `states` must have one entry per section.
pub fn cascade_filter(x: &[f64], chain: &[BiquadCoeffs], states: &mut [BiquadState]) -> Vec<f64> {
    assert_eq!(chain.len(), states.len(), "one state per section");
    x.iter()
        .map(|&v| {
            chain
                .iter()
                .zip(states.iter_mut())
                .fold(v, |acc, (c, s)| s.step(c, acc))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn resonator() -> BiquadCoeffs {
        // poles at radius 0.95, angle pi/8
        let r: f64 = 0.95;
        let th = PI / 8.0;
        BiquadCoeffs {
            b0: 0.05,
            b1: 0.0,
            b2: -0.05,
            a1: -2.0 * r * th.cos(),
            a2: r * r,
        }
    }

    #[test]
    fn zero_in_zero_out() {
        let y = biquad_filter(&[0.0; 64], &resonator(), &mut BiquadState::default());
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_passes_impulse() {
        let mut x = vec![0.0; 16];
        x[0] = 1.0;
        let y = biquad_filter(&x, &BiquadCoeffs::IDENTITY, &mut BiquadState::default());
        assert_eq!(x, y);
    }

    #[test]
    fn stability_and_radius() {
        let c = resonator();
        assert!(c.is_stable());
        assert!((c.pole_radius() - 0.95).abs() < 1e-12);
        let unstable = BiquadCoeffs { a2: 1.01, ..c };
        assert!(!unstable.is_stable());
        let real = BiquadCoeffs { a1: -1.5, a2: 0.56, ..c }; // roots 0.8, 0.7
        assert!((real.pole_radius() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn dc_gain_from_response() {
        let c = BiquadCoeffs::from_ba([1.0, 2.0, 1.0], [4.0, 0.0, 0.0]);
        assert!((c.magnitude(0.0, 16_000.0) - 1.0).abs() < 1e-12);
        assert!(c.magnitude(8_000.0, 16_000.0) < 1e-12);
    }

    proptest! {
        #[test]
        fn linear_in_input(x in proptest::collection::vec(-1.0f64..1.0, 1..200), k in -100.0f64..100.0) {
            let c = resonator();
            let y = biquad_filter(&x, &c, &mut BiquadState::default());
            let xs: Vec<f64> = x.iter().map(|v| v * k).collect();
            let ys = biquad_filter(&xs, &c, &mut BiquadState::default());
            for (a, b) in y.iter().zip(&ys) {
                prop_assert!((a * k - b).abs() <= 1e-9 * (1.0 + b.abs()));
            }
        }

        #[test]
        fn chained_state_matches_single_pass(
            x in proptest::collection::vec(-1.0f64..1.0, 2..300),
            cut in 1usize..299,
        ) {
            let cut = cut.min(x.len() - 1);
            let c = resonator();
            let whole = biquad_filter(&x, &c, &mut BiquadState::default());
            let mut st = BiquadState::default();
            let mut parts = biquad_filter(&x[..cut], &c, &mut st);
            parts.extend(biquad_filter(&x[cut..], &c, &mut st));
            prop_assert_eq!(whole, parts);
        }
    }
}
