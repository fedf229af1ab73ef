/// Piecewise-linear log2 table over the mantissa range `[1, 2)`.
///
/// An input `x = 2^e * m` maps to `e + table(m)`. Non-positive inputs map to
/// `floor`.
#[derive(Debug, Clone, PartialEq)]
pub struct Log2Lut {
    /// `n_entries + 1` breakpoints; the last is exactly 1.0.
    table: Vec<f64>,
    pub floor: f64,
}

pub const DEFAULT_LUT_ENTRIES: usize = 64;

/// log2 of one LSB squared in PCM units.
pub const DEFAULT_LOG_FLOOR: f64 = 0.0;

impl Default for Log2Lut {
    fn default() -> Self {
        Self::new(DEFAULT_LUT_ENTRIES, DEFAULT_LOG_FLOOR)
    }
}

impl Log2Lut {
    pub fn new(n_entries: usize, floor: f64) -> Self {
        assert!(n_entries > 0, "table needs at least one segment");
        let table = (0..=n_entries)
            .map(|i| (1.0 + i as f64 / n_entries as f64).log2())
            .collect();
        Self { table, floor }
    }

    pub fn n_entries(&self) -> usize {
        self.table.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return self.floor;
        }
        if x.is_infinite() {
            return f64::INFINITY;
        }
        let (exp, mant) = split(x);
        let pos = (mant - 1.0) * self.n_entries() as f64;
        let i = (pos as usize).min(self.n_entries() - 1);
        let t = pos - i as f64;
        exp as f64 + self.table[i] + t * (self.table[i + 1] - self.table[i])
    }
}

/// Splits a positive finite `x` into `(e, m)` with `x = 2^e * m`, `m` in `[1, 2)`.
fn split(x: f64) -> (i32, f64) {
    const MANT_MASK: u64 = (1 << 52) - 1;
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    if biased == 0 {
        // subnormal
        let (e, m) = split(x * 2f64.powi(64));
        return (e - 64, m);
    }
    let mant = f64::from_bits((bits & MANT_MASK) | (1023u64 << 52));
    (biased - 1023, mant)
}

pub fn log2_feature(energies: &[f64], lut: &Log2Lut) -> Vec<f64> {
    energies.iter().map(|&e| lut.eval(e)).collect()
}
