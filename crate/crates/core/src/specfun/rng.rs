use crate::{Error, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based 64-bit generator: output `i` is `mix64(key + i * GOLDEN_GAMMA)`.
///
/// Streams for `(seed, scenario, trial, ...)` are derived by hashing the path
/// into the key, so trials never share or overlap sequences and can run in
/// any order.
#[derive(Debug, Clone, PartialEq)]
pub struct SeededRng {
    key: u64,
    counter: u64,
    spare: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self { key: mix64(seed), counter: 0, spare: None }
    }

    /// Generator for the stream identified by `path` under `seed`.
    pub fn derive(seed: u64, path: &[u64]) -> Self {
        let key = path
            .iter()
            .fold(mix64(seed), |k, &s| mix64(k ^ mix64(s.wrapping_add(GOLDEN_GAMMA))));
        Self { key, counter: 0, spare: None }
    }

    /// Independent child stream; does not advance `self`.
    pub fn fork(&self, stream: u64) -> Self {
        Self::derive(self.key, &[stream])
    }

    /// Key of this stream, recorded alongside trial outputs.
    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA)))
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..bound` (Lemire's method, unbiased).
    pub fn below(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "below(0)");
        let bound = bound as u64;
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = (self.next_u64() as u128) * (bound as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as usize;
            }
        }
    }

    /// Standard normal draw by the Box-Muller transform.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }
}

pub fn gaussian_sample(rng: &mut SeededRng, mean: f64, sd: f64) -> Result<f64> {
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::Domain(format!("standard deviation must be positive, got {sd}")));
    }
    Ok(mean + sd * rng.standard_normal())
}
