//! Deterministic pseudo-random numbers.
//!
//! All randomized components of the crate (simulation clocks, sphere
//! sampling, property-test draws) go through [`SplitMix64`] so that results
//! are reproducible given `(algorithm id, seed)`. The state transition is
//! the standard SplitMix64 sequence: add the Weyl constant, then two
//! xor-shift-multiply finalization rounds.

/// Identifier recorded in simulation output metadata.
pub const RNG_ALGORITHM: &str = "splitmix64";

const WEYL: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 generator. Cheap, 64-bit state, full period 2^64.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(WEYL);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform `f64` in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in `[lo, hi)`.
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Exponential variate with the given rate, by inverse CDF on the
    /// uniform draw. `1 - u` keeps the logarithm away from zero.
    pub fn next_exp(&mut self, rate: f64) -> f64 {
        let u = self.next_f64();
        -(1.0 - u).ln() / rate
    }

    /// Standard normal via Box-Muller.
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = (1.0 - self.next_f64()).max(f64::MIN_POSITIVE);
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform direction on the unit sphere restricted to the open
    /// positive orthant (all coordinates strictly positive).
    pub fn orthant_direction(&mut self, dim: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| self.next_gaussian().abs()).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-12 && v.iter().all(|&x| x > 1e-12) {
                return v.into_iter().map(|x| x / n).collect();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_sequence() {
        let mut a = SplitMix64::new(12345);
        let mut b = SplitMix64::new(12345);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn uniform_in_unit_interval() {
        let mut rng = SplitMix64::new(7);
        for _ in 0..10_000 {
            let u = rng.next_f64();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn exponential_mean_close_to_inverse_rate() {
        let mut rng = SplitMix64::new(99);
        let n = 200_000;
        let mean = (0..n).map(|_| rng.next_exp(2.0)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean = {mean}");
    }

    #[test]
    fn orthant_direction_is_unit_and_positive() {
        let mut rng = SplitMix64::new(4);
        for _ in 0..100 {
            let v = rng.orthant_direction(3);
            let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-12);
            assert!(v.iter().all(|&x| x > 0.0));
        }
    }
}
