//! Deterministic pseudo-random numbers for dataset generation and tests.
//!
//! A fixed in-crate generator keeps every seeded pipeline bit-identical
//! across platforms and dependency upgrades.

use crate::geometry::UnitVector;

/// SplitMix64 generator. Passes through all 2^64 states; plenty for the
/// sampling needs here (means on the sphere, fold shuffling, test data).
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
    spare_normal: Option<f64>,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self {
            state: seed,
            spare_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn uniform_usize(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    /// Standard normal via Box-Muller, caching the spare deviate.
    pub fn normal(&mut self) -> f64 {
        if let Some(s) = self.spare_normal.take() {
            return s;
        }
        loop {
            let u = self.next_f64();
            let v = self.next_f64();
            if u > 1e-300 {
                let r = (-2.0 * u.ln()).sqrt();
                let a = std::f64::consts::TAU * v;
                self.spare_normal = Some(r * a.sin());
                return r * a.cos();
            }
        }
    }

    /// Uniform point on the unit sphere (area measure).
    pub fn unit_vector(&mut self) -> UnitVector {
        let z = self.uniform(-1.0, 1.0);
        let phi = self.uniform(0.0, std::f64::consts::TAU);
        let s = (1.0 - z * z).max(0.0).sqrt();
        UnitVector::new(s * phi.cos(), s * phi.sin(), z).expect("nonzero by construction")
    }
}
