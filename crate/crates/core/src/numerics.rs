//! Shared tolerances and small numerical helpers.

use serde::{Deserialize, Serialize};

/// Tolerances shared by every module.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    /// Absolute tolerance for closed-form identities.
    pub abs_tol: f64,
    /// Relative tolerance for closed-form identities.
    pub rel_tol: f64,
    /// Interior-only operations reject points with `|z| > 1 - boundary_guard`.
    pub boundary_guard: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            boundary_guard: 1e-12,
        }
    }
}

impl NumericsConfig {
    pub fn close(&self, a: f64, b: f64) -> bool {
        let diff = (a - b).abs();
        diff <= self.abs_tol || diff <= self.rel_tol * a.abs().max(b.abs())
    }
}

/// Kahan-Babuska-Neumaier compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(mut self, other: CompensatedSum) -> CompensatedSum {
        self.add(other.sum);
        self.add(other.comp);
        self
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Deterministic 64-bit stream splitter (SplitMix64 finalizer).
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
