use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    /// Unbiased sample variance.
    pub var: f64,
}

impl Moments {
    pub fn se_mean(&self) -> f64 {
        (self.var / self.count as f64).sqrt()
    }
}

/// Two-pass mean and variance; a fixed summation order keeps results
/// bit-identical for identical inputs.
pub fn moments(xs: &[f64]) -> Moments {
    let count = xs.len() as u64;
    if count == 0 {
        return Moments {
            count,
            mean: f64::NAN,
            var: f64::NAN,
        };
    }
    let mean = xs.iter().sum::<f64>() / count as f64;
    let var = if count > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (count - 1) as f64
    } else {
        f64::NAN
    };
    Moments { count, mean, var }
}

/// Wilson score interval for `hits` successes out of `trials`.
pub fn wilson_interval(hits: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if hits == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let hi = if hits == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo, hi)
}

/// FNV-1a over bytes; stable across platforms and toolchains.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use rand::Rng;

    #[test]
    fn moments_basic() {
        let m = moments(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.var - 5.0 / 3.0).abs() < 1e-15);
        assert!(moments(&[]).mean.is_nan());
    }

    #[test]
    fn wilson_contains_estimate() {
        for (h, n) in [(0, 10), (3, 10), (10, 10), (1, 100_000), (500, 1000)] {
            let (lo, hi) = wilson_interval(h, n, Z95);
            let p = h as f64 / n as f64;
            assert!(lo <= p && p <= hi, "{h}/{n}: [{lo}, {hi}]");
        }
        let (lo, hi) = wilson_interval(50, 100, Z95);
        assert!((lo - 0.4038).abs() < 1e-4 && (hi - 0.5962).abs() < 1e-4);
    }

    #[test]
    fn wilson_coverage() {
        let mut rng = RngStream::new(17, 0);
        for p in [0.1, 0.3] {
            let trials = 1000;
            let n = 200;
            let covered = (0..trials)
                .filter(|_| {
                    let hits = (0..n).filter(|_| rng.random::<f64>() < p).count() as u64;
                    let (lo, hi) = wilson_interval(hits, n, Z95);
                    lo <= p && p <= hi
                })
                .count();
            assert!(covered >= 930, "p = {p}: {covered}/1000");
        }
    }

    #[test]
    fn fnv_reference() {
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
    }
}
