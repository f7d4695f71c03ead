//! Float helpers that work without `std`, plus the categorical draw used by
//! every sampler in the crate.

use rand::RngCore;

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn log2(x: f64) -> f64 {
    libm::log2(x)
}

/// `ln(Σ exp(v))` without overflow. Returns `-inf` for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|&v| exp(v - max)).sum();
    max + ln(sum)
}

/// Uniform draw in `[0, 1)` built from the top 53 bits of a 64-bit word.
#[inline]
pub fn unit_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Inverse-CDF draw from unnormalized non-negative weights.
///
/// At least one weight must be positive.
pub fn draw_categorical<R: RngCore + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    debug_assert!(total > 0.0 && total.is_finite(), "degenerate weights");
    let target = unit_f64(rng) * total;
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            cumulative += w;
            last_positive = i;
            if target < cumulative {
                return i;
            }
        }
    }
    // rounding can leave target == total
    last_positive
}

/// Normalizes `values` in place so that they sum to one.
pub fn normalize(values: &mut [f64]) {
    let total: f64 = values.iter().sum();
    for v in values.iter_mut() {
        *v /= total;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    #[test]
    fn log_sum_exp_handles_large_magnitudes() {
        let v = [-1000.0, -1000.0];
        assert!((log_sum_exp(&v) - (-1000.0 + ln(2.0))).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn categorical_skips_zero_weights() {
        let mut rng = seeded_rng(1);
        for _ in 0..1000 {
            let i = draw_categorical(&[0.0, 1.0, 0.0, 3.0], &mut rng);
            assert!(i == 1 || i == 3);
        }
    }

    #[test]
    fn categorical_frequencies() {
        let mut rng = seeded_rng(7);
        let mut hits = [0usize; 3];
        let n = 100_000;
        for _ in 0..n {
            hits[draw_categorical(&[1.0, 2.0, 7.0], &mut rng)] += 1;
        }
        let freq: std::vec::Vec<f64> = hits.iter().map(|&h| h as f64 / n as f64).collect();
        assert!((freq[0] - 0.1).abs() < 0.01);
        assert!((freq[1] - 0.2).abs() < 0.01);
        assert!((freq[2] - 0.7).abs() < 0.01);
    }
}
