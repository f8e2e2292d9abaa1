use serde::{Deserialize, Serialize};

use super::MetricError;

/// Shannon entropy of a quantized sample distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyValue {
    pub bits: f64,
    /// `bits / log2(occupied_bins)`, or 0 when a single bin is occupied.
    pub normalized: f64,
    pub bin_width: f64,
    pub sample_count: usize,
    pub occupied_bins: usize,
}

/// Reusable buffer for repeated entropy computations.
#[derive(Debug, Clone, Default)]
pub struct EntropyScratch {
    bins: Vec<i64>,
}

impl EntropyScratch {
    /// Quantizes each value to `floor(v / bin_width)`, counts bin
    /// occupancy, and returns `-Σ p log2 p` over occupied bins.
    pub fn compute(&mut self, values: &[f64], bin_width: f64) -> Result<EntropyValue, MetricError> {
        if values.is_empty() {
            return Err(MetricError::EmptyInput);
        }
        if !(bin_width.is_finite() && bin_width > 0.0) {
            return Err(MetricError::InvalidBinWidth(bin_width));
        }
        self.bins.clear();
        self.bins.extend(values.iter().map(|v| (v / bin_width).floor() as i64));
        self.bins.sort_unstable();

        let n = values.len() as f64;
        let mut bits = 0.0;
        let mut occupied = 0;
        for run in self.bins.chunk_by(|a, b| a == b) {
            let p = run.len() as f64 / n;
            bits -= p * p.log2();
            occupied += 1;
        }
        // A single occupied bin gives -1·log2(1) = -0.0.
        let bits = bits.max(0.0);
        let normalized = if occupied > 1 { (bits / (occupied as f64).log2()).clamp(0.0, 1.0) } else { 0.0 };
        Ok(EntropyValue { bits, normalized, bin_width, sample_count: values.len(), occupied_bins: occupied })
    }
}

pub fn shannon_entropy(values: &[f64], bin_width: f64) -> Result<EntropyValue, MetricError> {
    EntropyScratch::default().compute(values, bin_width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    /// Hash-map histogram oracle.
    fn oracle_bits(values: &[f64], bin: f64) -> f64 {
        let mut counts: HashMap<i64, usize> = HashMap::new();
        for v in values {
            *counts.entry((v / bin).floor() as i64).or_default() += 1;
        }
        let n = values.len() as f64;
        counts.values().map(|&c| c as f64 / n).map(|p| -p * p.log2()).sum()
    }

    #[test]
    fn identical_values_have_zero_entropy() {
        let e = shannon_entropy(&[5.0, 5.0, 5.0, 5.0], 1.0).unwrap();
        assert_eq!(e.bits, 0.0);
        assert_eq!(e.normalized, 0.0);
        assert_eq!(e.occupied_bins, 1);
    }

    #[test]
    fn eight_distinct_bins_give_three_bits() {
        let v: Vec<f64> = (0..8).map(|i| i as f64 * 2.0 + 0.1).collect();
        let e = shannon_entropy(&v, 1.0).unwrap();
        assert_eq!(e.bits, 3.0);
        assert_eq!(e.normalized, 1.0);
    }

    #[test]
    fn hand_counted_distribution() {
        // bins {0, 0, 1, 2} -> p = {0.5, 0.25, 0.25}
        let e = shannon_entropy(&[0.1, 0.1, 1.2, 2.3], 1.0).unwrap();
        assert_eq!(e.bits, 1.5);
        assert_eq!(e.sample_count, 4);
        assert!((e.normalized - 1.5 / 3f64.log2()).abs() < 1e-15);
    }

    #[test]
    fn negative_values_floor_downwards() {
        // -0.5 -> bin -1, 0.5 -> bin 0
        let e = shannon_entropy(&[-0.5, 0.5], 1.0).unwrap();
        assert_eq!(e.occupied_bins, 2);
        assert_eq!(e.bits, 1.0);
    }

    #[test]
    fn errors() {
        assert_eq!(shannon_entropy(&[], 1.0), Err(MetricError::EmptyInput));
        assert!(matches!(shannon_entropy(&[1.0], 0.0), Err(MetricError::InvalidBinWidth(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn matches_oracle_and_bounds(values in prop::collection::vec(-50.0f64..50.0, 1..300), bin in 0.1f64..5.0) {
                let e = shannon_entropy(&values, bin).unwrap();
                let want = oracle_bits(&values, bin);
                prop_assert!((e.bits - want).abs() <= 1e-12 * want.max(1.0));
                prop_assert!(e.bits >= 0.0);
                prop_assert!(e.bits <= (values.len() as f64).log2() + 1e-12);
                prop_assert!(e.bits <= (e.occupied_bins as f64).log2() + 1e-12);
                prop_assert!((0.0..=1.0).contains(&e.normalized));
                prop_assert_eq!(e.bits == 0.0, e.occupied_bins == 1);
            }

            #[test]
            fn permutation_invariant(mut values in prop::collection::vec(-20.0f64..20.0, 1..100), seed in any::<u64>()) {
                let a = shannon_entropy(&values, 0.5).unwrap();
                let n = values.len();
                let mut s = seed;
                for i in (1..n).rev() {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    values.swap(i, (s >> 33) as usize % (i + 1));
                }
                prop_assert_eq!(a, shannon_entropy(&values, 0.5).unwrap());
            }

            #[test]
            fn duplicates_keep_normalized_in_range(values in prop::collection::vec(-20.0f64..20.0, 1..100), pick in any::<prop::sample::Index>()) {
                let mut more = values.clone();
                more.push(values[pick.index(values.len())]);
                let e = shannon_entropy(&more, 0.5).unwrap();
                prop_assert!(e.normalized <= 1.0);
            }
        }
    }
}
