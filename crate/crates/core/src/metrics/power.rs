//! Hemisphere power, relative band percentages, and the stress ratio.

use serde::{Deserialize, Serialize};

use crate::spectral::BandPowers;

use super::MetricError;

/// Mean of the five non-delta band powers of one channel.
pub fn hemisphere_power(bands: &BandPowers) -> f64 {
    bands.non_delta().iter().sum::<f64>() / 5.0
}

/// Sum of the five non-delta band powers.
pub fn non_delta_total(bands: &BandPowers) -> f64 {
    bands.non_delta().iter().sum()
}

/// Each non-delta band as a fraction of total non-delta power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelPercentages {
    pub theta_pct: f64,
    pub alpha_pct: f64,
    pub beta_low_pct: f64,
    pub beta_high_pct: f64,
    pub gamma_pct: f64,
    /// `beta_low_pct + beta_high_pct`.
    pub beta_pct: f64,
}

impl ChannelPercentages {
    pub fn new(theta: f64, alpha: f64, beta_low: f64, beta_high: f64, gamma: f64) -> Self {
        Self {
            theta_pct: theta,
            alpha_pct: alpha,
            beta_low_pct: beta_low,
            beta_high_pct: beta_high,
            gamma_pct: gamma,
            beta_pct: beta_low + beta_high,
        }
    }

    /// Field-wise mean of two channels; still sums to one.
    pub fn mean(a: &Self, b: &Self) -> Self {
        Self::new(
            (a.theta_pct + b.theta_pct) / 2.0,
            (a.alpha_pct + b.alpha_pct) / 2.0,
            (a.beta_low_pct + b.beta_low_pct) / 2.0,
            (a.beta_high_pct + b.beta_high_pct) / 2.0,
            (a.gamma_pct + b.gamma_pct) / 2.0,
        )
    }

    pub fn sum(&self) -> f64 {
        self.theta_pct + self.alpha_pct + self.beta_low_pct + self.beta_high_pct + self.gamma_pct
    }
}

pub fn band_percentages(bands: &BandPowers) -> Result<ChannelPercentages, MetricError> {
    let total = non_delta_total(bands);
    // Also rejects NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(total > 0.0) {
        return Err(MetricError::ZeroTotalPower);
    }
    let [theta, alpha, beta_low, beta_high, gamma] = bands.non_delta().map(|p| p / total);
    Ok(ChannelPercentages::new(theta, alpha, beta_low, beta_high, gamma))
}

/// High-beta share of total beta; 0 when there is no beta activity.
pub fn stress(pct: &ChannelPercentages) -> f64 {
    let beta = pct.beta_low_pct + pct.beta_high_pct;
    if beta > 0.0 {
        (pct.beta_high_pct / beta).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::ChannelId;

    fn bands(p: [f64; 6]) -> BandPowers {
        BandPowers::from_array(ChannelId::AF7, 0.0, p)
    }

    #[test]
    fn hemisphere_power_examples() {
        assert_eq!(hemisphere_power(&bands([0.0, 2.0, 2.0, 2.0, 2.0, 2.0])), 2.0);
        assert_eq!(hemisphere_power(&bands([0.0, 5.0, 3.0, 1.0, 1.0, 0.0])), 2.0);
        assert_eq!(hemisphere_power(&bands([100.0, 1.0, 1.0, 1.0, 1.0, 1.0])), 1.0);
    }

    #[test]
    fn percentage_examples() {
        let p = band_percentages(&bands([9.0, 1.0, 1.0, 1.0, 1.0, 1.0])).unwrap();
        for v in [p.theta_pct, p.alpha_pct, p.beta_low_pct, p.beta_high_pct, p.gamma_pct] {
            assert_eq!(v, 0.2);
        }
        let p = band_percentages(&bands([0.0, 4.0, 4.0, 1.0, 1.0, 0.0])).unwrap();
        assert_eq!(p.theta_pct, 0.4);
        assert_eq!(p.beta_pct, 0.2);
        assert_eq!(p.gamma_pct, 0.0);
    }

    #[test]
    fn all_zero_is_an_error() {
        assert_eq!(band_percentages(&bands([5.0, 0.0, 0.0, 0.0, 0.0, 0.0])), Err(MetricError::ZeroTotalPower));
    }

    #[test]
    fn stress_examples() {
        assert_eq!(stress(&ChannelPercentages::new(0.4, 0.4, 0.2, 0.0, 0.0)), 0.0);
        assert_eq!(stress(&ChannelPercentages::new(0.4, 0.4, 0.0, 0.2, 0.0)), 1.0);
        assert_eq!(stress(&ChannelPercentages::new(0.4, 0.4, 0.15, 0.05, 0.0)), 0.25);
        assert_eq!(stress(&ChannelPercentages::new(0.5, 0.5, 0.0, 0.0, 0.0)), 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn powers() -> impl Strategy<Value = [f64; 6]> {
            prop::array::uniform6(0.0f64..1e4).prop_filter("non-delta power", |p| p[1..].iter().sum::<f64>() > 1e-6)
        }

        proptest! {
            #[test]
            fn percentages_sum_to_one_and_scale_free(p in powers(), c in 1e-6f64..1e6) {
                let a = band_percentages(&bands(p)).unwrap();
                prop_assert!((a.sum() - 1.0).abs() <= 1e-9);
                let b = band_percentages(&bands(p).scaled(c)).unwrap();
                prop_assert!((a.theta_pct - b.theta_pct).abs() <= 1e-9);
                prop_assert!((a.beta_pct - b.beta_pct).abs() <= 1e-9);
                prop_assert!((stress(&a) - stress(&b)).abs() <= 1e-9);
                prop_assert!((0.0..=1.0).contains(&stress(&a)));
            }
        }
    }
}
