//! Reference Flow State Index.
//!
//! A transparent weighted composite of five component scores, each in
//! [0, 1]:
//!
//! | component             | score                                            |
//! |-----------------------|--------------------------------------------------|
//! | theta                 | triangular, peak at `theta_target`               |
//! | alpha                 | triangular, peak at `alpha_target`               |
//! | calm                  | `1 - stress`                                     |
//! | hemispheric balance   | `min(AF7, AF8) / max(AF7, AF8)`                  |
//! | entropy               | triangular on normalized entropy, peak at target |
//!
//! A triangular score rises linearly from 0 at 0 to 1 at the target and
//! falls linearly back to 0 at 1. Absolute power enters only through the
//! balance ratio, so the index is invariant to global power scaling.

use serde::{Deserialize, Serialize};

use crate::config::ConfigError;

/// Identifies the reference formula set emitted with every snapshot.
pub const FORMULA_VERSION: &str = "reference-v1";

const EPS: f64 = 1e-9;

/// The seven inputs the flow index is built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Left prefrontal (AF7) mean non-delta power, µV².
    pub af7_power: f64,
    /// Right prefrontal (AF8) mean non-delta power, µV².
    pub af8_power: f64,
    pub alpha_pct: f64,
    pub theta_pct: f64,
    pub beta_pct: f64,
    pub stress: f64,
    pub entropy_norm: f64,
}

impl FeatureVector {
    pub fn is_finite(&self) -> bool {
        [self.af7_power, self.af8_power, self.alpha_pct, self.theta_pct, self.beta_pct, self.stress, self.entropy_norm]
            .iter()
            .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FsiWeights {
    pub theta: f64,
    pub alpha: f64,
    pub calm: f64,
    pub balance: f64,
    pub entropy: f64,
}

impl Default for FsiWeights {
    fn default() -> Self {
        Self { theta: 0.30, alpha: 0.20, calm: 0.25, balance: 0.15, entropy: 0.10 }
    }
}

impl FsiWeights {
    fn as_array(&self) -> [f64; 5] {
        [self.theta, self.alpha, self.calm, self.balance, self.entropy]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FsiConfig {
    pub theta_target: f64,
    pub alpha_target: f64,
    pub entropy_target: f64,
    pub weights: FsiWeights,
}

impl Default for FsiConfig {
    fn default() -> Self {
        Self { theta_target: 0.35, alpha_target: 0.30, entropy_target: 0.5, weights: FsiWeights::default() }
    }
}

impl FsiConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let w = self.weights.as_array();
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(ConfigError::invalid("fsi.weights", "weights must be finite and non-negative"));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(ConfigError::invalid("fsi.weights", format!("weights sum to {sum}, expected 1")));
        }
        for (field, t) in [
            ("fsi.theta_target", self.theta_target),
            ("fsi.alpha_target", self.alpha_target),
            ("fsi.entropy_target", self.entropy_target),
        ] {
            if !(t > 0.0 && t < 1.0) {
                return Err(ConfigError::invalid(field, "target must lie strictly between 0 and 1"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FsiComponents {
    pub theta_score: f64,
    pub alpha_score: f64,
    pub calm: f64,
    pub hemispheric_balance: f64,
    pub entropy_score: f64,
}

impl FsiComponents {
    pub fn mean(&self) -> f64 {
        (self.theta_score + self.alpha_score + self.calm + self.hemispheric_balance + self.entropy_score) / 5.0
    }
}

/// 0 at 0 and 1, 1 at `target`, linear in between.
pub fn triangular(x: f64, target: f64) -> f64 {
    let s = if x <= target { x / target } else { (1.0 - x) / (1.0 - target) };
    s.clamp(0.0, 1.0)
}

pub fn hemispheric_balance(af7: f64, af8: f64) -> f64 {
    let (lo, hi) = if af7 < af8 { (af7, af8) } else { (af8, af7) };
    if hi < EPS {
        1.0
    } else {
        (lo.max(0.0) / hi).clamp(0.0, 1.0)
    }
}

pub fn fsi_components(features: &FeatureVector, config: &FsiConfig) -> FsiComponents {
    FsiComponents {
        theta_score: triangular(features.theta_pct, config.theta_target),
        alpha_score: triangular(features.alpha_pct, config.alpha_target),
        calm: (1.0 - features.stress).clamp(0.0, 1.0),
        hemispheric_balance: hemispheric_balance(features.af7_power, features.af8_power),
        entropy_score: triangular(features.entropy_norm, config.entropy_target),
    }
}

/// Weighted composite of the component scores, clamped to [0, 1].
pub fn flow_index_from_components(c: &FsiComponents, w: &FsiWeights) -> f64 {
    (w.theta * c.theta_score
        + w.alpha * c.alpha_score
        + w.calm * c.calm
        + w.balance * c.hemispheric_balance
        + w.entropy * c.entropy_score)
        .clamp(0.0, 1.0)
}

pub fn flow_index(features: &FeatureVector, config: &FsiConfig) -> Result<f64, ConfigError> {
    config.validate()?;
    Ok(flow_index_from_components(&fsi_components(features, config), &config.weights))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flow_profile() -> FeatureVector {
        FeatureVector {
            af7_power: 20.0,
            af8_power: 20.0,
            alpha_pct: 0.30,
            theta_pct: 0.35,
            beta_pct: 0.25,
            stress: 0.1,
            entropy_norm: 0.5,
        }
    }

    fn stress_profile() -> FeatureVector {
        FeatureVector {
            af7_power: 20.0,
            af8_power: 14.0,
            alpha_pct: 0.10,
            theta_pct: 0.10,
            beta_pct: 0.65,
            stress: 0.9,
            entropy_norm: 0.8,
        }
    }

    #[test]
    fn flow_profile_outscores_stress_profile() {
        let cfg = FsiConfig::default();
        let flow = flow_index(&flow_profile(), &cfg).unwrap();
        let stress = flow_index(&stress_profile(), &cfg).unwrap();
        // Evaluated by hand from the component table:
        // flow   = .30·1 + .20·1 + .25·.9 + .15·1 + .10·1 = 0.975
        // stress = .30·(.10/.35) + .20·(.10/.30) + .25·.1 + .15·.7 + .10·(.2/.5)
        assert!((flow - 0.975).abs() < 1e-12);
        let want = 0.30 * (0.10 / 0.35) + 0.20 * (0.10 / 0.30) + 0.025 + 0.15 * 0.7 + 0.10 * 0.4;
        assert!((stress - want).abs() < 1e-12, "{stress} vs {want}");
        assert!(flow > stress);
    }

    #[test]
    fn floor_and_ceiling() {
        let cfg = FsiConfig::default();
        let worst = FeatureVector {
            af7_power: 0.0,
            af8_power: 10.0,
            alpha_pct: 0.0,
            theta_pct: 1.0,
            beta_pct: 0.0,
            stress: 1.0,
            entropy_norm: 0.0,
        };
        assert_eq!(flow_index(&worst, &cfg).unwrap(), 0.0);
        let best = FeatureVector { stress: 0.0, entropy_norm: 0.5, theta_pct: 0.35, alpha_pct: 0.30, ..flow_profile() };
        assert!((flow_index(&best, &cfg).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn triangular_shape() {
        assert_eq!(triangular(0.0, 0.35), 0.0);
        assert_eq!(triangular(0.35, 0.35), 1.0);
        assert_eq!(triangular(1.0, 0.35), 0.0);
        assert!((triangular(0.175, 0.35) - 0.5).abs() < 1e-15);
        assert!((triangular(0.675, 0.35) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn balance_is_a_ratio() {
        assert_eq!(hemispheric_balance(3.0, 3.0), 1.0);
        assert_eq!(hemispheric_balance(3.0, 6.0), 0.5);
        assert_eq!(hemispheric_balance(6.0, 3.0), 0.5);
        assert_eq!(hemispheric_balance(0.0, 0.0), 1.0);
    }

    #[test]
    fn invalid_weights_are_rejected() {
        let mut cfg = FsiConfig::default();
        cfg.weights.theta = 0.5;
        assert!(flow_index(&flow_profile(), &cfg).is_err());
        let mut cfg = FsiConfig::default();
        cfg.weights.theta = -0.1;
        cfg.weights.alpha = 0.6;
        assert!(flow_index(&flow_profile(), &cfg).is_err());
    }

    #[test]
    fn strictly_decreasing_in_stress() {
        let cfg = FsiConfig::default();
        let mut prev = f64::INFINITY;
        for i in 0..=100 {
            let f = FeatureVector { stress: i as f64 / 100.0, ..stress_profile() };
            let v = flow_index(&f, &cfg).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }
}
