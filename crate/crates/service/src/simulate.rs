//! Synthetic recordings built from band-power recipes.
//!
//! Each band's share of non-delta power is realized as a few sinusoids at
//! random frequencies inside the band with random phases, plus a delta
//! component and white noise. Frames are reproducible for a given seed.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use flowstate_core::signal::SampleFrame;
use flowstate_core::spectral::Band;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Flow,
    Stress,
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "flow" => Ok(Self::Flow),
            "stress" => Ok(Self::Stress),
            _ => Err(format!("unknown profile {s:?}; expected flow or stress")),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Flow => "flow",
            Self::Stress => "stress",
        })
    }
}

/// Shares of non-delta power (θ, α, β_low, β_high, γ) and the AF8/AF7
/// power ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recipe {
    pub shares: [f64; 5],
    pub right_to_left: f64,
}

impl Profile {
    pub fn recipe(self) -> Recipe {
        match self {
            Self::Flow => Recipe { shares: [0.35, 0.30, 0.20, 0.05, 0.10], right_to_left: 1.0 },
            Self::Stress => Recipe { shares: [0.10, 0.10, 0.15, 0.55, 0.10], right_to_left: 0.7 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub sample_rate: f64,
    pub seconds: f64,
    pub seed: u64,
    /// Non-delta power of the left frontal channel, µV².
    pub power: f64,
    /// Delta power as a multiple of non-delta power.
    pub delta_ratio: f64,
    /// White-noise standard deviation, µV.
    pub noise_std: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { sample_rate: 256.0, seconds: 60.0, seed: 7, power: 200.0, delta_ratio: 0.5, noise_std: 0.5 }
    }
}

const TONES_PER_BAND: usize = 3;

struct Tone {
    freq: f64,
    amp: f64,
    phase: f64,
}

fn channel_tones(rng: &mut StdRng, shares: &[f64; 5], power: f64, delta_ratio: f64) -> Vec<Tone> {
    let mut tones = Vec::new();
    let mut add = |rng: &mut StdRng, band: Band, band_power: f64| {
        // Keep tones clear of band edges so window leakage stays in-band.
        let (lo, hi) = (band.lo() + 0.75, band.hi() - 0.75);
        let amp = (2.0 * band_power / TONES_PER_BAND as f64).sqrt();
        for _ in 0..TONES_PER_BAND {
            tones.push(Tone { freq: rng.random_range(lo..hi), amp, phase: rng.random_range(0.0..2.0 * PI) });
        }
    };
    add(rng, Band::Delta, delta_ratio * power);
    for (band, share) in Band::NON_DELTA.iter().zip(shares) {
        add(rng, *band, share * power);
    }
    tones
}

/// One frame per sample with all four channels present. Temporal
/// channels carry the same recipe at half power.
pub fn simulate(profile: Profile, options: &SimOptions) -> Vec<SampleFrame> {
    let mut rng = StdRng::seed_from_u64(options.seed);
    let recipe = profile.recipe();
    let powers = [0.5, 1.0, recipe.right_to_left, 0.5].map(|k| k * options.power);
    let tones: Vec<Vec<Tone>> =
        powers.iter().map(|&p| channel_tones(&mut rng, &recipe.shares, p, options.delta_ratio)).collect();
    let noise = Normal::new(0.0, options.noise_std).expect("finite noise level");
    let n = (options.seconds * options.sample_rate).round() as usize;
    (0..n)
        .map(|i| {
            let t = i as f64 / options.sample_rate;
            let values = std::array::from_fn(|c| {
                let clean: f64 = tones[c].iter().map(|k| k.amp * (2.0 * PI * k.freq * t + k.phase).sin()).sum();
                clean + noise.sample(&mut rng)
            });
            SampleFrame::complete(t, i as u64, values)
        })
        .collect()
}
