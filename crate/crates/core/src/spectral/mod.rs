//! Welch PSD estimation and band-power extraction over sliding windows.

pub mod bands;
pub mod sliding;
pub mod welch;

use thiserror::Error;

pub use bands::{band_partition, band_power, band_powers, Band, BandPartition, BandPowers};
pub use sliding::{sliding_band_series, welch_params, BandSnapshot, ChannelWindows, Contiguity, SampleWindow};
pub use welch::{welch_psd, PsdEstimate, Taper, WelchEstimator, WelchParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("window of {got} samples is shorter than one {needed}-sample segment")]
    WindowTooShort { needed: usize, got: usize },
    #[error("invalid spectral configuration: {0}")]
    Config(String),
    #[error("band {band} extends beyond Nyquist ({nyquist} Hz)")]
    BandOutOfRange { band: Band, nyquist: f64 },
}
