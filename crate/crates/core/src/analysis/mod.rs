//! Estimators for correlation histograms, spectra and calibration.

mod calibration;
mod fit;
mod g2;
mod lorentz;
mod spectrum;
mod stats;

pub use calibration::{calibrate_g0, write_calibration_csv, CalibrationResult, LinewidthPoint};
pub use fit::{levenberg_marquardt, FitOutcome};
pub use g2::{baseline_flatness, fano_factor, g2_histogram, g2_zero, g2_zero_and_decay, Flatness, G2Estimate, G2Histogram, G2Mode, PILE_UP_LIMIT};
pub use lorentz::{lorentzian, lorentzian_fit, SpectrumFit};
pub use spectrum::{welch_psd, Spectrum, Window};
pub use stats::{chi2_sf, ks_exponential, weighted_mean, KsResult};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("event stream is empty")]
    EmptyStream,
    #[error("bin width {bin_width} ps and max lag {max_lag} ps do not form a histogram")]
    InvalidBinning { bin_width: u64, max_lag: u64 },
    #[error("fewer than one expected count per bin over most of the histogram (centre expects {expected_per_bin:.3})")]
    BinTooSmall { expected_per_bin: f64 },
    #[error("fit did not converge: {0}")]
    FitNotConverged(String),
    #[error("no resolvable peak: {0}")]
    PeakNotFound(String),
    #[error("line narrower than the resolution; fwhm below {upper_bound:.3e} Hz")]
    LineUnresolved { upper_bound: f64 },
    #[error("segment of {segment} samples longer than the record ({record})")]
    SegmentTooLong { segment: usize, record: usize },
    #[error("invalid segmentation: {0}")]
    InvalidSegmentation(String),
    #[error("need at least 3 points per side, got {red} red and {blue} blue")]
    InsufficientPoints { red: usize, blue: usize },
    #[error("red and blue back-action slopes disagree: {red:.4e} vs {blue:.4e}")]
    InconsistentSides { red: f64, blue: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Mean occupancy from a measured sideband count rate, using the
/// per-phonon rate measured at a reference pump level and scaled linearly
/// in n_c. `noise_rate` (pump and dark) is subtracted first.
pub fn blind_occupancy(count_rate: f64, noise_rate: f64, reference_per_phonon: f64, reference_n_c: f64, n_c: f64) -> f64 {
    let per_phonon = reference_per_phonon * n_c / reference_n_c;
    (count_rate - noise_rate) / per_phonon
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blind_occupancy_scales_with_pump() {
        // 2000 counts/s per phonon at n_c = 1 ⇒ 2e6 at n_c = 1000
        let n = blind_occupancy(2.2e9 + 50.0, 50.0, 2000.0, 1.0, 1000.0);
        assert!((n - 1100.0).abs() < 1e-9);
    }
}
