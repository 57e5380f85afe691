use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::DetectionError;

/// Cascade of identical Fabry–Pérot filter stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterChain {
    pub stages: u32,
    /// FWHM per stage (rad/s).
    pub bandwidth: f64,
    /// Free spectral range (rad/s).
    pub fsr: f64,
    pub peak_transmission: f64,
}

impl Default for FilterChain {
    fn default() -> Self {
        FilterChain { stages: 2, bandwidth: 2.0 * PI * 50e6, fsr: 2.0 * PI * 20e9, peak_transmission: 1.0 }
    }
}

impl FilterChain {
    pub fn validate(&self) -> Result<(), DetectionError> {
        if self.stages < 1 {
            return Err(DetectionError::InvalidFilter("at least one stage required".into()));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth < self.fsr) {
            return Err(DetectionError::InvalidFilter(format!(
                "bandwidth {} must be positive and below the FSR {}",
                self.bandwidth, self.fsr
            )));
        }
        if !(self.peak_transmission > 0.0 && self.peak_transmission <= 1.0) {
            return Err(DetectionError::InvalidFilter(format!(
                "peak transmission {} outside (0, 1]",
                self.peak_transmission
            )));
        }
        Ok(())
    }

    pub fn finesse(&self) -> f64 {
        self.fsr / self.bandwidth
    }
}

/// Product over stages of T(δ) = T₀/(1 + (2F/π)² sin²(πδ/FSR)).
pub fn filter_transmission(f: &FilterChain, offset: f64) -> f64 {
    let coef = 2.0 * f.finesse() / PI;
    let s = (PI * offset / f.fsr).sin();
    let stage = f.peak_transmission / (1.0 + coef * coef * s * s);
    stage.powi(f.stages as i32)
}

/// Same cascade with each stage replaced by its Lorentzian line
/// T₀/(1 + (2δ/bandwidth)²), valid for offsets well inside one FSR.
pub fn lorentzian_transmission(f: &FilterChain, offset: f64) -> f64 {
    let x = 2.0 * offset / f.bandwidth;
    (f.peak_transmission / (1.0 + x * x)).powi(f.stages as i32)
}
