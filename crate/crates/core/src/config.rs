//! Experiment configuration files.
//!
//! Files are JSON in ordinary units (Hz, seconds, watts). Every section
//! and field is optional and falls back to the device defaults; unknown
//! keys are rejected. [`ExperimentConfig::resolved_json`] gives the fully
//! explicit form that is written next to every output.

use crate::analysis::{G2Mode, Window};
use crate::detection::{filter_transmission, DetectorModel, FilterChain};
use crate::dynamics::SimMode;
use crate::params::{validate_params, DetectionParams, DriveSpec, Side, SystemParams};
use crate::provenance::{digest, Hash};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;
use thiserror::Error;

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub omega_m_hz: f64,
    pub kappa_hz: f64,
    pub kappa_e_hz: f64,
    pub g0_hz: f64,
    pub gamma_i_hz: f64,
    pub n_b: f64,
    pub omega_c_hz: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            omega_m_hz: 5.6e9,
            kappa_hz: 817e6,
            kappa_e_hz: 425e6,
            g0_hz: 645e3,
            gamma_i_hz: 3e6,
            n_b: 1100.0,
            omega_c_hz: 194e12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    pub stages: u32,
    pub bandwidth_hz: f64,
    pub fsr_hz: f64,
    pub peak_transmission: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig { stages: 2, bandwidth_hz: 50e6, fsr_hz: 20e9, peak_transmission: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionConfig {
    /// End-to-end efficiency, detector included.
    pub eta_total: f64,
    /// Detector quantum efficiency, the part of `eta_total` applied at the
    /// detector.
    pub detector_efficiency: f64,
    pub dark_rate: f64,
    /// Pump transmission A; taken from the filter chain at the mechanical
    /// offset when absent.
    pub pump_suppression: Option<f64>,
    /// Detector reset time. Zero by default so desk-length runs can use
    /// click rates far above the device's 40 ns limit.
    pub dead_time_s: f64,
    pub split_ratio: f64,
    /// Fixed attenuation; chosen per point from the target rate when
    /// absent.
    pub attenuation: Option<f64>,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            eta_total: 0.3,
            detector_efficiency: 0.7,
            dark_rate: 4.0,
            pump_suppression: None,
            dead_time_s: 0.0,
            split_ratio: 0.5,
            attenuation: None,
        }
    }
}

/// Pump strength: exactly one of the three fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveConfig {
    pub side: Side,
    /// Δ/2π; the nominal sideband ±ω_m when absent.
    pub detuning_hz: Option<f64>,
    pub n_c: Option<f64>,
    pub power_w: Option<f64>,
    /// n_c expressed as C = 4g₀²n_c/(κγᵢ).
    pub cooperativity: Option<f64>,
}

impl Default for DriveConfig {
    fn default() -> Self {
        DriveConfig { side: Side::Blue, detuning_hz: None, n_c: Some(1200.0), power_w: None, cooperativity: None }
    }
}

/// Sweep points: exactly one of `n_c` or `cooperativity`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub side: Side,
    pub n_c: Option<Vec<f64>>,
    pub cooperativity: Option<Vec<f64>>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            side: Side::Blue,
            n_c: None,
            cooperativity: Some(vec![0.3, 0.5, 0.8, 0.9, 0.95, 0.98, 1.0, 1.02, 1.05, 1.1, 1.2, 1.5]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSettings {
    pub mode: SimMode,
    /// Recorded span after burn-in.
    pub duration_s: f64,
    /// Largest admissible step when absent.
    pub dt_s: Option<f64>,
    /// Twenty decay times when absent.
    pub burn_in_s: Option<f64>,
    pub sample_interval_s: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings { mode: SimMode::Nonlinear, duration_s: 2e-3, dt_s: None, burn_in_s: None, sample_interval_s: 2e-9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OccupancySource {
    /// Mean of the simulated n(t).
    Trajectory,
    /// Count rate divided by the per-phonon rate.
    Blind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub g2_mode: G2Mode,
    /// τ_c/50 when absent, τ_c being the 1/e time of the intensity
    /// autocorrelation.
    pub bin_width_s: Option<f64>,
    /// 12 τ_c when absent.
    pub max_lag_s: Option<f64>,
    /// Per-detector click rate aimed at when choosing attenuation; sized
    /// for about 2e5 counts in the central bins when absent.
    pub target_rate: Option<f64>,
    pub occupancy_source: OccupancySource,
    /// Welch segment; about 20 bins per expected linewidth when absent.
    pub segment_length: Option<usize>,
    pub overlap: f64,
    pub window: Window,
    /// Heterodyne IF; a quarter of the sample rate when absent.
    pub if_freq_hz: Option<f64>,
    /// Noise variance relative to signal variance in the heterodyne record.
    pub noise_floor: f64,
    /// Half width of the Lorentzian fit window in expected linewidths.
    pub fit_half_width: f64,
    pub nep_n_c: Vec<f64>,
    pub solve_points: usize,
    /// First-Stokes photon number for the operating-point solve.
    pub n1_target: Option<f64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            g2_mode: G2Mode::AllPairs,
            bin_width_s: None,
            max_lag_s: None,
            target_rate: None,
            occupancy_source: OccupancySource::Trajectory,
            segment_length: None,
            overlap: 0.5,
            window: Window::Hann,
            if_freq_hz: None,
            noise_floor: 0.01,
            fit_half_width: 12.0,
            nep_n_c: (0..=40).map(|k| 10f64.powf(k as f64 / 10.0)).collect(),
            solve_points: 101,
            n1_target: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationConfig {
    /// Pump levels used on each side.
    pub n_c: Vec<f64>,
    pub duration_s: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig { n_c: (1..=8).map(|k| 100.0 * k as f64).collect(), duration_s: 2e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub system: SystemConfig,
    pub detection: DetectionConfig,
    pub filter: FilterConfig,
    pub drive: DriveConfig,
    pub sweep: SweepConfig,
    pub sim: SimSettings,
    pub analysis: AnalysisConfig,
    pub calibration: CalibrationConfig,
    /// Output directory. Not part of the resolved config or its hash, so
    /// runs written to different places stay byte-identical.
    #[serde(skip_serializing)]
    pub output: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            system: SystemConfig::default(),
            detection: DetectionConfig::default(),
            filter: FilterConfig::default(),
            drive: DriveConfig::default(),
            sweep: SweepConfig::default(),
            sim: SimSettings::default(),
            analysis: AnalysisConfig::default(),
            calibration: CalibrationConfig::default(),
            output: "out".into(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Schema {
            path: match e.path().to_string().as_str() {
                "." => "<root>".to_string(),
                p => p.to_string(),
            },
            message: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn resolved_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the resolved configuration.
    pub fn hash(&self) -> Hash {
        digest(self)
    }

    pub fn system_params(&self) -> SystemParams {
        let s = &self.system;
        SystemParams::from_hz(s.omega_m_hz, s.kappa_hz, s.kappa_e_hz, s.g0_hz, s.gamma_i_hz, s.n_b, s.omega_c_hz)
    }

    pub fn filter_chain(&self) -> FilterChain {
        let f = &self.filter;
        FilterChain {
            stages: f.stages,
            bandwidth: TWO_PI * f.bandwidth_hz,
            fsr: TWO_PI * f.fsr_hz,
            peak_transmission: f.peak_transmission,
        }
    }

    /// Detection constants with unit attenuation unless one is fixed.
    pub fn detection_params(&self) -> DetectionParams {
        let d = &self.detection;
        let p = self.system_params();
        DetectionParams {
            eta_total: d.eta_total,
            dark_rate: d.dark_rate,
            pump_suppression: d
                .pump_suppression
                .unwrap_or_else(|| filter_transmission(&self.filter_chain(), p.omega_m)),
            dead_time: d.dead_time_s,
            split_ratio: d.split_ratio,
            attenuation: d.attenuation.unwrap_or(1.0),
        }
    }

    pub fn detector_model(&self) -> DetectorModel {
        let d = &self.detection;
        DetectorModel { efficiency: d.detector_efficiency, dead_time: d.dead_time_s, dark_rate: d.dark_rate }
    }

    fn detuning(&self, side: Side) -> f64 {
        let p = self.system_params();
        self.drive.detuning_hz.map(|d| TWO_PI * d).unwrap_or_else(|| side.nominal_detuning(p.omega_m))
    }

    /// Drive at a given n_c on `side`, honouring a configured detuning.
    pub fn drive_with_photons(&self, side: Side, n_c: f64) -> DriveSpec {
        DriveSpec::with_photons(self.detuning(side), n_c)
    }

    /// The single-point drive.
    pub fn drive_spec(&self) -> DriveSpec {
        let p = self.system_params();
        let side = self.drive.side;
        let d = &self.drive;
        let det = self.detuning(side);
        match (d.n_c, d.power_w, d.cooperativity) {
            (Some(n), None, None) => DriveSpec::with_photons(det, n),
            (None, Some(w), None) => DriveSpec::with_power(det, w),
            (None, None, Some(c)) => DriveSpec::with_photons(det, c * p.threshold_photons()),
            _ => unreachable!("validated"),
        }
    }

    /// Sweep pump levels as n_c.
    pub fn sweep_points(&self) -> Vec<f64> {
        let p = self.system_params();
        match (&self.sweep.n_c, &self.sweep.cooperativity) {
            (Some(n), None) => n.clone(),
            (None, Some(c)) => c.iter().map(|c| c * p.threshold_photons()).collect(),
            _ => unreachable!("validated"),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        let p = self.system_params();
        validate_params(&p).map_err(|e| ConfigError::Invalid(format!("system: {e}")))?;
        self.filter_chain().validate().map_err(|e| ConfigError::Invalid(format!("filter: {e}")))?;
        self.detection_params()
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("detection: {e}")))?;
        self.detector_model()
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("detection: {e}")))?;
        if self.detection.eta_total > self.detection.detector_efficiency {
            return bad(format!(
                "detection.eta_total ({}) cannot exceed detection.detector_efficiency ({})",
                self.detection.eta_total, self.detection.detector_efficiency
            ));
        }
        let d = &self.drive;
        let given = [d.n_c.is_some(), d.power_w.is_some(), d.cooperativity.is_some()].iter().filter(|x| **x).count();
        if given != 1 {
            return bad("drive: give exactly one of n_c, power_w, cooperativity".into());
        }
        for v in [d.n_c, d.power_w, d.cooperativity].into_iter().flatten() {
            if !(v >= 0.0) {
                return bad(format!("drive: pump level must be non-negative, got {v}"));
            }
        }
        match (&self.sweep.n_c, &self.sweep.cooperativity) {
            (Some(v), None) | (None, Some(v)) => {
                if v.is_empty() || v.iter().any(|x| !(*x >= 0.0)) {
                    return bad("sweep: points must be a non-empty list of non-negative numbers".into());
                }
            }
            _ => return bad("sweep: give exactly one of n_c, cooperativity".into()),
        }
        let s = &self.sim;
        if !(s.duration_s >= 0.0) || !(s.sample_interval_s > 0.0) {
            return bad("sim: duration_s must be >= 0 and sample_interval_s > 0".into());
        }
        if s.dt_s.is_some_and(|v| !(v > 0.0)) || s.burn_in_s.is_some_and(|v| !(v >= 0.0)) {
            return bad("sim: dt_s must be positive and burn_in_s non-negative".into());
        }
        let a = &self.analysis;
        if a.bin_width_s.is_some_and(|v| !(v > 0.0)) || a.max_lag_s.is_some_and(|v| !(v > 0.0)) {
            return bad("analysis: bin_width_s and max_lag_s must be positive".into());
        }
        if a.target_rate.is_some_and(|v| !(v > 0.0)) {
            return bad("analysis: target_rate must be positive".into());
        }
        if !(0.0..1.0).contains(&a.overlap) || !(a.noise_floor >= 0.0) || !(a.fit_half_width > 0.0) {
            return bad("analysis: overlap in [0,1), noise_floor >= 0, fit_half_width > 0".into());
        }
        if a.nep_n_c.iter().any(|x| !(*x > 0.0)) {
            return bad("analysis: nep_n_c values must be positive".into());
        }
        if a.solve_points < 2 {
            return bad("analysis: solve_points must be at least 2".into());
        }
        if self.calibration.n_c.iter().any(|x| !(*x >= 0.0)) || !(self.calibration.duration_s > 0.0) {
            return bad("calibration: n_c must be non-negative and duration_s positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let cfg = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        let p = cfg.system_params();
        assert_eq!(p, SystemParams::default());
        // A from the two-stage Airy chain
        assert!((cfg.detection_params().pump_suppression / 6.75e-10 - 1.0).abs() < 0.01);
    }

    #[test]
    fn unknown_keys_report_their_path() {
        let err = ExperimentConfig::from_json(r#"{"system": {"g0_hz": 1.0, "gzero": 2}}"#).unwrap_err();
        match err {
            ConfigError::Schema { path, message } => {
                assert_eq!(path, "system.gzero");
                assert!(message.contains("gzero"), "{message}");
            }
            other => panic!("{other}"),
        }
        let err = ExperimentConfig::from_json(r#"{"sim": {"duration_s": "long"}}"#).unwrap_err();
        assert!(matches!(err, ConfigError::Schema { ref path, .. } if path == "sim.duration_s"), "{err}");
    }

    #[test]
    fn invariant_violations_are_config_errors() {
        for text in [
            r#"{"system": {"kappa_e_hz": 2e9}}"#,
            r#"{"drive": {"n_c": 10, "power_w": 1e-6}}"#,
            r#"{"detection": {"attenuation": 0}}"#,
            r#"{"sweep": {"n_c": [1, 2]}}"#,
            r#"{"filter": {"bandwidth_hz": 3e10}}"#,
        ] {
            assert!(matches!(ExperimentConfig::from_json(text), Err(ConfigError::Invalid(_))), "{text}");
        }
    }

    #[test]
    fn resolved_form_round_trips() {
        let cfg = ExperimentConfig::from_json(r#"{"seed": 9, "drive": {"side": "red", "n_c": null, "cooperativity": 1.0}}"#).unwrap();
        let again = ExperimentConfig::from_json(&cfg.resolved_json()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash(), again.hash());
        let d = cfg.drive_spec();
        assert!((d.photons(&cfg.system_params()).unwrap() - cfg.system_params().threshold_photons()).abs() < 1e-9);
    }
}
