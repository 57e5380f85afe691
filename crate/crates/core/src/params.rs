//! Device and detection constants plus the closed-form linear-theory rates.
//!
//! Every rate is stored in angular units (rad/s). Conversion from ordinary
//! frequency happens once, at the configuration boundary (see
//! [`SystemParams::from_hz`]).

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamsError {
    #[error("rate `{name}` must be strictly positive, got {value}")]
    NonPositiveRate { name: &'static str, value: f64 },
    #[error("external coupling kappa_e = {kappa_e} exceeds total decay kappa = {kappa}")]
    CouplingExceedsTotal { kappa_e: f64, kappa: f64 },
    #[error("intracavity photon number must be non-negative, got {0}")]
    NegativePhotonNumber(f64),
    #[error("intracavity photon number must be positive for the dark-count term")]
    ZeroPhotonNumber,
    #[error("input power must be non-negative, got {0}")]
    NegativePower(f64),
    #[error("blue-detuned drive at cooperativity {cooperativity:.4} is at or above threshold; linear theory does not apply")]
    AboveThreshold { cooperativity: f64 },
    #[error("detection parameter `{name}` out of range: {value}")]
    DetectionOutOfRange { name: &'static str, value: f64 },
}

/// Which motional sideband the pump addresses.
///
/// `Red` is Δ = +ω_m (anti-Stokes, damping); `Blue` is Δ = −ω_m (Stokes,
/// anti-damping).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Red,
    Blue,
}

impl Side {
    /// Sign of the back-action damping: +1 for red, −1 for blue.
    pub fn sign(self) -> f64 {
        match self {
            Side::Red => 1.0,
            Side::Blue => -1.0,
        }
    }

    /// Nominal pump detuning Δ = ω_c − ω_l for this side.
    pub fn nominal_detuning(self, omega_m: f64) -> f64 {
        self.sign() * omega_m
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Red => "red",
            Side::Blue => "blue",
        }
    }
}

impl std::str::FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "red" => Ok(Side::Red),
            "blue" => Ok(Side::Blue),
            other => Err(format!("unknown side `{other}` (expected red|blue)")),
        }
    }
}

/// Optomechanical device constants, all rates in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Mechanical angular frequency.
    pub omega_m: f64,
    /// Total optical energy decay rate.
    pub kappa: f64,
    /// Decay rate into the detection channel.
    pub kappa_e: f64,
    /// Vacuum optomechanical coupling.
    pub g0: f64,
    /// Intrinsic mechanical energy decay rate.
    pub gamma_i: f64,
    /// Thermal bath occupancy.
    pub n_b: f64,
    /// Optical resonance angular frequency.
    pub omega_c: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams::from_hz(5.6e9, 817e6, 425e6, 645e3, 3e6, 1100.0, 194e12)
    }
}

impl SystemParams {
    /// Builds parameters from ordinary frequencies (Hz).
    pub fn from_hz(
        omega_m_hz: f64,
        kappa_hz: f64,
        kappa_e_hz: f64,
        g0_hz: f64,
        gamma_i_hz: f64,
        n_b: f64,
        omega_c_hz: f64,
    ) -> Self {
        SystemParams {
            omega_m: TWO_PI * omega_m_hz,
            kappa: TWO_PI * kappa_hz,
            kappa_e: TWO_PI * kappa_e_hz,
            g0: TWO_PI * g0_hz,
            gamma_i: TWO_PI * gamma_i_hz,
            n_b,
            omega_c: TWO_PI * omega_c_hz,
        }
    }

    /// Intrinsic optical loss rate κᵢ = κ − κ_e.
    pub fn kappa_i(&self) -> f64 {
        self.kappa - self.kappa_e
    }

    /// True when ω_m > κ.
    pub fn sideband_resolved(&self) -> bool {
        self.omega_m > self.kappa
    }

    /// Back-action rate per intracavity photon in the resolved-sideband
    /// limit, 4g₀²/κ.
    pub fn om_rate_per_photon(&self) -> f64 {
        4.0 * self.g0 * self.g0 / self.kappa
    }

    /// Intracavity photon number at which blue-detuned anti-damping cancels
    /// the intrinsic loss (C = 1).
    pub fn threshold_photons(&self) -> f64 {
        self.gamma_i / self.om_rate_per_photon()
    }
}

/// Parameters that passed validation, with derived quantities filled in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidatedParams {
    pub params: SystemParams,
    /// Optical quality factor ω_c/κ.
    pub q_c: f64,
    /// Mechanical quality factor ω_m/γᵢ.
    pub q_m: f64,
    pub kappa_i: f64,
}

pub fn validate_params(p: &SystemParams) -> Result<ValidatedParams, ParamsError> {
    let rates = [
        ("omega_m", p.omega_m),
        ("kappa", p.kappa),
        ("kappa_e", p.kappa_e),
        ("g0", p.g0),
        ("gamma_i", p.gamma_i),
        ("n_b", p.n_b),
        ("omega_c", p.omega_c),
    ];
    for (name, value) in rates {
        // NaN fails this comparison too.
        if !(value > 0.0) {
            return Err(ParamsError::NonPositiveRate { name, value });
        }
    }
    if p.kappa_e > p.kappa {
        return Err(ParamsError::CouplingExceedsTotal { kappa_e: p.kappa_e, kappa: p.kappa });
    }
    if !p.sideband_resolved() {
        log::warn!(
            "system is not sideband resolved: omega_m = {:.3e} <= kappa = {:.3e}",
            p.omega_m,
            p.kappa
        );
    }
    Ok(ValidatedParams {
        params: *p,
        q_c: p.omega_c / p.kappa,
        q_m: p.omega_m / p.gamma_i,
        kappa_i: p.kappa_i(),
    })
}

/// Detection-chain constants.
///
/// `eta_total` is the end-to-end efficiency from the cavity output to a
/// registered click, detector efficiency included. Only the product
/// `eta_total * attenuation` enters the count-rate formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionParams {
    pub eta_total: f64,
    /// Dark count rate per detector (counts/s).
    pub dark_rate: f64,
    /// Filter transmission at the pump frequency relative to peak.
    pub pump_suppression: f64,
    /// Detector reset time (s).
    pub dead_time: f64,
    /// Fraction of photons routed to detector 0 by the HBT coupler.
    pub split_ratio: f64,
    /// Variable attenuation ahead of the detectors.
    pub attenuation: f64,
}

impl Default for DetectionParams {
    fn default() -> Self {
        DetectionParams {
            eta_total: 0.3,
            dark_rate: 4.0,
            pump_suppression: 6.75e-10,
            dead_time: 40e-9,
            split_ratio: 0.5,
            attenuation: 1.0,
        }
    }
}

impl DetectionParams {
    /// η·attenuation, the efficiency every formula uses.
    pub fn efficiency(&self) -> f64 {
        self.eta_total * self.attenuation
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        let check = |name: &'static str, value: f64, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(ParamsError::DetectionOutOfRange { name, value })
            }
        };
        check("eta_total", self.eta_total, self.eta_total > 0.0 && self.eta_total <= 1.0)?;
        check("attenuation", self.attenuation, self.attenuation > 0.0 && self.attenuation <= 1.0)?;
        let eff = self.efficiency();
        check("eta_total*attenuation", eff, eff > 0.0 && eff <= 1.0)?;
        check(
            "pump_suppression",
            self.pump_suppression,
            (0.0..=1.0).contains(&self.pump_suppression),
        )?;
        check("dark_rate", self.dark_rate, self.dark_rate >= 0.0)?;
        check("dead_time", self.dead_time, self.dead_time >= 0.0)?;
        check("split_ratio", self.split_ratio, (0.0..=1.0).contains(&self.split_ratio))?;
        Ok(())
    }
}

/// Pump strength, expressed either as intracavity photons or input power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveLevel {
    IntracavityPhotons(f64),
    InputPower(f64),
}

/// Pump detuning Δ = ω_c − ω_l (rad/s) and strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    pub detuning: f64,
    pub level: DriveLevel,
}

impl DriveSpec {
    pub fn with_photons(detuning: f64, n_c: f64) -> Self {
        DriveSpec { detuning, level: DriveLevel::IntracavityPhotons(n_c) }
    }

    pub fn with_power(detuning: f64, p_in: f64) -> Self {
        DriveSpec { detuning, level: DriveLevel::InputPower(p_in) }
    }

    /// Drive on the nominal sideband, Δ = ±ω_m, with a given n_c.
    pub fn on_sideband(p: &SystemParams, side: Side, n_c: f64) -> Self {
        Self::with_photons(side.nominal_detuning(p.omega_m), n_c)
    }

    /// Laser angular frequency ω_l = ω_c − Δ.
    pub fn laser_frequency(&self, p: &SystemParams) -> f64 {
        p.omega_c - self.detuning
    }

    /// Intracavity pump photons, derived from power when needed.
    pub fn photons(&self, p: &SystemParams) -> Result<f64, ParamsError> {
        match self.level {
            DriveLevel::IntracavityPhotons(n) if n < 0.0 => Err(ParamsError::NegativePhotonNumber(n)),
            DriveLevel::IntracavityPhotons(n) => Ok(n),
            DriveLevel::InputPower(pw) => intracavity_photons(p, pw, self.detuning),
        }
    }

    /// Input power, derived from photons when needed.
    pub fn power(&self, p: &SystemParams) -> Result<f64, ParamsError> {
        match self.level {
            DriveLevel::InputPower(pw) if pw < 0.0 => Err(ParamsError::NegativePower(pw)),
            DriveLevel::InputPower(pw) => Ok(pw),
            DriveLevel::IntracavityPhotons(n) => input_power_for_photons(p, n, self.detuning),
        }
    }

    /// Classical drive amplitude Ω in the cavity equation of motion.
    ///
    /// From power, Ω = √(κ_e P_in/ℏω_c). From photons, Ω is chosen so the
    /// unmodulated steady state holds n_c photons: Ω² = n_c((κ/2)² + Δ²).
    pub fn drive_amplitude(&self, p: &SystemParams) -> Result<f64, ParamsError> {
        match self.level {
            DriveLevel::InputPower(pw) => {
                if pw < 0.0 {
                    return Err(ParamsError::NegativePower(pw));
                }
                Ok((p.kappa_e * pw / (HBAR * p.omega_c)).sqrt())
            }
            DriveLevel::IntracavityPhotons(n) => {
                if n < 0.0 {
                    return Err(ParamsError::NegativePhotonNumber(n));
                }
                let half = 0.5 * p.kappa;
                Ok((n * (half * half + self.detuning * self.detuning)).sqrt())
            }
        }
    }
}

/// Linear back-action at a given pump level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackAction {
    /// Signed optomechanical damping (rad/s): positive for red, negative
    /// for blue.
    pub rate: f64,
    /// Cooperativity C = |γ_OM|/γᵢ.
    pub cooperativity: f64,
}

impl BackAction {
    /// Total mechanical energy decay rate γᵢ + γ_OM.
    pub fn total_damping(&self, p: &SystemParams) -> f64 {
        p.gamma_i + self.rate
    }
}

/// γ_OM = ±4g₀²n_c/κ for a pump on the red or blue sideband.
pub fn gamma_om(p: &SystemParams, n_c: f64, side: Side) -> Result<BackAction, ParamsError> {
    if n_c < 0.0 {
        return Err(ParamsError::NegativePhotonNumber(n_c));
    }
    let magnitude = p.om_rate_per_photon() * n_c;
    Ok(BackAction { rate: side.sign() * magnitude, cooperativity: magnitude / p.gamma_i })
}

/// Linearized intracavity photon number n_c = (4κ_e P_in/ℏω_l)/(κ² + 4Δ²).
pub fn intracavity_photons(p: &SystemParams, p_in: f64, detuning: f64) -> Result<f64, ParamsError> {
    if p_in < 0.0 {
        return Err(ParamsError::NegativePower(p_in));
    }
    let omega_l = p.omega_c - detuning;
    let flux = 4.0 * p.kappa_e * p_in / (HBAR * omega_l);
    Ok(flux / (p.kappa * p.kappa + 4.0 * detuning * detuning))
}

/// Inverse of [`intracavity_photons`].
pub fn input_power_for_photons(p: &SystemParams, n_c: f64, detuning: f64) -> Result<f64, ParamsError> {
    if n_c < 0.0 {
        return Err(ParamsError::NegativePhotonNumber(n_c));
    }
    let omega_l = p.omega_c - detuning;
    Ok(n_c * (p.kappa * p.kappa + 4.0 * detuning * detuning) * HBAR * omega_l / (4.0 * p.kappa_e))
}

/// Detected counts per second per phonon, Γ_SB,0 = η·att·(κ_e/κ)·|γ_OM|.
pub fn per_phonon_count_rate(
    p: &SystemParams,
    d: &DetectionParams,
    n_c: f64,
) -> Result<f64, ParamsError> {
    let ba = gamma_om(p, n_c, Side::Red)?;
    Ok(d.efficiency() * (p.kappa_e / p.kappa) * ba.rate.abs())
}

/// Input pump photon flux for a far-detuned pump, Ṅ ≈ ω_m²n_c/κ_e.
pub fn pump_photon_flux(p: &SystemParams, n_c: f64) -> f64 {
    p.omega_m * p.omega_m * n_c / p.kappa_e
}

/// Detected pump bleed-through rate Γ_pump = η·att·A·Ṅ_pump.
pub fn pump_count_rate(p: &SystemParams, d: &DetectionParams, n_c: f64) -> f64 {
    d.efficiency() * d.pump_suppression * pump_photon_flux(p, n_c)
}

/// Noise-equivalent phonon numbers split by origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NepBreakdown {
    pub n_dark: f64,
    pub n_pump: f64,
    pub n_total: f64,
}

pub fn noise_equivalent_phonons(
    p: &SystemParams,
    d: &DetectionParams,
    n_c: f64,
) -> Result<NepBreakdown, ParamsError> {
    if n_c < 0.0 {
        return Err(ParamsError::NegativePhotonNumber(n_c));
    }
    if n_c == 0.0 {
        return Err(ParamsError::ZeroPhotonNumber);
    }
    let eta = d.efficiency();
    let n_dark = p.kappa * p.kappa * d.dark_rate / (4.0 * eta * p.kappa_e * p.g0 * p.g0 * n_c);
    let ratio = p.kappa * p.omega_m / (2.0 * p.kappa_e * p.g0);
    let n_pump = d.pump_suppression * ratio * ratio;
    Ok(NepBreakdown { n_dark, n_pump, n_total: n_dark + n_pump })
}

/// Rate-equation steady state ⟨n⟩ = γᵢn_b/(γᵢ ± |γ_OM|).
pub fn linear_steady_occupancy(p: &SystemParams, n_c: f64, side: Side) -> Result<f64, ParamsError> {
    let ba = gamma_om(p, n_c, side)?;
    if side == Side::Blue && ba.cooperativity >= 1.0 {
        return Err(ParamsError::AboveThreshold { cooperativity: ba.cooperativity });
    }
    Ok(p.gamma_i * p.n_b / ba.total_damping(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn defaults_validate_with_expected_quality_factor() {
        let v = validate_params(&SystemParams::default()).unwrap();
        assert!(rel(v.q_m, 5.6e9 / 3e6) < 1e-12);
        assert!((v.q_m - 1866.67).abs() < 0.01);
        assert!(v.params.sideband_resolved());
    }

    #[test]
    fn overcoupled_boundary_is_valid() {
        let mut p = SystemParams::default();
        p.kappa_e = p.kappa;
        let v = validate_params(&p).unwrap();
        assert_eq!(v.kappa_i, 0.0);
    }

    #[test]
    fn coupling_above_total_is_rejected() {
        let mut p = SystemParams::default();
        p.kappa_e = 2.0 * p.kappa;
        assert!(matches!(validate_params(&p), Err(ParamsError::CouplingExceedsTotal { .. })));
        p = SystemParams::default();
        p.gamma_i = 0.0;
        assert!(matches!(
            validate_params(&p),
            Err(ParamsError::NonPositiveRate { name: "gamma_i", .. })
        ));
    }

    #[test]
    fn back_action_at_1200_photons() {
        let p = SystemParams::default();
        let ba = gamma_om(&p, 1200.0, Side::Blue).unwrap();
        assert!((ba.rate.abs() / (2.0 * PI) - 2.444e6).abs() < 1e3);
        assert!((ba.cooperativity - 0.8147).abs() < 5e-4);
        assert!(ba.rate < 0.0);
        assert_eq!(gamma_om(&p, 0.0, Side::Red).unwrap().rate, 0.0);
        assert!(gamma_om(&p, -1.0, Side::Red).is_err());
    }

    #[test]
    fn threshold_photon_number() {
        let p = SystemParams::default();
        let n_thr = p.gamma_i * p.kappa / (4.0 * p.g0 * p.g0);
        assert!((n_thr - 1472.87).abs() < 0.01);
        let ba = gamma_om(&p, n_thr, Side::Blue).unwrap();
        assert!((ba.cooperativity - 1.0).abs() < 1e-12);
        assert!(ba.total_damping(&p).abs() < 1e-6 * p.gamma_i);
    }

    #[test]
    fn photons_from_power_at_blue_sideband() {
        let p = SystemParams::default();
        let n = intracavity_photons(&p, 71.9e-6, -p.omega_m).unwrap();
        assert!((n - 1200.0).abs() < 1.0, "n_c = {n}");
        assert_eq!(intracavity_photons(&p, 0.0, 0.3).unwrap(), 0.0);
        assert!(intracavity_photons(&p, -1e-6, 0.0).is_err());
        // resonance is the maximum
        let on = intracavity_photons(&p, 1e-6, 0.0).unwrap();
        let expected = 4.0 * p.kappa_e * 1e-6 / (HBAR * p.omega_c * p.kappa * p.kappa);
        assert!(rel(on, expected) < 1e-12);
        assert!(on > intracavity_photons(&p, 1e-6, 0.1 * p.kappa).unwrap());
    }

    #[test]
    fn per_phonon_rate_hand_values() {
        let p = SystemParams::default();
        let d = DetectionParams { eta_total: 0.3, ..DetectionParams::default() };
        let gamma = gamma_om(&p, 1.0, Side::Red).unwrap().rate;
        assert!((gamma - 1.28e4).abs() < 10.0);
        let rate = per_phonon_count_rate(&p, &d, 1.0).unwrap();
        assert!((rate - 1997.0).abs() < 2.0, "rate = {rate}");
        // thermal total far above the pile-up bound
        assert!((rate * p.n_b - 2.2e6).abs() < 0.05e6);

        let mut lossless = p;
        lossless.kappa_e = lossless.kappa;
        let d1 = DetectionParams { eta_total: 1.0, ..DetectionParams::default() };
        let r1 = per_phonon_count_rate(&lossless, &d1, 7.0).unwrap();
        assert!(rel(r1, gamma_om(&lossless, 7.0, Side::Red).unwrap().rate) < 1e-15);
    }

    #[test]
    fn nep_hand_values() {
        let p = SystemParams::default();
        let d = DetectionParams {
            eta_total: 0.3,
            dark_rate: 4.0,
            pump_suppression: 3.97e-10,
            ..DetectionParams::default()
        };
        let nep = noise_equivalent_phonons(&p, &d, 10.0).unwrap();
        assert!((nep.n_dark - 2.0e-4).abs() < 0.05e-4, "{nep:?}");
        assert!((nep.n_pump - 2.765e-2).abs() < 0.01e-2, "{nep:?}");
        assert_eq!(nep.n_total, nep.n_dark + nep.n_pump);

        let floor = DetectionParams { pump_suppression: 1.28e-8, ..d };
        let n = noise_equivalent_phonons(&p, &floor, 1e6).unwrap();
        assert!((n.n_pump - 0.89).abs() < 0.005, "{n:?}");

        let quiet = DetectionParams { dark_rate: 0.0, pump_suppression: 0.0, ..d };
        assert_eq!(noise_equivalent_phonons(&p, &quiet, 3.0).unwrap().n_total, 0.0);
        assert_eq!(noise_equivalent_phonons(&p, &d, 0.0), Err(ParamsError::ZeroPhotonNumber));
    }

    #[test]
    fn linear_occupancy_cases() {
        let p = SystemParams::default();
        let n_thr = p.threshold_photons();
        assert_eq!(linear_steady_occupancy(&p, 0.0, Side::Blue).unwrap(), 1100.0);
        assert!(rel(linear_steady_occupancy(&p, n_thr, Side::Red).unwrap(), 550.0) < 1e-12);
        assert!(rel(linear_steady_occupancy(&p, 0.5 * n_thr, Side::Blue).unwrap(), 2200.0) < 1e-12);
        assert!(matches!(
            linear_steady_occupancy(&p, n_thr * 1.0001, Side::Blue),
            Err(ParamsError::AboveThreshold { .. })
        ));
    }

    #[test]
    fn drive_amplitude_matches_photons() {
        let p = SystemParams::default();
        let d = DriveSpec::on_sideband(&p, Side::Blue, 1200.0);
        let omega = d.drive_amplitude(&p).unwrap();
        let half = 0.5 * p.kappa;
        assert!(rel(omega * omega / (half * half + p.omega_m * p.omega_m), 1200.0) < 1e-12);
    }
}
