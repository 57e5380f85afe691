//! Stochastic envelope dynamics of the mechanical mode.
//!
//! The mode is simulated as a complex envelope B(t) in the frame rotating
//! at ω_m, with n(t) = |B(t)|². The drift is −(γ_eff/2)B and the additive
//! complex noise is scaled so that d⟨n⟩/dt = −γ_eff⟨n⟩ + γᵢn_b.

use crate::params::{DriveSpec, ParamsError, Side, SystemParams};
use crate::provenance::{digest, Hash};
use crate::rng::{stream, Purpose};
use crate::sideband::{om_gain_nonlinear, om_gain_small_amplitude, solve_oscillation_amplitude, Oscillation, SidebandError};
use log::warn;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

/// Largest allowed γ_max·dt.
pub const MAX_RATE_STEP: f64 = 1e-3;
/// Points in the nonlinear gain table.
pub const GAIN_TABLE_POINTS: usize = 500;
/// Upper end of the tabulated modulation index.
pub const GAIN_TABLE_Z_MAX: f64 = 10.0;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("linear mode needs positive total damping, got {gamma_eff:.4e} rad/s; use nonlinear mode above threshold")]
    UnstableLinearRun { gamma_eff: f64 },
    #[error("step {dt:.3e} s exceeds {limit:.3e} s (gamma_max * dt must stay below 1e-3)")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("nonlinear mode models blue-detuned gain only")]
    NonlinearRequiresBlue,
    #[error("detuning {detuning:.4e} rad/s gives back-action of the wrong sign for the {side} side")]
    SideMismatch { side: &'static str, detuning: f64 },
    #[error("invalid simulation setting: {0}")]
    InvalidConfig(String),
    #[error("IF frequency {if_freq:.4e} rad/s at or above Nyquist {nyquist:.4e} rad/s")]
    NyquistViolation { if_freq: f64, nyquist: f64 },
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Sideband(#[from] SidebandError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimMode {
    Linear,
    Nonlinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Integration step (s).
    pub dt: f64,
    /// Recorded length after burn-in (s).
    pub duration: f64,
    pub seed: u64,
    pub mode: SimMode,
    pub side: Side,
    /// Discarded initial interval (s).
    pub burn_in: f64,
    /// Spacing of stored samples (s), rounded to a whole number of steps.
    pub sample_interval: f64,
    /// Starting envelope; a stationary draw when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Complex64>,
}

impl SimConfig {
    /// Config with the largest admissible step, burn-in of 20 decay times
    /// and the given sample spacing.
    pub fn auto(
        p: &SystemParams,
        drive: &DriveSpec,
        mode: SimMode,
        side: Side,
        duration: f64,
        sample_interval: f64,
        seed: u64,
    ) -> Result<Self, DynamicsError> {
        let rate = linear_back_action(p, drive)?;
        let dt = max_step(p, rate);
        let gamma_eff = (p.gamma_i + rate).abs().max(1e-2 * p.gamma_i);
        let burn_in = 20.0 / gamma_eff;
        Ok(SimConfig { dt, duration, seed, mode, side, burn_in, sample_interval, initial: None })
    }
}

/// Small-amplitude optomechanical damping for a drive (rad/s, signed).
///
/// Uses both motional sidebands at the given detuning; on the nominal
/// sideband this is ±4g₀²n_c/κ up to the counter-rotating correction.
pub fn linear_back_action(p: &SystemParams, drive: &DriveSpec) -> Result<f64, ParamsError> {
    let omega = drive.drive_amplitude(p)?;
    Ok(om_gain_small_amplitude(drive.detuning, omega, p))
}

/// Largest step allowed by γ_max·dt ≤ 1e-3, γ_max = γᵢ(1 + C).
pub fn max_step(p: &SystemParams, back_action: f64) -> f64 {
    MAX_RATE_STEP / (p.gamma_i + back_action.abs())
}

/// Sampled envelope B(t) in the frame rotating at ω_m.
#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeTrajectory {
    pub t0: f64,
    pub dt: f64,
    pub samples: Vec<Complex64>,
    #[serde(with = "hex_hash")]
    pub params_hash: Hash,
}

mod hex_hash {
    pub fn serialize<S: serde::Serializer>(h: &super::Hash, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(h))
    }
}

impl EnvelopeTrajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn occupancy(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|b| b.norm_sqr())
    }

    pub fn mean_occupancy(&self) -> f64 {
        self.occupancy().sum::<f64>() / self.samples.len().max(1) as f64
    }

    pub fn max_occupancy(&self) -> f64 {
        self.occupancy().fold(0.0, f64::max)
    }

    /// ⟨n²⟩/⟨n⟩², which is g²(0) of the envelope intensity.
    pub fn intensity_ratio(&self) -> f64 {
        let m = self.mean_occupancy();
        let m2 = self.occupancy().map(|n| n * n).sum::<f64>() / self.samples.len().max(1) as f64;
        m2 / (m * m)
    }

    /// Normalized autocovariance of n(t) at a lag of `k` samples.
    pub fn intensity_autocovariance(&self, k: usize) -> f64 {
        let n: Vec<f64> = self.occupancy().collect();
        autocovariance(&n, k)
    }

    /// Lag (s) at which the intensity autocovariance first falls below 1/e.
    pub fn correlation_time(&self) -> f64 {
        let n: Vec<f64> = self.occupancy().collect();
        let target = (-1.0f64).exp();
        let max_k = n.len() / 4;
        let mut prev = 0;
        let mut k = 1;
        while k < max_k && autocovariance(&n, k) > target {
            prev = k;
            k *= 2;
        }
        let (mut lo, mut hi) = (prev, k.min(max_k));
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if autocovariance(&n, mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi as f64 * self.dt
    }

    /// CSV with columns t, re_b, im_b, n.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "re_b", "im_b", "n"])?;
        for (k, b) in self.samples.iter().enumerate() {
            out.write_record(&[
                format!("{:.12e}", self.time(k)),
                format!("{:.12e}", b.re),
                format!("{:.12e}", b.im),
                format!("{:.12e}", b.norm_sqr()),
            ])?;
        }
        out.flush()
    }
}

fn autocovariance(x: &[f64], k: usize) -> f64 {
    let n = x.len();
    if k >= n {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if var == 0.0 {
        return 0.0;
    }
    let c = x[..n - k].iter().zip(&x[k..]).map(|(a, b)| (a - mean) * (b - mean)).sum::<f64>();
    c / ((n - k) as f64 * var)
}

/// γ_OM,nl(z) tabulated on a uniform grid with cubic Hermite
/// interpolation. Slopes come from fourth-order central differences; the
/// function is even in z, which supplies the points left of the origin.
#[derive(Debug, Clone)]
pub struct GainTable {
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl GainTable {
    pub fn new(
        p: &SystemParams,
        detuning: f64,
        drive: f64,
        z_max: f64,
        points: usize,
    ) -> Result<Self, SidebandError> {
        use rayon::prelude::*;
        let step = z_max / (points - 1) as f64;
        // two extra nodes past z_max for the end slopes
        let raw: Vec<f64> = (0..points + 2)
            .into_par_iter()
            .map(|k| om_gain_nonlinear(k as f64 * step, detuning, drive, p))
            .collect::<Result<_, _>>()?;
        let at = |k: isize| raw[k.unsigned_abs()];
        let last = (points + 1) as isize;
        let slopes = (0..points as isize)
            .map(|k| {
                if k + 2 <= last {
                    (at(k - 2) - 8.0 * at(k - 1) + 8.0 * at(k + 1) - at(k + 2)) / (12.0 * step)
                } else {
                    (at(k + 1) - at(k - 1)) / (2.0 * step)
                }
            })
            .collect();
        let values = raw[..points].to_vec();
        Ok(GainTable { step, values, slopes })
    }

    pub fn z_max(&self) -> f64 {
        self.step * (self.values.len() - 1) as f64
    }

    /// Interpolated γ_OM,nl(z); clamps to the last node beyond the table.
    pub fn eval(&self, z: f64) -> f64 {
        let x = z / self.step;
        let last = self.values.len() - 1;
        if x >= last as f64 {
            return self.values[last];
        }
        let k = x as usize;
        let t = x - k as f64;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.slopes[k] * self.step, self.slopes[k + 1] * self.step);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }
}

/// Integrates the envelope SDE by Euler–Maruyama.
pub fn simulate_envelope(
    p: &SystemParams,
    drive: &DriveSpec,
    cfg: &SimConfig,
) -> Result<EnvelopeTrajectory, DynamicsError> {
    for (name, v) in [("dt", cfg.dt), ("sample_interval", cfg.sample_interval)] {
        if !(v > 0.0) {
            return Err(DynamicsError::InvalidConfig(format!("{name} must be positive, got {v}")));
        }
    }
    if !(cfg.duration >= 0.0) || !(cfg.burn_in >= 0.0) {
        return Err(DynamicsError::InvalidConfig("duration and burn_in must be non-negative".into()));
    }

    let omega = drive.drive_amplitude(p)?;
    let lin_rate = om_gain_small_amplitude(drive.detuning, omega, p);
    if lin_rate != 0.0 && lin_rate.signum() != cfg.side.sign() {
        return Err(DynamicsError::SideMismatch { side: cfg.side.as_str(), detuning: drive.detuning });
    }
    let limit = max_step(p, lin_rate);
    if cfg.dt > limit * (1.0 + 1e-12) {
        return Err(DynamicsError::StepTooLarge { dt: cfg.dt, limit });
    }
    let gamma_lin = p.gamma_i + lin_rate;

    let table = match cfg.mode {
        SimMode::Linear => {
            if gamma_lin <= 0.0 {
                return Err(DynamicsError::UnstableLinearRun { gamma_eff: gamma_lin });
            }
            None
        }
        SimMode::Nonlinear => {
            if cfg.side != Side::Blue {
                return Err(DynamicsError::NonlinearRequiresBlue);
            }
            Some(GainTable::new(p, drive.detuning, omega, GAIN_TABLE_Z_MAX, GAIN_TABLE_POINTS)?)
        }
    };

    let mut rng = stream(cfg.seed, Purpose::Noise, 0);
    let mut normal = move || -> f64 { rng.sample(StandardNormal) };

    let b0 = match cfg.initial {
        Some(b) => b,
        None => {
            let mean_n = match cfg.mode {
                SimMode::Linear => p.gamma_i * p.n_b / gamma_lin,
                SimMode::Nonlinear => match solve_oscillation_amplitude(p, omega, drive.detuning)? {
                    Oscillation::LimitCycle(s) => {
                        // start on the cycle, thermal spread added below is negligible
                        s.mean_occupancy.max(0.0)
                    }
                    Oscillation::BelowThreshold { .. } => p.gamma_i * p.n_b / gamma_lin.max(1e-3 * p.gamma_i),
                },
            };
            let s = (0.5 * mean_n).sqrt();
            Complex64::new(s * normal(), s * normal())
        }
    };

    let gamma_eff_hint = match cfg.mode {
        SimMode::Linear => gamma_lin,
        SimMode::Nonlinear => gamma_lin.abs().max(1e-2 * p.gamma_i),
    };
    if cfg.duration < 100.0 / gamma_eff_hint {
        warn!("duration {:.3e} s is shorter than 100 decay times; statistics may not be stationary", cfg.duration);
    }
    if cfg.burn_in < 10.0 / gamma_eff_hint {
        warn!("burn-in {:.3e} s is shorter than 10 decay times", cfg.burn_in);
    }

    let dt = cfg.dt;
    let stride = ((cfg.sample_interval / dt).round() as usize).max(1);
    let burn_steps = (cfg.burn_in / dt).round() as usize;
    let n_samples = (cfg.duration / (stride as f64 * dt)).round() as usize;
    let total_steps = burn_steps + n_samples * stride;
    let noise = (0.5 * p.gamma_i * p.n_b * dt).sqrt();
    let z_per_beta = p.g0 / p.omega_m;

    let mut samples = Vec::with_capacity(n_samples);
    let mut b = b0;
    let mut next_record = burn_steps;
    for step in 0..total_steps {
        if step == next_record {
            samples.push(b);
            next_record += stride;
        }
        let gamma = match &table {
            None => gamma_lin,
            Some(t) => {
                let z = z_per_beta * (4.0 * b.norm_sqr() + 2.0).sqrt();
                p.gamma_i + t.eval(z)
            }
        };
        let decay = 1.0 - 0.5 * gamma * dt;
        b = Complex64::new(b.re * decay + noise * normal(), b.im * decay + noise * normal());
    }
    debug_assert_eq!(samples.len(), n_samples);

    Ok(EnvelopeTrajectory {
        t0: burn_steps as f64 * dt,
        dt: stride as f64 * dt,
        samples,
        params_hash: digest(&(p, drive, cfg)),
    })
}

/// Synthetic heterodyne photocurrent I(t) = 2Re[B(t)e^{iω_IF t}] + white
/// noise. `noise_floor` is the noise variance relative to the signal
/// variance 2⟨n⟩.
pub fn heterodyne_record(
    traj: &EnvelopeTrajectory,
    if_freq: f64,
    noise_floor: f64,
    seed: u64,
) -> Result<Vec<f64>, DynamicsError> {
    let nyquist = std::f64::consts::PI / traj.dt;
    if if_freq >= nyquist {
        return Err(DynamicsError::NyquistViolation { if_freq, nyquist });
    }
    if !(noise_floor >= 0.0) {
        return Err(DynamicsError::InvalidConfig(format!("noise floor must be non-negative, got {noise_floor}")));
    }
    let sigma = (noise_floor * 2.0 * traj.mean_occupancy()).sqrt();
    let mut rng = stream(seed, Purpose::Heterodyne, 0);
    Ok(traj
        .samples
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let phase = Complex64::from_polar(1.0, if_freq * traj.time(k));
            let white: f64 = rng.sample(StandardNormal);
            2.0 * (b * phase).re + sigma * white
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> SystemParams {
        SystemParams::default()
    }

    #[test]
    fn deterministic_decay_without_bath() {
        let p = SystemParams { n_b: 0.0, ..defaults() };
        let drive = DriveSpec::on_sideband(&p, Side::Red, 500.0);
        let mut cfg = SimConfig::auto(&p, &drive, SimMode::Linear, Side::Red, 2e-7, 1e-9, 1).unwrap();
        cfg.burn_in = 0.0;
        cfg.initial = Some(Complex64::new(30.0, -40.0));
        let traj = simulate_envelope(&p, &drive, &cfg).unwrap();
        let gamma = p.gamma_i + linear_back_action(&p, &drive).unwrap();
        for (k, b) in traj.samples.iter().enumerate().step_by(10) {
            let want = 50.0 * (-0.5 * gamma * traj.time(k)).exp();
            assert!((b.norm() - want).abs() < 1e-3 * want, "k={k}");
        }
    }

    #[test]
    fn rejects_invalid_setups() {
        let p = defaults();
        let blue = DriveSpec::on_sideband(&p, Side::Blue, 2.0 * p.threshold_photons());
        let cfg = SimConfig::auto(&p, &blue, SimMode::Linear, Side::Blue, 1e-6, 1e-9, 1).unwrap();
        assert!(matches!(simulate_envelope(&p, &blue, &cfg), Err(DynamicsError::UnstableLinearRun { .. })));

        let mut coarse = SimConfig { mode: SimMode::Nonlinear, ..cfg.clone() };
        coarse.dt *= 2.0;
        assert!(matches!(simulate_envelope(&p, &blue, &coarse), Err(DynamicsError::StepTooLarge { .. })));

        let red = DriveSpec::on_sideband(&p, Side::Red, 100.0);
        let cfg = SimConfig::auto(&p, &red, SimMode::Nonlinear, Side::Red, 1e-6, 1e-9, 1).unwrap();
        assert!(matches!(simulate_envelope(&p, &red, &cfg), Err(DynamicsError::NonlinearRequiresBlue)));

        let cfg = SimConfig { side: Side::Blue, mode: SimMode::Linear, ..cfg };
        assert!(matches!(simulate_envelope(&p, &red, &cfg), Err(DynamicsError::SideMismatch { .. })));
    }

    #[test]
    fn gain_table_matches_direct_sum() {
        let p = defaults();
        let det = -1.02 * p.omega_m;
        let omega = 2.2e12;
        let table = GainTable::new(&p, det, omega, GAIN_TABLE_Z_MAX, GAIN_TABLE_POINTS).unwrap();
        let scale = om_gain_nonlinear(0.0, det, omega, &p).unwrap().abs();
        for k in 0..400 {
            let z = 0.0123 + k as f64 * 0.02471;
            let direct = om_gain_nonlinear(z, det, omega, &p).unwrap();
            assert!((table.eval(z) - direct).abs() < 1e-6 * scale, "z = {z}");
        }
    }

    #[test]
    fn nyquist_is_enforced() {
        let traj = EnvelopeTrajectory {
            t0: 0.0,
            dt: 1e-9,
            samples: vec![Complex64::new(1.0, 0.0); 8],
            params_hash: [0; 32],
        };
        assert!(heterodyne_record(&traj, 4e9, 0.0, 1).is_err());
        let tone = heterodyne_record(&traj, 1e9, 0.0, 1).unwrap();
        assert!((tone[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn autocovariance_of_constant_is_zero() {
        assert_eq!(autocovariance(&[3.0; 16], 2), 0.0);
        let x: Vec<f64> = (0..100).map(|k| (k % 2) as f64).collect();
        assert!((autocovariance(&x, 2) - 1.0).abs() < 1e-12);
    }
}
