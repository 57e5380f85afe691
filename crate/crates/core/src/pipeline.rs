//! Seeded end-to-end runs: trajectory, clicks, correlation and spectrum.
//!
//! A [`Context`] holds one validated configuration. Everything derived from
//! it is a pure function of the config and a seed, so two runs with the same
//! inputs produce identical results.

use crate::analysis::{
    baseline_flatness, calibrate_g0, fano_factor, g2_histogram, g2_zero, g2_zero_and_decay, lorentzian_fit,
    welch_psd, AnalysisError, CalibrationResult, Flatness, G2Histogram, LinewidthPoint, Spectrum, SpectrumFit,
};
use crate::config::{ExperimentConfig, OccupancySource};
use crate::detection::{
    apply_detector, generate_sideband_events, hbt_split, seconds_to_ps, DetectorModel, EventRates,
    PhotonEventStream,
};
use crate::dynamics::{heterodyne_record, linear_back_action, simulate_envelope, EnvelopeTrajectory, SimConfig, SimMode};
use crate::error::{Error, Result};
use crate::params::{gamma_om, noise_equivalent_phonons, DetectionParams, DriveSpec, NepBreakdown, Side, SystemParams};
use crate::provenance::{to_hex, Hash};
use crate::rng::point_seed;
use crate::sideband::{solve_operating_point, solve_oscillation_amplitude, LimitCycleSolution, Oscillation, OPERATING_SCAN};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use std::f64::consts::TAU;

/// Counts wanted in the three central g² bins when the rate is automatic.
const CENTRAL_COUNTS: f64 = 2e5;
const AUTO_RATE_RANGE: (f64, f64) = (1e5, 5e7);
/// Largest tolerated dead-time bias of g²(0) under the automatic rate.
const DEAD_TIME_BIAS: f64 = 0.01;

fn as_hz<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(x / TAU)
}

fn as_hz_opt<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_some(&(v / TAU)),
        None => s.serialize_none(),
    }
}

/// Validated configuration with its derived constants.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: ExperimentConfig,
    pub params: SystemParams,
    pub detection: DetectionParams,
    pub detector: DetectorModel,
    pub config_hash: Hash,
}

/// One pump setting of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub side: Side,
    pub n_c: f64,
    pub seed: u64,
    pub mode: SimMode,
    pub drive: DriveSpec,
}

/// Attenuation and histogram settings chosen for a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HbtSettings {
    pub correlation_time_s: f64,
    pub bin_width_s: f64,
    pub max_lag_s: f64,
    pub target_rate: f64,
    pub attenuation: f64,
}

/// Click streams of the two HBT detectors.
#[derive(Debug, Clone)]
pub struct Detected {
    pub settings: HbtSettings,
    pub detector_a: PhotonEventStream,
    pub detector_b: PhotonEventStream,
    /// Detected clicks per phonon per second summed over both detectors.
    pub per_phonon: f64,
    /// Pump bleed-through and dark clicks per second, both detectors.
    pub noise_rate: f64,
}

impl Detected {
    /// Both detectors on one stream.
    pub fn merged(&self) -> PhotonEventStream {
        self.detector_a.merge(&self.detector_b)
    }

    pub fn count_rate(&self) -> f64 {
        (self.detector_a.len() + self.detector_b.len()) as f64 / self.detector_a.duration_s()
    }
}

/// Summary of one point. Rates are angular internally and written in Hz.
#[derive(Debug, Clone, Serialize)]
pub struct PointSummary {
    pub side: Side,
    pub n_c: f64,
    pub cooperativity: f64,
    pub seed: u64,
    pub mode: SimMode,
    pub duration_s: f64,
    /// Mean n(t) of the simulated trajectory.
    pub mean_occupancy: f64,
    /// ⟨n⟩ inferred from the click rate.
    pub blind_occupancy: f64,
    pub occupancy_source: OccupancySource,
    /// ⟨n²⟩/⟨n⟩² of the trajectory.
    pub intensity_ratio: f64,
    pub attenuation: f64,
    pub count_rate: f64,
    pub rate_a: f64,
    pub rate_b: f64,
    pub total_pairs: u64,
    pub correlation_time_s: f64,
    pub bin_width_s: f64,
    pub max_lag_s: f64,
    pub g2_0: f64,
    pub g2_0_err: f64,
    /// Spread of g²(0) between records of this length, 2(g²(0) − 1)√(τ_c/T)
    /// for a Gaussian field. Not included in `g2_0_err`.
    pub g2_0_record_err: f64,
    pub g2_amplitude: Option<f64>,
    #[serde(rename = "g2_decay_hz", serialize_with = "as_hz_opt")]
    pub g2_decay_rate: Option<f64>,
    #[serde(rename = "g2_decay_err_hz", serialize_with = "as_hz_opt")]
    pub g2_decay_rate_err: Option<f64>,
    pub decay_identifiable: bool,
    pub g2_fit_note: Option<String>,
    /// Bins with |τ| in [8, 10] correlation times.
    pub baseline: Option<Flatness>,
    /// γᵢ + γ_OM from small-amplitude theory; negative above threshold.
    #[serde(rename = "linear_linewidth_hz", serialize_with = "as_hz")]
    pub linear_linewidth: f64,
    pub fano: f64,
    pub fano_err: f64,
    /// 1 + ⟨n⟩(⟨n²⟩/⟨n⟩² − 1) from the trajectory.
    pub fano_envelope: f64,
    pub npsd_center_hz: Option<f64>,
    #[serde(rename = "npsd_linewidth_hz", serialize_with = "as_hz_opt")]
    pub npsd_linewidth: Option<f64>,
    #[serde(rename = "npsd_linewidth_err_hz", serialize_with = "as_hz_opt")]
    pub npsd_linewidth_err: Option<f64>,
    /// Upper bound on the NPSD linewidth when the line is unresolved.
    pub npsd_linewidth_bound_hz: Option<f64>,
    pub npsd_note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct PointRun {
    pub summary: PointSummary,
    pub histogram: G2Histogram,
    pub spectrum: Option<(Spectrum, SpectrumFit)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NepRow {
    pub n_c: f64,
    #[serde(flatten)]
    pub nep: NepBreakdown,
}

#[derive(Debug, Clone)]
pub struct CalibrationRun {
    pub points: Vec<LinewidthPoint>,
    pub result: CalibrationResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveRow {
    pub delta_over_omega_m: f64,
    pub z: f64,
    pub beta: f64,
    pub mean_n: f64,
    pub n1: f64,
    /// |γ_OM(z) + γᵢ|/γᵢ; zero below threshold.
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OperatingPoint {
    pub n1_target: f64,
    pub delta_over_omega_m: f64,
    pub z: f64,
    pub beta: f64,
    pub mean_n: f64,
    pub n1: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveMap {
    /// Ω (rad/s) held fixed across the map.
    pub drive_amplitude: f64,
    pub rows: Vec<SolveRow>,
    /// Δ/ω_m of the first above-threshold grid point.
    pub threshold_delta_over_omega_m: Option<f64>,
    pub operating_point: Option<OperatingPoint>,
}

fn next_pow2_at_least(x: f64) -> usize {
    let mut n = 16usize;
    while (n as f64) < x {
        n *= 2;
    }
    n
}

fn pow2_at_most(x: usize) -> usize {
    if x < 2 {
        return x;
    }
    1usize << (usize::BITS - 1 - x.leading_zeros())
}

impl Context {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        Ok(Context {
            params: config.system_params(),
            detection: config.detection_params(),
            detector: config.detector_model(),
            config_hash: config.hash(),
            config,
        })
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn config_hash_hex(&self) -> String {
        to_hex(&self.config_hash)
    }

    /// Red pumping is always simulated in linear mode.
    pub fn point(&self, side: Side, n_c: f64, seed: u64) -> Point {
        let mode = if side == Side::Red { SimMode::Linear } else { self.config.sim.mode };
        Point { side, n_c, seed, mode, drive: self.config.drive_with_photons(side, n_c) }
    }

    /// The configured single point.
    pub fn single_point(&self) -> Result<Point> {
        let drive = self.config.drive_spec();
        let n_c = drive.photons(&self.params)?;
        Ok(Point { drive, ..self.point(self.config.drive.side, n_c, self.seed()) })
    }

    /// γᵢ + γ_OM at small amplitude (rad/s).
    pub fn linear_linewidth(&self, pt: &Point) -> Result<f64> {
        Ok(self.params.gamma_i + linear_back_action(&self.params, &pt.drive)?)
    }

    pub fn sim_config(&self, pt: &Point, mode: SimMode, duration: f64) -> Result<SimConfig> {
        let s = &self.config.sim;
        let mut cfg = SimConfig::auto(&self.params, &pt.drive, mode, pt.side, duration, s.sample_interval_s, pt.seed)?;
        if let Some(dt) = s.dt_s {
            cfg.dt = dt;
        }
        if let Some(b) = s.burn_in_s {
            cfg.burn_in = b;
        }
        Ok(cfg)
    }

    pub fn simulate(&self, pt: &Point, duration: f64) -> Result<EnvelopeTrajectory> {
        let cfg = self.sim_config(pt, pt.mode, duration)?;
        Ok(simulate_envelope(&self.params, &pt.drive, &cfg)?)
    }

    /// Efficiency before the detectors, so that the detector efficiency
    /// brings the total to `eta_total`.
    fn upstream(&self, attenuation: f64) -> DetectionParams {
        DetectionParams {
            eta_total: self.detection.eta_total / self.detector.efficiency,
            attenuation,
            ..self.detection
        }
    }

    fn auto_target_rate(&self, duration: f64, bin_width: f64) -> f64 {
        let (lo, hi) = AUTO_RATE_RANGE;
        let mut r = (CENTRAL_COUNTS / (3.0 * duration * bin_width)).sqrt().clamp(lo, hi);
        if self.detector.dead_time > 0.0 {
            r = r.min(DEAD_TIME_BIAS / (4.0 * self.detector.dead_time));
        }
        r
    }

    /// Histogram settings from the trajectory and the attenuation that
    /// brings the weaker detector to the target rate.
    pub fn hbt_settings(&self, pt: &Point, traj: &EnvelopeTrajectory) -> Result<HbtSettings> {
        let a = &self.config.analysis;
        let tau_c = traj.correlation_time();
        let bin_width_s = a.bin_width_s.unwrap_or(tau_c / 50.0).max(1e-12);
        let max_lag_s = a.max_lag_s.unwrap_or(12.0 * tau_c).max(bin_width_s);
        let target_rate = a.target_rate.unwrap_or_else(|| self.auto_target_rate(traj.duration(), bin_width_s));
        let attenuation = match self.config.detection.attenuation {
            Some(att) => att,
            None => {
                let rates = EventRates::new(&self.params, &self.upstream(1.0), pt.side, pt.n_c)?;
                let weaker = self.detection.split_ratio.min(1.0 - self.detection.split_ratio);
                let full = weaker
                    * self.detector.efficiency
                    * (rates.sideband(traj.mean_occupancy()) + rates.pump);
                if full > target_rate {
                    target_rate / full
                } else {
                    1.0
                }
            }
        };
        Ok(HbtSettings { correlation_time_s: tau_c, bin_width_s, max_lag_s, target_rate, attenuation })
    }

    /// Clicks on both HBT detectors.
    pub fn detect(&self, pt: &Point, traj: &EnvelopeTrajectory) -> Result<Detected> {
        if traj.is_empty() {
            return Err(AnalysisError::EmptyStream.into());
        }
        let settings = self.hbt_settings(pt, traj)?;
        let upstream = self.upstream(settings.attenuation);
        let events = generate_sideband_events(traj, &self.params, &upstream, pt.side, pt.n_c, pt.seed)?;
        let (a, b) = hbt_split(&events, self.detection.split_ratio, pt.seed);
        let detector_a = apply_detector(&a, &self.detector, pt.seed);
        let detector_b = apply_detector(&b, &self.detector, pt.seed);
        let rates = EventRates::new(&self.params, &upstream, pt.side, 1.0)?;
        let eta = self.detector.efficiency;
        Ok(Detected {
            settings,
            detector_a,
            detector_b,
            per_phonon: eta * rates.per_phonon * pt.n_c,
            noise_rate: eta * rates.pump * pt.n_c + 2.0 * self.detector.dark_rate,
        })
    }

    /// Heterodyne NPSD and the Lorentzian fit window. Above threshold the
    /// segment is as long as the record allows.
    pub fn npsd_spectrum(&self, pt: &Point, traj: &EnvelopeTrajectory) -> Result<(Spectrum, (f64, f64))> {
        if traj.is_empty() {
            return Err(AnalysisError::EmptyStream.into());
        }
        let a = &self.config.analysis;
        let fs = 1.0 / traj.dt;
        let if_hz = a.if_freq_hz.unwrap_or(0.25 * fs);
        let record = heterodyne_record(traj, TAU * if_hz, a.noise_floor, pt.seed)?;
        let lin = self.linear_linewidth(pt)?;
        let narrow = lin <= 0.0;
        let longest = pow2_at_most(record.len() / 8).max(16.min(record.len()));
        let segment = a.segment_length.unwrap_or_else(|| {
            if narrow {
                longest
            } else {
                next_pow2_at_least(20.0 * fs / (lin / TAU)).min(longest)
            }
        });
        let spec = welch_psd(&record, traj.dt, segment, a.overlap, a.window)?;
        let half = if narrow { 20.0 * spec.resolution() } else { (a.fit_half_width * lin / TAU).max(20.0 * spec.resolution()) };
        let window = ((if_hz - half).max(0.05 * fs), (if_hz + half).min(0.45 * fs));
        Ok((spec, window))
    }

    pub fn npsd(&self, pt: &Point, traj: &EnvelopeTrajectory) -> Result<(Spectrum, SpectrumFit)> {
        let (spec, window) = self.npsd_spectrum(pt, traj)?;
        let fit = lorentzian_fit(&spec, window)?;
        Ok((spec, fit))
    }

    /// Simulation, detection, g², Fano factor and NPSD at one point.
    pub fn run_point(&self, pt: &Point) -> Result<PointRun> {
        let duration = self.config.sim.duration_s;
        let traj = self.simulate(pt, duration)?;
        let det = self.detect(pt, &traj)?;
        let s = det.settings;
        let h = g2_histogram(
            &det.detector_a,
            &det.detector_b,
            seconds_to_ps(s.bin_width_s).max(1),
            seconds_to_ps(s.max_lag_s),
            self.config.analysis.g2_mode,
        )?;
        let (g2_0, g2_0_err, amplitude, decay, decay_err, identifiable, note) = match g2_zero_and_decay(&h) {
            Ok(e) => (
                e.g2_0,
                e.g2_0_err,
                Some(e.amplitude),
                Some(e.decay_rate),
                Some(e.decay_rate_err),
                e.decay_identifiable,
                None,
            ),
            Err(AnalysisError::FitNotConverged(what)) => {
                let (g, e) = g2_zero(&h)?;
                warn!("n_c = {}: {what} fit did not converge", pt.n_c);
                (g, e, None, None, None, false, Some(format!("{what} fit did not converge")))
            }
            Err(e) => return Err(e.into()),
        };
        let excess = (g2_0 - 1.0).max(0.0);
        let g2_0_record_err = 2.0 * excess * (s.correlation_time_s / traj.duration()).sqrt();
        let baseline = if s.max_lag_s >= 10.0 * s.correlation_time_s {
            let record_err = excess * (s.correlation_time_s / traj.duration()).sqrt();
            baseline_flatness(&h, 8.0 * s.correlation_time_s, 10.0 * s.correlation_time_s, record_err)
        } else {
            None
        };

        let mean_occupancy = traj.mean_occupancy();
        let vacuum = if pt.side == Side::Blue { 1.0 } else { 0.0 };
        let blind_occupancy = (det.count_rate() - det.noise_rate) / det.per_phonon - vacuum;
        let source = self.config.analysis.occupancy_source;
        let n_used = match source {
            OccupancySource::Trajectory => mean_occupancy,
            OccupancySource::Blind => blind_occupancy,
        };
        let (fano, fano_err) = fano_factor(g2_0, g2_0_err, n_used);
        let ratio = traj.intensity_ratio();

        let mut bound = None;
        let mut npsd_note = None;
        let spectrum = match self.npsd(pt, &traj) {
            Ok(x) => Some(x),
            Err(Error::Analysis(AnalysisError::LineUnresolved { upper_bound })) => {
                bound = Some(upper_bound);
                npsd_note = Some("line narrower than the resolution".to_string());
                None
            }
            Err(e) => {
                warn!("n_c = {}: NPSD fit failed: {e}", pt.n_c);
                npsd_note = Some(format!("NPSD fit failed: {e}"));
                None
            }
        };
        let fit = spectrum.as_ref().map(|(_, f)| f);

        let summary = PointSummary {
            side: pt.side,
            n_c: pt.n_c,
            cooperativity: gamma_om(&self.params, pt.n_c, pt.side)?.cooperativity,
            seed: pt.seed,
            mode: pt.mode,
            duration_s: traj.duration(),
            mean_occupancy,
            blind_occupancy,
            occupancy_source: source,
            intensity_ratio: ratio,
            attenuation: s.attenuation,
            count_rate: det.count_rate(),
            rate_a: h.rate1,
            rate_b: h.rate2,
            total_pairs: h.total_pairs(),
            correlation_time_s: s.correlation_time_s,
            bin_width_s: h.bin_width as f64 / 1e12,
            max_lag_s: s.max_lag_s,
            g2_0,
            g2_0_err,
            g2_0_record_err,
            g2_amplitude: amplitude,
            g2_decay_rate: decay,
            g2_decay_rate_err: decay_err,
            decay_identifiable: identifiable,
            g2_fit_note: note,
            baseline,
            linear_linewidth: self.linear_linewidth(pt)?,
            fano,
            fano_err,
            fano_envelope: 1.0 + mean_occupancy * (ratio - 1.0),
            npsd_center_hz: fit.map(|f| f.center),
            npsd_linewidth: fit.map(|f| TAU * f.fwhm),
            npsd_linewidth_err: fit.map(|f| TAU * f.fwhm_err()),
            npsd_linewidth_bound_hz: bound,
            npsd_note,
        };
        info!(
            "n_c = {:.1}: <n> = {:.4e}, g2(0) = {:.4} ± {:.4}, pairs = {}",
            pt.n_c, mean_occupancy, g2_0, g2_0_err, summary.total_pairs
        );
        Ok(PointRun { summary, histogram: h, spectrum })
    }

    /// Sweep points with seeds derived from the run seed, run in parallel.
    pub fn sweep_points(&self) -> Vec<Point> {
        self.config
            .sweep_points()
            .into_iter()
            .enumerate()
            .map(|(k, n_c)| self.point(self.config.sweep.side, n_c, point_seed(self.seed(), k as u32)))
            .collect()
    }

    pub fn sweep(&self) -> Result<Vec<PointRun>> {
        self.sweep_points().par_iter().map(|pt| self.run_point(pt)).collect()
    }

    pub fn nep_table(&self) -> Result<Vec<NepRow>> {
        self.config
            .analysis
            .nep_n_c
            .iter()
            .map(|&n_c| Ok(NepRow { n_c, nep: noise_equivalent_phonons(&self.params, &self.detection, n_c)? }))
            .collect()
    }

    /// Linear-mode linewidths at the calibration pump levels on both sides,
    /// then the joint fit for γᵢ and g₀.
    pub fn calibrate(&self) -> Result<CalibrationRun> {
        let cal = &self.config.calibration;
        let pts: Vec<Point> = [Side::Red, Side::Blue]
            .iter()
            .flat_map(|&side| cal.n_c.iter().map(move |&n| (side, n)))
            .enumerate()
            .map(|(k, (side, n_c))| Point {
                mode: SimMode::Linear,
                ..self.point(side, n_c, point_seed(self.seed(), k as u32))
            })
            .collect();
        let points: Vec<LinewidthPoint> = pts
            .par_iter()
            .map(|pt| {
                let traj = self.simulate(pt, cal.duration_s)?;
                let (_, fit) = self.npsd(pt, &traj)?;
                if !fit.converged {
                    return Err(AnalysisError::FitNotConverged(format!("Lorentzian at n_c = {}", pt.n_c)).into());
                }
                Ok(LinewidthPoint { n_c: pt.n_c, side: pt.side, gamma_fit: TAU * fit.fwhm, gamma_err: TAU * fit.fwhm_err() })
            })
            .collect::<Result<_>>()?;
        let result = calibrate_g0(&points, &self.params)?;
        Ok(CalibrationRun { points, result })
    }

    /// Limit-cycle solutions over Δ ∈ [−1.5, −0.5]ω_m at the configured
    /// drive amplitude, and the operating point if a first-Stokes target is
    /// set.
    pub fn solve_map(&self) -> Result<SolveMap> {
        let p = &self.params;
        let omega = self.config.drive_spec().drive_amplitude(p)?;
        let n = self.config.analysis.solve_points;
        let (lo, hi) = OPERATING_SCAN;
        let rows: Vec<SolveRow> = (0..n)
            .into_par_iter()
            .map(|k| {
                let x = lo + (hi - lo) * k as f64 / (n - 1) as f64;
                let row = match solve_oscillation_amplitude(p, omega, x * p.omega_m)? {
                    Oscillation::BelowThreshold { .. } => {
                        SolveRow { delta_over_omega_m: x, z: 0.0, beta: 0.0, mean_n: 0.0, n1: 0.0, residual: 0.0 }
                    }
                    Oscillation::LimitCycle(s) => solve_row(x, &s),
                };
                Ok(row)
            })
            .collect::<Result<_>>()?;
        let threshold = rows.iter().find(|r| r.z > 0.0).map(|r| r.delta_over_omega_m);
        let operating_point = match self.config.analysis.n1_target {
            None => None,
            Some(target) => {
                let (delta, s) = solve_operating_point(p, omega, target)?;
                let r = solve_row(delta / p.omega_m, &s);
                Some(OperatingPoint {
                    n1_target: target,
                    delta_over_omega_m: r.delta_over_omega_m,
                    z: r.z,
                    beta: r.beta,
                    mean_n: r.mean_n,
                    n1: r.n1,
                    residual: r.residual,
                })
            }
        };
        Ok(SolveMap { drive_amplitude: omega, rows, threshold_delta_over_omega_m: threshold, operating_point })
    }

    /// Detected clicks of both detectors at the configured point, tagged
    /// with the config hash and seed.
    pub fn events(&self) -> Result<(Detected, PhotonEventStream)> {
        let pt = self.single_point()?;
        let traj = self.simulate(&pt, self.config.sim.duration_s)?;
        let det = self.detect(&pt, &traj)?;
        let mut merged = det.merged();
        merged.meta.params_hash = self.config_hash;
        merged.meta.seed = Some(pt.seed);
        Ok((det, merged))
    }
}

fn solve_row(x: f64, s: &LimitCycleSolution) -> SolveRow {
    SolveRow {
        delta_over_omega_m: x,
        z: s.z,
        beta: s.beta,
        mean_n: s.mean_occupancy,
        n1: s.sidebands.stokes_photons(),
        residual: s.residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powers_of_two() {
        assert_eq!(next_pow2_at_least(1000.0), 1024);
        assert_eq!(next_pow2_at_least(3.0), 16);
        assert_eq!(pow2_at_most(1000), 512);
        assert_eq!(pow2_at_most(1024), 1024);
    }

    #[test]
    fn zero_duration_is_an_empty_stream() {
        let mut cfg = ExperimentConfig::default();
        cfg.sim.duration_s = 0.0;
        let ctx = Context::new(cfg).unwrap();
        let pt = ctx.single_point().unwrap();
        let err = ctx.run_point(&pt).unwrap_err();
        assert!(matches!(err, crate::error::Error::Analysis(AnalysisError::EmptyStream)), "{err}");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn automatic_rate_respects_dead_time() {
        let ctx = Context::new(ExperimentConfig::default()).unwrap();
        let r = ctx.auto_target_rate(1.0, 1e-9);
        assert!((r - (2e5f64 / 3e-9).sqrt()).abs() < 1e-9 * r);
        assert_eq!(ctx.auto_target_rate(1e-6, 1e-12), 5e7);

        let mut cfg = ExperimentConfig::default();
        cfg.detection.dead_time_s = 40e-9;
        let ctx = Context::new(cfg).unwrap();
        assert!((ctx.auto_target_rate(1e-3, 1e-9) - 0.01 / 160e-9).abs() < 1e-6);
    }
}
