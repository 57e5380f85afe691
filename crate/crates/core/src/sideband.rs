//! Classical cavity field under large-amplitude mechanical motion.
//!
//! The mechanical position is taken as a pure tone and the cavity field is
//! expanded in motional sidebands through the Jacobi–Anger identity. The
//! phase reference for every amplitude here is x(t) = −β sin(ω_m t), the
//! convention under which the double-sum sideband amplitudes are exact.
//!
//! Rates follow the same sign convention as [`crate::params::gamma_om`]:
//! positive is damping, negative (blue-detuned) is gain.

use crate::params::SystemParams;
use crate::special::BesselTable;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

/// Largest sideband index the automatic truncation may reach.
pub const MAX_TRUNCATION: usize = 200;
/// Relative power allowed in the outermost retained sideband.
pub const TAIL_BOUND: f64 = 1e-12;
/// Upper end of the amplitude search for the gain-balance root.
pub const Z_SEARCH_MAX: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SidebandError {
    #[error("sideband series did not reach the tail bound within N = {max}")]
    TruncationNotConverged { max: usize },
    #[error("modulation index must be non-negative, got {0}")]
    NegativeModulation(f64),
    #[error("integration step {dt:.3e} s exceeds 1% of the fastest timescale ({limit:.3e} s)")]
    StepSizeTooCoarse { dt: f64, limit: f64 },
    #[error("time grid too short: {0}")]
    GridTooShort(String),
    #[error("gain never balances intrinsic loss for z <= {z_max}")]
    NoBracket { z_max: f64 },
    #[error("no detuning in [{lo:.3}, {hi:.3}] omega_m reproduces the requested Stokes photon number")]
    NoSolutionInRange { lo: f64, hi: f64 },
    #[error("requested Stokes photon number must be positive, got {0}")]
    NonPositiveTarget(f64),
}

/// hₘ = κ/2 + i(Δ + mω_m).
fn h(p: &SystemParams, detuning: f64, m: i64) -> Complex64 {
    Complex64::new(0.5 * p.kappa, detuning + m as f64 * p.omega_m)
}

fn i_pow(n: i64) -> Complex64 {
    match n.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Sideband truncation policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// Start at ⌈z⌉ + 20 and double until the tail bound holds.
    Auto,
    Fixed(usize),
}

/// Cavity field amplitudes αₙ on the comb ω_l − nω_m, for |n| ≤ N.
#[derive(Debug, Clone, Serialize)]
pub struct SidebandSet {
    pub z: f64,
    pub detuning: f64,
    pub drive: f64,
    pub truncation: usize,
    amplitudes: Vec<Complex64>,
}

impl SidebandSet {
    /// αₙ, zero outside the truncation.
    pub fn amplitude(&self, n: i64) -> Complex64 {
        let idx = n + self.truncation as i64;
        if idx < 0 || idx as usize >= self.amplitudes.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.amplitudes[idx as usize]
        }
    }

    /// (n, αₙ) pairs from −N to N.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let n0 = self.truncation as i64;
        self.amplitudes.iter().enumerate().map(move |(k, a)| (k as i64 - n0, *a))
    }

    /// Σ|αₙ|², the time-averaged intracavity photon number.
    pub fn total_photons(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Photons in the first Stokes sideband, n₁ = |α₁|².
    pub fn stokes_photons(&self) -> f64 {
        self.amplitude(1).norm_sqr()
    }

    /// Largest of |α_{±N}|² relative to the total.
    pub fn tail_ratio(&self) -> f64 {
        let total = self.total_photons();
        if total == 0.0 {
            return 0.0;
        }
        let n = self.truncation as i64;
        self.amplitude(n).norm_sqr().max(self.amplitude(-n).norm_sqr()) / total
    }
}

fn sidebands_fixed(z: f64, detuning: f64, drive: f64, p: &SystemParams, n: usize) -> SidebandSet {
    let bessel = BesselTable::new(z, 2 * n + 2);
    let nn = n as i64;
    let inv_h: Vec<Complex64> = (-nn..=nn).map(|m| h(p, detuning, m).inv()).collect();
    let amplitudes = (-nn..=nn)
        .map(|k| {
            let sum: Complex64 = (-nn..=nn)
                .map(|m| inv_h[(m + nn) as usize] * (bessel.get(m) * bessel.get(m - k)))
                .sum();
            i_pow(k) * drive * sum
        })
        .collect();
    SidebandSet { z, detuning, drive, truncation: n, amplitudes }
}

/// αₙ = iⁿ Ω Σₘ Jₘ(z)Jₘ₋ₙ(z)/hₘ.
///
/// The full double sum is kept: it resolves each output frequency
/// separately, which matters once a single sideband is filtered out for
/// detection.
pub fn bessel_sideband_amplitudes(
    z: f64,
    detuning: f64,
    drive: f64,
    p: &SystemParams,
    truncation: Truncation,
) -> Result<SidebandSet, SidebandError> {
    if !(z >= 0.0) {
        return Err(SidebandError::NegativeModulation(z));
    }
    match truncation {
        Truncation::Fixed(n) => Ok(sidebands_fixed(z, detuning, drive, p, n)),
        Truncation::Auto => {
            let mut n = z.ceil() as usize + 20;
            loop {
                let n_eff = n.min(MAX_TRUNCATION);
                let set = sidebands_fixed(z, detuning, drive, p, n_eff);
                if set.tail_ratio() < TAIL_BOUND {
                    return Ok(set);
                }
                if n_eff == MAX_TRUNCATION {
                    return Err(SidebandError::TruncationNotConverged { max: MAX_TRUNCATION });
                }
                n *= 2;
            }
        }
    }
}

/// Bessel order beyond which Jₙ(z)² is negligible for the gain sum.
fn gain_truncation(z: f64) -> Result<usize, SidebandError> {
    let mut n = z.ceil() as usize + 20;
    loop {
        let n_eff = n.min(MAX_TRUNCATION);
        let t = BesselTable::new(z, n_eff + 1);
        let tail = t.get(n_eff as i64).abs().max(t.get(n_eff as i64 + 1).abs());
        if tail < 1e-17 {
            return Ok(n_eff);
        }
        if n_eff == MAX_TRUNCATION {
            return Err(SidebandError::TruncationNotConverged { max: MAX_TRUNCATION });
        }
        n *= 2;
    }
}

/// Σₙ Jₙ(z)Jₙ₊₁(z)/(z hₙ h*ₙ₊₁), with Jₖ/z taken from the recurrence so that
/// z = 0 needs no division.
fn gain_sum(z: f64, detuning: f64, p: &SystemParams) -> Result<Complex64, SidebandError> {
    let n_max = gain_truncation(z)? as i64;
    let t = BesselTable::new(z, n_max as usize + 3);
    let mut sum = Complex64::new(0.0, 0.0);
    for n in (-n_max - 1)..=n_max {
        let q = if n + 1 != 0 { t.get(n) * t.over_z(n + 1) } else { t.over_z(n) * t.get(n + 1) };
        if q == 0.0 {
            continue;
        }
        let denom = h(p, detuning, n) * h(p, detuning, n + 1).conj();
        sum += q / denom;
    }
    Ok(sum)
}

/// Amplitude-dependent optomechanical damping γ_OM(z) (rad/s).
///
/// Equals −(4g₀²Ω²/ω_m)·Im Σₙ Jₙ(z)Jₙ₊₁(z)/(z hₙ h*ₙ₊₁). The overall sign is
/// chosen so that blue detuning gives negative (anti-damping) values, the
/// same convention as the linear rate; an energy-balance calculation on the
/// time-domain field confirms it.
pub fn om_gain_nonlinear(
    z: f64,
    detuning: f64,
    drive: f64,
    p: &SystemParams,
) -> Result<f64, SidebandError> {
    if !(z >= 0.0) {
        return Err(SidebandError::NegativeModulation(z));
    }
    let s = gain_sum(z, detuning, p)?;
    Ok(-(4.0 * p.g0 * p.g0 * drive * drive / p.omega_m) * s.im)
}

/// Linear (z → 0) back-action including the counter-rotating sideband,
/// g₀²n_cκ[1/((κ/2)² + (Δ+ω_m)²) − 1/((κ/2)² + (Δ−ω_m)²)] with the sign
/// flipped to the damping convention.
pub fn om_gain_small_amplitude(detuning: f64, drive: f64, p: &SystemParams) -> f64 {
    let half = 0.5 * p.kappa;
    let n_c = drive * drive / (half * half + detuning * detuning);
    let stokes = 1.0 / (half * half + (detuning + p.omega_m).powi(2));
    let anti = 1.0 / (half * half + (detuning - p.omega_m).powi(2));
    -p.g0 * p.g0 * n_c * p.kappa * (stokes - anti)
}

/// Self-oscillation operating point.
#[derive(Debug, Clone, Serialize)]
pub struct LimitCycleSolution {
    pub z: f64,
    /// Oscillation amplitude in zero-point units.
    pub beta: f64,
    /// ⟨n⟩ = (β² − 2)/4.
    pub mean_occupancy: f64,
    pub detuning: f64,
    pub sidebands: SidebandSet,
    /// |γ_OM(z) + γᵢ|/γᵢ at the returned z.
    pub residual: f64,
}

/// Outcome of the gain-balance search.
#[derive(Debug, Clone)]
pub enum Oscillation {
    /// Small-amplitude gain does not overcome intrinsic loss.
    BelowThreshold { cooperativity: f64 },
    LimitCycle(LimitCycleSolution),
}

impl Oscillation {
    pub fn limit_cycle(&self) -> Option<&LimitCycleSolution> {
        match self {
            Oscillation::LimitCycle(s) => Some(s),
            Oscillation::BelowThreshold { .. } => None,
        }
    }
}

/// Finds z* > 0 with γ_OM(z*) = −γᵢ.
///
/// The sign change of γ_OM(z) + γᵢ is bracketed on the geometric grid
/// z = 10⁻⁴·2ᵏ (capped at [`Z_SEARCH_MAX`]) and refined by bisection to
/// 10⁻¹² in z.
pub fn solve_oscillation_amplitude(
    p: &SystemParams,
    drive: f64,
    detuning: f64,
) -> Result<Oscillation, SidebandError> {
    let balance = |z: f64| -> Result<f64, SidebandError> {
        Ok(om_gain_nonlinear(z, detuning, drive, p)? + p.gamma_i)
    };
    let f0 = balance(0.0)?;
    if f0 >= 0.0 {
        let g0 = om_gain_nonlinear(0.0, detuning, drive, p)?;
        return Ok(Oscillation::BelowThreshold { cooperativity: -g0 / p.gamma_i });
    }

    let mut lo = 0.0;
    let mut hi = None;
    let mut z: f64 = 1e-4;
    loop {
        let zc = z.min(Z_SEARCH_MAX);
        if balance(zc)? >= 0.0 {
            hi = Some(zc);
            break;
        }
        lo = zc;
        if zc >= Z_SEARCH_MAX {
            break;
        }
        z *= 2.0;
    }
    let Some(mut hi) = hi else {
        return Err(SidebandError::NoBracket { z_max: Z_SEARCH_MAX });
    };

    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if balance(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // pick the bracket end with the smaller residual
    let (rl, rh) = (balance(lo)?.abs(), balance(hi)?.abs());
    let (z_star, res) = if rl <= rh { (lo, rl) } else { (hi, rh) };
    let beta = z_star * p.omega_m / p.g0;
    let sidebands = bessel_sideband_amplitudes(z_star, detuning, drive, p, Truncation::Auto)?;
    Ok(Oscillation::LimitCycle(LimitCycleSolution {
        z: z_star,
        beta,
        mean_occupancy: (beta * beta - 2.0) / 4.0,
        detuning,
        sidebands,
        residual: res / p.gamma_i,
    }))
}

/// First-Stokes photon number of the self-consistent state at a detuning,
/// zero when the drive is below threshold there.
fn stokes_at(p: &SystemParams, drive: f64, detuning: f64) -> Result<(f64, Option<LimitCycleSolution>), SidebandError> {
    match solve_oscillation_amplitude(p, drive, detuning)? {
        Oscillation::BelowThreshold { .. } => Ok((0.0, None)),
        Oscillation::LimitCycle(s) => Ok((s.sidebands.stokes_photons(), Some(s))),
    }
}

/// Range of Δ/ω_m scanned by [`solve_operating_point`].
pub const OPERATING_SCAN: (f64, f64) = (-1.5, -0.5);
const OPERATING_SCAN_POINTS: usize = 401;

/// Solves for the detuning Δ and limit cycle whose first-Stokes photon
/// number equals `n1_target` under gain balance.
///
/// Δ is scanned upward from −1.5ω_m; the first crossing of
/// n₁(Δ) = n1_target is refined by bisection.
pub fn solve_operating_point(
    p: &SystemParams,
    drive: f64,
    n1_target: f64,
) -> Result<(f64, LimitCycleSolution), SidebandError> {
    use rayon::prelude::*;

    if !(n1_target > 0.0) {
        return Err(SidebandError::NonPositiveTarget(n1_target));
    }
    let (lo_r, hi_r) = OPERATING_SCAN;
    let grid: Vec<f64> = (0..OPERATING_SCAN_POINTS)
        .map(|k| (lo_r + (hi_r - lo_r) * k as f64 / (OPERATING_SCAN_POINTS - 1) as f64) * p.omega_m)
        .collect();
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&d| stokes_at(p, drive, d).map(|(n1, _)| n1 - n1_target))
        .collect::<Result<_, _>>()?;

    let crossing = values.windows(2).position(|w| (w[0] < 0.0) != (w[1] < 0.0));
    let Some(k) = crossing else {
        return Err(SidebandError::NoSolutionInRange { lo: lo_r, hi: hi_r });
    };
    let (mut a, mut b) = (grid[k], grid[k + 1]);
    let sign_a = values[k] < 0.0;
    while (b - a).abs() > 1e-12 * p.omega_m {
        let mid = 0.5 * (a + b);
        let (n1, _) = stokes_at(p, drive, mid)?;
        if (n1 - n1_target < 0.0) == sign_a {
            a = mid;
        } else {
            b = mid;
        }
    }
    // the above-threshold end of the bracket carries the limit cycle
    for d in [b, a] {
        if let (_, Some(sol)) = stokes_at(p, drive, d)? {
            return Ok((d, sol));
        }
    }
    Err(SidebandError::NoSolutionInRange { lo: lo_r, hi: hi_r })
}

/// Uniform sampling grid for the time-domain field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    /// First recorded time (s); integration starts from α = 0 at t = 0.
    pub t_start: f64,
    pub dt: f64,
    pub len: usize,
}

impl TimeGrid {
    /// Grid with `steps_per_period` points per mechanical period, starting
    /// after `transient_periods` and recording `record_periods`.
    pub fn periods(
        p: &SystemParams,
        steps_per_period: usize,
        transient_periods: usize,
        record_periods: usize,
    ) -> Self {
        let period = 2.0 * std::f64::consts::PI / p.omega_m;
        let dt = period / steps_per_period as f64;
        TimeGrid {
            t_start: transient_periods as f64 * period,
            dt,
            len: record_periods * steps_per_period,
        }
    }
}

/// Integrates α̇ = −(i(Δ + g₀x) + κ/2)α + Ω with x(t) = −β sin(ω_m t),
/// β = zω_m/g₀, by classical RK4 from α(0) = 0.
///
/// This is the brute-force route the sideband expansion is checked
/// against.
pub fn cavity_field_time_domain(
    z: f64,
    detuning: f64,
    drive: f64,
    p: &SystemParams,
    grid: &TimeGrid,
) -> Result<Vec<Complex64>, SidebandError> {
    let period = 2.0 * std::f64::consts::PI / p.omega_m;
    let limit = 0.01 * period.min(1.0 / p.kappa);
    if grid.dt > limit {
        return Err(SidebandError::StepSizeTooCoarse { dt: grid.dt, limit });
    }
    if grid.t_start < 10.0 / p.kappa {
        return Err(SidebandError::GridTooShort(format!(
            "transient {:.3e} s shorter than 10/kappa",
            grid.t_start
        )));
    }
    if (grid.len as f64) * grid.dt < 10.0 * period * (1.0 - 1e-9) {
        return Err(SidebandError::GridTooShort("record shorter than 10 mechanical periods".into()));
    }

    let omega_m = p.omega_m;
    let mod_amp = z * omega_m; // g0 * beta
    let half_kappa = 0.5 * p.kappa;
    let rhs = |t: f64, a: Complex64| -> Complex64 {
        let shift = detuning - mod_amp * (omega_m * t).sin();
        -Complex64::new(half_kappa, shift) * a + drive
    };

    let dt = grid.dt;
    let pre_steps = (grid.t_start / dt).round() as usize;
    let total = pre_steps + grid.len;
    let mut out = Vec::with_capacity(grid.len);
    let mut a = Complex64::new(0.0, 0.0);
    for step in 0..total {
        if step >= pre_steps {
            out.push(a);
        }
        let t = step as f64 * dt;
        let k1 = rhs(t, a);
        let k2 = rhs(t + 0.5 * dt, a + k1 * (0.5 * dt));
        let k3 = rhs(t + 0.5 * dt, a + k2 * (0.5 * dt));
        let k4 = rhs(t + dt, a + k3 * dt);
        a += (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (dt / 6.0);
    }
    Ok(out)
}

/// Fourier coefficients cₙ = ⟨α(t) e^{−inω_m t}⟩ over the grid, for
/// |n| ≤ `n_max`. The grid must span whole mechanical periods.
pub fn harmonic_coefficients(
    samples: &[Complex64],
    grid: &TimeGrid,
    omega_m: f64,
    n_max: usize,
) -> Vec<(i64, Complex64)> {
    let len = samples.len() as f64;
    (-(n_max as i64)..=n_max as i64)
        .map(|n| {
            let sum: Complex64 = samples
                .iter()
                .enumerate()
                .map(|(k, a)| {
                    let t = grid.t_start + k as f64 * grid.dt;
                    a * Complex64::from_polar(1.0, -(n as f64) * omega_m * t)
                })
                .sum();
            (n, sum / len)
        })
        .collect()
}
