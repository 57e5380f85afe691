use super::fit::invert;
use super::AnalysisError;
use crate::params::{Side, SystemParams};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Two-sided 95% interval half-width in standard errors.
const Z95: f64 = 1.959_963_984_540_054;

/// A measured mechanical linewidth (energy decay rate, rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinewidthPoint {
    pub n_c: f64,
    pub side: Side,
    pub gamma_fit: f64,
    pub gamma_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationResult {
    /// rad/s
    pub g0: f64,
    pub g0_err: f64,
    pub g0_ci: (f64, f64),
    /// rad/s
    pub gamma_i: f64,
    pub gamma_i_err: f64,
    pub gamma_i_ci: (f64, f64),
    /// 4g₀²/κ (rad/s per photon).
    pub slope: f64,
    pub slope_err: f64,
    /// Measured minus fitted linewidth, in input order (rad/s).
    pub residuals: Vec<f64>,
    pub reduced_chi2: f64,
}

/// Weighted fit of y = c₀ + Σ cᵢ·xᵢ; returns coefficients and covariance.
fn weighted_linear(rows: &[(Vec<f64>, f64, f64)]) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
    let m = rows.first()?.0.len();
    let mut a = vec![vec![0.0; m]; m];
    let mut b = vec![0.0; m];
    for (x, y, s) in rows {
        let w = 1.0 / (s * s);
        for i in 0..m {
            b[i] += w * x[i] * y;
            for j in 0..m {
                a[i][j] += w * x[i] * x[j];
            }
        }
    }
    let cov = invert(&a)?;
    let coef = (0..m).map(|i| (0..m).map(|j| cov[i][j] * b[j]).sum()).collect();
    Some((coef, cov))
}

/// Extracts γᵢ and g₀ from red and blue linewidths, γ = γᵢ ± (4g₀²/κ)n_c.
///
/// Both sides are fitted jointly for a common intercept γᵢ and slope; each
/// side is also fitted on its own to check that the slopes agree.
pub fn calibrate_g0(points: &[LinewidthPoint], p: &SystemParams) -> Result<CalibrationResult, AnalysisError> {
    let count = |side| points.iter().filter(|q| q.side == side).count();
    let (red, blue) = (count(Side::Red), count(Side::Blue));
    if red < 3 || blue < 3 {
        return Err(AnalysisError::InsufficientPoints { red, blue });
    }
    if points.iter().any(|q| !(q.gamma_err > 0.0)) {
        return Err(AnalysisError::InvalidInput("linewidth errors must be positive".into()));
    }

    let mut side_slopes = Vec::new();
    for side in [Side::Red, Side::Blue] {
        let rows: Vec<_> = points
            .iter()
            .filter(|q| q.side == side)
            .map(|q| (vec![1.0, side.sign() * q.n_c], q.gamma_fit, q.gamma_err))
            .collect();
        let (c, cov) = weighted_linear(&rows).ok_or(AnalysisError::InvalidInput("degenerate n_c values".into()))?;
        side_slopes.push((c[1], cov[1][1].sqrt()));
    }
    let (sr, er) = side_slopes[0];
    let (sb, eb) = side_slopes[1];
    if (sr - sb).abs() > 3.0 * (er * er + eb * eb).sqrt() {
        return Err(AnalysisError::InconsistentSides { red: sr, blue: sb });
    }

    let rows: Vec<_> = points.iter().map(|q| (vec![1.0, q.side.sign() * q.n_c], q.gamma_fit, q.gamma_err)).collect();
    let (c, cov) = weighted_linear(&rows).ok_or(AnalysisError::InvalidInput("degenerate n_c values".into()))?;
    let (gamma_i, slope) = (c[0], c[1]);
    if !(slope > 0.0) {
        return Err(AnalysisError::InvalidInput(format!("fitted back-action slope {slope:.3e} is not positive")));
    }
    let gamma_i_err = cov[0][0].sqrt();
    let slope_err = cov[1][1].sqrt();
    let g0 = (slope * p.kappa / 4.0).sqrt();
    let g0_err = 0.5 * g0 * slope_err / slope;

    let residuals: Vec<f64> = points.iter().map(|q| q.gamma_fit - (gamma_i + q.side.sign() * slope * q.n_c)).collect();
    let chi2: f64 = residuals.iter().zip(points).map(|(r, q)| (r / q.gamma_err).powi(2)).sum();
    Ok(CalibrationResult {
        g0,
        g0_err,
        g0_ci: (g0 - Z95 * g0_err, g0 + Z95 * g0_err),
        gamma_i,
        gamma_i_err,
        gamma_i_ci: (gamma_i - Z95 * gamma_i_err, gamma_i + Z95 * gamma_i_err),
        slope,
        slope_err,
        residuals,
        reduced_chi2: chi2 / (points.len() - 2).max(1) as f64,
    })
}

/// CSV with columns n_c, side, gamma_fit_hz, gamma_err_hz (ordinary
/// frequency, γ/2π).
pub fn write_calibration_csv<W: Write>(points: &[LinewidthPoint], w: W) -> std::io::Result<()> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n_c", "side", "gamma_fit_hz", "gamma_err_hz"])?;
    for q in points {
        out.write_record(&[
            format!("{:.6}", q.n_c),
            q.side.as_str().to_string(),
            format!("{:.9e}", q.gamma_fit / two_pi),
            format!("{:.9e}", q.gamma_err / two_pi),
        ])?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(p: &SystemParams, sides: &[Side]) -> Vec<LinewidthPoint> {
        let slope = p.om_rate_per_photon();
        let mut out = Vec::new();
        for &side in sides {
            for k in 1..=5 {
                let n_c = 150.0 * k as f64;
                out.push(LinewidthPoint { n_c, side, gamma_fit: p.gamma_i + side.sign() * slope * n_c, gamma_err: 1e4 });
            }
        }
        out
    }

    #[test]
    fn noiseless_lines_recover_inputs() {
        let p = SystemParams::default();
        let r = calibrate_g0(&synthetic(&p, &[Side::Red, Side::Blue]), &p).unwrap();
        assert!((r.g0 / p.g0 - 1.0).abs() < 1e-12);
        assert!((r.gamma_i / p.gamma_i - 1.0).abs() < 1e-12);
        assert!(r.residuals.iter().all(|x| x.abs() < 1e-3));
    }

    #[test]
    fn one_side_is_insufficient() {
        let p = SystemParams::default();
        assert!(matches!(
            calibrate_g0(&synthetic(&p, &[Side::Red]), &p),
            Err(AnalysisError::InsufficientPoints { red: 5, blue: 0 })
        ));
    }

    #[test]
    fn mismatched_slopes_are_flagged() {
        let p = SystemParams::default();
        let mut pts = synthetic(&p, &[Side::Red, Side::Blue]);
        for q in pts.iter_mut().filter(|q| q.side == Side::Blue) {
            q.gamma_fit = p.gamma_i - 2.0 * p.om_rate_per_photon() * q.n_c;
        }
        assert!(matches!(calibrate_g0(&pts, &p), Err(AnalysisError::InconsistentSides { .. })));
    }
}
