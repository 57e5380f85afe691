use super::fit::levenberg_marquardt;
use super::stats::{chi2_sf, weighted_mean};
use super::AnalysisError;
use crate::detection::{PhotonEventStream, PS_PER_S};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Per-detector rate × max lag above which start-stop histograms are
/// visibly distorted by pile-up.
pub const PILE_UP_LIMIT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum G2Mode {
    StartStop,
    AllPairs,
}

#[derive(Debug, Clone, Serialize)]
pub struct G2Histogram {
    pub mode: G2Mode,
    /// ps
    pub bin_width: u64,
    /// Bin centres (ps), k·bin_width for k = −K..=K.
    pub lags: Vec<i64>,
    pub counts: Vec<u64>,
    pub g2: Vec<f64>,
    pub g2_err: Vec<f64>,
    /// Singles rates (counts/s).
    pub rate1: f64,
    pub rate2: f64,
    /// ps
    pub duration: u64,
    /// Start-stop only: rate × max lag ≥ [`PILE_UP_LIMIT`].
    pub pile_up_risk: bool,
}

impl G2Histogram {
    pub fn lag_seconds(&self, k: usize) -> f64 {
        self.lags[k] as f64 / PS_PER_S
    }

    pub fn total_pairs(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn centre(&self) -> usize {
        self.lags.len() / 2
    }

    /// CSV with columns lag_ps, counts, g2, g2_err.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["lag_ps", "counts", "g2", "g2_err"])?;
        for k in 0..self.lags.len() {
            out.write_record(&[
                self.lags[k].to_string(),
                self.counts[k].to_string(),
                format!("{:.9e}", self.g2[k]),
                format!("{:.9e}", self.g2_err[k]),
            ])?;
        }
        out.flush()
    }
}

/// Histogram of arrival-time differences τ = t₂ − t₁ between the clicks of
/// two streams, normalized to g²(τ).
pub fn g2_histogram(
    s1: &PhotonEventStream,
    s2: &PhotonEventStream,
    bin_width: u64,
    max_lag: u64,
    mode: G2Mode,
) -> Result<G2Histogram, AnalysisError> {
    if s1.is_empty() || s2.is_empty() {
        return Err(AnalysisError::EmptyStream);
    }
    if bin_width == 0 || max_lag < bin_width {
        return Err(AnalysisError::InvalidBinning { bin_width, max_lag });
    }
    let t1 = &s1.timestamps;
    let t2 = &s2.timestamps;
    let duration = s1.duration.max(s2.duration);
    let half_bins = (max_lag / bin_width) as i64;
    let nbins = (2 * half_bins + 1) as usize;
    let reach = (half_bins as u64) * bin_width + bin_width / 2;
    let bin_of = |tau: i64| -> Option<usize> {
        let w = bin_width as i64;
        let k = (tau + w / 2).div_euclid(w);
        (k.abs() <= half_bins).then(|| (k + half_bins) as usize)
    };

    let mut counts = vec![0u64; nbins];
    match mode {
        G2Mode::AllPairs => {
            let mut lo = 0;
            for &a in t1 {
                while lo < t2.len() && t2[lo] + reach < a {
                    lo += 1;
                }
                let mut j = lo;
                while j < t2.len() && t2[j] <= a + reach {
                    if let Some(b) = bin_of(t2[j] as i64 - a as i64) {
                        counts[b] += 1;
                    }
                    j += 1;
                }
            }
        }
        G2Mode::StartStop => {
            // positive lags: next stop at or after each start
            let mut j = 0;
            for &a in t1 {
                while j < t2.len() && t2[j] < a {
                    j += 1;
                }
                if j < t2.len() {
                    if let Some(b) = bin_of(t2[j] as i64 - a as i64) {
                        counts[b] += 1;
                    }
                }
            }
            // negative lags: next start strictly after each stop
            let mut i = 0;
            for &b in t2 {
                while i < t1.len() && t1[i] <= b {
                    i += 1;
                }
                if i < t1.len() {
                    if let Some(k) = bin_of(b as i64 - t1[i] as i64) {
                        counts[k] += 1;
                    }
                }
            }
        }
    }

    let t_s = duration as f64 / PS_PER_S;
    let rate1 = t1.len() as f64 / t_s;
    let rate2 = t2.len() as f64 / t_s;
    let w_s = bin_width as f64 / PS_PER_S;
    let lags: Vec<i64> = (-half_bins..=half_bins).map(|k| k * bin_width as i64).collect();

    let expected: Vec<f64> = match mode {
        G2Mode::AllPairs => lags
            .iter()
            .map(|&l| rate1 * rate2 * w_s * (t_s - (l.unsigned_abs() as f64 / PS_PER_S)).max(0.0))
            .collect(),
        G2Mode::StartStop => {
            // flat background from the outer fifth of the window
            let edge = ((half_bins as f64) * 0.8).ceil() as i64;
            let outer: Vec<f64> = lags
                .iter()
                .zip(&counts)
                .filter(|(&l, _)| (l / bin_width as i64).abs() >= edge)
                .map(|(_, &c)| c as f64)
                .collect();
            let level = outer.iter().sum::<f64>() / outer.len().max(1) as f64;
            vec![level; nbins]
        }
    };

    let low = expected.iter().filter(|&&e| e < 1.0).count();
    if 2 * low > nbins {
        return Err(AnalysisError::BinTooSmall { expected_per_bin: expected[nbins / 2] });
    }

    let g2 = counts.iter().zip(&expected).map(|(&c, &e)| c as f64 / e).collect();
    let g2_err = counts.iter().zip(&expected).map(|(&c, &e)| (c.max(1) as f64).sqrt() / e).collect();
    let pile_up_risk = mode == G2Mode::StartStop && rate1.max(rate2) * max_lag as f64 / PS_PER_S >= PILE_UP_LIMIT;

    Ok(G2Histogram { mode, bin_width, lags, counts, g2, g2_err, rate1, rate2, duration, pile_up_risk })
}

/// Consistency of a set of bins with g² = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Flatness {
    pub mean: f64,
    /// Counting error of the mean combined with the record error.
    pub mean_err: f64,
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Mean within 3σ of 1 and χ² p-value above 1e-3.
    pub consistent: bool,
}

/// Flatness of the bins with |τ| in [from, to] (seconds).
///
/// `record_err` is the bin-to-bin common fluctuation left by a finite
/// record of a fluctuating source, about (g²(0) − 1)·√(τ_c/T); it is added
/// to every bin and does not average down in the mean. Zero for a
/// stationary Poisson source.
pub fn baseline_flatness(h: &G2Histogram, from: f64, to: f64, record_err: f64) -> Option<Flatness> {
    let sel: Vec<usize> = (0..h.lags.len())
        .filter(|&k| {
            let t = h.lag_seconds(k).abs();
            t >= from && t <= to
        })
        .collect();
    let vals: Vec<f64> = sel.iter().map(|&k| h.g2[k]).collect();
    let errs: Vec<f64> = sel.iter().map(|&k| h.g2_err[k]).collect();
    let (mean, count_err) = weighted_mean(&vals, &errs)?;
    let mean_err = count_err.hypot(record_err);
    let chi2: f64 = vals.iter().zip(&errs).map(|(v, e)| (v - 1.0).powi(2) / (e * e + record_err * record_err)).sum();
    let dof = vals.len();
    let p_value = chi2_sf(chi2, dof);
    Some(Flatness {
        mean,
        mean_err,
        chi2,
        dof,
        p_value,
        consistent: (mean - 1.0).abs() <= 3.0 * mean_err && p_value > 1e-3,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct G2Estimate {
    pub g2_0: f64,
    pub g2_0_err: f64,
    /// a in 1 + a·e^{−Γ|τ|}.
    pub amplitude: f64,
    pub amplitude_err: f64,
    /// Γ (1/s).
    pub decay_rate: f64,
    pub decay_rate_err: f64,
    /// False when a < 3σ_a, so Γ carries no information.
    pub decay_identifiable: bool,
    pub reduced_chi2: f64,
}

/// Weighted mean of the bins with |τ| ≤ bin width.
pub fn g2_zero(h: &G2Histogram) -> Result<(f64, f64), AnalysisError> {
    let c = h.centre();
    let central: Vec<usize> = (c.saturating_sub(1)..=(c + 1).min(h.lags.len() - 1)).collect();
    let vals: Vec<f64> = central.iter().map(|&k| h.g2[k]).collect();
    let errs: Vec<f64> = central.iter().map(|&k| h.g2_err[k]).collect();
    weighted_mean(&vals, &errs).ok_or(AnalysisError::EmptyStream)
}

/// g²(0) from the bins with |τ| ≤ bin width and Γ from a fit of
/// 1 + a·e^{−Γ|τ|} to the whole histogram.
pub fn g2_zero_and_decay(h: &G2Histogram) -> Result<G2Estimate, AnalysisError> {
    let c = h.centre();
    let (g2_0, g2_0_err) = g2_zero(h)?;

    let x: Vec<f64> = (0..h.lags.len()).map(|k| h.lag_seconds(k).abs()).collect();
    let max_lag = x.iter().cloned().fold(0.0, f64::max);
    let a0 = (g2_0 - 1.0).max(1e-3);
    // initial rate from the 1/e point of the excess
    let mut gamma0 = 4.0 / max_lag;
    for k in c..h.lags.len() {
        if h.g2[k] - 1.0 < a0 / std::f64::consts::E {
            gamma0 = 1.0 / x[k].max(x[c + 1]);
            break;
        }
    }
    let scale = gamma0;
    let fit = levenberg_marquardt(
        &x,
        &h.g2,
        &h.g2_err,
        &[a0, 1.0],
        |t, p, g| {
            let e = (-p[1] * scale * t).exp();
            g[0] = e;
            g[1] = -p[0] * scale * t * e;
            1.0 + p[0] * e
        },
        500,
    );
    if !fit.converged {
        return Err(AnalysisError::FitNotConverged("g2 exponential".into()));
    }
    let amplitude = fit.params[0];
    let amplitude_err = fit.error(0);
    Ok(G2Estimate {
        g2_0,
        g2_0_err,
        amplitude,
        amplitude_err,
        decay_rate: fit.params[1] * scale,
        decay_rate_err: fit.error(1) * scale,
        decay_identifiable: amplitude > 3.0 * amplitude_err,
        reduced_chi2: fit.reduced_chi2(),
    })
}

/// F = 1 + ⟨n⟩(g²(0) − 1) and its error from σ(g²(0)).
pub fn fano_factor(g2_0: f64, g2_0_err: f64, mean_occupancy: f64) -> (f64, f64) {
    (1.0 + mean_occupancy * (g2_0 - 1.0), mean_occupancy * g2_0_err)
}
