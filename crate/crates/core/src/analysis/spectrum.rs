use super::AnalysisError;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Hann,
    Rectangular,
}

impl Window {
    fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            // periodic Hann
            Window::Hann => (0..n).map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / n as f64).cos()).collect(),
        }
    }
}

/// One-sided power spectral density (units²/Hz) on a uniform grid.
#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    /// Hz
    pub freq: Vec<f64>,
    pub psd: Vec<f64>,
    /// Number of averaged segments.
    pub segments: usize,
}

impl Spectrum {
    pub fn resolution(&self) -> f64 {
        self.freq.get(1).copied().unwrap_or(0.0)
    }
}

/// Averaged windowed periodogram. `overlap` is the fraction of a segment
/// shared with the next one, in [0, 1).
pub fn welch_psd(
    record: &[f64],
    dt: f64,
    segment_length: usize,
    overlap: f64,
    window: Window,
) -> Result<Spectrum, AnalysisError> {
    if segment_length > record.len() {
        return Err(AnalysisError::SegmentTooLong { segment: segment_length, record: record.len() });
    }
    if segment_length < 2 || !(0.0..1.0).contains(&overlap) {
        return Err(AnalysisError::InvalidSegmentation(format!(
            "segment length {segment_length}, overlap {overlap}"
        )));
    }
    let hop = (((1.0 - overlap) * segment_length as f64).round() as usize).max(1);
    let w = window.coefficients(segment_length);
    let w_power: f64 = w.iter().map(|x| x * x).sum();
    let fs = 1.0 / dt;
    let fft = FftPlanner::new().plan_fft_forward(segment_length);

    let bins = segment_length / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut buf = vec![Complex::new(0.0, 0.0); segment_length];
    let mut segments = 0;
    let mut start = 0;
    while start + segment_length <= record.len() {
        let seg = &record[start..start + segment_length];
        let mean = seg.iter().sum::<f64>() / segment_length as f64;
        for (b, (x, wk)) in buf.iter_mut().zip(seg.iter().zip(&w)) {
            *b = Complex::new((x - mean) * wk, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        segments += 1;
        start += hop;
    }

    let norm = 1.0 / (fs * w_power * segments as f64);
    let psd = acc
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let one_sided = if k == 0 || (segment_length.is_multiple_of(2) && k == bins - 1) { 1.0 } else { 2.0 };
            one_sided * a * norm
        })
        .collect();
    let freq = (0..bins).map(|k| k as f64 * fs / segment_length as f64).collect();
    Ok(Spectrum { freq, psd, segments })
}
