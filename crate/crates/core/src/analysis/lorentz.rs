use super::fit::levenberg_marquardt;
use super::spectrum::Spectrum;
use super::AnalysisError;
use serde::Serialize;
use std::io::Write;

/// Lorentzian line on a flat floor, S(f) = floor + amplitude/(1 + ((f − f₀)/(fwhm/2))²).
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumFit {
    /// Hz, restricted to the fit window.
    pub freq: Vec<f64>,
    pub psd: Vec<f64>,
    pub window: (f64, f64),
    pub center: f64,
    /// Full width at half maximum (Hz).
    pub fwhm: f64,
    pub amplitude: f64,
    pub floor: f64,
    /// Order: center, fwhm, amplitude, floor.
    pub covariance: [[f64; 4]; 4],
    pub reduced_chi2: f64,
    pub converged: bool,
}

impl SpectrumFit {
    pub fn model(&self, f: f64) -> f64 {
        lorentzian(f, self.center, self.fwhm, self.amplitude, self.floor)
    }

    pub fn center_err(&self) -> f64 {
        self.covariance[0][0].sqrt()
    }

    pub fn fwhm_err(&self) -> f64 {
        self.covariance[1][1].sqrt()
    }

    /// CSV with columns freq_hz, psd, fit.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["freq_hz", "psd", "fit"])?;
        for (f, s) in self.freq.iter().zip(&self.psd) {
            out.write_record(&[format!("{f:.9e}"), format!("{s:.9e}"), format!("{:.9e}", self.model(*f))])?;
        }
        out.flush()
    }
}

pub fn lorentzian(f: f64, center: f64, fwhm: f64, amplitude: f64, floor: f64) -> f64 {
    let u = (f - center) / (0.5 * fwhm);
    floor + amplitude / (1.0 + u * u)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Weighted least-squares Lorentzian fit over `window` = (f_lo, f_hi) Hz.
///
/// Starts from the peak bin and half-maximum crossings. A line whose
/// half-maximum width is a single bin, or which fits narrower than a bin,
/// is reported as unresolved with a bound of two bins. Errors are
/// S/√K for K averaged segments, taken from the data on the first pass and
/// from the model on two further passes.
pub fn lorentzian_fit(spec: &Spectrum, window: (f64, f64)) -> Result<SpectrumFit, AnalysisError> {
    let idx: Vec<usize> = (0..spec.freq.len()).filter(|&k| spec.freq[k] >= window.0 && spec.freq[k] <= window.1).collect();
    if idx.len() < 8 {
        return Err(AnalysisError::PeakNotFound(format!("only {} bins in the fit window", idx.len())));
    }
    let f: Vec<f64> = idx.iter().map(|&k| spec.freq[k]).collect();
    let s: Vec<f64> = idx.iter().map(|&k| spec.psd[k]).collect();
    let n = f.len();
    let df = spec.resolution();

    let edge = (n / 10).max(2);
    let floor0 = median(s[..edge].iter().chain(&s[n - edge..]).cloned().collect());
    let (peak_k, &peak) = s.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    if peak < 3.0 * floor0 || peak <= 0.0 {
        return Err(AnalysisError::PeakNotFound(format!("peak {peak:.3e} below 3x floor {floor0:.3e}")));
    }
    let amp0 = peak - floor0;
    let half = floor0 + 0.5 * amp0;
    let mut left = peak_k;
    while left > 0 && s[left] > half {
        left -= 1;
    }
    let mut right = peak_k;
    while right + 1 < n && s[right] > half {
        right += 1;
    }
    if right - left <= 2 {
        return Err(AnalysisError::LineUnresolved { upper_bound: 2.0 * df });
    }
    let fwhm0 = f[right] - f[left];
    let center0 = f[peak_k];

    // parameters scaled to order one
    let to_phys = |p: &[f64]| [center0 + p[0] * fwhm0, p[1] * fwhm0, p[2] * amp0, p[3] * amp0];
    let model = |x: f64, p: &[f64], g: &mut [f64]| -> f64 {
        let [c, w, a, fl] = to_phys(p);
        let u = (x - c) / (0.5 * w);
        let d = 1.0 / (1.0 + u * u);
        // ∂/∂c = a·d²·2u/(w/2), ∂/∂w = a·d²·2u²/w
        g[0] = a * d * d * 2.0 * u / (0.5 * w) * fwhm0;
        g[1] = a * d * d * 2.0 * u * u / w * fwhm0;
        g[2] = d * amp0;
        g[3] = amp0;
        fl + a * d
    };

    let k = spec.segments.max(1) as f64;
    let min_sigma = s.iter().cloned().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    let mut sigma: Vec<f64> = s.iter().map(|v| v.max(min_sigma) / k.sqrt()).collect();
    let mut params = vec![0.0, 1.0, 1.0, floor0 / amp0];
    let mut outcome = None;
    for _ in 0..3 {
        let fit = levenberg_marquardt(&f, &s, &sigma, &params, model, 500);
        params = fit.params.clone();
        let mut g = [0.0; 4];
        sigma = f.iter().map(|&x| model(x, &params, &mut g).abs().max(min_sigma) / k.sqrt()).collect();
        outcome = Some(fit);
    }
    let fit = outcome.unwrap();
    let [center, fwhm, amplitude, floor] = to_phys(&fit.params);
    if fwhm.abs() < df {
        return Err(AnalysisError::LineUnresolved { upper_bound: 2.0 * df });
    }
    if !fit.converged || !(fwhm > 0.0) || !(amplitude > 0.0) {
        return Err(AnalysisError::FitNotConverged(format!(
            "lorentzian fit (fwhm {fwhm:.3e}, amplitude {amplitude:.3e})"
        )));
    }
    let scales = [fwhm0, fwhm0, amp0, amp0];
    let mut covariance = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            covariance[i][j] = fit.covariance[i][j] * scales[i] * scales[j];
        }
    }
    Ok(SpectrumFit {
        freq: f,
        psd: s,
        window,
        center,
        fwhm: fwhm.abs(),
        amplitude,
        floor,
        covariance,
        reduced_chi2: fit.reduced_chi2(),
        converged: fit.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(center: f64, fwhm: f64, amp: f64, floor: f64) -> Spectrum {
        let freq: Vec<f64> = (0..2000).map(|k| k as f64 * 1e4).collect();
        let psd = freq.iter().map(|&f| lorentzian(f, center, fwhm, amp, floor)).collect();
        Spectrum { freq, psd, segments: 50 }
    }

    #[test]
    fn noiseless_recovery() {
        let spec = synthetic(1.0e7, 9.3e5, 4.0e-3, 1.0e-5);
        let fit = lorentzian_fit(&spec, (2e6, 1.8e7)).unwrap();
        assert!((fit.center / 1.0e7 - 1.0).abs() < 1e-6);
        assert!((fit.fwhm / 9.3e5 - 1.0).abs() < 1e-6);
        assert!((fit.amplitude / 4.0e-3 - 1.0).abs() < 1e-6);
        assert!((fit.floor / 1.0e-5 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn single_bin_line_is_unresolved() {
        let mut spec = synthetic(1.0e7, 9.3e5, 0.0, 1.0);
        spec.psd[1000] = 1e6;
        spec.psd[999] = 2.5e5;
        spec.psd[1001] = 2.5e5;
        match lorentzian_fit(&spec, (2e6, 1.8e7)) {
            Err(AnalysisError::LineUnresolved { upper_bound }) => assert_eq!(upper_bound, 2e4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn buried_peak_is_rejected() {
        let spec = synthetic(1.0e7, 9.3e5, 1.0, 10.0);
        assert!(matches!(lorentzian_fit(&spec, (2e6, 1.8e7)), Err(AnalysisError::PeakNotFound(_))));
    }
}
