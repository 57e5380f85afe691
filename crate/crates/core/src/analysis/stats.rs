use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Inverse-variance weighted mean and its standard error. Entries with
/// non-positive or non-finite errors are skipped.
pub fn weighted_mean(values: &[f64], errors: &[f64]) -> Option<(f64, f64)> {
    let (mut sw, mut swx) = (0.0, 0.0);
    for (&v, &e) in values.iter().zip(errors) {
        if e > 0.0 && e.is_finite() {
            let w = 1.0 / (e * e);
            sw += w;
            swx += w * v;
        }
    }
    (sw > 0.0).then(|| (swx / sw, sw.sqrt().recip()))
}

/// Upper tail probability of χ² with `dof` degrees of freedom.
pub fn chi2_sf(chi2: f64, dof: usize) -> f64 {
    if dof == 0 {
        return f64::NAN;
    }
    ChiSquared::new(dof as f64).map(|d| d.sf(chi2)).unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// One-sample Kolmogorov–Smirnov test against Exp(rate).
pub fn ks_exponential(samples: &[f64], rate: f64) -> KsResult {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len();
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let cdf = 1.0 - (-rate * v).exp();
        d = d.max((i + 1) as f64 / nf - cdf).max(cdf - i as f64 / nf);
    }
    let sqrt_n = nf.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    KsResult { statistic: d, p_value: kolmogorov_sf(lambda), n }
}

/// Q_KS(λ) = 2 Σ (−1)^{k−1} exp(−2k²λ²).
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_mean_of_equal_errors() {
        let (m, e) = weighted_mean(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).unwrap();
        assert!((m - 2.0).abs() < 1e-15);
        assert!((e - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!(weighted_mean(&[1.0], &[0.0]).is_none());
    }

    #[test]
    fn kolmogorov_tail_reference() {
        // Q_KS(1.0) = 0.26999967..., Q_KS(1.36) ≈ 0.049
        assert!((kolmogorov_sf(1.0) - 0.269_999_67).abs() < 1e-7);
        assert!((kolmogorov_sf(1.358) - 0.05).abs() < 1e-3);
    }

    #[test]
    fn ks_detects_wrong_rate() {
        // deterministic exponential quantiles
        let n = 2000;
        let xs: Vec<f64> = (0..n).map(|i| -(1.0 - (i as f64 + 0.5) / n as f64).ln()).collect();
        assert!(ks_exponential(&xs, 1.0).p_value > 0.99);
        assert!(ks_exponential(&xs, 1.2).p_value < 1e-6);
    }

    #[test]
    fn chi2_tail() {
        assert!((chi2_sf(2.0, 2) - (-1.0f64).exp()).abs() < 1e-12);
    }
}
