//! Weighted nonlinear least squares by Levenberg–Marquardt, sized for the
//! two- to four-parameter models used here.

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub params: Vec<f64>,
    /// (JᵀWJ)⁻¹ at the solution, using the supplied σ as absolute errors.
    pub covariance: Vec<Vec<f64>>,
    pub chi2: f64,
    pub dof: usize,
    pub converged: bool,
    pub iterations: usize,
}

impl FitOutcome {
    pub fn error(&self, k: usize) -> f64 {
        self.covariance[k][k].max(0.0).sqrt()
    }

    pub fn reduced_chi2(&self) -> f64 {
        self.chi2 / self.dof.max(1) as f64
    }
}

/// `model(x, params, grad)` returns the model value and writes ∂/∂params
/// into `grad`.
pub fn levenberg_marquardt<F>(
    x: &[f64],
    y: &[f64],
    sigma: &[f64],
    init: &[f64],
    model: F,
    max_iter: usize,
) -> FitOutcome
where
    F: Fn(f64, &[f64], &mut [f64]) -> f64,
{
    let m = init.len();
    let mut params = init.to_vec();
    let mut grad = vec![0.0; m];

    let chi2_at = |p: &[f64], g: &mut [f64]| -> f64 {
        x.iter()
            .zip(y)
            .zip(sigma)
            .map(|((&xi, &yi), &si)| ((yi - model(xi, p, g)) / si).powi(2))
            .sum()
    };

    let normal_equations = |p: &[f64], g: &mut [f64]| -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut a = vec![vec![0.0; m]; m];
        let mut b = vec![0.0; m];
        for ((&xi, &yi), &si) in x.iter().zip(y).zip(sigma) {
            let f = model(xi, p, g);
            let w = 1.0 / (si * si);
            let r = yi - f;
            for i in 0..m {
                b[i] += w * g[i] * r;
                for j in 0..=i {
                    a[i][j] += w * g[i] * g[j];
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                a[j][i] = a[i][j];
            }
        }
        (a, b)
    };

    let mut chi2 = chi2_at(&params, &mut grad);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let (a, b) = normal_equations(&params, &mut grad);
        let mut improved = false;
        while lambda < 1e16 {
            let mut damped = a.clone();
            for (i, row) in damped.iter_mut().enumerate() {
                row[i] += lambda * a[i][i].max(1e-300);
            }
            let Some(step) = solve(&damped, &b) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = params.iter().zip(&step).map(|(p, s)| p + s).collect();
            let trial_chi2 = chi2_at(&trial, &mut grad);
            if trial_chi2.is_finite() && trial_chi2 <= chi2 {
                let small_step = step.iter().zip(&params).all(|(s, p)| s.abs() <= 1e-12 * p.abs().max(1e-300));
                let small_gain = chi2 - trial_chi2 <= 1e-14 * chi2.max(1e-300);
                params = trial;
                chi2 = trial_chi2;
                lambda = (lambda * 0.1).max(1e-12);
                improved = true;
                if small_step || small_gain {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // no downhill step at any damping: already at the minimum
            converged = true;
        }
        if converged {
            break;
        }
    }

    let (a, _) = normal_equations(&params, &mut grad);
    let covariance = invert(&a).unwrap_or_else(|| vec![vec![f64::NAN; m]; m]);
    let all_finite = params.iter().all(|p| p.is_finite()) && covariance.iter().flatten().all(|c| c.is_finite());
    FitOutcome {
        params,
        covariance,
        chi2,
        dof: x.len().saturating_sub(m),
        converged: converged && all_finite,
        iterations,
    }
}

/// Gaussian elimination with partial pivoting.
pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(row, &bi)| {
        let mut r = row.clone();
        r.push(bi);
        r
    }).collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 || !m[pivot][col].is_finite() {
            return None;
        }
        m.swap(col, pivot);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..=n {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (m[row][n] - s) / m[row][row];
    }
    Some(x)
}

pub fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        cols.push(solve(a, &e)?);
    }
    Some((0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exponential_exactly() {
        let x: Vec<f64> = (0..60).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|t| 1.0 + 0.8 * (-1.7 * t).exp()).collect();
        let s = vec![0.01; x.len()];
        let fit = levenberg_marquardt(&x, &y, &s, &[0.3, 0.5], |t, p, g| {
            let e = (-p[1] * t).exp();
            g[0] = e;
            g[1] = -p[0] * t * e;
            1.0 + p[0] * e
        }, 200);
        assert!(fit.converged);
        assert!((fit.params[0] - 0.8).abs() < 1e-10);
        assert!((fit.params[1] - 1.7).abs() < 1e-10);
        assert!(fit.chi2 < 1e-16);
    }

    #[test]
    fn linear_model_covariance_matches_closed_form() {
        // y = a + b x with unit errors: var(b) = 1/Σ(x − x̄)²
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 3.1, 4.9, 7.2, 8.8];
        let fit = levenberg_marquardt(&x, &y, &[1.0; 5], &[0.0, 0.0], |t, _p, g| {
            g[0] = 1.0;
            g[1] = t;
            _p[0] + _p[1] * t
        }, 50);
        assert!((fit.covariance[1][1] - 0.1).abs() < 1e-12);
        assert!((fit.params[1] - 1.97).abs() < 1e-10);
    }

    #[test]
    fn singular_systems_are_detected() {
        assert!(solve(&[vec![1.0, 2.0], vec![2.0, 4.0]], &[1.0, 2.0]).is_none());
        let inv = invert(&[vec![2.0, 0.0], vec![0.0, 4.0]]).unwrap();
        assert_eq!(inv, vec![vec![0.5, 0.0], vec![0.0, 0.25]]);
    }
}
