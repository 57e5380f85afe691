use phonon_counting::dynamics::{
    heterodyne_record, linear_back_action, simulate_envelope, SimConfig, SimMode,
};
use phonon_counting::params::{DriveSpec, Side, SystemParams};
use phonon_counting::sideband::solve_oscillation_amplitude;
use rayon::prelude::*;

fn red_at_unit_cooperativity(p: &SystemParams) -> DriveSpec {
    // n_c chosen so the small-amplitude damping equals γᵢ exactly
    let per_photon = linear_back_action(p, &DriveSpec::on_sideband(p, Side::Red, 1.0)).unwrap();
    DriveSpec::on_sideband(p, Side::Red, p.gamma_i / per_photon)
}

#[test]
fn red_unit_cooperativity_halves_occupancy() {
    let p = SystemParams::default();
    let drive = red_at_unit_cooperativity(&p);
    let gamma = 2.0 * p.gamma_i;
    // ≥ 1000 correlation times
    let cfg = SimConfig::auto(&p, &drive, SimMode::Linear, Side::Red, 2000.0 / gamma, 5e-9, 11).unwrap();
    let traj = simulate_envelope(&p, &drive, &cfg).unwrap();
    let n = traj.mean_occupancy();
    assert!((n / 550.0 - 1.0).abs() < 0.02, "<n> = {n}");
    let ratio = traj.intensity_ratio();
    assert!((ratio - 2.0).abs() < 0.05, "<n^2>/<n>^2 = {ratio}");
}

#[test]
fn ensemble_mean_matches_rate_equation() {
    let p = SystemParams::default();
    let drive = DriveSpec::on_sideband(&p, Side::Blue, 0.5 * p.threshold_photons());
    let gamma = p.gamma_i + linear_back_action(&p, &drive).unwrap();
    let expect = p.gamma_i * p.n_b / gamma;
    let means: Vec<f64> = (0..32u64)
        .into_par_iter()
        .map(|seed| {
            let cfg = SimConfig::auto(&p, &drive, SimMode::Linear, Side::Blue, 50.0 / gamma, 5e-9, 100 + seed).unwrap();
            simulate_envelope(&p, &drive, &cfg).unwrap().mean_occupancy()
        })
        .collect();
    let m = means.iter().sum::<f64>() / 32.0;
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 31.0;
    let se = (var / 32.0).sqrt();
    assert!((m - expect).abs() < 3.0 * se, "mean {m} vs {expect}, se {se}");
}

#[test]
fn field_autocorrelation_decays_at_half_rate() {
    let p = SystemParams::default();
    let drive = DriveSpec::on_sideband(&p, Side::Blue, 0.5 * p.threshold_photons());
    let gamma = p.gamma_i + linear_back_action(&p, &drive).unwrap();
    let cfg = SimConfig::auto(&p, &drive, SimMode::Linear, Side::Blue, 20000.0 / gamma, 5e-9, 7).unwrap();
    let traj = simulate_envelope(&p, &drive, &cfg).unwrap();
    let b = &traj.samples;
    let corr = |k: usize| -> f64 {
        let s: num_complex::Complex64 = b[..b.len() - k].iter().zip(&b[k..]).map(|(x, y)| x * y.conj()).sum();
        s.re / (b.len() - k) as f64
    };
    let c0 = corr(0);
    // log-linear slope over the first field decay time
    let lags: Vec<usize> = (1..=20).map(|j| ((j as f64) * 0.1 / gamma / traj.dt) as usize).collect();
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &k in &lags {
        let x = k as f64 * traj.dt;
        let y = (corr(k) / c0).ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let n = lags.len() as f64;
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let fitted = -2.0 * slope;
    assert!((fitted / gamma - 1.0).abs() < 0.05, "fitted {fitted:.4e} vs {gamma:.4e}");
}

#[test]
fn nonlinear_run_settles_on_limit_cycle() {
    let p = SystemParams::default();
    let drive = DriveSpec::on_sideband(&p, Side::Blue, 2.0 * p.threshold_photons());
    let omega = drive.drive_amplitude(&p).unwrap();
    let sol = solve_oscillation_amplitude(&p, omega, drive.detuning).unwrap();
    let sol = sol.limit_cycle().expect("2x threshold oscillates");
    let cfg = SimConfig::auto(&p, &drive, SimMode::Nonlinear, Side::Blue, 20e-6, 2e-9, 3).unwrap();
    let traj = simulate_envelope(&p, &drive, &cfg).unwrap();
    let n = traj.mean_occupancy();
    assert!((n / sol.mean_occupancy - 1.0).abs() < 0.05, "{n} vs {}", sol.mean_occupancy);
    assert!((traj.intensity_ratio() - 1.0).abs() < 1e-3);
}

#[test]
fn nonlinear_reduces_to_linear_at_small_amplitude() {
    let p = SystemParams { n_b: 1.0, ..SystemParams::default() };
    let drive = DriveSpec::on_sideband(&p, Side::Blue, 0.5 * p.threshold_photons());
    let lin = SimConfig::auto(&p, &drive, SimMode::Linear, Side::Blue, 5e-6, 1e-9, 9).unwrap();
    let nl = SimConfig { mode: SimMode::Nonlinear, ..lin.clone() };
    let a = simulate_envelope(&p, &drive, &lin).unwrap();
    let b = simulate_envelope(&p, &drive, &nl).unwrap();
    let z_max = p.g0 / p.omega_m * (4.0 * b.max_occupancy() + 2.0).sqrt();
    assert!(z_max < 1e-3, "z reached {z_max}");
    let scale = a.samples.iter().map(|x| x.norm()).fold(0.0, f64::max);
    for (x, y) in a.samples.iter().zip(&b.samples) {
        assert!((x - y).norm() < 1e-3 * scale);
    }
}

#[test]
fn identical_seeds_give_identical_trajectories() {
    let p = SystemParams::default();
    let drive = DriveSpec::on_sideband(&p, Side::Blue, 1000.0);
    let cfg = SimConfig::auto(&p, &drive, SimMode::Nonlinear, Side::Blue, 2e-6, 2e-9, 77).unwrap();
    let a = simulate_envelope(&p, &drive, &cfg).unwrap();
    let b = simulate_envelope(&p, &drive, &cfg).unwrap();
    assert_eq!(a.params_hash, b.params_hash);
    assert!(a.samples.iter().zip(&b.samples).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
    let other = SimConfig { seed: 78, ..cfg };
    let c = simulate_envelope(&p, &drive, &other).unwrap();
    assert_ne!(a.samples[10], c.samples[10]);
    let rec = heterodyne_record(&a, 2e8, 0.1, 1).unwrap();
    assert_eq!(rec, heterodyne_record(&a, 2e8, 0.1, 1).unwrap());
}
