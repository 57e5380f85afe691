// Stochastic envelope of the mechanical mode below threshold against the
// rate-equation occupancy and thermal statistics.
//
// ```bash
// cargo run --release --example thermal_envelope
// ```

use phonon_counting::dynamics::{linear_back_action, simulate_envelope, SimConfig, SimMode};
use phonon_counting::params::{DriveSpec, Side, SystemParams};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = SystemParams::default();
    for c in [0.3, 0.6, 0.9] {
        let drive = DriveSpec::on_sideband(&p, Side::Blue, c * p.threshold_photons());
        let gamma = p.gamma_i + linear_back_action(&p, &drive)?;
        let cfg = SimConfig::auto(&p, &drive, SimMode::Linear, Side::Blue, 500.0 / gamma, 5e-9, 3)?;
        let traj = simulate_envelope(&p, &drive, &cfg)?;
        println!(
            "C = {c}: <n> = {:.0} (rate equation {:.0}), <n²>/<n>² = {:.3}, τc = {:.1} ns (1/γ = {:.1} ns)",
            traj.mean_occupancy(),
            p.gamma_i * p.n_b / gamma,
            traj.intensity_ratio(),
            1e9 * traj.correlation_time(),
            1e9 / gamma
        );
    }
    Ok(())
}
