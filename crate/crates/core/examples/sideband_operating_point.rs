// Jacobi–Anger sidebands of the modulated cavity, the amplitude-dependent
// gain and the self-oscillation operating point.
//
// ```bash
// cargo run --release --example sideband_operating_point
// ```

use phonon_counting::params::{DriveSpec, Side, SystemParams};
use phonon_counting::sideband::{
    bessel_sideband_amplitudes, om_gain_nonlinear, solve_operating_point, solve_oscillation_amplitude, Truncation,
};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = SystemParams::default();
    let drive = DriveSpec::on_sideband(&p, Side::Blue, 2.0 * p.threshold_photons());
    let omega = drive.drive_amplitude(&p)?;

    let set = bessel_sideband_amplitudes(0.15, drive.detuning, omega, &p, Truncation::Auto)?;
    println!("sidebands at z = 0.15 (photons per line):");
    for n in -2..=2 {
        println!("  n = {n:+}: {:.4e}", set.amplitude(n).norm_sqr());
    }

    println!("gain balance γ_OM(z)/γi:");
    for z in [1e-3, 0.05, 0.1, 0.2, 0.4] {
        println!("  z = {z:<6} {:+.4}", om_gain_nonlinear(z, drive.detuning, omega, &p)? / p.gamma_i);
    }

    if let Some(lc) = solve_oscillation_amplitude(&p, omega, drive.detuning)?.limit_cycle() {
        println!("limit cycle: z = {:.5}, β = {:.1}, <n> = {:.4e}", lc.z, lc.beta, lc.mean_occupancy);
        let (delta, op) = solve_operating_point(&p, omega, lc.sidebands.stokes_photons())?;
        println!("operating point for that first-Stokes number: Δ/ω_m = {:.4}, z = {:.5}", delta / p.omega_m, op.z);
    }
    Ok(())
}
