// Dynamical back-action: damping, cooperativity and the steady phonon
// number on both sidebands.
//
// ```bash
// cargo run --release --example back_action
// ```

use phonon_counting::params::{gamma_om, linear_steady_occupancy, Side, SystemParams};
use std::f64::consts::TAU;

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = SystemParams::default();
    println!("4g0²/κ = {:.1} Hz per photon", p.om_rate_per_photon() / TAU);
    println!("blue threshold n_c = {:.2}", p.threshold_photons());
    println!("{:>8} {:>8} {:>14} {:>14} {:>12}", "side", "n_c", "γ_OM (Hz)", "γ_tot (Hz)", "<n>");
    for side in [Side::Red, Side::Blue] {
        for n_c in [100.0, 500.0, 1200.0] {
            let ba = gamma_om(&p, n_c, side)?;
            let n = linear_steady_occupancy(&p, n_c, side)?;
            println!(
                "{:>8} {:>8} {:>14.4e} {:>14.4e} {:>12.1}",
                side.as_str(),
                n_c,
                ba.rate / TAU,
                ba.total_damping(&p) / TAU,
                n
            );
        }
    }
    Ok(())
}
