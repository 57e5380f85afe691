// Noise-equivalent phonon number against pump photon number, split into
// dark-count and pump bleed-through terms.
//
// ```bash
// cargo run --release --example sensitivity_nep
// ```

use phonon_counting::config::ExperimentConfig;
use phonon_counting::params::noise_equivalent_phonons;

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::default();
    let (p, d) = (cfg.system_params(), cfg.detection_params());
    println!("pump suppression A = {:.3e}", d.pump_suppression);
    println!("{:>8} {:>12} {:>12} {:>12}", "n_c", "n_dark", "n_pump", "n_total");
    for n_c in [1.0, 10.0, 100.0, 1000.0, 1e4] {
        let nep = noise_equivalent_phonons(&p, &d, n_c)?;
        println!("{n_c:>8} {:>12.4e} {:>12.4e} {:>12.4e}", nep.n_dark, nep.n_pump, nep.n_total);
    }
    Ok(())
}
