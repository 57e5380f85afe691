// Linewidth against pump photon number on both sidebands and the joint
// fit for γi and g₀.
//
// ```bash
// cargo run --release --example calibrate_g0
// ```

use phonon_counting::config::ExperimentConfig;
use phonon_counting::pipeline::Context;
use std::f64::consts::TAU;

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::from_json(r#"{"calibration": {"n_c": [200, 400, 600, 800], "duration_s": 0.001}}"#)?;
    let ctx = Context::new(cfg)?;
    let cal = ctx.calibrate()?;
    for pt in &cal.points {
        println!("{:>5} n_c = {:>4}: γ = {:.1} ± {:.1} kHz", pt.side.as_str(), pt.n_c, pt.gamma_fit / TAU / 1e3, pt.gamma_err / TAU / 1e3);
    }
    let r = &cal.result;
    println!("g0 = {:.1} ± {:.1} kHz (input {:.1} kHz)", r.g0 / TAU / 1e3, r.g0_err / TAU / 1e3, ctx.params.g0 / TAU / 1e3);
    println!("γi = {:.3} ± {:.3} MHz, χ²/dof {:.2}", r.gamma_i / TAU / 1e6, r.gamma_i_err / TAU / 1e6, r.reduced_chi2);
    Ok(())
}
