// Heterodyne noise power spectral density of the mechanical sideband and
// its Lorentzian linewidth.
//
// ```bash
// cargo run --release --example npsd_linewidth
// ```

use phonon_counting::config::ExperimentConfig;
use phonon_counting::pipeline::Context;
use std::f64::consts::TAU;

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    for c in [0.4, 0.8] {
        let cfg = ExperimentConfig::from_json(&format!(
            r#"{{"drive": {{"n_c": null, "cooperativity": {c}}}, "sim": {{"mode": "linear", "duration_s": 0.002}}}}"#
        ))?;
        let ctx = Context::new(cfg)?;
        let pt = ctx.single_point()?;
        let traj = ctx.simulate(&pt, ctx.config.sim.duration_s)?;
        let (spec, fit) = ctx.npsd(&pt, &traj)?;
        println!(
            "C = {c}: fwhm {:.1} ± {:.1} kHz (model {:.1} kHz), {} segments at {:.2} kHz resolution, χ²/dof {:.2}",
            fit.fwhm / 1e3,
            fit.fwhm_err() / 1e3,
            ctx.linear_linewidth(&pt)? / TAU / 1e3,
            spec.segments,
            spec.resolution() / 1e3,
            fit.reduced_chi2
        );
    }
    Ok(())
}
