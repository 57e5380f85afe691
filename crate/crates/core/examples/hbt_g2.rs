// Intensity correlation g²(τ) of the detected clicks: thermal bunching
// below threshold, g²(0) and the decay rate.
//
// ```bash
// cargo run --release --example hbt_g2
// ```

use phonon_counting::config::ExperimentConfig;
use phonon_counting::pipeline::Context;
use std::f64::consts::TAU;

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::from_json(
        r#"{"seed": 2, "drive": {"n_c": null, "cooperativity": 0.7}, "sim": {"mode": "linear", "duration_s": 0.002}}"#,
    )?;
    let ctx = Context::new(cfg)?;
    let run = ctx.run_point(&ctx.single_point()?)?;
    let (h, s) = (&run.histogram, &run.summary);
    let c = h.lags.len() / 2;
    for k in (c - 5..=c + 5).step_by(2) {
        println!("τ = {:>8.1} ns  g² = {:.3} ± {:.3}", 1e-3 * h.lags[k] as f64, h.g2[k], h.g2_err[k]);
    }
    println!("g²(0) = {:.4} ± {:.4} from {} pairs", s.g2_0, s.g2_0_err, s.total_pairs);
    if let Some(rate) = s.g2_decay_rate {
        println!("decay {:.1} kHz, model linewidth {:.1} kHz", rate / TAU / 1e3, s.linear_linewidth / TAU / 1e3);
    }
    println!("Fano factor {:.0} ± {:.0}", s.fano, s.fano_err);
    Ok(())
}
