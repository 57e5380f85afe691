// Sweep across the parametric instability: occupancy, g²(0) falling from
// thermal to coherent, and the Fano factor.
//
// ```bash
// cargo run --release --example threshold_sweep
// ```

use phonon_counting::config::ExperimentConfig;
use phonon_counting::pipeline::Context;

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::from_json(
        r#"{"seed": 3, "sweep": {"cooperativity": [0.5, 0.9, 1.0, 1.1, 1.5]}, "sim": {"duration_s": 0.001}}"#,
    )?;
    let ctx = Context::new(cfg)?;
    println!("{:>6} {:>12} {:>17} {:>21} {:>12}", "C", "<n>", "g²(0)", "F (HBT)", "F (envelope)");
    for run in ctx.sweep()? {
        let s = run.summary;
        println!(
            "{:>6.2} {:>12.4e} {:>8.4} ± {:<6.4} {:>10.3e} ± {:<8.1e} {:>12.0}",
            s.cooperativity,
            s.mean_occupancy,
            s.g2_0,
            s.g2_0_err.hypot(s.g2_0_record_err),
            s.fano,
            s.fano_err,
            s.fano_envelope
        );
    }
    Ok(())
}
