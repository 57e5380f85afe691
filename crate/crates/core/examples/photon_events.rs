// Sideband photon events from a simulated trajectory, the HBT beam
// splitter and the detector model.
//
// ```bash
// cargo run --release --example photon_events
// ```

use phonon_counting::detection::{apply_detector, generate_sideband_events, hbt_split, DetectorModel};
use phonon_counting::dynamics::{simulate_envelope, SimConfig, SimMode};
use phonon_counting::params::{DetectionParams, DriveSpec, Side, SystemParams};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = SystemParams::default();
    let n_c = 0.5 * p.threshold_photons();
    let drive = DriveSpec::on_sideband(&p, Side::Blue, n_c);
    let cfg = SimConfig::auto(&p, &drive, SimMode::Linear, Side::Blue, 1e-3, 5e-9, 7)?;
    let traj = simulate_envelope(&p, &drive, &cfg)?;

    let d = DetectionParams { attenuation: 1e-2, ..DetectionParams::default() };
    let events = generate_sideband_events(&traj, &p, &d, Side::Blue, n_c, 7)?;
    let (a, b) = hbt_split(&events, d.split_ratio, 7);
    let det = DetectorModel::default();
    let (a, b) = (apply_detector(&a, &det, 7), apply_detector(&b, &det, 7));
    println!("<n> = {:.0} over {:.1} ms", traj.mean_occupancy(), 1e3 * traj.duration());
    println!("photons at the splitter: {} ({:.3e}/s)", events.len(), events.rate(0));
    println!("detector A: {} clicks, detector B: {} clicks", a.len(), b.len());
    println!("shortest same-detector gap: {} ps", a.merge(&b).min_same_detector_gap().unwrap_or(0));
    Ok(())
}
