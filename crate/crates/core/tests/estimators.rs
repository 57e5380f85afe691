use phonon_counting::analysis::{baseline_flatness, g2_histogram, g2_zero, G2Mode, PILE_UP_LIMIT};
use phonon_counting::config::ExperimentConfig;
use phonon_counting::detection::{hbt_split, poisson_stream, PhotonEventStream, StreamMeta, PS_PER_S};
use phonon_counting::params::Side;
use phonon_counting::pipeline::Context;
use phonon_counting::rng::{stream, Purpose};
use rand::Rng;
use rand_distr::Exp1;
use std::f64::consts::TAU;

fn meta() -> StreamMeta {
    StreamMeta { seed: None, params_hash: [0; 32], attenuation: None }
}

fn context(json: &str) -> Context {
    Context::new(ExperimentConfig::from_json(json).unwrap()).unwrap()
}

/// Chaotic light with intensity redrawn from an exponential distribution
/// every `block` ps, so g²(0) = 2 falling linearly to 1 at one block.
fn blocky_thermal(rate: f64, block: u64, duration: u64, seed: u64) -> PhotonEventStream {
    let mut rng = stream(seed, Purpose::Events, 0);
    let mut out = PhotonEventStream::empty(duration, 0, meta());
    let mut start = 0;
    while start < duration {
        let level = rate * rng.sample::<f64, _>(Exp1);
        let mut t = start as f64;
        loop {
            t += rng.sample::<f64, _>(Exp1) / level * PS_PER_S;
            if t >= (start + block) as f64 || t >= duration as f64 {
                break;
            }
            if out.timestamps.last() != Some(&(t as u64)) {
                out.timestamps.push(t as u64);
                out.detector_ids.push(0);
            }
        }
        start += block;
    }
    out
}

#[test]
fn start_stop_matches_all_pairs_at_low_rate() {
    let s = blocky_thermal(2e4, 1_000_000, 20_000_000_000_000, 31);
    let (a, b) = hbt_split(&s, 0.5, 31);
    let (bin, lag) = (200_000, 4_000_000);
    let all = g2_histogram(&a, &b, bin, lag, G2Mode::AllPairs).unwrap();
    let ss = g2_histogram(&a, &b, bin, lag, G2Mode::StartStop).unwrap();
    assert!(all.rate1.max(all.rate2) * 4e-6 < PILE_UP_LIMIT);
    assert!(!ss.pile_up_risk);
    for k in 0..all.g2.len() {
        let err = all.g2_err[k].hypot(ss.g2_err[k]);
        assert!((all.g2[k] - ss.g2[k]).abs() < 3.0 * err, "lag {} ps: {} vs {} ± {err}", all.lags[k], all.g2[k], ss.g2[k]);
    }
    let (g0, e0) = g2_zero(&all).unwrap();
    // triangle averaged over bins at 0 and ±0.2 µs: excess (0.95 + 2·0.8)/3
    let expect = 1.85;
    assert!((g0 - expect).abs() < 4.0 * e0, "g2(0) = {g0} ± {e0}, expected {expect}");
}

#[test]
fn start_stop_pile_up_is_flagged() {
    // 3 MHz per detector against a 5 µs window
    let s = poisson_stream(6e6, 2_000_000_000_000, 0, &mut stream(41, Purpose::Events, 0), meta());
    let (a, b) = hbt_split(&s, 0.5, 41);
    let (bin, lag) = (50_000, 5_000_000);
    let ss = g2_histogram(&a, &b, bin, lag, G2Mode::StartStop).unwrap();
    let all = g2_histogram(&a, &b, bin, lag, G2Mode::AllPairs).unwrap();
    assert!(ss.pile_up_risk);
    let (from, to) = (1e-6, 5e-6);
    let ss_flat = baseline_flatness(&ss, from, to, 0.0).unwrap();
    let all_flat = baseline_flatness(&all, from, to, 0.0).unwrap();
    assert!(!ss_flat.consistent, "{ss_flat:?}");
    assert!(all_flat.consistent, "{all_flat:?}");
}

#[test]
fn g2_decay_matches_spectral_linewidth_below_threshold() {
    for (k, c) in [0.3, 0.5, 0.8].into_iter().enumerate() {
        let ctx = context(&format!(
            r#"{{"seed": {}, "sweep": {{"side": "blue", "cooperativity": [{c}]}}, "sim": {{"mode": "linear", "duration_s": 0.004}}}}"#,
            50 + k
        ));
        let pt = ctx.sweep_points()[0];
        assert_eq!(pt.side, Side::Blue);
        let run = ctx.run_point(&pt).unwrap();
        let s = &run.summary;
        let decay = s.g2_decay_rate.expect("decay fitted");
        let width = s.npsd_linewidth.expect("line resolved");
        let lin = s.linear_linewidth;
        assert!((decay / width - 1.0).abs() < 0.10, "C = {c}: Γ_g2 = {} Hz, NPSD fwhm = {} Hz", decay / TAU, width / TAU);
        assert!((width / lin - 1.0).abs() < 0.10, "C = {c}: NPSD {} Hz vs model {} Hz", width / TAU, lin / TAU);
    }
}
