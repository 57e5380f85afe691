//! Output bundles for each subcommand.
//!
//! Every directory gets `resolved_config.json`. CSV files start with a
//! `# config_hash=<hex>, seed=<u64>` line followed by a header row; JSON
//! files carry `config_hash` and `seed` keys; time-tag files carry both in
//! their header.

use crate::analysis::{lorentzian_fit, write_calibration_csv, AnalysisError};
use crate::detection::write_timetags;
use crate::error::{Error, Result};
use crate::pipeline::{Context, PointRun};
use serde::Serialize;
use serde_json::json;
use std::f64::consts::TAU;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Nep,
    Sweep,
    G2,
    Npsd,
    Calibrate,
    Solve,
    Events,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Nep => "nep",
            Command::Sweep => "sweep",
            Command::G2 => "g2",
            Command::Npsd => "npsd",
            Command::Calibrate => "calibrate",
            Command::Solve => "solve",
            Command::Events => "events",
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.display().to_string(), source }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path).map_err(io_err(path))?))
}

fn write_csv_file(
    ctx: &Context,
    seed: u64,
    path: &Path,
    body: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "# config_hash={}, seed={}", ctx.config_hash_hex(), seed)
        .and_then(|_| body(&mut w))
        .and_then(|_| w.flush())
        .map_err(io_err(path))
}

fn write_json_file<T: Serialize>(ctx: &Context, seed: u64, path: &Path, value: &T) -> Result<()> {
    let mut v = serde_json::to_value(value).expect("report serializes");
    if let Some(obj) = v.as_object_mut() {
        obj.insert("config_hash".into(), json!(ctx.config_hash_hex()));
        obj.insert("seed".into(), json!(seed));
    }
    let mut text = serde_json::to_string_pretty(&v).expect("report serializes");
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn csv_rows<W: Write>(w: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    for r in rows {
        out.write_record(&r)?;
    }
    out.flush()
}

fn merge(into: &mut serde_json::Value, from: serde_json::Value) {
    if let (Some(a), serde_json::Value::Object(b)) = (into.as_object_mut(), from) {
        a.extend(b);
    }
}

fn e(x: f64) -> String {
    format!("{x:e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(e).unwrap_or_default()
}

fn write_point(ctx: &Context, dir: &Path, run: &PointRun) -> Result<()> {
    let seed = run.summary.seed;
    write_csv_file(ctx, seed, &dir.join("g2.csv"), |w| run.histogram.write_csv(w))?;
    if let Some((_, fit)) = &run.spectrum {
        write_csv_file(ctx, seed, &dir.join("spectrum.csv"), |w| fit.write_csv(w))?;
    }
    write_json_file(ctx, seed, &dir.join("summary.json"), &run.summary)
}

/// Runs `cmd` and writes its files into `out`. Returns the files written.
pub fn run(ctx: &Context, cmd: Command, out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let seed = ctx.seed();
    let cfg_path = out.join("resolved_config.json");
    fs::write(&cfg_path, ctx.config.resolved_json() + "\n").map_err(io_err(&cfg_path))?;
    let mut written = vec![cfg_path];

    match cmd {
        Command::Nep => {
            let rows = ctx.nep_table()?;
            let path = out.join("nep.csv");
            write_csv_file(ctx, seed, &path, |w| {
                csv_rows(
                    w,
                    &["n_c", "n_dark", "n_pump", "n_total"],
                    rows.iter().map(|r| vec![e(r.n_c), e(r.nep.n_dark), e(r.nep.n_pump), e(r.nep.n_total)]),
                )
            })?;
            written.push(path);
        }
        Command::Sweep => {
            let runs = ctx.sweep()?;
            for (k, run) in runs.iter().enumerate() {
                let dir = out.join(format!("point_{k:03}"));
                fs::create_dir_all(&dir).map_err(io_err(&dir))?;
                write_point(ctx, &dir, run)?;
                written.push(dir);
            }
            let path = out.join("sweep.csv");
            write_csv_file(ctx, seed, &path, |w| {
                csv_rows(
                    w,
                    &[
                        "point", "seed", "n_c", "cooperativity", "count_rate", "mean_n", "blind_n", "g2_0", "g2_0_err", "g2_0_record_err",
                        "g2_decay_hz", "g2_decay_err_hz", "linewidth_hz", "linewidth_err_hz", "fano", "fano_err",
                        "fano_envelope",
                    ],
                    runs.iter().enumerate().map(|(k, r)| {
                        let s = &r.summary;
                        let hz = |x: Option<f64>| opt(x.map(|v| v / TAU));
                        vec![
                            format!("point_{k:03}"),
                            s.seed.to_string(),
                            e(s.n_c),
                            e(s.cooperativity),
                            e(s.count_rate),
                            e(s.mean_occupancy),
                            e(s.blind_occupancy),
                            e(s.g2_0),
                            e(s.g2_0_err),
                            e(s.g2_0_record_err),
                            hz(s.g2_decay_rate),
                            hz(s.g2_decay_rate_err),
                            hz(s.npsd_linewidth),
                            hz(s.npsd_linewidth_err),
                            e(s.fano),
                            e(s.fano_err),
                            e(s.fano_envelope),
                        ]
                    }),
                )
            })?;
            written.push(path);
        }
        Command::G2 => {
            let pt = ctx.single_point()?;
            let run = ctx.run_point(&pt)?;
            write_point(ctx, out, &run)?;
            written.extend(["g2.csv", "summary.json"].map(|f| out.join(f)));
        }
        Command::Npsd => {
            let pt = ctx.single_point()?;
            let traj = ctx.simulate(&pt, ctx.config.sim.duration_s)?;
            let (spec, window) = ctx.npsd_spectrum(&pt, &traj)?;
            let path = out.join("spectrum.csv");
            let mut report = json!({
                "resolution_hz": spec.resolution(),
                "segments": spec.segments,
                "window_hz": [window.0, window.1],
                "linear_linewidth_hz": ctx.linear_linewidth(&pt)? / TAU,
                "mean_occupancy": traj.mean_occupancy(),
            });
            match lorentzian_fit(&spec, window) {
                Ok(fit) => {
                    write_csv_file(ctx, seed, &path, |w| fit.write_csv(w))?;
                    let extra = json!({
                        "center_hz": fit.center,
                        "center_err_hz": fit.center_err(),
                        "linewidth_hz": fit.fwhm,
                        "linewidth_err_hz": fit.fwhm_err(),
                        "amplitude": fit.amplitude,
                        "floor": fit.floor,
                        "covariance": fit.covariance,
                        "reduced_chi2": fit.reduced_chi2,
                        "converged": fit.converged,
                    });
                    merge(&mut report, extra);
                }
                Err(AnalysisError::LineUnresolved { upper_bound }) => {
                    write_csv_file(ctx, seed, &path, |w| {
                        csv_rows(
                            w,
                            &["freq_hz", "psd", "fit"],
                            spec.freq
                                .iter()
                                .zip(&spec.psd)
                                .filter(|(f, _)| **f >= window.0 && **f <= window.1)
                                .map(|(f, p)| vec![e(*f), e(*p), String::new()]),
                        )
                    })?;
                    merge(&mut report, json!({ "linewidth_upper_bound_hz": upper_bound, "converged": false }));
                }
                Err(err) => return Err(err.into()),
            }
            let json_path = out.join("npsd.json");
            write_json_file(ctx, seed, &json_path, &report)?;
            written.extend([path, json_path]);
        }
        Command::Calibrate => {
            let cal = ctx.calibrate()?;
            let path = out.join("calibration.csv");
            write_csv_file(ctx, seed, &path, |w| write_calibration_csv(&cal.points, w))?;
            let r = &cal.result;
            let hz = |x: f64| x / TAU;
            let report = json!({
                "g0_hz": hz(r.g0),
                "g0_err_hz": hz(r.g0_err),
                "g0_ci_hz": [hz(r.g0_ci.0), hz(r.g0_ci.1)],
                "gamma_i_hz": hz(r.gamma_i),
                "gamma_i_err_hz": hz(r.gamma_i_err),
                "gamma_i_ci_hz": [hz(r.gamma_i_ci.0), hz(r.gamma_i_ci.1)],
                "slope_hz_per_photon": hz(r.slope),
                "slope_err_hz_per_photon": hz(r.slope_err),
                "residuals_hz": r.residuals.iter().map(|x| hz(*x)).collect::<Vec<_>>(),
                "reduced_chi2": r.reduced_chi2,
            });
            let json_path = out.join("calibration.json");
            write_json_file(ctx, seed, &json_path, &report)?;
            written.extend([path, json_path]);
        }
        Command::Solve => {
            let map = ctx.solve_map()?;
            let path = out.join("solve.csv");
            write_csv_file(ctx, seed, &path, |w| {
                csv_rows(
                    w,
                    &["delta_over_omega_m", "z", "beta", "mean_n", "n1", "residual"],
                    map.rows
                        .iter()
                        .map(|r| vec![e(r.delta_over_omega_m), e(r.z), e(r.beta), e(r.mean_n), e(r.n1), e(r.residual)]),
                )
            })?;
            let report = json!({
                "drive_amplitude_hz": map.drive_amplitude / TAU,
                "threshold_delta_over_omega_m": map.threshold_delta_over_omega_m,
                "operating_point": map.operating_point,
            });
            let json_path = out.join("solve.json");
            write_json_file(ctx, seed, &json_path, &report)?;
            written.extend([path, json_path]);
        }
        Command::Events => {
            let (det, merged) = ctx.events()?;
            let path = out.join("events.phct");
            let mut w = create(&path)?;
            write_timetags(&merged, &mut w).map_err(io_err(&path))?;
            let report = json!({
                "events": merged.len(),
                "detector_a": det.detector_a.len(),
                "detector_b": det.detector_b.len(),
                "duration_s": merged.duration_s(),
                "count_rate": det.count_rate(),
                "settings": det.settings,
            });
            let json_path = out.join("events.json");
            write_json_file(ctx, seed, &json_path, &report)?;
            written.extend([path, json_path]);
        }
    }
    Ok(written)
}
