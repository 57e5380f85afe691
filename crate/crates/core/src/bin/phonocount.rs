use clap::{Parser, Subcommand, ValueEnum};
use phonon_counting::config::ExperimentConfig;
use phonon_counting::error::Error;
use phonon_counting::output::{run, Command};
use phonon_counting::params::Side;
use phonon_counting::pipeline::Context;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "phonocount", about = "Phonon counting and HBT simulation runs", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// JSON experiment config; defaults are used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps and scans.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Intracavity photon number; a comma-separated list for `sweep`.
    #[arg(long, global = true, value_delimiter = ',')]
    nc: Vec<f64>,
    #[arg(long, global = true)]
    side: Option<SideArg>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Noise-equivalent phonon number versus n_c.
    Nep,
    /// Count rate, occupancy, g2(0), decay rates and Fano factor per n_c.
    Sweep,
    /// Single-point g2 histogram.
    G2,
    /// Heterodyne spectrum and Lorentzian fit.
    Npsd,
    /// Linewidths on both sides and the g0 fit.
    Calibrate,
    /// Limit-cycle map over detuning and operating point.
    Solve,
    /// Binary time-tag file of detected clicks.
    Events,
}

#[derive(ValueEnum, Clone, Copy)]
enum SideArg {
    Red,
    Blue,
}

fn config(cli: &Cli, cmd: Command) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(side) = cli.side {
        let side = match side {
            SideArg::Red => Side::Red,
            SideArg::Blue => Side::Blue,
        };
        cfg.drive.side = side;
        cfg.sweep.side = side;
    }
    if !cli.nc.is_empty() {
        if cmd == Command::Sweep {
            cfg.sweep.n_c = Some(cli.nc.clone());
            cfg.sweep.cooperativity = None;
        } else if let [n] = cli.nc[..] {
            cfg.drive.n_c = Some(n);
            cfg.drive.power_w = None;
            cfg.drive.cooperativity = None;
        } else {
            return Err(phonon_counting::config::ConfigError::Invalid("--nc takes one value outside sweep".into()).into());
        }
    }
    if let Some(out) = &cli.out {
        cfg.output = out.display().to_string();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cmd = match cli.cmd {
        Cmd::Nep => Command::Nep,
        Cmd::Sweep => Command::Sweep,
        Cmd::G2 => Command::G2,
        Cmd::Npsd => Command::Npsd,
        Cmd::Calibrate => Command::Calibrate,
        Cmd::Solve => Command::Solve,
        Cmd::Events => Command::Events,
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    let result = config(&cli, cmd).and_then(|cfg| {
        let ctx = Context::new(cfg)?;
        let out = PathBuf::from(&ctx.config.output);
        run(&ctx, cmd, &out)
    });
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
