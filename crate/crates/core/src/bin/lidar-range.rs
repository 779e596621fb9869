//! Command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input, 2 solver failure on every
//! evaluated point, 3 I/O error.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lidar_range::apd::{optimize_gain, DEFAULT_GAIN_BOUNDS};
use lidar_range::range::{
    closed_form_max_range, get_parameter, max_range, optical_powers, sensitivity, snr_at_range, DetectorChoice,
    SipmSnrMode, PARAMETERS,
};
use lidar_range::scenario::{load_scenario, table1_apd, table1_preset, table1_sipm, to_toml_string, DetectorKind};
use lidar_range::scene::ApertureModel;
use lidar_range::sipm::monte_carlo::SipmMcConfig;
use lidar_range::sweep::{
    error_code, format_number as num, run_sweep, Grid, PhotonCurve, Spacing, SweepKind, SweepSpec,
};
use lidar_range::{Error, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "lidar-range",
    version,
    about = "Trigger SNR and maximum range of APD and SiPM direct time-of-flight Lidars"
)]
struct Cli {
    /// Scenario TOML file; the built-in reference design when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Seed for Monte Carlo SiPM evaluation.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Detector series to evaluate (repeatable). Parameters come from the
    /// scenario when its detector has the same kind, otherwise from the
    /// reference design.
    #[arg(long, global = true, value_enum)]
    detector: Vec<DetectorArg>,

    /// Worker threads for parallel evaluation.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Svg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DetectorArg {
    Apd,
    Sipm,
    SipmApprox,
    SipmMc,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Distance,
    Elevation,
    Illuminance,
    PhotonResponse,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SpacingArg {
    Linear,
    Log,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ApertureArg {
    Constant,
    Cosine,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PresetArg {
    Table1,
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Explicit comma-separated grid; overrides min/max/points.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    #[arg(long)]
    min: Option<f64>,
    #[arg(long)]
    max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, value_enum)]
    spacing: Option<SpacingArg>,
}

#[derive(Subcommand)]
enum Command {
    /// Maximum detectable range per detector.
    Range,
    /// Trigger SNR against range.
    SnrCurve {
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Distance, elevation, illuminance or photon-response sweep.
    Sweep {
        #[arg(value_enum)]
        kind: KindArg,
        #[command(flatten)]
        grid: GridArgs,
        /// Aperture model for every point; elevation sweeps default to cosine.
        #[arg(long, value_enum)]
        aperture: Option<ApertureArg>,
    },
    /// APD gain that maximises the trigger SNR.
    OptimizeGain {
        /// Target range, metres; the scenario range when omitted.
        #[arg(long)]
        range: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_GAIN_BOUNDS.0)]
        gain_min: f64,
        #[arg(long, default_value_t = DEFAULT_GAIN_BOUNDS.1)]
        gain_max: f64,
    },
    /// Elasticity of the maximum range with respect to design parameters.
    Sensitivity {
        /// Parameter names (repeatable); every applicable one when omitted.
        #[arg(long)]
        param: Vec<String>,
        #[arg(long, default_value_t = 1e-3)]
        rel_step: f64,
    },
    /// SiPM fired pixels against incident photons for PDE, array size and
    /// background families.
    SipmResponse {
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Print a reference scenario file.
    Preset {
        #[arg(value_enum)]
        name: PresetArg,
    },
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io { .. } => 3,
            Error::NoDetection { .. } | Error::UnboundedRange { .. } | Error::Saturation { .. } => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| invalid(format!("thread pool: {e}")))?;
    }
    let cfg = match &cli.config {
        Some(path) => load_scenario(path)?,
        None => table1_preset(DetectorKind::Apd),
    };
    let detectors = detectors(cli, &cfg);
    if cli.format == Format::Svg
        && !matches!(
            cli.command,
            Command::SnrCurve { .. } | Command::Sweep { .. } | Command::SipmResponse { .. }
        )
    {
        return Err(invalid("svg output is only available for sweeps"));
    }

    match &cli.command {
        Command::Range => range_table(cli, &cfg, &detectors),
        Command::SnrCurve { grid } => sweep(cli, &cfg, &detectors, KindArg::Distance, grid, None),
        Command::Sweep { kind, grid, aperture } => sweep(cli, &cfg, &detectors, *kind, grid, *aperture),
        Command::SipmResponse { grid } => sweep(cli, &cfg, &detectors, KindArg::PhotonResponse, grid, None),
        Command::OptimizeGain {
            range,
            gain_min,
            gain_max,
        } => gain_table(
            cli,
            &cfg,
            &detectors,
            range.unwrap_or(cfg.scene.range_m),
            (*gain_min, *gain_max),
        ),
        Command::Sensitivity { param, rel_step } => sensitivity_table(cli, &cfg, &detectors, param, *rel_step),
        Command::Preset {
            name: PresetArg::Table1,
        } => {
            let kind = match cli.detector.first() {
                None | Some(DetectorArg::Apd) => DetectorKind::Apd,
                Some(_) => DetectorKind::Sipm,
            };
            let mut preset = table1_preset(kind);
            preset.detector = detectors_for(cli, &preset).remove(0);
            emit(cli, &to_toml_string(&preset))
        }
    }
}

fn detectors(cli: &Cli, cfg: &ScenarioConfig) -> Vec<DetectorChoice> {
    if cli.detector.is_empty() {
        let mut d = cfg.detector;
        if let (
            Some(seed),
            DetectorChoice::Sipm {
                mode: SipmSnrMode::MonteCarlo(mc),
                ..
            },
        ) = (cli.seed, &mut d)
        {
            mc.seed = seed;
        }
        return vec![d];
    }
    detectors_for(cli, cfg)
}

fn detectors_for(cli: &Cli, cfg: &ScenarioConfig) -> Vec<DetectorChoice> {
    let sipm_params = match cfg.detector {
        DetectorChoice::Sipm { params, .. } => params,
        DetectorChoice::Apd(_) => table1_sipm(),
    };
    let configured_mc = match cfg.detector {
        DetectorChoice::Sipm {
            mode: SipmSnrMode::MonteCarlo(mc),
            ..
        } => mc,
        _ => SipmMcConfig::defaults_for(&sipm_params),
    };
    let args = if cli.detector.is_empty() {
        vec![DetectorArg::Apd]
    } else {
        cli.detector.clone()
    };
    args.iter()
        .map(|arg| match arg {
            DetectorArg::Apd => DetectorChoice::Apd(match cfg.detector {
                DetectorChoice::Apd(p) => p,
                DetectorChoice::Sipm { .. } => table1_apd(),
            }),
            DetectorArg::Sipm => DetectorChoice::Sipm {
                params: sipm_params,
                mode: SipmSnrMode::Analytic,
            },
            DetectorArg::SipmApprox => DetectorChoice::Sipm {
                params: sipm_params,
                mode: SipmSnrMode::Approx,
            },
            DetectorArg::SipmMc => DetectorChoice::Sipm {
                params: sipm_params,
                mode: SipmSnrMode::MonteCarlo(SipmMcConfig {
                    seed: cli.seed.unwrap_or(configured_mc.seed),
                    ..configured_mc
                }),
            },
        })
        .collect()
}

fn emit(cli: &Cli, text: &str) -> Result<(), Failure> {
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|source| {
            Failure::from(Error::Io {
                path: path.clone(),
                source,
            })
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|()| stdout.flush())
                .map_err(|source| {
                    Failure::from(Error::Io {
                        path: PathBuf::from("<stdout>"),
                        source,
                    })
                })
        }
    }
}

fn grid_for(kind: SweepKind, args: &GridArgs) -> Grid {
    if let Some(values) = &args.grid {
        return Grid::Explicit(values.clone());
    }
    let (min, max, n, spacing) = match kind {
        SweepKind::Distance => (10.0, 1000.0, 50, Spacing::Log),
        SweepKind::Elevation => (-60.0, 60.0, 25, Spacing::Linear),
        SweepKind::Illuminance => (0.01, 100.0, 50, Spacing::Log),
        SweepKind::PhotonResponse => (1.0, 1e5, 51, Spacing::Log),
    };
    Grid::Range {
        min: args.min.unwrap_or(min),
        max: args.max.unwrap_or(max),
        n: args.points.unwrap_or(n),
        spacing: match args.spacing {
            Some(SpacingArg::Linear) => Spacing::Linear,
            Some(SpacingArg::Log) => Spacing::Log,
            None => spacing,
        },
    }
}

fn sweep(
    cli: &Cli,
    cfg: &ScenarioConfig,
    detectors: &[DetectorChoice],
    kind: KindArg,
    grid: &GridArgs,
    aperture: Option<ApertureArg>,
) -> Result<(), Failure> {
    let kind = match kind {
        KindArg::Distance => SweepKind::Distance,
        KindArg::Elevation => SweepKind::Elevation,
        KindArg::Illuminance => SweepKind::Illuminance,
        KindArg::PhotonResponse => SweepKind::PhotonResponse,
    };
    let aperture_override = match aperture {
        Some(ApertureArg::Constant) => Some(ApertureModel::Constant),
        Some(ApertureArg::Cosine) => Some(ApertureModel::Cosine),
        None if kind == SweepKind::Elevation => Some(ApertureModel::Cosine),
        None => None,
    };
    let curves = if kind == SweepKind::PhotonResponse {
        let base = detectors
            .iter()
            .find_map(|d| match d {
                DetectorChoice::Sipm { params, .. } => Some(*params),
                DetectorChoice::Apd(_) => None,
            })
            .unwrap_or_else(table1_sipm);
        PhotonCurve::default_families(&base)
    } else {
        Vec::new()
    };
    let spec = SweepSpec {
        kind,
        grid: grid_for(kind, grid),
        detectors: detectors.to_vec(),
        curves,
        aperture_override,
    };
    let result = run_sweep(cfg, &spec)?;
    let text = match cli.format {
        Format::Csv => result.to_csv(),
        Format::Svg => result.to_svg(),
    };
    emit(cli, &text)?;
    if result.all_failed() {
        return Err(Failure {
            code: 2,
            message: "solver failed at every grid point".into(),
        });
    }
    Ok(())
}

fn range_table(cli: &Cli, cfg: &ScenarioConfig, detectors: &[DetectorChoice]) -> Result<(), Failure> {
    let mut out = String::from(
        "detector,r_max_m,snr_at_rmax,min_detectable_power_w,background_power_w,closed_form_r_max_m,status\n",
    );
    let mut failures = 0;
    for d in detectors {
        let closed = closed_form_max_range(cfg, d).map(num).unwrap_or_default();
        match max_range(cfg, d, &cfg.tdc) {
            Ok(r) => {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{closed},ok",
                    d.label(),
                    num(r.r_max_m),
                    num(r.snr_at_rmax),
                    num(r.min_detectable_power_w),
                    num(r.background_power_w)
                );
            }
            Err(e @ Error::Config { .. }) => return Err(e.into()),
            Err(e) => {
                failures += 1;
                let _ = writeln!(out, "{},,,,,{closed},{}", d.label(), error_code(&e));
            }
        }
    }
    emit(cli, &out)?;
    if failures == detectors.len() {
        return Err(Failure {
            code: 2,
            message: "no detector has a finite maximum range".into(),
        });
    }
    Ok(())
}

fn gain_table(
    cli: &Cli,
    cfg: &ScenarioConfig,
    detectors: &[DetectorChoice],
    range_m: f64,
    bounds: (f64, f64),
) -> Result<(), Failure> {
    let apds: Vec<_> = detectors
        .iter()
        .filter_map(|d| match d {
            DetectorChoice::Apd(p) => Some(*p),
            DetectorChoice::Sipm { .. } => None,
        })
        .collect();
    if apds.is_empty() {
        return Err(invalid("optimize-gain needs an APD detector"));
    }
    let p = optical_powers(cfg, range_m)?;
    let mut out = String::from("range_m,configured_gain,configured_snr,optimal_gain,optimal_snr\n");
    for params in apds {
        let best = optimize_gain(
            &params,
            cfg.laser.wavelength_m,
            p.echo_w,
            p.background_w,
            cfg.tdc.bandwidth_hz,
            bounds,
        )?;
        let now = snr_at_range(cfg, &DetectorChoice::Apd(params), range_m)?;
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            num(range_m),
            num(params.gain),
            num(now),
            num(best.gain),
            num(best.snr)
        );
    }
    emit(cli, &out)
}

fn sensitivity_table(
    cli: &Cli,
    cfg: &ScenarioConfig,
    detectors: &[DetectorChoice],
    params: &[String],
    rel_step: f64,
) -> Result<(), Failure> {
    let mut out = String::from("detector,parameter,value,elasticity,status\n");
    let mut any_ok = false;
    for d in detectors {
        let names: Vec<&str> = if params.is_empty() {
            PARAMETERS
                .iter()
                .copied()
                .filter(|n| get_parameter(cfg, d, n).is_ok_and(|v| v != 0.0))
                .collect()
        } else {
            params.iter().map(String::as_str).collect()
        };
        for name in names {
            let value = get_parameter(cfg, d, name)?;
            match sensitivity(cfg, d, &cfg.tdc, name, rel_step) {
                Ok(e) => {
                    any_ok = true;
                    let _ = writeln!(out, "{},{name},{},{},ok", d.label(), num(value), num(e));
                }
                Err(e @ (Error::Config { .. } | Error::ZeroParameter(_))) => return Err(e.into()),
                Err(e) => {
                    let _ = writeln!(out, "{},{name},{},,{}", d.label(), num(value), error_code(&e));
                }
            }
        }
    }
    emit(cli, &out)?;
    if !any_ok {
        return Err(Failure {
            code: 2,
            message: "range solver failed for every parameter".into(),
        });
    }
    Ok(())
}
