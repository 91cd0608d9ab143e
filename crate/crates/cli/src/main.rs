use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fringecd::drift::{phase_per_kelvin, CountNoise, DriftProcess, ThermalComponent};
use fringecd::estimate::{EstimatorConfig, FringeFitOptions, MinMaxOptions, PdfFitOptions};
use fringecd::io::config::{CampaignConfig, CurveShape, DetectorConfig, EstimateConfig, Mode, SimulateConfig, TheoryConfig};
use fringecd::model::units;
use fringecd::Error;

#[derive(Parser)]
#[command(name = "fringecd", version, about = "Chromatic dispersion from free-running two-photon fringe visibility")]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic free-running coincidence trace.
    Simulate(SimulateArgs),
    /// Estimate the fringe visibility of a trace.
    Estimate(EstimateArgs),
    /// Inflexion-point CD measurement campaign.
    MethodA(CampaignArgs),
    /// Multi-bandwidth CD measurement campaign.
    MethodB(CampaignArgs),
    /// Visibility against γ for Gaussian and flat-top spectra.
    TheoryCurves(TheoryArgs),
    /// Convert between D, β⁽²⁾ and spectral widths.
    ConvertUnits(ConvertArgs),
}

#[derive(Args)]
struct Common {
    /// Campaign config (TOML); flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DriftKind {
    Uniform,
    RandomWalk,
    Thermal,
    Linear,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// True fringe visibility.
    #[arg(long = "v")]
    visibility: Option<f64>,
    /// Mean counts per bin at the fringe maximum.
    #[arg(long)]
    mean_max: Option<f64>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long, value_enum)]
    drift: Option<DriftKind>,
    /// Random-walk step (rad per bin) or linear rate (rad/s).
    #[arg(long)]
    drift_rate: Option<f64>,
    /// Fiber length setting the thermal phase sensitivity, m.
    #[arg(long, default_value_t = 2.4)]
    thermal_length_m: f64,
    #[arg(long, default_value_t = 0.1)]
    bin_duration_s: f64,
    #[arg(long)]
    noiseless: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodKind {
    /// Arcsine fit to the lower half of the count histogram.
    PdfFit,
    /// Poisson-mixture maximum likelihood.
    PdfFitMl,
    MinMax,
    FringeFit,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, value_enum)]
    method: Option<MethodKind>,
}

#[derive(Args)]
struct CampaignArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    repetitions: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Gaussian,
    Rectangular,
    Both,
}

#[derive(Args)]
struct TheoryArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    shape: Option<ShapeArg>,
    #[arg(long)]
    gamma_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Args)]
struct ConvertArgs {
    /// Dispersion coefficient D in ps/(nm·km).
    #[arg(long, conflicts_with = "beta2")]
    d: Option<f64>,
    /// β⁽²⁾ in s²/m.
    #[arg(long, allow_hyphen_values = true)]
    beta2: Option<f64>,
    /// Center wavelength, m.
    #[arg(long, default_value_t = 1560.46e-9)]
    lambda: f64,
    /// Spectral width in nm to convert to angular frequency.
    #[arg(long)]
    width_nm: Option<f64>,
    #[arg(long, value_enum, default_value = "sigma")]
    width_convention: Convention,
}

#[derive(Clone, Copy, ValueEnum)]
enum Convention {
    Sigma,
    Fwhm,
}

fn base_config(common: &Common, mode: Mode) -> Result<CampaignConfig, Error> {
    let mut config = match &common.config {
        Some(path) => {
            let c = CampaignConfig::load(path)?;
            if c.mode != mode {
                return Err(Error::Config(format!("config mode {:?} does not match the subcommand", c.mode)));
            }
            c
        }
        None => CampaignConfig::new(mode, 0, "."),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(out) = &common.out {
        config.output_dir = out.clone();
    }
    Ok(config)
}

fn simulate_config(args: &SimulateArgs) -> Result<CampaignConfig, Error> {
    let mut config = base_config(&args.common, Mode::Simulate)?;
    let mut sim = config.simulate.unwrap_or(SimulateConfig { visibility: f64::NAN, phi0_rad: 0.0, n_bins: 500 });
    if let Some(v) = args.visibility {
        sim.visibility = v;
    }
    if let Some(n) = args.bins {
        sim.n_bins = n;
    }
    if sim.visibility.is_nan() {
        return Err(Error::Config("simulate needs --v or a config with [simulate]".into()));
    }
    config.simulate = Some(sim);
    if let Some(m) = args.mean_max {
        config.detector =
            DetectorConfig { bin_duration_s: args.bin_duration_s, max_coincidence_rate_hz: m / args.bin_duration_s, ..config.detector };
    }
    if args.noiseless {
        config.detector.noise = CountNoise::Noiseless;
    }
    if let Some(kind) = args.drift {
        config.drift = match kind {
            DriftKind::Uniform => DriftProcess::UniformRandomPhase,
            DriftKind::RandomWalk => DriftProcess::RandomWalk { step_std: args.drift_rate.unwrap_or(0.1) },
            DriftKind::Linear => DriftProcess::Linear { rate_rad_per_s: args.drift_rate.unwrap_or(1.0) },
            DriftKind::Thermal => DriftProcess::ThermalSines {
                components: vec![ThermalComponent { amplitude_k: 0.035, frequency_hz: 1.0, phase_rad: 0.0 }],
                sensitivity: phase_per_kelvin(args.thermal_length_m, 1560.46e-9)?,
            },
        };
    }
    Ok(config)
}

fn estimate_config(args: &EstimateArgs) -> Result<CampaignConfig, Error> {
    let mut config = base_config(&args.common, Mode::Estimate)?;
    if let Some(trace) = &args.trace {
        config.estimate = Some(EstimateConfig { trace_path: trace.clone() });
    }
    if let Some(m) = args.method {
        config.estimation = match m {
            MethodKind::PdfFit => EstimatorConfig::PdfFit(PdfFitOptions::default()),
            MethodKind::PdfFitMl => EstimatorConfig::PdfFit(PdfFitOptions::poisson_ml()),
            MethodKind::MinMax => EstimatorConfig::MinMax(MinMaxOptions { seed: config.seed, ..Default::default() }),
            MethodKind::FringeFit => EstimatorConfig::FringeFit(FringeFitOptions::default()),
        };
    } else if args.common.config.is_none() {
        config.estimation = EstimatorConfig::PdfFit(PdfFitOptions::default());
    }
    if config.estimate.is_none() {
        return Err(Error::Config("estimate needs --trace or a config with [estimate]".into()));
    }
    Ok(config)
}

fn campaign_config(args: &CampaignArgs, mode: Mode) -> Result<CampaignConfig, Error> {
    if args.common.config.is_none() {
        return Err(Error::Config("campaigns need --config".into()));
    }
    let mut config = base_config(&args.common, mode)?;
    if let Some(r) = args.repetitions {
        config.campaign.repetitions = r;
    }
    Ok(config)
}

fn theory_config(args: &TheoryArgs) -> Result<CampaignConfig, Error> {
    let mut config = base_config(&args.common, Mode::TheoryCurves)?;
    let mut t = config.theory.unwrap_or(TheoryConfig { shape: CurveShape::Both, gamma_max: 6.0, points: 241 });
    if let Some(s) = args.shape {
        t.shape = match s {
            ShapeArg::Gaussian => CurveShape::Gaussian,
            ShapeArg::Rectangular => CurveShape::Rectangular,
            ShapeArg::Both => CurveShape::Both,
        };
    }
    if let Some(g) = args.gamma_max {
        t.gamma_max = g;
    }
    if let Some(p) = args.points {
        t.points = p;
    }
    config.theory = Some(t);
    Ok(config)
}

fn convert(args: &ConvertArgs) -> Result<serde_json::Value, Error> {
    let mut out = serde_json::json!({ "schema": 1, "lambda_m": args.lambda });
    match (args.d, args.beta2) {
        (Some(d), _) => {
            out["d_ps_nm_km"] = d.into();
            out["beta2_s2_per_m"] = units::d_ps_nm_km_to_beta2(d, args.lambda)?.into();
        }
        (None, Some(b)) => {
            out["beta2_s2_per_m"] = b.into();
            out["d_ps_nm_km"] = units::beta2_to_d_ps_nm_km(b, args.lambda)?.into();
        }
        (None, None) if args.width_nm.is_none() => {
            return Err(Error::Config("convert-units needs --d, --beta2 or --width-nm".into()));
        }
        (None, None) => {}
    }
    if let Some(w) = args.width_nm {
        let convention = match args.width_convention {
            Convention::Sigma => units::WidthConvention::Sigma,
            Convention::Fwhm => units::WidthConvention::Fwhm,
        };
        let sigma_nm = convention.to_sigma(w);
        out["sigma_lambda_nm"] = sigma_nm.into();
        out["sigma_omega_rad_s"] = units::sigma_lambda_to_omega(sigma_nm * 1e-9, args.lambda)?.into();
    }
    Ok(out)
}

fn execute(cli: Cli) -> Result<(), Error> {
    let config = match &cli.command {
        Command::ConvertUnits(args) => {
            println!("{}", serde_json::to_string_pretty(&convert(args)?)?);
            return Ok(());
        }
        Command::Simulate(a) => simulate_config(a)?,
        Command::Estimate(a) => estimate_config(a)?,
        Command::MethodA(a) => campaign_config(a, Mode::MethodA)?,
        Command::MethodB(a) => campaign_config(a, Mode::MethodB)?,
        Command::TheoryCurves(a) => theory_config(a)?,
    };
    let run = || fringecd::run(&config);
    let outcome = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    for f in &outcome.files {
        eprintln!("wrote {}", f.display());
    }
    eprintln!("wrote {}", outcome.manifest.display());
    println!("{}", serde_json::to_string_pretty(&outcome.summary)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
