use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;
mod selfcheck;

use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "teig", version, about = "Transmission eigenvalue laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct ProfileArg {
    /// Coefficient profile (JSON).
    #[arg(long)]
    pub profile: PathBuf,
}

/// A disk medium, from a profile file or given inline.
#[derive(Args, Debug, Clone)]
pub struct SpectrumArgs {
    /// Coefficient profile (JSON).
    #[arg(long, required_unless_present_all = ["sigma1", "sigma2"])]
    pub profile: Option<PathBuf>,
    #[arg(long, conflicts_with = "profile", requires = "sigma2")]
    pub sigma1: Option<f64>,
    #[arg(long, conflicts_with = "profile", requires = "sigma1")]
    pub sigma2: Option<f64>,
    #[arg(long, default_value_t = 1.0, conflicts_with = "profile")]
    pub radius: f64,
    #[arg(long, default_value_t = 1.0, conflicts_with = "profile")]
    pub a0: f64,
    /// Upper end of the spectral window; defaults to the profile's `t_max`.
    #[arg(long, visible_alias = "tmax")]
    pub t_max: Option<f64>,
    /// Eigenvalues with |λ| below this are excluded; defaults to the
    /// profile's `lambda_floor`, else 1.
    #[arg(long)]
    pub lambda_floor: Option<f64>,
    /// Where assembled spectra are cached; defaults to the output directory.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the Weyl constant c of N(t) ~ c t^{d/2}.
    Weyl {
        #[command(flatten)]
        profile: ProfileArg,
        #[arg(long, default_value_t = 16)]
        quad_points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assemble the disk spectrum; `.json` outputs use the spectrum schema,
    /// anything else is written as CSV.
    DiskEigs {
        #[command(flatten)]
        spectrum: SpectrumArgs,
        #[arg(long, default_value = "eigs.csv")]
        out: PathBuf,
    },
    /// Compare the counting function with c t^{d/2}.
    CountingFit {
        #[command(flatten)]
        spectrum: SpectrumArgs,
        /// Log-spaced sample points over [t_max/100, t_max].
        #[arg(long, default_value_t = 41)]
        points: usize,
        /// Allowed deviation of the top-decade slope from d/2.
        #[arg(long, default_value_t = 0.02)]
        slope_tol: f64,
        /// Allowed deviation of N(t_max)/(c t_max^{d/2}) from 1.
        #[arg(long, default_value_t = 0.10)]
        ratio_tol: f64,
        #[arg(long, default_value = "fit.csv")]
        out: PathBuf,
    },
    /// Largest |Im λ|/|λ| per dyadic shell of the spectrum.
    WedgeReport {
        #[command(flatten)]
        spectrum: SpectrumArgs,
        /// Required bound on the top shell.
        #[arg(long, default_value_t = 0.2)]
        bound: f64,
        #[arg(long, default_value = "wedge.csv")]
        out: PathBuf,
    },
    /// Norms of T_λ(f, g) along λ = i t.
    ResolventScan {
        #[command(flatten)]
        profile: ProfileArg,
        #[arg(long, default_value = "2:4", value_parser = config::parse_range::<f64>)]
        t_decades: (f64, f64),
        #[arg(long, default_value_t = 5)]
        points: usize,
        #[arg(long, default_value = "0,5", value_parser = config::parse_modes)]
        modes: config::Modes,
        #[arg(long = "N", default_value_t = 256)]
        n: usize,
        #[arg(long, default_value = "resolvent.csv")]
        out: PathBuf,
    },
    /// Eigenvalues of the discretised pencil inside a circle.
    CauchyEig {
        #[command(flatten)]
        profile: ProfileArg,
        #[arg(long, default_value_t = 0)]
        mode: u32,
        #[arg(long, allow_hyphen_values = true)]
        center_re: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        center_im: f64,
        #[arg(long)]
        radius: f64,
        #[arg(long = "N", default_value_t = 256)]
        n: usize,
        #[arg(long, default_value = "cauchy_eigs.csv")]
        out: PathBuf,
    },
    /// Random-sample suite for the half-space symbol.
    Halfspace {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// trace_diag(t) t^{2k+2-d/2} against its limit constant.
    TraceCheck {
        #[command(flatten)]
        profile: ProfileArg,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = teig::trace_lab::DEFAULT_T_STAR)]
        t_star: f64,
        /// Fail (exit 2) when |ratio - 1| exceeds this.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Double norms and traces of T_{α,t} T_{β,t} over t.
    HsScan {
        #[command(flatten)]
        profile: ProfileArg,
        #[arg(long, default_value = "2:3", value_parser = config::parse_range::<f64>)]
        t_decades: (f64, f64),
        #[arg(long, default_value_t = 3)]
        points: usize,
        #[arg(long, default_value = "0:8", value_parser = config::parse_modes)]
        modes: config::Modes,
        #[arg(long = "N", default_value_t = 128)]
        n: usize,
        #[arg(long, default_value_t = teig::trace_lab::DEFAULT_T_STAR)]
        t_star: f64,
        /// Required bound on the per-mode log-log slope of the double norm.
        #[arg(long, default_value_t = -2.3, allow_hyphen_values = true)]
        max_slope: f64,
        #[arg(long, default_value = "hs.csv")]
        out: PathBuf,
    },
    /// Run the fast property suite.
    Selfcheck,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("TEIG_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("TEIG_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size the worker pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Weyl {
            profile,
            quad_points,
            out,
        } => commands::weyl(&profile, quad_points, out.as_deref()),
        Command::DiskEigs { spectrum, out } => commands::disk_eigs(&spectrum, &out),
        Command::CountingFit {
            spectrum,
            points,
            slope_tol,
            ratio_tol,
            out,
        } => commands::counting_fit(&spectrum, points, slope_tol, ratio_tol, &out),
        Command::WedgeReport { spectrum, bound, out } => commands::wedge_report(&spectrum, bound, &out),
        Command::ResolventScan {
            profile,
            t_decades,
            points,
            modes,
            n,
            out,
        } => commands::resolvent_scan(&profile, t_decades, points, &modes.0, n, &out),
        Command::CauchyEig {
            profile,
            mode,
            center_re,
            center_im,
            radius,
            n,
            out,
        } => commands::cauchy_eig(&profile, mode, (center_re, center_im), radius, n, &out),
        Command::Halfspace {
            samples,
            seed,
            tol,
            out,
        } => commands::halfspace(samples, seed, tol, out.as_deref()),
        Command::TraceCheck {
            profile,
            t,
            t_star,
            tol,
            out,
        } => commands::trace_check(&profile, t, t_star, tol, out.as_deref()),
        Command::HsScan {
            profile,
            t_decades,
            points,
            modes,
            n,
            t_star,
            max_slope,
            out,
        } => commands::hs_scan(&profile, t_decades, points, &modes.0, n, t_star, max_slope, &out),
        Command::Selfcheck => selfcheck::run(),
    }
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("teig: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
