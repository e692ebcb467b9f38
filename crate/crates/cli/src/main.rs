//! `spinterface` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 domain error,
//! 4 pulse-sequence parse or validation error.

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spinterface::dynamics::PulseModel;

use commands::{EsrArgs, FitArgs, OdmrArgs, RunArgs, ZeemanArgs};
use config::Config;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Domain(String),
    Sequence(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Sequence(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Domain(m) => write!(f, "{m}"),
            CliError::Sequence(m) => write!(f, "{m}"),
        }
    }
}

impl From<spinterface::Error> for CliError {
    fn from(e: spinterface::Error) -> Self {
        match e {
            spinterface::Error::Sequence(s) => CliError::Sequence(s.to_string()),
            other => CliError::Domain(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "spinterface", version, about = "Spin-qubit spectra, optical pumping dynamics, pulse sequences and fits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file (key = value lines with [spin], [optical] and [dynamics] sections)
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory; overrides output_dir from the config
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Energy levels and transitions at one static field
    Levels {
        #[command(flatten)]
        common: Common,
        /// Static field magnitude in mT
        #[arg(long, default_value_t = 0.0)]
        field_mt: f64,
        /// Field direction in the lab frame as x,y,z
        #[arg(long, default_value = "0,0,1", allow_hyphen_values = true)]
        axis: String,
    },
    /// Continuous-wave ODMR contrast map over field and frequency
    Odmr {
        #[command(flatten)]
        common: Common,
        /// Lowest field, mT
        #[arg(long, default_value_t = 0.0)]
        field_min: f64,
        /// Highest field, mT
        #[arg(long, default_value_t = 30.0)]
        field_max: f64,
        /// Number of field points
        #[arg(long, default_value_t = 31)]
        field_steps: usize,
        /// Lowest microwave frequency, GHz
        #[arg(long, default_value_t = 3.0)]
        freq_min: f64,
        /// Highest microwave frequency, GHz
        #[arg(long, default_value_t = 4.3)]
        freq_max: f64,
        /// Number of frequency points
        #[arg(long, default_value_t = 1301)]
        freq_steps: usize,
        /// Lorentzian FWHM, MHz
        #[arg(long, default_value_t = 10.0)]
        linewidth_mhz: f64,
        /// Also write an SVG heatmap
        #[arg(long)]
        svg: bool,
    },
    /// Field-swept cw-ESR spectrum at fixed microwave frequency
    Esr {
        #[command(flatten)]
        common: Common,
        /// Microwave frequency, GHz
        #[arg(long, default_value_t = 9.4)]
        freq_ghz: f64,
        /// Lowest field, mT
        #[arg(long, default_value_t = 0.0)]
        field_min: f64,
        /// Highest field, mT
        #[arg(long, default_value_t = 800.0)]
        field_max: f64,
        /// Number of field points
        #[arg(long, default_value_t = 1601)]
        field_steps: usize,
        /// Line FWHM, mT
        #[arg(long, default_value_t = 2.0)]
        linewidth_mt: f64,
        /// Use a Lorentzian instead of a Gaussian line
        #[arg(long)]
        lorentzian: bool,
        /// Write the field derivative, as recorded with field modulation
        #[arg(long)]
        derivative: bool,
        /// Powder average over this many orientations; 0 uses --direction
        #[arg(long, default_value_t = 0)]
        powder: usize,
        /// Field direction in the molecular frame as x,y,z for single-crystal spectra
        #[arg(long, default_value = "0,0,1", allow_hyphen_values = true)]
        direction: String,
        /// Also write an SVG line plot
        #[arg(long)]
        svg: bool,
    },
    /// Zero-phonon emission in a field and its difference from zero field
    ZeemanPl {
        #[command(flatten)]
        common: Common,
        /// Field along the molecular axis, T
        #[arg(long, default_value_t = 9.0)]
        field_t: f64,
        /// Shortest wavelength, nm; defaults to the ZPL minus a window covering the Zeeman shift
        #[arg(long)]
        wl_min: Option<f64>,
        /// Longest wavelength, nm; defaults to the ZPL plus the same window
        #[arg(long)]
        wl_max: Option<f64>,
        /// Number of wavelength points
        #[arg(long, default_value_t = 2001)]
        wl_steps: usize,
        /// Lorentzian FWHM of each emission line, GHz
        #[arg(long, default_value_t = 10.0)]
        linewidth_ghz: f64,
        /// Also write an SVG line plot
        #[arg(long)]
        svg: bool,
    },
    /// Execute a pulse-sequence file against the configured model
    Run {
        /// Pulse-sequence file
        sequence: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Record the PL trace of every measured laser pulse
        #[arg(long)]
        record_pl: bool,
        /// How pi and pi/2 pulses are applied; overrides dynamics.pulse_model
        #[arg(long, value_enum)]
        pulse_model: Option<PulseArg>,
        /// Gaussian noise as a fraction of the largest signal; overrides dynamics.noise_fraction
        #[arg(long)]
        noise_fraction: Option<f64>,
        /// Also write an SVG plot per readout
        #[arg(long)]
        svg: bool,
    },
    /// Fit a model to two columns of a CSV file
    Fit {
        /// Data file in the CSV dialect written by the other subcommands
        data: PathBuf,
        /// exp_decay, exp_recovery, lorentzian_sum(k), damped_cosine or power_law
        #[arg(short, long)]
        model: String,
        /// Column used as x; defaults to the first
        #[arg(long)]
        x: Option<String>,
        /// Column used as y; defaults to the second
        #[arg(long)]
        y: Option<String>,
        /// Output directory
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PulseArg {
    Ideal,
    Finite,
}

fn load(common: &Common) -> Result<(Config, PathBuf), CliError> {
    let config = Config::load(&common.config)?;
    let out = common.out.clone().unwrap_or_else(|| config.output_dir.clone());
    Ok((config, out))
}

fn dispatch(command: Command) -> Result<String, CliError> {
    let start = Instant::now();
    let (name, config, out, report) = match command {
        Command::Levels { common, field_mt, axis } => {
            let (c, out) = load(&common)?;
            let r = commands::levels(&c, field_mt, &axis)?;
            ("levels", Some(c), out, r)
        }
        Command::Odmr { common, field_min, field_max, field_steps, freq_min, freq_max, freq_steps, linewidth_mhz, svg } => {
            let (c, out) = load(&common)?;
            let args = OdmrArgs {
                fields: commands::grid(field_min, field_max, field_steps, "field")?,
                freqs: commands::grid(freq_min, freq_max, freq_steps, "frequency")?,
                linewidth_mhz,
                svg,
            };
            let r = commands::odmr(&c, &args)?;
            ("odmr", Some(c), out, r)
        }
        Command::Esr {
            common,
            freq_ghz,
            field_min,
            field_max,
            field_steps,
            linewidth_mt,
            lorentzian,
            derivative,
            powder,
            direction,
            svg,
        } => {
            let (c, out) = load(&common)?;
            let args = EsrArgs {
                freq_ghz,
                fields: commands::grid(field_min, field_max, field_steps, "field")?,
                linewidth_mt,
                lorentzian,
                derivative,
                powder,
                direction,
                svg,
            };
            let r = commands::esr(&c, &args)?;
            ("esr", Some(c), out, r)
        }
        Command::ZeemanPl { common, field_t, wl_min, wl_max, wl_steps, linewidth_ghz, svg } => {
            let (c, out) = load(&common)?;
            let zpl = c.optical.zpl_wavelength_nm;
            // window of twice the Zeeman shift in wavelength, and at least 2 nm
            let shift_ghz = commands::zeeman_ghz_per_t(c.sys.g()) * field_t.abs() + c.sys.d();
            let window = (2.0 * zpl * zpl * shift_ghz / 2.99792458e8).max(2.0);
            let args = ZeemanArgs {
                field_t,
                wavelengths: commands::grid(
                    wl_min.unwrap_or(zpl - window),
                    wl_max.unwrap_or(zpl + window),
                    wl_steps,
                    "wavelength",
                )?,
                linewidth_ghz,
                svg,
            };
            let r = commands::zeeman_pl(&c, &args)?;
            ("zeeman-pl", Some(c), out, r)
        }
        Command::Run { sequence, common, record_pl, pulse_model, noise_fraction, svg } => {
            let (mut c, out) = load(&common)?;
            if let Some(p) = pulse_model {
                c.pulse_model = match p {
                    PulseArg::Ideal => PulseModel::Ideal,
                    PulseArg::Finite => PulseModel::Finite,
                };
            }
            if let Some(n) = noise_fraction {
                if !(n >= 0.0 && n.is_finite()) {
                    return Err(CliError::Config(format!("--noise-fraction must be non-negative, got {n}")));
                }
                c.noise_fraction = n;
            }
            let r = commands::run(&c, &RunArgs { sequence, record_pl, svg })?;
            ("run", Some(c), out, r)
        }
        Command::Fit { data, model, x, y, out } => {
            let r = commands::fit(&FitArgs { data, model, x, y })?;
            ("fit", None, out, r)
        }
    };
    let manifest = commands::emit(&out, name, config.as_ref(), &report, start.elapsed().as_secs_f64())?;
    Ok(format!("{}wrote {} file(s) and {}\n", report.summary, report.files.len(), manifest.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("spinterface: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
