//! `parabolica`: command-line front end for the escape-time experiments.

mod commands;
mod parse;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use parabolica::ComplexValue;
use thiserror::Error;

#[derive(Parser, Debug)]
#[command(
    name = "parabolica",
    version,
    about = "Escape times near parabolic parameters of the Mandelbrot set"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Worker threads; 1 runs sequentially [default: all cores]
    #[arg(long, global = true, env = "PARABOLICA_THREADS", value_parser = parse::positive::<usize>)]
    threads: Option<usize>,
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write output to this file instead of standard output
    #[arg(long, short = 'o', global = true)]
    output: Option<PathBuf>,
    /// Report wall-clock time (stderr; also in JSON run metadata)
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// A parabolic site given by its periods and rotation number.
#[derive(Args, Debug, Clone)]
pub struct SiteArgs {
    /// Period of the parabolic cycle
    #[arg(long, default_value_t = 1, value_parser = parse::positive::<u32>)]
    pub n: u32,
    /// Numerator of the rotation number p/q
    #[arg(long, default_value_t = 1)]
    pub p: i64,
    /// Rotation order q; 1 selects the primitive root
    #[arg(long, default_value_t = 2, value_parser = parse::positive::<u32>)]
    pub q: u32,
    /// Seed for the root, "a+bi" or "a,b" (needed unless n ≤ 2)
    #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
    pub c0: Option<ComplexValue>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Escape time of the critical orbit at a single parameter
    Escape {
        /// Parameter c, "a+bi" or "a,b"
        #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
        c: ComplexValue,
        /// Escape radius
        #[arg(long, default_value_t = 2.0, value_parser = parse::positive_f64)]
        radius: f64,
        /// Iteration cap
        #[arg(long, default_value = "1e8", value_parser = parse::count)]
        cap: u64,
    },
    /// Locate a parabolic site from its periods and rotation number
    Locate {
        #[command(flatten)]
        site: SiteArgs,
    },
    /// Report τ and the multiplier-map consistency check at a site
    Tau {
        #[command(flatten)]
        site: SiteArgs,
    },
    /// Trace an external parameter ray and export its points
    Ray {
        /// External angle p/q in turns
        #[arg(long, value_parser = parse::angle)]
        theta: parabolica::ExternalAngle,
        /// Starting potential
        #[arg(long, default_value_t = 1.0, value_parser = parse::positive_f64)]
        from: f64,
        /// Final potential
        #[arg(long, default_value_t = 1e-6, value_parser = parse::positive_f64)]
        to: f64,
        /// Newton steps per halving of the potential
        #[arg(long, default_value_t = 8, value_parser = parse::positive::<u32>)]
        steps: u32,
    },
    /// Minimum escape time over circles around the four Table 1 sites
    Table1 {
        /// Radii |α|: a list "1e-2,1e-3" or a decade range "1e-1..1e-4"
        #[arg(long, default_value = "1e-1..1e-4", value_parser = parse::alpha_list)]
        alphas: parse::Alphas,
        /// Points per circle
        #[arg(long, default_value_t = 16384, value_parser = parse::positive::<usize>)]
        samples: usize,
        /// Double the samples (from max(samples, 8/|α|)) until the minimum is stable
        #[arg(long)]
        escalate: bool,
        /// Upper limit on samples per circle when escalating
        #[arg(long, default_value_t = 1 << 24, value_parser = parse::positive::<usize>)]
        max_samples: usize,
    },
    /// Escape times along a parameter ray landing at a satellite site
    RayPi {
        #[command(flatten)]
        site: SiteArgs,
        /// Landing angle p/q of the ray
        #[arg(long, value_parser = parse::angle)]
        theta: parabolica::ExternalAngle,
        /// Distances |α| to the site; overrides --count
        #[arg(long, value_parser = parse::alpha_list)]
        alphas: Option<parse::Alphas>,
        /// Number of points at distances 0.1·2^(−k/2)
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Escape radius
        #[arg(long, default_value_t = 2.0, value_parser = parse::positive_f64)]
        radius: f64,
    },
    /// Escape times approaching a primitive root (default c₀ = 1/4 along the real axis)
    PrimitivePi {
        /// Period of the primitive root
        #[arg(long, default_value_t = 1, value_parser = parse::positive::<u32>)]
        n: u32,
        /// Seed for the root (needed unless n = 1)
        #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
        c0: Option<ComplexValue>,
        /// Landing angle p/q of the ray
        #[arg(long, default_value = "0/1", value_parser = parse::angle)]
        theta: parabolica::ExternalAngle,
        /// Distances |α| to the root
        #[arg(long, default_value = "1e-2..1e-6", value_parser = parse::alpha_list)]
        alphas: parse::Alphas,
        /// Escape radius
        #[arg(long, default_value_t = 2.0, value_parser = parse::positive_f64)]
        radius: f64,
    },
    /// Escape-time stability in disks around ray points
    Thm2 {
        #[command(flatten)]
        site: SiteArgs,
        /// Landing angle p/q of the ray
        #[arg(long, value_parser = parse::angle)]
        theta: parabolica::ExternalAngle,
        /// Distances |α| of the ray points
        #[arg(long, default_value = "1e-2..1e-4", value_parser = parse::alpha_list)]
        alphas: parse::Alphas,
        /// Disks have radius exterior_distance/a, 1 < a ≤ 8
        #[arg(long, default_value_t = 8.0, value_parser = parse::positive_f64)]
        a: f64,
        /// Sampled points per disk
        #[arg(long, default_value_t = 64)]
        samples: usize,
        /// Seed of the sampling generator
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Split fixed points, holomorphic indices and lifted phase at c₀ + α
    Gates {
        #[command(flatten)]
        site: SiteArgs,
        /// Perturbation α, "a+bi" or "a,b"
        #[arg(long, value_parser = parse::complex, allow_hyphen_values = true, conflicts_with = "theta")]
        alpha: Option<ComplexValue>,
        /// Take α on the ray of this angle instead
        #[arg(long, value_parser = parse::angle, requires = "distance")]
        theta: Option<parabolica::ExternalAngle>,
        /// Distance |α| of the ray point
        #[arg(long, value_parser = parse::positive_f64)]
        distance: Option<f64>,
    },
    /// Transit time through the gate against the lifted-phase prediction
    Transit {
        #[command(flatten)]
        site: SiteArgs,
        /// Landing angle p/q of the ray
        #[arg(long, value_parser = parse::angle)]
        theta: parabolica::ExternalAngle,
        /// Distances |α| of the ray points
        #[arg(long, default_value = "1e-2..1e-5", value_parser = parse::alpha_list)]
        alphas: parse::Alphas,
    },
    /// The classic sequences −3/4 + it, 1/4 + t and −5/4 − t² + it
    DemoClassic {
        /// Use t = 10^(−k) for k = 1..=depth
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..=8))]
        depth: u32,
        /// Escape radius
        #[arg(long, default_value_t = 2.0, value_parser = parse::positive_f64)]
        radius: f64,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{op}: {source}")]
    Numerical {
        op: &'static str,
        #[source]
        source: parabolica::Error,
    },
    #[error("{op}: {source}")]
    Rejected {
        op: &'static str,
        #[source]
        source: parabolica::Error,
    },
    #[error("cannot write output: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    /// Wraps a library failure, keeping caller mistakes apart from numerics.
    pub fn from_core(op: &'static str, source: parabolica::Error) -> Self {
        if source.is_input_error() {
            CliError::Rejected { op, source }
        } else {
            CliError::Numerical { op, source }
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Numerical { .. } => 2,
            _ => 1,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let started = Instant::now();
    let ctx = commands::Context {
        format: cli.global.format,
        timing: cli.global.timing.then_some(started),
    };
    let text = commands::execute(cli.command, &ctx)?;
    match &cli.global.output {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    if cli.global.timing {
        eprintln!("wall time: {:.3} s", started.elapsed().as_secs_f64());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let outcome = match cli.global.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(cli)),
            Err(e) => Err(CliError::Input(format!(
                "cannot start {n} worker threads: {e}"
            ))),
        },
        None => run(cli),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
