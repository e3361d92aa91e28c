mod commands;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::CliError;

#[derive(Parser)]
#[command(name = "wavecirc", version, about = "Wavelet filter banks as circuits of local gates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum AngleFamily {
    Daubechies,
    Symlet,
    Coiflet,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AngleSource {
    /// Spectral factorization followed by angle recovery.
    Construction,
    /// Numerical design of the moment conditions.
    Design,
    /// The shipped fixture tables.
    Table,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveKind {
    /// Binary: N vanishing wavelet moments, extremal phase.
    Daubechies,
    /// Ternary: N vanishing moments of b+ and b-.
    MaxMoments,
    /// Ternary: low/mid/high band assignment (--type).
    Lmh,
    /// Modified ternary: symmetric multiwavelet (--moments, --penalty).
    Multiwavelet,
    /// Quaternary: vanishing moments of h-, g+ and g- (--moments).
    Moments,
    /// Invertible binary: vanishing moments of g_d and g_r (--moments).
    Biorthogonal,
}

#[derive(Args)]
pub struct Output {
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct CsvOutput {
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write a header row.
    #[arg(long)]
    pub header: bool,
}

#[derive(Args)]
pub struct Optimizer {
    /// Seed of the restart generator; WAVECIRC_SEED overrides it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Circuit angles of a classic binary wavelet.
    Angles {
        #[arg(long, value_enum)]
        family: AngleFamily,
        #[arg(long)]
        order: usize,
        #[arg(long, value_enum, default_value = "construction")]
        source: AngleSource,
        /// Orthogonality tolerance of the angle recovery.
        #[arg(long, default_value_t = wavecirc::construction::DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        opt: Optimizer,
        #[command(flatten)]
        output: Output,
    },
    /// Optimize circuit parameters and write a circuit spec.
    Design {
        #[arg(long)]
        family: String,
        #[arg(long)]
        depth: usize,
        #[arg(long, value_enum)]
        objective: ObjectiveKind,
        #[arg(long = "type")]
        lmh_type: Option<String>,
        #[arg(long)]
        moments: Option<usize>,
        #[arg(long, default_value_t = 0.1)]
        penalty: f64,
        #[command(flatten)]
        opt: Optimizer,
        #[command(flatten)]
        output: Output,
    },
    /// Filter bank of a spec, with moments.
    Filters {
        #[arg(long)]
        spec: PathBuf,
        /// Highest moment order reported.
        #[arg(long, default_value_t = 4)]
        alpha_max: u32,
        #[command(flatten)]
        output: Output,
    },
    /// Defect report; exit 2 if any checked defect exceeds the threshold.
    Verify {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        threshold: f64,
        /// Check wavelet moments of orders below P.
        #[arg(long)]
        moments: Option<u32>,
        /// Check high-frequency moments of orders below Q.
        #[arg(long)]
        hf_moments: Option<u32>,
        /// Roles for --hf-moments; the scaling roles by default.
        #[arg(long, value_delimiter = ',')]
        hf_roles: Vec<String>,
        #[command(flatten)]
        output: Output,
    },
    /// Continuum scaling or wavelet function by the cascade algorithm.
    Cascade {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = wavecirc::analysis::DEFAULT_CASCADE_LEVELS)]
        levels: usize,
        #[arg(long)]
        role: String,
        /// Drop leading and trailing samples with |value| below this.
        #[arg(long, default_value_t = 0.0)]
        threshold: f64,
        #[command(flatten)]
        output: CsvOutput,
    },
    /// Magnitude responses of every sequence.
    Spectrum {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 512)]
        points: usize,
        #[command(flatten)]
        output: CsvOutput,
    },
    /// Multi-scale decomposition of a signal.
    Transform {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        levels: usize,
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Inverse of `transform`.
    Reconstruct {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        output: CsvOutput,
    },
    /// Solve the open-left boundary angles and write a boundary spec.
    Boundary {
        #[arg(long, default_value = "d4")]
        bulk: String,
        #[arg(long)]
        scales: usize,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(serde::Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    detail: &'a str,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Angles {
            family,
            order,
            source,
            tol,
            opt,
            output,
        } => commands::angles(family, order, source, tol, &opt, &output),
        Command::Design {
            family,
            depth,
            objective,
            lmh_type,
            moments,
            penalty,
            opt,
            output,
        } => commands::design(&family, depth, objective, lmh_type.as_deref(), moments, penalty, &opt, &output),
        Command::Filters { spec, alpha_max, output } => commands::filters(&spec, alpha_max, &output),
        Command::Verify {
            spec,
            threshold,
            moments,
            hf_moments,
            hf_roles,
            output,
        } => commands::verify(&spec, threshold, moments, hf_moments, &hf_roles, &output),
        Command::Cascade {
            spec,
            levels,
            role,
            threshold,
            output,
        } => commands::cascade(&spec, levels, &role, threshold, &output),
        Command::Spectrum { spec, points, output } => commands::spectrum(&spec, points, &output),
        Command::Transform {
            spec,
            levels,
            input,
            output,
        } => commands::transform(&spec, levels, &input, &output),
        Command::Reconstruct { spec, input, output } => commands::reconstruct(&spec, &input, &output),
        Command::Boundary { bulk, scales, output } => commands::boundary(&bulk, scales, &output),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(msg) => eprintln!("error: {msg}"),
                CliError::Numerical { code, detail } => {
                    let body = ErrorReport { error: code, detail };
                    eprintln!("{}", serde_json::to_string(&body).unwrap_or_default());
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
