//! `deformkit`: reproducible numerical experiments on noncommutative tori,
//! their finite coverings and the Moyal plane.

mod config;
mod experiments;
mod report;

use clap::Parser;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use config::{ConfigError, ExperimentConfig, Format, Settings};
use report::Report;

#[derive(Parser, Debug)]
#[command(name = "deformkit", version, about = "Numerical checks for noncommutative tori, coverings and the Moyal plane")]
struct Cli {
    /// torus-check, covering-verify, moyal-verify, special-decay, delta-decay or trace-compare
    command: Option<String>,
    /// File of `key = value` lines; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Deformation parameter (torus entries, covering base, or Moyal θ)
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// Torus dimension for torus-check
    #[arg(long)]
    n: Option<String>,
    /// Covering degrees, comma separated
    #[arg(long)]
    k: Option<String>,
    /// Grid points per axis
    #[arg(long = "M")]
    points: Option<String>,
    /// Grid extent
    #[arg(long = "L")]
    extent: Option<String>,
    /// Fourier cutoff
    #[arg(long)]
    cutoff: Option<String>,
    /// Tower factors p_1,...,p_d (may be empty)
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Gaussian width of the default input
    #[arg(long)]
    sigma: Option<String>,
    /// Separations |Δ|, comma separated
    #[arg(long)]
    deltas: Option<String>,
    /// Tower level for delta-decay
    #[arg(long)]
    level: Option<String>,
    /// Random trials for torus-check
    #[arg(long)]
    trials: Option<String>,
    /// Power-iteration steps for operator norm estimates
    #[arg(long)]
    probes: Option<String>,
    /// Report file (stdout when absent)
    #[arg(long)]
    output: Option<String>,
    /// csv, json or text-table
    #[arg(long)]
    format: Option<String>,
    /// Write a matplotlib script plotting the CSV report
    #[arg(long = "plot-script")]
    plot_script: Option<String>,
    /// Grid function in MOYGRID1 format replacing the default input
    #[arg(long)]
    input: Option<String>,
}

fn settings(cli: Cli) -> Result<Settings, ConfigError> {
    let mut s = match &cli.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    for (key, value) in [
        ("command", cli.command),
        ("theta", cli.theta),
        ("n", cli.n),
        ("k", cli.k),
        ("M", cli.points),
        ("L", cli.extent),
        ("cutoff", cli.cutoff),
        ("p", cli.p),
        ("seed", cli.seed),
        ("sigma", cli.sigma),
        ("deltas", cli.deltas),
        ("level", cli.level),
        ("trials", cli.trials),
        ("probes", cli.probes),
        ("output", cli.output),
        ("format", cli.format),
        ("plot-script", cli.plot_script),
        ("input", cli.input),
    ] {
        s.set_flag(key, value);
    }
    Ok(s)
}

fn thread_pool() -> Result<(), ConfigError> {
    let Ok(raw) = std::env::var("DEFORMKIT_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t >= 1)
        .ok_or_else(|| ConfigError(format!("DEFORMKIT_THREADS: expected a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| ConfigError(format!("DEFORMKIT_THREADS: {e}")))
}

fn emit<W: Write>(report: &Report, format: Format, mut w: W) -> io::Result<()> {
    match format {
        Format::Csv => report.write_csv(&mut w).map_err(io::Error::other)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &report.to_json())?;
            writeln!(w)?;
        }
        Format::TextTable => w.write_all(report.text_table().as_bytes())?,
    }
    w.flush()
}

fn write_outputs(cfg: &ExperimentConfig, report: &Report) -> io::Result<()> {
    match &cfg.output {
        None => emit(report, cfg.format, io::stdout().lock()),
        Some(path) => {
            emit(report, cfg.format, BufWriter::new(File::create(path)?))?;
            print!("{}", report.text_table());
            if let Some(script) = &cfg.plot_script {
                if let Some(text) = report.plot_script(path) {
                    std::fs::write(script, text)?;
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match settings(cli).and_then(|s| ExperimentConfig::from_settings(&s)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = thread_pool() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let report = match experiments::run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Err(e) = write_outputs(&cfg, &report) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(2);
    }
    if report.all_passed() {
        return ExitCode::SUCCESS;
    }
    for c in report.checks.iter().filter(|c| !c.passed) {
        eprintln!("invariant violated: {}: {}", c.name, c.detail);
    }
    ExitCode::from(3)
}
