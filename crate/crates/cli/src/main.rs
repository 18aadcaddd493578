use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stabsym_core::generate::{Family, DEFAULT_NOISE};
use stabsym_core::OutputFormat;

mod commands;

#[derive(Parser)]
#[command(name = "stabsym", version, about = "Sample stabilizer circuits with symbolic fault phases")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample measurement outcomes.
    Sample(SampleArgs),
    /// Print every measurement as an XOR of symbols.
    Analyze(InputArgs),
    /// Check the sampler against the reference simulators.
    Verify(VerifyArgs),
    /// Time initialization and sampling on generated layered circuits.
    Bench(BenchArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Circuit file (default: standard input).
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Output file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    io: InputArgs,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = OutputFormat::ZeroOne)]
    format: OutputFormat,
    /// Also write the drawn symbol values, one line per shot (unstable).
    #[arg(long, value_name = "PATH")]
    dump_assignments: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    io: InputArgs,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    /// Circuit families to run.
    #[arg(long, value_delimiter = ',', default_values_t = Family::ALL)]
    families: Vec<Family>,
    /// Qubit counts (each circuit has as many layers as qubits).
    #[arg(long, value_delimiter = ',', default_values_t = [50usize, 100, 200])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// DEPOLARIZE1 probability for family c.
    #[arg(long, default_value_t = DEFAULT_NOISE)]
    noise: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure classes and their exit codes.
pub enum Failure {
    /// Bad input or arguments.
    Usage(String),
    /// Something that should be impossible happened.
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Internal(_) => 2,
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn read_input(path: &Option<PathBuf>) -> Result<String, Failure> {
    match path {
        Some(p) => fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(
            fs::File::create(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Sample(a) => {
            let text = read_input(&a.io.input)?;
            let mut out = open_output(&a.io.out)?;
            let dump = match &a.dump_assignments {
                Some(p) => Some(open_output(&Some(p.clone()))?),
                None => None,
            };
            commands::sample(&text, a.shots as usize, a.seed, a.format, &mut out, dump)?;
            out.flush()?;
        }
        Command::Analyze(a) => {
            let text = read_input(&a.input)?;
            let mut out = open_output(&a.out)?;
            commands::analyze(&text, &mut out)?;
            out.flush()?;
        }
        Command::Verify(a) => {
            let text = read_input(&a.io.input)?;
            let mut out = open_output(&a.io.out)?;
            let ok = commands::verify(&text, a.shots as usize, a.seed, &mut out)?;
            out.flush()?;
            if !ok {
                return Err(Failure::Internal("verification failed".into()));
            }
        }
        Command::Bench(a) => {
            if !(0.0..=1.0).contains(&a.noise) {
                return Err(Failure::Usage(format!("--noise {} outside [0, 1]", a.noise)));
            }
            let mut out = open_output(&a.out)?;
            commands::bench(&a.families, &a.sizes, a.shots as usize, a.seed, a.noise, &mut out)?;
            out.flush()?;
        }
    }
    Ok(())
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
        Err(f) => {
            let (Failure::Usage(msg) | Failure::Internal(msg)) = &f;
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}
