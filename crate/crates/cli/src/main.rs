use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod report;

use commands::export::ExportTarget;
use config::FileConfig;
use report::RunReport;

/// Verification suite, field checks, operator export and spinor simulations
/// for the proper time of a spin-1/2 particle in a weak gravitational field.
#[derive(Parser, Debug)]
#[command(name = "tempo", version)]
struct Cli {
    /// TOML file with defaults for the flags below.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV and metadata output.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Fixed seeds and a single worker thread.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Worker threads for grid transforms.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the symbolic pipeline and check every stage against its fixture.
    Verify(commands::verify::VerifyArgs),
    /// Check a field file against the field equations and the gauge.
    Fields(commands::fields::FieldsArgs),
    /// Evolve a wave packet as described by a scenario file.
    Simulate(commands::simulate::SimulateArgs),
    /// Print a canonical operator in the expression language.
    Export {
        target: ExportTarget,
        /// Keep only the field-free part.
        #[arg(long)]
        flat: bool,
        /// Print the run report instead of the bare expression.
        #[arg(long)]
        json: bool,
    },
}

/// Global settings after layering flags over the config file.
pub struct Globals {
    pub file: FileConfig,
    pub out_dir: PathBuf,
    pub deterministic: bool,
    pub threads: usize,
}

impl Globals {
    fn echo(&self) -> serde_json::Value {
        serde_json::json!({
            "out_dir": self.out_dir,
            "deterministic": self.deterministic,
            "threads": self.threads,
        })
    }
}

fn globals(cli: &Cli) -> Result<Globals, String> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let deterministic = cli.deterministic || file.deterministic.unwrap_or(false);
    let threads = match (deterministic, cli.threads.or(file.threads)) {
        (true, _) => 1,
        (false, Some(0)) => return Err("--threads must be at least 1".into()),
        (false, Some(n)) => n,
        (false, None) => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let out_dir = cli.out_dir.clone().or_else(|| file.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    Ok(Globals { file, out_dir, deterministic, threads })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = match &cli.command {
        Command::Verify(_) => "verify",
        Command::Fields(_) => "fields",
        Command::Simulate(_) => "simulate",
        Command::Export { .. } => "export",
    };
    let g = match globals(&cli) {
        Ok(g) => g,
        Err(e) => return emit(RunReport::new(name, serde_json::Value::Null).fail_with(e, 2), true),
    };
    // A second initialization only happens in tests; the first pool stands.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(g.threads).build_global();

    match &cli.command {
        Command::Verify(a) => emit(commands::verify::run(a, &g), true),
        Command::Fields(a) => emit(commands::fields::run(a, &g), true),
        Command::Simulate(a) => emit(commands::simulate::run(a, &g), true),
        Command::Export { target, flat, json } => {
            let (report, text) = commands::export::run(*target, *flat, &g);
            if !*json {
                if let Some(t) = text {
                    println!("{t}");
                }
            }
            emit(report, *json)
        }
    }
}

/// Prints the report (stdout, JSON) and its summary (stderr).
fn emit(report: RunReport, json: bool) -> ExitCode {
    let report = report.finish();
    if let Err(e) = report.validate() {
        eprintln!("internal error: malformed report: {e}");
        return ExitCode::from(1);
    }
    if json {
        match serde_json::to_string_pretty(&report) {
            Ok(s) => println!("{s}"),
            Err(e) => eprintln!("cannot serialize report: {e}"),
        }
    }
    let _ = report.summarize(std::io::stderr().lock());
    ExitCode::from(report.exit_code as u8)
}
