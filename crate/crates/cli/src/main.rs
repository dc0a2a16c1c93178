//! `vqlab`: optimal quantization experiments from the command line.

mod commands;
mod config;
mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use config::{read_config_file, ExperimentConfig};
use output::Sink;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn precondition(msg: impl Into<String>) -> Self {
        CliError { code: 2, message: msg.into() }
    }

    pub fn io(msg: impl Into<String>) -> Self {
        CliError { code: 1, message: msg.into() }
    }
}

impl From<vqlab_core::Error> for CliError {
    fn from(e: vqlab_core::Error) -> Self {
        let code = match e {
            vqlab_core::Error::NonConvergence(_) => 3,
            vqlab_core::Error::Io(_) => 1,
            _ => 2,
        };
        CliError { code, message: e.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    /// L^r-optimal codebooks for each n
    Quantize,
    /// High-resolution constants Q_r and Q_{r,s}
    Constants,
    /// L^s rate tables of L^r-optimal codebooks
    Mismatch,
    /// The explicit sequence that is L^r-optimal but not L^s-rate optimal
    Counterexample,
    /// Quantization cubature on the test battery
    Quad,
    /// Product quantizers of Brownian motion
    Wiener,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Quantize => "quantize",
            Command::Constants => "constants",
            Command::Mismatch => "mismatch",
            Command::Counterexample => "counterexample",
            Command::Quad => "quad",
            Command::Wiener => "wiener",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "vqlab", version, about = "Optimal vector quantization experiments")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// key = value or JSON file; flags override its entries
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// density id, e.g. `normal`, `pareto(b=3)`, `normal(d=2,rho=0.3)`
    #[arg(long)]
    density: Option<String>,
    #[arg(long)]
    r: Option<String>,
    /// one value or a comma-separated list
    #[arg(long)]
    s: Option<String>,
    /// `8`, `4,8,16` or `a..b` (doubling from a up to b)
    #[arg(long)]
    n: Option<String>,
    /// auto | exact | lloyd-mc | clvq
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// euclidean | sup
    #[arg(long)]
    norm: Option<String>,
    /// output directory
    #[arg(long, short)]
    out: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    #[arg(long)]
    restarts: Option<String>,
    #[arg(long)]
    budget_per_point: Option<String>,
    #[arg(long)]
    eval_samples: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    #[arg(long)]
    paths: Option<String>,
    #[arg(long)]
    grid: Option<String>,
    /// comma-separated: sq, integral, exp-integral, sup, terminal
    #[arg(long)]
    functionals: Option<String>,
}

impl Cli {
    fn overrides(&self) -> BTreeMap<String, String> {
        let pairs = [
            ("density", &self.density),
            ("r", &self.r),
            ("s", &self.s),
            ("n", &self.n),
            ("method", &self.method),
            ("seed", &self.seed),
            ("norm", &self.norm),
            ("out", &self.out),
            ("tol", &self.tol),
            ("max_iter", &self.max_iter),
            ("restarts", &self.restarts),
            ("budget_per_point", &self.budget_per_point),
            ("eval_samples", &self.eval_samples),
            ("samples", &self.samples),
            ("theta", &self.theta),
            ("horizon", &self.horizon),
            ("paths", &self.paths),
            ("grid", &self.grid),
            ("functionals", &self.functionals),
        ];
        pairs.into_iter().filter_map(|(k, v)| v.clone().map(|v| (k.to_string(), v))).collect()
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply(&read_config_file(path)?)?;
    }
    cfg.apply(&cli.overrides())?;
    let mut sink = Sink::new(Path::new(&cfg.out))?;
    let outcome = match cli.command {
        Command::Quantize => commands::quantize(&cfg, &mut sink),
        Command::Constants => commands::constants_cmd(&cfg, &mut sink),
        Command::Mismatch => commands::mismatch(&cfg, &mut sink),
        Command::Counterexample => commands::counterexample(&cfg, &mut sink),
        Command::Quad => commands::quad(&cfg, &mut sink),
        Command::Wiener => commands::wiener(&cfg, &mut sink),
    }?;
    println!("{}", serde_json::to_string_pretty(&outcome.summary).unwrap_or_default());
    for path in &sink.written {
        eprintln!("wrote {}", path.display());
    }
    if !outcome.non_converged.is_empty() {
        return Err(CliError {
            code: 3,
            message: format!("{} did not converge: {}", cli.command.name(), outcome.non_converged.join("; ")),
        });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vqlab {}: {}", cli.command.name(), e.message);
            ExitCode::from(e.code)
        }
    }
}
