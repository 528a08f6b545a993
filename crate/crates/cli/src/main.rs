mod commands;
mod demo;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "qmn", version, about = "Quantum Markov network verification and decomposition")]
struct Cli {
    /// Largest total Hilbert-space dimension for dense pipelines.
    #[arg(long, global = true, env = "QMN_DENSE_CAP", default_value_t = qmn_core::model::DEFAULT_DENSE_CAP)]
    dense_cap: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum PartitionArg {
    Spanning,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum CumulantSource {
    LogGibbs,
    Hamiltonian,
}

#[derive(Subcommand)]
enum Command {
    /// Check I(A:C|B) <= tol over the shielding partitions of the model's Gibbs state.
    VerifyMarkov {
        model: PathBuf,
        /// Override the model's inverse temperature.
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = qmn_core::markov::DEFAULT_CMI_TOL)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = PartitionArg::Spanning)]
        partitions: PartitionArg,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the graph in DOT format, worst partition highlighted.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Cumulant expansion of the Hamiltonian or of log of the Gibbs state.
    Cumulants {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = CumulantSource::LogGibbs)]
        of: CumulantSource,
        /// Largest support listed (and counted in the Parseval gap).
        #[arg(long)]
        max_support: Option<usize>,
        /// Relative off-clique mass tolerance.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Check clique support against these edges (e.g. 1-2,2-3) instead of the model graph.
        #[arg(long, value_delimiter = ',', value_parser = commands::parse_edge)]
        edges: Option<Vec<(u32, u32)>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// LocalCommuting, ShieldCommutingOnly or NotShieldCommuting.
    Classify {
        model: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Commuting two-body decomposition of log ρ on a triangle-free graph.
    Decompose {
        model: PathBuf,
        #[arg(long, default_value_t = qmn_core::decompose::DEFAULT_TOL)]
        tol: f64,
        /// Decomposed model file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Certificate file (stdout otherwise).
        #[arg(long)]
        cert: Option<PathBuf>,
    },
    /// Built-in scenarios with one PASS/FAIL line per claim.
    Demo {
        #[command(subcommand)]
        which: demo::DemoArg,
    },
    /// Write a built-in model family as a model file.
    Generate {
        #[command(subcommand)]
        family: commands::Family,
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cap = cli.dense_cap;
    let result = match cli.command {
        Command::VerifyMarkov { model, beta, tol, partitions, out, dot } => {
            commands::verify_markov(&model, beta, tol, partitions, out.as_deref(), dot.as_deref(), cap)
        }
        Command::Cumulants { model, of, max_support, tol, edges, out } => {
            commands::cumulants(&model, of, max_support, tol, edges, out.as_deref(), cap)
        }
        Command::Classify { model, tol, out, dot } => commands::classify(&model, tol, out.as_deref(), dot.as_deref(), cap),
        Command::Decompose { model, tol, out, cert } => commands::decompose(&model, tol, out.as_deref(), cert.as_deref(), cap),
        Command::Demo { which } => demo::run(which, cap),
        Command::Generate { family, out } => commands::generate(family, out.as_deref()),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
