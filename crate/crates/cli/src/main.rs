mod commands;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::CliError;

#[derive(Parser, Debug)]
#[command(name = "entgroup", version, about = "Local-unitary stabilizer and entanglement-group analysis of small quantum states")]
struct Cli {
    /// Relative singular-value cutoff for rank decisions.
    #[arg(long, global = true, env = "ENTGROUP_TOL", default_value_t = 1e-9)]
    tol: f64,
    /// Emit the JSON report instead of a readable summary.
    #[arg(long, global = true)]
    json: bool,
    /// Write output to FILE instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Include a wall-clock timestamp in JSON reports (breaks byte-identical output).
    #[arg(long, global = true)]
    timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stabilizer algebras, entanglement algebras and discrete candidates.
    Analyze {
        /// State file, or `-` for stdin.
        path: String,
        /// Merge parties before analysis, e.g. `A|BC`.
        #[arg(long, value_name = "GROUPING")]
        parties: Option<String>,
    },
    /// Write a named or random state file.
    Catalog {
        #[command(subcommand)]
        entry: CatalogEntry,
    },
    /// Purify a density matrix or ensemble.
    Purify { path: String },
    /// Build the controlled disentangler for an ensemble and certify the product form.
    Disentangle {
        path: String,
        /// Party to factor out (default: the second ensemble party).
        #[arg(long)]
        target: Option<String>,
        /// Vector file with the target state (default |0>).
        #[arg(long, value_name = "FILE")]
        chi: Option<PathBuf>,
    },
    /// Split a two-party stabilizer of an ensemble purification into AC and BC stabilizers.
    Decompose {
        path: String,
        /// Unitary file with the two-party stabilizer.
        #[arg(long, value_name = "FILE")]
        stabilizer: PathBuf,
    },
    /// All Pauli strings that stabilize a qubit state.
    PauliSearch { path: String },
    /// Check whether a local unitary stabilizes a state.
    Verify {
        path: String,
        #[arg(long, value_name = "FILE")]
        unitary: PathBuf,
    },
    /// Structural checks relating the algebras of a three-party purification.
    CheckTheorems { path: String },
}

#[derive(Subcommand, Debug)]
enum CatalogEntry {
    /// a|000> + b|111>
    Ghz {
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, allow_hyphen_values = true)]
        b: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        a_im: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        b_im: f64,
    },
    /// Werner density matrix; carries its ten-line ensemble when p <= 1/3.
    Werner {
        #[arg(long, allow_hyphen_values = true)]
        p: f64,
    },
    /// Ten-line Werner ensemble (p <= 1/3).
    WernerEnsemble {
        #[arg(long, allow_hyphen_values = true)]
        p: f64,
    },
    /// Four-dimensional Werner purification.
    WernerPurification {
        #[arg(long, allow_hyphen_values = true)]
        p: f64,
    },
    /// (|00> + |11>)/sqrt2
    Bell,
    /// Haar-random pure state.
    Random {
        #[command(flatten)]
        fixture: Fixture,
    },
    /// Random density matrix of the given rank.
    RandomDensity {
        #[command(flatten)]
        fixture: Fixture,
        #[arg(long, default_value_t = 2)]
        rank: usize,
    },
    /// Random separable ensemble with Dirichlet weights.
    RandomEnsemble {
        #[command(flatten)]
        fixture: Fixture,
        #[arg(long, default_value_t = 4)]
        lines: usize,
    },
}

#[derive(Args, Debug)]
struct Fixture {
    /// Party list as `label:dim,...`.
    #[arg(long, default_value = "A:2,B:2")]
    parties: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let settings = commands::Settings {
        tol: cli.tol,
        json: cli.json,
        timestamp: cli.timestamp,
    };
    let output = match cli.command {
        Command::Analyze { path, parties } => commands::analyze(&settings, &path, parties.as_deref())?,
        Command::Catalog { entry } => commands::catalog(match entry {
            CatalogEntry::Ghz { a, b, a_im, b_im } => commands::CatalogRequest::Ghz { a, b, a_im, b_im },
            CatalogEntry::Werner { p } => commands::CatalogRequest::Werner(p),
            CatalogEntry::WernerEnsemble { p } => commands::CatalogRequest::WernerEnsemble(p),
            CatalogEntry::WernerPurification { p } => commands::CatalogRequest::WernerPurification(p),
            CatalogEntry::Bell => commands::CatalogRequest::Bell,
            CatalogEntry::Random { fixture } => commands::CatalogRequest::Random {
                parties: fixture.parties,
                seed: fixture.seed,
            },
            CatalogEntry::RandomDensity { fixture, rank } => commands::CatalogRequest::RandomDensity {
                parties: fixture.parties,
                seed: fixture.seed,
                rank,
            },
            CatalogEntry::RandomEnsemble { fixture, lines } => commands::CatalogRequest::RandomEnsemble {
                parties: fixture.parties,
                seed: fixture.seed,
                lines,
            },
        })?,
        Command::Purify { path } => commands::purify(&path)?,
        Command::Disentangle { path, target, chi } => {
            commands::disentangle(&settings, &path, target.as_deref(), chi.as_deref())?
        }
        Command::Decompose { path, stabilizer } => commands::decompose(&settings, &path, &stabilizer)?,
        Command::PauliSearch { path } => commands::pauli_search(&settings, &path)?,
        Command::Verify { path, unitary } => commands::verify(&settings, &path, &unitary)?,
        Command::CheckTheorems { path } => commands::check_theorems(&settings, &path)?,
    };
    match cli.out {
        Some(file) => std::fs::write(&file, output).map_err(|e| CliError::Io(format!("{}: {e}", file.display()))),
        None => {
            print!("{output}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("entgroup: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
