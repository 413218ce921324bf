use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use rxo::shell::{self, Format, Session};

/// An object-oriented data language on a relational machine.
#[derive(Parser)]
#[command(name = "rxo", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Table,
    Tsv,
}

impl From<OutputFormat> for Format {
    fn from(format: OutputFormat) -> Format {
        match format {
            OutputFormat::Table => Format::Table,
            OutputFormat::Tsv => Format::Tsv,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Interactive session; statements end with `;`.
    Repl {
        /// Database file (defaults to $RXO_DB); created on first save.
        #[arg(long, env = "RXO_DB")]
        db: PathBuf,
        /// Do not snapshot after every successful mutating statement.
        #[arg(long)]
        no_autosave: bool,
        #[arg(long, value_enum, default_value = "table")]
        format: OutputFormat,
    },
    /// Runs a script of statements against the database.
    Run {
        script: PathBuf,
        #[arg(long, env = "RXO_DB")]
        db: PathBuf,
    },
    /// Executes one statement and prints its result.
    Query {
        statement: String,
        #[arg(long, env = "RXO_DB")]
        db: PathBuf,
        #[arg(long, value_enum, default_value = "table")]
        format: OutputFormat,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Repl { db, no_autosave, format } => {
            match Session::open(&db, !no_autosave, format.into()) {
                Ok(mut session) => {
                    let stdin = std::io::stdin();
                    let mut input = BufReader::new(stdin.lock());
                    let mut out = std::io::stdout();
                    match shell::repl(&mut session, &mut input, &mut out, true) {
                        Ok(()) => 0,
                        Err(err) => {
                            eprintln!("error: {err}");
                            1
                        }
                    }
                }
                Err(err) => {
                    eprintln!("error: {err}");
                    1
                }
            }
        }
        Command::Run { script, db } => shell::run_script(&script, &db, false),
        Command::Query { statement, db, format } => {
            match Session::open(&db, false, format.into()) {
                Ok(mut session) => {
                    let mut out = std::io::stdout();
                    match shell::run_query(&mut session, &statement, &mut out) {
                        Ok(()) => match session.save() {
                            Ok(()) => 0,
                            Err(err) => {
                                eprintln!("error: {err}");
                                1
                            }
                        },
                        Err(err) => {
                            eprintln!("error: {err}");
                            1
                        }
                    }
                }
                Err(err) => {
                    eprintln!("error: {err}");
                    1
                }
            }
        }
    };
    ExitCode::from(code as u8)
}
