mod check;
mod errors;
mod run;
mod simplify;
mod termination;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use blockcheck::parser::DEFAULT_MODE;
use blockcheck::{parse_program, parse_query, Atom, Program};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Mode, type, termination and error-freedom checks for logic programs with
/// block declarations, and an engine to run them.
#[derive(Parser, Debug)]
#[command(name = "blockcheck", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the permutation conditions, input-linearity and input selectability.
    Check(check::CheckArgs),
    /// Try the three termination approaches.
    VerifyTermination(termination::TerminationArgs),
    /// Certify that arithmetic built-ins cannot raise instantiation or type errors.
    VerifyErrors(errors::ErrorsArgs),
    /// Print the program with block declarations that are provably unnecessary removed.
    Simplify(simplify::SimplifyArgs),
    /// Execute a query.
    Run(run::RunArgs),
    /// Analyse and exercise every program of a corpus.
    CorpusTest(corpus_test::CorpusArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

/// Options shared by the per-program subcommands.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Program file.
    pub file: PathBuf,
    /// Mode name; defaults to the first declared mode.
    #[arg(long, conflicts_with = "all_modes")]
    pub mode: Option<String>,
    /// Analyse every declared mode.
    #[arg(long)]
    pub all_modes: bool,
    /// Query to check along with the program.
    #[arg(long)]
    pub query: Option<String>,
    /// Do not accept repeated head-input variables via waivers.
    #[arg(long)]
    pub no_waivers: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_LIMIT: u8 = 3;

/// Invalid input: unreadable file, syntax error, unknown mode or option value.
#[derive(Debug)]
pub struct InputError(pub String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

pub fn load(path: &Path) -> Result<Program, InputError> {
    let src = std::fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    parse_program(&src).map_err(|e| InputError(format!("{}:{e}", path.display())))
}

pub fn declared_modes(prog: &Program) -> Vec<String> {
    let ms: Vec<String> = prog.mode_names().cloned().collect();
    if ms.is_empty() {
        vec![DEFAULT_MODE.to_string()]
    } else {
        ms
    }
}

/// The modes selected by `--mode` / `--all-modes`.
pub fn select_modes(prog: &Program, mode: Option<&str>, all: bool) -> Result<Vec<String>, InputError> {
    let declared = declared_modes(prog);
    if all {
        return Ok(declared);
    }
    match mode {
        None => Ok(vec![declared[0].clone()]),
        Some(m) if declared.iter().any(|d| d == m) => Ok(vec![m.to_string()]),
        Some(m) => Err(InputError(format!("unknown mode `{m}` (declared: {})", declared.join(", ")))),
    }
}

/// Parses a command-line query; blank or `true` is the empty query.
pub fn parse_query_arg(s: &str) -> Result<Vec<Atom>, InputError> {
    match s.trim().trim_end_matches('.').trim() {
        "" | "true" => Ok(Vec::new()),
        q => parse_query(q).map_err(|e| InputError(format!("query: {e}"))),
    }
}

pub fn query_arg(q: Option<&str>) -> Result<Option<Vec<Atom>>, InputError> {
    q.map(parse_query_arg).transpose()
}

/// Queries for `mode`: the one given on the command line, else those stored in the file.
pub fn queries_for(prog: &Program, mode: &str, given: &Option<Vec<Atom>>) -> Vec<Vec<Atom>> {
    match given {
        Some(q) => vec![q.clone()],
        None => prog.queries_for(mode).map(|q| q.to_vec()).collect(),
    }
}

/// Runs `f` for each item on its own thread, keeping the input order.
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    std::thread::scope(|s| {
        let handles: Vec<_> = items.iter().map(|it| s.spawn(|| f(it))).collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    })
}

pub fn print_json<T: Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("reports serialize"));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check(a) => check::cmd(a),
        Command::VerifyTermination(a) => termination::cmd(a),
        Command::VerifyErrors(a) => errors::cmd(a),
        Command::Simplify(a) => simplify::cmd(a),
        Command::Run(a) => run::cmd(a),
        Command::CorpusTest(a) => corpus_test::cmd(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(InputError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
