//! Command-line front end: load a directory of CSV tables, parse a pipeline
//! script, then either run it in memory or print the SQL it compiles to.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use verbframe::dsl::{parse_script, LoweredStatement};
use verbframe::{exec, format_frame, sql, Catalog, Error};

/// Exit status for parse, bind and execution errors.
pub const EXIT_ERROR: i32 = 1;
/// Exit status for unreadable inputs and bad command lines.
pub const EXIT_IO: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "verbframe", version, about = "Run or compile verb pipeline scripts")]
struct Cli {
    #[command(subcommand)]
    mode: Mode,
}

#[derive(Debug, Subcommand)]
enum Mode {
    /// Execute the script and print each bare pipeline's result.
    Run(CommonArgs),
    /// Print the SQL for each bare pipeline without reading any table.
    EmitSql(CommonArgs),
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["script", "expr"]))]
struct CommonArgs {
    /// Directory whose `*.csv` files become tables named by file stem.
    #[arg(long, value_name = "DIR")]
    catalog: PathBuf,

    /// Script file to read.
    script: Option<PathBuf>,

    /// Inline script text.
    #[arg(short = 'e', long = "expr", value_name = "TEXT")]
    expr: Option<String>,

    /// Rows shown per printed frame.
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u64).range(1..))]
    max_print: u64,

    /// Write output to this file instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

/// Everything a CLI invocation produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CliOutput {
    fn fail(code: i32, stderr: String) -> Self {
        CliOutput {
            code,
            stdout: String::new(),
            stderr,
        }
    }
}

/// Runs one invocation. `argv` includes the program name.
pub fn run_cli<I, T>(argv: I) -> CliOutput
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_IO } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                CliOutput {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                CliOutput::fail(code, text)
            };
        }
    };
    let (emit_sql, args) = match cli.mode {
        Mode::Run(a) => (false, a),
        Mode::EmitSql(a) => (true, a),
    };

    let (origin, text) = match (&args.script, &args.expr) {
        (Some(path), _) => match std::fs::read_to_string(path) {
            Ok(t) => (path.display().to_string(), t),
            Err(e) => return CliOutput::fail(EXIT_IO, format!("error: {}: {e}\n", path.display())),
        },
        (None, Some(t)) => ("<expr>".to_owned(), t.clone()),
        (None, None) => unreachable!("clap requires one input"),
    };

    let stdout = match process(&args, emit_sql, &text) {
        Ok(out) => out,
        Err(e) => return CliOutput::fail(exit_code(&e), diagnostic(&origin, &text, &e)),
    };

    match &args.out {
        Some(path) => match std::fs::write(path, &stdout) {
            Ok(()) => CliOutput {
                code: 0,
                stdout: String::new(),
                stderr: String::new(),
            },
            Err(e) => CliOutput::fail(EXIT_IO, format!("error: {}: {e}\n", path.display())),
        },
        None => CliOutput {
            code: 0,
            stdout,
            stderr: String::new(),
        },
    }
}

fn process(args: &CommonArgs, emit_sql: bool, text: &str) -> Result<String, Error> {
    let script = parse_script(text)?;
    let catalog = Catalog::from_dir(&args.catalog)?;
    let lowered = script.lower();

    // Every statement is checked up front so that a mistake in an assigned
    // but unused pipeline is still reported.
    let mut bound = Vec::with_capacity(lowered.len());
    for stmt in &lowered {
        bound.push(stmt.bind(&catalog)?);
    }

    let max_print = usize::try_from(args.max_print).unwrap_or(usize::MAX);
    let mut out = String::new();
    for (stmt, plan) in lowered.iter().zip(&bound) {
        if stmt.target.is_some() {
            continue;
        }
        if emit_sql {
            let text = sql::compile(plan).map_err(|e| located(stmt, e))?;
            writeln!(out, "{};", sql::emit_pretty(&text)).expect("writing to a String");
        } else {
            let frame = exec::execute(plan, &catalog).map_err(|e| located(stmt, e))?;
            if !out.is_empty() {
                out.push('\n');
            }
            out.push_str(&format_frame(&frame, max_print));
        }
    }
    Ok(out)
}

fn located(stmt: &LoweredStatement, e: Error) -> Error {
    Error::At {
        span: stmt.span,
        source: Box::new(e),
    }
}

fn exit_code(e: &Error) -> i32 {
    if e.is_io() {
        EXIT_IO
    } else {
        EXIT_ERROR
    }
}

/// `error: origin:line:col: message`, followed by the offending source line
/// with a caret under the reported column.
fn diagnostic(origin: &str, text: &str, e: &Error) -> String {
    let Some(span) = e.span() else {
        return format!("error: {e}\n");
    };
    let mut out = format!("error: {origin}:{e}\n");
    if let Some(line) = text.lines().nth(span.line.saturating_sub(1)) {
        let gutter = span.line.to_string();
        let pad = " ".repeat(gutter.len());
        let caret = " ".repeat(span.column.saturating_sub(1));
        let _ = writeln!(out, "{pad} |\n{gutter} | {line}\n{pad} | {caret}^");
    }
    out
}
