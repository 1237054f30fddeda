//! `planrec` subcommands. Everything reads and writes through the given
//! streams so the commands can be driven from tests.
//!
//! Exit status: 0 when at least one interpretation survives (or the KB is
//! valid), 2 when the result is empty, 1 on any error.

use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::engine::{EngineOptions, IndirectMode, Session};
use crate::knowledge::{load_kb, validate_kb, IcNormMode, KbError, KnowledgeBase};
use crate::report::ResultDocument;
use crate::transcript::{parse_line, Line, Transcript};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_EMPTY: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "planrec", version, about = "Probabilistic plan recognition for travel consultations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Interpret a transcript and print the ranked result document.
    Interpret {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        transcript: PathBuf,
        #[command(flatten)]
        tuning: Tuning,
        /// Write the result here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Read records from stdin, one per line.
    Repl {
        #[arg(long)]
        kb: PathBuf,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Check a knowledge base and list its problems.
    Validate {
        #[arg(long)]
        kb: PathBuf,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct Tuning {
    /// Relative rejection threshold after each statement [default: 0.5].
    #[arg(long, value_parser = unit_interval)]
    pub threshold_direct: Option<f64>,
    /// Relative rejection threshold after indirect inference [default: 0.7].
    #[arg(long, value_parser = unit_interval)]
    pub threshold_indirect: Option<f64>,
    /// ICNORM: `min` or `sum` [default: min].
    #[arg(long)]
    pub icnorm: Option<IcNormMode>,
    /// When to run indirect inference: `final` or `per-statement`.
    #[arg(long, default_value = "final")]
    pub indirect: IndirectMode,
    /// Include the candidate/prune log in the result document.
    #[arg(long)]
    pub trace: bool,
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is not in [0, 1]"))
    }
}

impl Tuning {
    /// Flags override the KB's configured values.
    pub fn options(&self, kb: &KnowledgeBase) -> EngineOptions {
        let mut o = EngineOptions::from_config(&kb.config);
        if let Some(t) = self.threshold_direct {
            o.threshold_direct = t;
        }
        if let Some(t) = self.threshold_indirect {
            o.threshold_indirect = t;
        }
        if let Some(m) = self.icnorm {
            o.icnorm = m;
        }
        o.indirect = self.indirect;
        o.trace = self.trace;
        o
    }
}

/// Parse `args` and run. Returns the exit status.
pub fn main_with<I, T>(args: I, stdin: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_ERROR;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    match cli.command {
        Command::Interpret {
            kb,
            transcript,
            tuning,
            output,
        } => cmd_interpret(&kb, &transcript, &tuning, output.as_deref(), out, err),
        Command::Repl { kb, tuning } => cmd_repl(&kb, &tuning, stdin, out, err),
        Command::Validate { kb } => cmd_validate(&kb, out, err),
    }
}

fn load(path: &Path, err: &mut dyn Write) -> Option<Arc<KnowledgeBase>> {
    match load_kb(path) {
        Ok(kb) => Some(Arc::new(kb)),
        Err(e) => {
            report_kb_error(&e, err);
            None
        }
    }
}

fn report_kb_error(e: &KbError, err: &mut dyn Write) {
    let _ = writeln!(err, "error: {e}");
    if let KbError::Validation(diags) = e {
        for d in diags {
            let _ = writeln!(err, "  {d}");
        }
    }
}

/// Run a parsed transcript to completion.
pub fn interpret(kb: Arc<KnowledgeBase>, transcript: &Transcript, tuning: &Tuning) -> ResultDocument {
    let options = tuning.options(&kb);
    let mut session = Session::new(Arc::clone(&kb), options);
    for record in &transcript.records {
        // failures are kept as diagnostics in the session
        let _ = session.process_statement(record);
    }
    ResultDocument::build(&session.finalize(), &kb, tuning.trace)
}

fn exit_for(doc: &ResultDocument) -> i32 {
    if doc.interpretations.is_empty() {
        EXIT_EMPTY
    } else {
        EXIT_OK
    }
}

pub fn cmd_interpret(
    kb_path: &Path,
    transcript_path: &Path,
    tuning: &Tuning,
    output: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let Some(kb) = load(kb_path, err) else { return EXIT_ERROR };
    let transcript = match Transcript::load(transcript_path) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_ERROR;
        }
    };
    let doc = interpret(kb, &transcript, tuning);
    for d in &doc.diagnostics {
        let _ = writeln!(err, "warning: {d}");
    }
    let text = doc.to_json();
    let written = match output {
        Some(path) => std::fs::write(path, &text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => out.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: {e}");
        return EXIT_ERROR;
    }
    exit_for(&doc)
}

/// Compact view of the live set: one line per interpretation.
pub fn live_lines(session: &Session) -> String {
    if session.live().is_empty() {
        return "(no interpretations)\n".to_string();
    }
    session
        .live()
        .iter()
        .enumerate()
        .map(|(i, interp)| format!("{:>2}. p={:.4} {}\n", i + 1, interp.probability, interp.summary()))
        .collect()
}

pub fn cmd_repl(kb_path: &Path, tuning: &Tuning, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let Some(kb) = load(kb_path, err) else { return EXIT_ERROR };
    let mut session = Session::new(Arc::clone(&kb), tuning.options(&kb));
    // exit status of the last :finalize, if there was one
    let mut last = None;

    let mut buf = String::new();
    loop {
        buf.clear();
        match input.read_line(&mut buf) {
            Ok(0) => break,
            Ok(_) => {}
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return EXIT_ERROR;
            }
        }
        let line = buf.trim();
        match line {
            ":quit" | ":q" => break,
            ":reset" => {
                session.reset();
                let _ = out.write_all(live_lines(&session).as_bytes());
                continue;
            }
            ":finalize" => {
                let doc = ResultDocument::build(&session.finalize(), &kb, tuning.trace);
                last = Some(exit_for(&doc));
                let _ = out.write_all(doc.to_json().as_bytes());
                continue;
            }
            _ if line.starts_with(':') => {
                let _ = writeln!(err, "error: unknown command `{line}` (try :finalize, :reset, :quit)");
                continue;
            }
            _ => {}
        }
        match parse_line(line) {
            Ok(Line::Blank) | Ok(Line::Header(_)) => continue,
            Ok(Line::Record(pred)) => {
                if let Err(e) = session.process_statement(&pred) {
                    let _ = writeln!(err, "error: {e}");
                }
                let _ = out.write_all(live_lines(&session).as_bytes());
            }
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
            }
        }
        let _ = out.flush();
    }
    last.unwrap_or(if session.live().is_empty() { EXIT_EMPTY } else { EXIT_OK })
}

pub fn cmd_validate(kb_path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let text = match std::fs::read_to_string(kb_path) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: cannot read {}: {e}", kb_path.display());
            return EXIT_ERROR;
        }
    };
    let kb: KnowledgeBase = match serde_json::from_str(&text) {
        Ok(kb) => kb,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", kb_path.display());
            return EXIT_ERROR;
        }
    };
    let diags = validate_kb(&kb);
    for d in &diags {
        let _ = writeln!(out, "{d}");
    }
    if diags.is_empty() {
        let _ = writeln!(
            out,
            "ok: {} operators, {} rules, {} domains",
            kb.operators.len(),
            kb.rules.len(),
            kb.domains.len()
        );
        EXIT_OK
    } else {
        EXIT_ERROR
    }
}
