//! Command-line front end: reads a workspace document, runs one command
//! over its sections and renders a text report plus an optional JSON
//! report.

mod commands;
pub mod doc;
pub mod workspace;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde_json::{json, Map, Value};

pub use doc::{parse_document, InputError, Node};
pub use workspace::Workspace;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Command {
    Validate,
    Elements,
    Antecedent,
    AntecedentGeneral,
    Lifted,
    Giraud,
    Tm,
    Points,
    Correspondence,
    Sheaf,
    Descent,
    Limits,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Elements => "elements",
            Command::Antecedent => "antecedent",
            Command::AntecedentGeneral => "antecedent-general",
            Command::Lifted => "lifted",
            Command::Giraud => "giraud",
            Command::Tm => "tm",
            Command::Points => "points",
            Command::Correspondence => "correspondence",
            Command::Sheaf => "sheaf",
            Command::Descent => "descent",
            Command::Limits => "limits",
        }
    }
}

#[derive(Debug, Clone, Parser)]
#[command(name = "overtopos", version, about = "Checks finite sites, antecedent topologies and their points")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// Workspace document.
    pub file: PathBuf,
    /// Only the section with this name.
    #[arg(long)]
    pub name: Option<String>,
    /// Bound on fiber sizes when enumerating points and homomorphisms.
    #[arg(long, default_value_t = 2)]
    pub bound: usize,
    /// Also write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Witnesses listed per failed check.
    #[arg(long, default_value_t = 20)]
    pub witness_limit: usize,
    /// Treat warnings as failures.
    #[arg(long)]
    pub strict: bool,
    /// For `tm`: also emit the structure of this homomorphism's point.
    #[arg(long)]
    pub hom: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub invariant: String,
    pub witnesses: Vec<String>,
}

/// Results for one section of the workspace.
#[derive(Debug, Clone)]
pub struct Section {
    pub kind: &'static str,
    pub name: String,
    pub results: Vec<(String, Value)>,
    pub failures: Vec<Failure>,
    pub warnings: Vec<String>,
}

impl Section {
    pub fn new(kind: &'static str, name: &str) -> Section {
        Section { kind, name: name.to_string(), results: vec![], failures: vec![], warnings: vec![] }
    }

    pub fn set(&mut self, key: &str, v: impl Into<Value>) {
        self.results.push((key.to_string(), v.into()));
    }

    /// Records a failed invariant unless `witnesses` is empty.
    pub fn check(&mut self, invariant: &str, witnesses: Vec<String>) {
        if !witnesses.is_empty() {
            self.failures.push(Failure { invariant: invariant.to_string(), witnesses });
        }
    }

    pub fn warn(&mut self, w: impl Into<String>) {
        self.warnings.push(w.into());
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub text: String,
    pub report: String,
}

fn limited(ws: &[String], limit: usize) -> (Vec<String>, usize) {
    let shown = ws.iter().take(limit).cloned().collect();
    (shown, ws.len().saturating_sub(limit))
}

fn show_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Text and JSON renderings of the sections and the resulting exit code.
pub fn render(command: Command, sections: &[Section], args: &Args, preamble: Option<&str>) -> Outcome {
    let failed = sections.iter().any(|s| !s.failures.is_empty());
    let warned = sections.iter().any(|s| !s.warnings.is_empty());
    let ok = !failed && !(args.strict && warned);
    let status = if ok { "ok" } else { "failure" };
    // `tm` writes a document to stdout, so its report lines are comments
    let lead = if preamble.is_some() { "# " } else { "" };
    let mut text = String::new();
    let mut json_sections = Vec::new();
    for s in sections {
        let mark = if !s.failures.is_empty() { "FAILED" } else { "ok" };
        text.push_str(&format!("{lead}{} {}: {mark}\n", s.kind, s.name));
        let mut results = Map::new();
        for (k, v) in &s.results {
            text.push_str(&format!("{lead}  {k}: {}\n", show_value(v)));
            results.insert(k.clone(), v.clone());
        }
        let mut fails = Vec::new();
        for f in &s.failures {
            let (shown, omitted) = limited(&f.witnesses, args.witness_limit);
            text.push_str(&format!("{lead}  violated {}: {} instance(s)\n", f.invariant, f.witnesses.len()));
            for w in &shown {
                text.push_str(&format!("{lead}    {w}\n"));
            }
            if omitted > 0 {
                text.push_str(&format!("{lead}    ... {omitted} more\n"));
            }
            fails.push(json!({"invariant": f.invariant, "witnesses": shown, "omitted": omitted, "count": f.witnesses.len()}));
        }
        for w in &s.warnings {
            text.push_str(&format!("{lead}  warning: {w}\n"));
        }
        json_sections.push(json!({
            "kind": s.kind,
            "name": s.name,
            "status": mark,
            "results": Value::Object(results),
            "failures": fails,
            "warnings": s.warnings,
        }));
    }
    let nfail: usize = sections.iter().map(|s| s.failures.len()).sum();
    let nwarn: usize = sections.iter().map(|s| s.warnings.len()).sum();
    text.push_str(&format!(
        "{lead}status: {status} ({} section(s), {nfail} failed check(s), {nwarn} warning(s))\n",
        sections.len()
    ));
    let mut report = json!({
        "format-version": FORMAT_VERSION,
        "command": command.name(),
        "options": {"bound": args.bound, "witness-limit": args.witness_limit, "strict": args.strict, "name": args.name, "hom": args.hom},
        "status": status,
        "sections": json_sections,
    });
    if let Some(doc) = preamble {
        report["document"] = Value::String(doc.to_string());
        text = format!("{doc}{text}");
    }
    Outcome { code: if ok { 0 } else { 1 }, text, report: serde_json::to_string_pretty(&report).expect("json") + "\n" }
}

fn input_failure(command: Command, args: &Args, e: &InputError) -> Outcome {
    let report = json!({
        "format-version": FORMAT_VERSION,
        "command": command.name(),
        "status": "input-error",
        "error": {"line": e.line, "column": e.column, "message": e.message},
    });
    Outcome {
        code: 2,
        text: format!("{}: {e}\n", args.file.display()),
        report: serde_json::to_string_pretty(&report).expect("json") + "\n",
    }
}

/// Runs a command on document text. Exit codes: 0 verified, 1 a checked
/// property fails, 2 the input is malformed or inconsistent.
pub fn run_on_text(args: &Args, text: &str) -> Outcome {
    let ws = match parse_document(text).and_then(|nodes| Workspace::load(&nodes)) {
        Ok(ws) => ws,
        Err(e) => return input_failure(args.command, args, &e),
    };
    match commands::run(&ws, args) {
        Ok((sections, preamble)) => render(args.command, &sections, args, preamble.as_deref()),
        Err(e) => input_failure(args.command, args, &e),
    }
}

/// Reads the file named in `args`, runs the command, and writes the JSON
/// report if requested. The returned outcome's text goes to stdout, or to
/// stderr for input errors.
pub fn run(args: &Args) -> Outcome {
    let out = match std::fs::read_to_string(&args.file) {
        Ok(text) => run_on_text(args, &text),
        Err(e) => input_failure(args.command, args, &InputError::at(0, 0, format!("cannot read file: {e}"))),
    };
    if let Some(path) = &args.report {
        if let Err(e) = std::fs::write(path, &out.report) {
            return Outcome { code: 2, text: format!("cannot write report {}: {e}\n", path.display()), report: out.report };
        }
    }
    out
}
