//! The `pdm` command line.
//!
//! Exit codes: 0 on success, 1 when an input fails validation or cannot be
//! processed, 2 on usage errors.

pub mod targeted;

mod render;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use pdm_core::cg::{content_hash, generate_content, ContentTrace, GenerateOptions};
use pdm_core::netsim::{builtin, run_scenario, traffic_report, Scenario, TrafficReport};
use pdm_core::ops::OperationMode;
use pdm_core::package::{
    decode_package, encode_package, validate_package, PackageFile, PromptPackage, MAGIC,
};
use pdm_core::semdesc::{
    compile_to_script, graph_wire_size, import_mpeg7_with_warnings, validate_graph,
};
use serde::Deserialize;
use serde_json::json;
use thiserror::Error;

pub use targeted::{targeted_ad_assemble, TargetError, ATTRIBUTES};

#[derive(Debug, Parser)]
#[command(name = "pdm", version, about = "Prompt-driven media toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for every stochastic stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the main output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Elements kept per package.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Scene samples per narrative flag.
    #[arg(long, global = true)]
    density: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Os,
    M1,
    M2,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a package (JSON or binary), scenario or MPEG-7 document.
    Validate { path: PathBuf },
    /// Compile an MPEG-7 semantic description to a text prompt.
    Compile { path: PathBuf },
    /// Encode a JSON package to the binary wire format.
    Encode { path: PathBuf },
    /// Decode a binary package to JSON.
    Decode { path: PathBuf },
    /// Generate content from one or more packages.
    Generate {
        #[arg(required = true)]
        packages: Vec<PathBuf>,
        /// Defaults to os for one package and m1 otherwise.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, default_value_t = 24)]
        fps: u32,
    },
    /// Run a coverage scenario and report its traffic.
    Simulate { scenario: PathBuf },
    /// Traffic report of a saved simulation trace.
    Report { trace: PathBuf },
    /// Run a bundled scenario.
    Demo {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(builtin::NAMES))]
        name: String,
    },
    /// Print a bundled scenario file.
    Scenario {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(builtin::NAMES))]
        name: String,
    },
    /// Assemble the targeted ad for a comma separated attribute list.
    Target { attributes: String },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
    /// Validation ran and found problems; the report is already printed.
    #[error("validation failed")]
    Invalid,
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) | CliError::Invalid => 1,
        }
    }
}

fn failed(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

/// Runs the CLI on `argv` (program name first) against the process streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout(), &mut std::io::stderr())
}

/// Like [`run`], writing to the given streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            if !matches!(e, CliError::Invalid) {
                let _ = writeln!(err, "pdm: {e}");
            }
            e.code()
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let structured = cli.format == Format::Structured;
    match &cli.command {
        Command::Validate { path } => validate(path, structured, out),
        Command::Compile { path } => {
            let doc = read(path)?;
            let import = import_mpeg7_with_warnings(&doc).map_err(failed)?;
            let script = compile_to_script(&import.graph).map_err(failed)?;
            let text = if structured {
                pretty(&json!({
                    "script": script,
                    "script_bytes": script.len(),
                    "graph_wire_size": graph_wire_size(&import.graph),
                    "warnings": import
                        .warnings
                        .iter()
                        .map(|w| format!("line {}: {}", w.line, w.message))
                        .collect::<Vec<_>>(),
                }))
            } else {
                format!("{script}\n")
            };
            emit(cli, out, text.as_bytes())
        }
        Command::Encode { path } => {
            let p = load_package(path)?;
            let bytes = encode_package(&p);
            match &cli.out {
                Some(o) => {
                    fs::write(o, &bytes).map_err(|e| failed(format!("{}: {e}", o.display())))
                }
                None => {
                    let hex: String = bytes.iter().map(|b| format!("{b:02x}")).collect();
                    writeln!(out, "{hex}").map_err(failed)
                }
            }
        }
        Command::Decode { path } => {
            let p = load_package(path)?;
            emit(
                cli,
                out,
                format!("{}\n", PackageFile::from_package(&p).to_json()).as_bytes(),
            )
        }
        Command::Generate {
            packages,
            mode,
            fps,
        } => {
            let ps = packages
                .iter()
                .map(|p| load_package(p))
                .collect::<Result<Vec<_>, _>>()?;
            let mode = match mode.unwrap_or(if ps.len() == 1 {
                ModeArg::Os
            } else {
                ModeArg::M1
            }) {
                ModeArg::Os => OperationMode::SingleSource,
                ModeArg::M1 => OperationMode::MultiSync,
                ModeArg::M2 => OperationMode::MultiAsync,
            };
            let mut opts = GenerateOptions {
                fps: *fps,
                ..GenerateOptions::default()
            };
            if let Some(k) = cli.k {
                opts.k = k;
            }
            if let Some(d) = cli.density {
                opts.density = d;
            }
            let seed = cli.seed.unwrap_or(0);
            let c = generate_content(&ps, mode, seed, &opts).map_err(failed)?;
            let text = if structured {
                format!("{}\n", ContentTrace::new(&c).to_json())
            } else {
                render::content_summary(&c, &content_hash(&c))
            };
            emit(cli, out, text.as_bytes())
        }
        Command::Simulate { scenario } => {
            let text =
                String::from_utf8(read(scenario)?).map_err(|_| failed("scenario is not UTF-8"))?;
            let s = Scenario::from_json(&text).map_err(failed)?;
            simulate(cli, s, out)
        }
        Command::Demo { name } => {
            let s = builtin::load(name)
                .ok_or_else(|| CliError::Usage(format!("unknown scenario {name}")))?
                .map_err(failed)?;
            simulate(cli, s, out)
        }
        Command::Scenario { name } => {
            let src = builtin::source(name)
                .ok_or_else(|| CliError::Usage(format!("unknown scenario {name}")))?;
            emit(cli, out, src.as_bytes())
        }
        Command::Report { trace } => {
            let t: SavedTrace = serde_json::from_slice(&read(trace)?).map_err(failed)?;
            let r = TrafficReport::from_totals(
                t.agents.iter().map(|a| a.prompt_bytes).sum(),
                t.agents.iter().map(|a| a.presented_ms).sum(),
                t.bitrate_bps,
                t.model_transfer_bytes,
            );
            let text = if structured {
                pretty(&r)
            } else {
                r.to_string()
            };
            emit(cli, out, text.as_bytes())
        }
        Command::Target { attributes } => {
            let attrs = targeted::parse_attributes(attributes);
            if let Some(bad) = attrs.iter().find(|a| !ATTRIBUTES.contains(&a.as_str())) {
                return Err(CliError::Usage(format!(
                    "unknown attribute {bad:?}; expected some of {}",
                    ATTRIBUTES.join(",")
                )));
            }
            let m = targeted_ad_assemble(&attrs, &targeted::bundled_ad_packages()).map_err(
                |e| match e {
                    TargetError::EmptySelection => CliError::Usage(e.to_string()),
                    e => failed(e),
                },
            )?;
            let text = if structured {
                pretty(&json!({
                    "attributes": attrs,
                    "main": m.main_package_id,
                    "subs": m.sub_package_ids,
                    "features": m.features(),
                    "elements": m.elements.iter().map(|e| e.reference().to_string()).collect::<Vec<_>>(),
                }))
            } else {
                format!(
                    "main {}\nsubs {}\nfeatures {{{}}}\n",
                    m.main_package_id,
                    render::list(&m.sub_package_ids),
                    m.features().join(",")
                )
            };
            emit(cli, out, text.as_bytes())
        }
    }
}

/// Fields of a saved trace needed for its traffic report.
#[derive(Deserialize)]
struct SavedTrace {
    bitrate_bps: u64,
    model_transfer_bytes: u128,
    agents: Vec<SavedAgent>,
}

#[derive(Deserialize)]
struct SavedAgent {
    prompt_bytes: u128,
    presented_ms: u64,
}

fn simulate(cli: &Cli, mut s: Scenario, out: &mut dyn Write) -> Result<(), CliError> {
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    if let Some(k) = cli.k {
        s.k = k;
    }
    if let Some(d) = cli.density {
        s.density = d;
    }
    let problems = s.validate();
    if !problems.is_empty() {
        return Err(CliError::Failed(format!(
            "invalid scenario: {}",
            problems.join("; ")
        )));
    }
    let trace = run_scenario(&s).map_err(failed)?;
    let report = traffic_report(&trace);
    let json = format!("{}\n", trace.to_json());
    if cli.format == Format::Structured {
        return emit(cli, out, json.as_bytes());
    }
    if let Some(path) = &cli.out {
        fs::write(path, &json).map_err(|e| failed(format!("{}: {e}", path.display())))?;
    }
    let text = render::simulation_summary(&s, &trace, &report);
    out.write_all(text.as_bytes()).map_err(failed)
}

fn validate(path: &Path, structured: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let bytes = read(path)?;
    let (kind, issues, errors): (&str, Vec<String>, bool) = if bytes.starts_with(MAGIC) {
        let p = decode_package(&bytes).map_err(failed)?;
        let r = validate_package(&p);
        (
            "package",
            r.issues.iter().map(|i| i.to_string()).collect(),
            !r.is_empty(),
        )
    } else if path.extension().is_some_and(|e| e == "xml") {
        let import = import_mpeg7_with_warnings(&bytes).map_err(failed)?;
        let r = validate_graph(&import.graph);
        let mut issues: Vec<String> = r
            .issues
            .iter()
            .map(|i| {
                let level = if i.is_error() { "error" } else { "warning" };
                format!("{level}: {i}")
            })
            .collect();
        issues.extend(
            import
                .warnings
                .iter()
                .map(|w| format!("warning: line {}: {}", w.line, w.message)),
        );
        ("semantic description", issues, r.has_errors())
    } else {
        let text = String::from_utf8(bytes).map_err(|_| failed("input is not UTF-8"))?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(failed)?;
        if value.get("broadcasters").is_some() {
            let issues = match Scenario::from_json(&text) {
                Ok(s) => s.validate(),
                Err(e) => vec![e.to_string()],
            };
            let bad = !issues.is_empty();
            ("scenario", issues, bad)
        } else {
            let issues = match PackageFile::from_json(&text).and_then(PackageFile::into_package) {
                Ok(p) => validate_package(&p)
                    .issues
                    .iter()
                    .map(|i| i.to_string())
                    .collect(),
                Err(e) => vec![e.to_string()],
            };
            let bad = !issues.is_empty();
            ("package", issues, bad)
        }
    };
    let text = if structured {
        pretty(&json!({ "kind": kind, "valid": !errors, "issues": issues }))
    } else if issues.is_empty() {
        format!("{kind}: ok\n")
    } else {
        let mut s = format!(
            "{kind}: {}\n",
            if errors {
                "invalid"
            } else {
                "ok with warnings"
            }
        );
        for i in &issues {
            s.push_str(&format!("  {i}\n"));
        }
        s
    };
    out.write_all(text.as_bytes()).map_err(failed)?;
    if errors {
        Err(CliError::Invalid)
    } else {
        Ok(())
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| failed(format!("{}: {e}", path.display())))
}

/// Reads a package from JSON or its binary encoding.
fn load_package(path: &Path) -> Result<PromptPackage, CliError> {
    let bytes = read(path)?;
    if bytes.starts_with(MAGIC) {
        return decode_package(&bytes).map_err(failed);
    }
    let text = String::from_utf8(bytes).map_err(|_| failed("package is not UTF-8"))?;
    let p = PackageFile::from_json(&text)
        .and_then(PackageFile::into_package)
        .map_err(|e| failed(format!("{}: {e}", path.display())))?;
    let report = validate_package(&p);
    if !report.is_empty() {
        return Err(failed(format!(
            "{}: {}",
            path.display(),
            report.to_string().trim_end()
        )));
    }
    Ok(p)
}

fn emit(cli: &Cli, out: &mut dyn Write, bytes: &[u8]) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => {
            fs::write(path, bytes).map_err(|e| failed(format!("{}: {e}", path.display())))
        }
        None => out.write_all(bytes).map_err(failed),
    }
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    format!(
        "{}\n",
        serde_json::to_string_pretty(v).expect("serializable")
    )
}
