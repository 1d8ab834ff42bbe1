use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use absorb_core::corpus;
use absorb_core::decide::{
    bounds, oracle_chain_search, verify_np_certificate, Certificate, Decision,
};
use absorb_core::{Engine, Error, Limits, RelationalStructure, Subset};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

const SCHEMA: &str = "absorb/1";

#[derive(Parser)]
#[command(name = "absorb", version)]
#[command(about = "Decide absorption and Jónsson absorption in polymorphism algebras")]
struct Cli {
    /// Cap on the number of vertices of any power structure
    /// (overrides ABSORB_MAX_VERTICES)
    #[arg(long, global = true)]
    max_power_vertices: Option<usize>,

    /// Run every search on a single thread
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether B is (Jónsson) absorbing
    Decide {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value_t = DecideMode::Absorb)]
        mode: DecideMode,
        /// Write the certificate here when the property holds
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Check a certificate produced by `decide`
    Verify {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        certificate: PathBuf,
    },
    /// Search for an absorption term, a B-essential subpower or a Jónsson chain
    Search {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum)]
        what: SearchTarget,
        /// Arity of the term or of the essential subpower
        #[arg(long, default_value_t = 2)]
        arity: usize,
    },
    /// Upper and lower bounds on the arity of absorption terms
    Bounds {
        #[arg(long)]
        theta: usize,
        #[arg(long)]
        size: usize,
    },
    /// Write every small structure with one relation and each of its proper
    /// subuniverses as fixture files
    Corpus {
        #[arg(long)]
        size: usize,
        #[arg(long)]
        max_arity: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args)]
struct Input {
    /// Structure file
    #[arg(short = 's', long = "structure")]
    structure: PathBuf,
    /// Subset, inline JSON (`{"elements":[0]}`) or a file
    #[arg(short = 'b', long = "subset")]
    subset: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecideMode {
    Absorb,
    Jonsson,
}

#[derive(Clone, Copy, ValueEnum)]
enum SearchTarget {
    Term,
    Essential,
    Chain,
}

impl SearchTarget {
    fn name(self) -> &'static str {
        match self {
            SearchTarget::Term => "term",
            SearchTarget::Essential => "essential",
            SearchTarget::Chain => "chain",
        }
    }
}

enum Failure {
    Input(String),
    Resource(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_resource() {
            Failure::Resource(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

struct Outcome {
    payload: Value,
    /// `None` for commands without a yes/no answer.
    holds: Option<bool>,
    summary: String,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

impl Input {
    fn load(&self) -> Result<(RelationalStructure, Subset), Failure> {
        let a = RelationalStructure::from_json(&read(&self.structure)?)?;
        let text = if self.subset.trim_start().starts_with('{') {
            self.subset.clone()
        } else {
            read(Path::new(&self.subset))?
        };
        Ok((a, Subset::from_json(&text)?))
    }
}

fn engine(cli: &Cli) -> Engine {
    let mut limits = Limits::from_env();
    if let Some(cap) = cli.max_power_vertices {
        limits.max_power_vertices = cap;
    }
    let engine = Engine::new(limits);
    if cli.sequential {
        engine.sequential()
    } else {
        engine
    }
}

fn decision_payload(d: &Decision) -> Value {
    let mut v = d.to_json_value();
    // certificates can be large; they only go to the --certificate file
    if let Some(map) = v.as_object_mut() {
        map.remove("certificate");
    }
    v
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let engine = engine(cli);
    match &cli.command {
        Command::Decide {
            input,
            mode,
            certificate,
        } => {
            let (a, b) = input.load()?;
            let d = match mode {
                DecideMode::Absorb => engine.decide_absorption(&a, &b)?,
                DecideMode::Jonsson => engine.decide_jonsson(&a, &b)?,
            };
            if let (Some(path), Some(cert)) = (certificate, &d.certificate) {
                write(path, &cert.to_json())?;
            }
            let summary = match d.failing {
                Some(q) => format!("{}: fails at quintuple {:?}", d.verdict(), q.to_array()),
                None => d.verdict().to_string(),
            };
            Ok(Outcome {
                payload: decision_payload(&d),
                holds: Some(d.holds),
                summary,
            })
        }
        Command::Verify { input, certificate } => {
            let (a, b) = input.load()?;
            let cert = Certificate::from_json(&read(certificate)?)?;
            Ok(match verify_np_certificate(&a, &b, &cert) {
                Ok(()) => Outcome {
                    payload: json!({ "holds": true }),
                    holds: Some(true),
                    summary: "certificate accepted".into(),
                },
                Err(defect) => Outcome {
                    payload: json!({ "holds": false, "defect": defect.to_string() }),
                    holds: Some(false),
                    summary: format!("certificate rejected: {defect}"),
                },
            })
        }
        Command::Search { input, what, arity } => {
            let (a, b) = input.load()?;
            let (key, found) = match what {
                SearchTarget::Term => (
                    "table",
                    engine
                        .absorption_term_search(&a, &b, *arity)?
                        .map(|t| t.to_json_value()),
                ),
                SearchTarget::Essential => (
                    "witness",
                    engine
                        .essential_witness_search(&a, &b, *arity)?
                        .map(|w| w.to_json_value()),
                ),
                SearchTarget::Chain => (
                    "chain",
                    oracle_chain_search(&a, &b)?.map(|c| c.to_json_value()),
                ),
            };
            let holds = found.is_some();
            let mut payload = json!({ "what": what.name(), "holds": holds });
            if !matches!(what, SearchTarget::Chain) {
                payload["arity"] = json!(arity);
            }
            if let Some(v) = found {
                payload[key] = v;
            }
            Ok(Outcome {
                payload,
                holds: Some(holds),
                summary: format!("{}: {}", what.name(), if holds { "found" } else { "none" }),
            })
        }
        Command::Bounds { theta, size } => {
            let report = bounds(*theta, *size)?;
            Ok(Outcome {
                payload: report.to_json_value(),
                holds: None,
                summary: format!("kappa = {}", report.kappa),
            })
        }
        Command::Corpus {
            size,
            max_arity,
            out,
        } => corpus_command(&engine, *size, *max_arity, out),
    }
}

fn corpus_command(engine: &Engine, size: usize, max_arity: usize, out: &Path) -> Result<Outcome, Failure> {
    if size == 0 || max_arity == 0 {
        return Err(Failure::Input("size and max-arity must be positive".into()));
    }
    let choices = corpus::relation_choices(size, max_arity)?;
    let structures = corpus::structures(size, max_arity)?;
    let instances = corpus::instances(engine, size, max_arity)?;
    let dir = out.join("instances");
    fs::create_dir_all(&dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::with_capacity(instances.len());
    for inst in &instances {
        let name = format!("instances/{}.json", inst.id());
        write(&out.join(&name), &inst.to_json_value().to_string())?;
        files.push(name);
    }
    let summary = json!({
        "size": size,
        "max_arity": max_arity,
        "relation_choices": choices,
        "structures": structures.len(),
        "instances": instances.len(),
    });
    let mut manifest = summary.clone();
    manifest["schema"] = json!(SCHEMA);
    manifest["files"] = json!(files);
    write(&out.join("manifest.json"), &pretty(&manifest))?;
    Ok(Outcome {
        summary: format!(
            "{choices} relation choices, {} structures, {} instances",
            structures.len(),
            instances.len()
        ),
        payload: summary,
        holds: None,
    })
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("values serialize")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mut payload, code) = match run(&cli) {
        Ok(outcome) => {
            eprintln!("{}", outcome.summary);
            let code = match outcome.holds {
                Some(false) => 1,
                _ => 0,
            };
            (outcome.payload, code)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            (json!({ "error": msg, "kind": "input" }), 2)
        }
        Err(Failure::Resource(msg)) => {
            eprintln!("error: {msg}");
            (json!({ "error": msg, "kind": "resource" }), 3)
        }
    };
    payload["schema"] = json!(SCHEMA);
    println!("{}", pretty(&payload));
    ExitCode::from(code)
}
