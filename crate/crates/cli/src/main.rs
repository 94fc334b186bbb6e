use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use arctext::{
    diff_descriptions, export_dot, graph_file_string, lint_shapes, load_graph_file,
    render_description_with, sha224_hex, tokenize, validate_graph, vectors_csv, ArchGraph,
    CanonConfig, CanonicalOrder, Description, Diagnostics, Severity, Subject, Vocabulary,
    DEFAULT_MAX_PATHS,
};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "arctext",
    version,
    about = "Canonical text descriptions of CNN architectures"
)]
struct Cli {
    /// Cap on tied longest paths examined per numbering step.
    #[arg(long, global = true, env = "ARCTEXT_MAX_PATHS", default_value_t = DEFAULT_MAX_PATHS)]
    max_paths: usize,
    /// Suppress warnings and informational output on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a graph file as its canonical description.
    Canonicalize {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Read a description back into a graph file.
    Parse {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a graph file or description for structural errors.
    Validate {
        #[arg(short, long)]
        input: PathBuf,
    },
    /// Check declared shapes against convolution and pooling arithmetic.
    Lint {
        #[arg(short, long)]
        input: PathBuf,
    },
    /// Print the SHA-224 of a description.
    Digest {
        #[arg(short, long)]
        input: PathBuf,
    },
    /// Compare two descriptions line by line.
    Diff { left: PathBuf, right: PathBuf },
    /// Export a graph file as Graphviz DOT in canonical order.
    Dot {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Turn a description into per-unit vectors or token ids.
    Vectorize {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Vocabulary file to start from; a closed one rejects unseen words.
        #[arg(long)]
        vocab: Option<PathBuf>,
        /// Emit token ids as JSON lines instead of the vector CSV.
        #[arg(long)]
        tokens: bool,
        /// Write the vocabulary after tokenizing.
        #[arg(long, requires = "tokens")]
        save_vocab: Option<PathBuf>,
    },
}

/// An error already formatted for the user.
struct Failure(String);

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn fail<T>(code: &str, msg: impl std::fmt::Display) -> Result<T, Failure> {
    Err(Failure(format!("error[{code}]: {msg}")))
}

fn read(path: &Path) -> Result<String, Failure> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(s),
        Err(e) if e.kind() == io::ErrorKind::NotFound => fail(
            "FileNotFound",
            format!("{}: file not found", path.display()),
        ),
        Err(e) => fail("IoError", format!("{}: {e}", path.display())),
    }
}

fn emit(output: Option<&Path>, data: &str) -> Result<(), Failure> {
    match output {
        Some(p) => fs::write(p, data).or_else(|e| fail("IoError", format!("{}: {e}", p.display()))),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(data.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn load_graph(path: &Path) -> Result<ArchGraph, Failure> {
    load_graph_file(path).or_else(|e| fail(e.code(), e))
}

fn parse_text(path: &Path) -> Result<Description, Failure> {
    let text = read(path)?;
    Description::parse(&text).or_else(|e| fail(e.code(), format!("{}: {e}", path.display())))
}

enum Input {
    Text(Description),
    Graph(ArchGraph),
}

/// Text grammar first; a document that fails it and opens with `{` is read
/// as a graph file.
fn load_any(path: &Path) -> Result<Input, Failure> {
    let text = read(path)?;
    match Description::parse(&text) {
        Ok(d) => Ok(Input::Text(d)),
        Err(_) if text.trim_start().starts_with('{') => Ok(Input::Graph(load_graph(path)?)),
        Err(e) => fail(e.code(), format!("{}: {e}", path.display())),
    }
}

struct Ctx {
    cfg: CanonConfig,
    quiet: bool,
}

impl Ctx {
    fn order(&self, g: &ArchGraph) -> Result<CanonicalOrder, Failure> {
        arctext::assign_positions_with(g, &self.cfg).or_else(|e| fail(e.code(), e))
    }

    fn render(&self, g: &ArchGraph) -> Result<Description, Failure> {
        render_description_with(g, &self.cfg).or_else(|e| fail(e.code(), e))
    }

    /// Prints findings and reports whether any is an error.
    fn report(&self, d: &Diagnostics) -> bool {
        for f in &d.findings {
            if f.severity == Severity::Error || !self.quiet {
                eprintln!("{f}");
            }
        }
        d.has_errors()
    }

    fn info(&self, msg: impl std::fmt::Display) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let ctx = Ctx {
        cfg: CanonConfig {
            max_paths: cli.max_paths,
        },
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Canonicalize { input, output } => {
            let g = load_graph(&input)?;
            emit(output.as_deref(), &ctx.render(&g)?.text)?;
            Ok(true)
        }
        Command::Parse { input, output } => {
            let d = parse_text(&input)?;
            let (g, order) = d.to_graph().or_else(|e| fail(e.code(), e))?;
            emit(output.as_deref(), &graph_file_string(&g, Some(&order)))?;
            Ok(true)
        }
        Command::Validate { input } => {
            let mut diags = Diagnostics::default();
            let g = match load_any(&input)? {
                Input::Graph(g) => g,
                Input::Text(d) => {
                    let (g, _) = d.to_graph().or_else(|e| fail(e.code(), e))?;
                    if ctx.render(&g)?.text != d.text {
                        diags.push(
                            Severity::Warning,
                            "NonCanonical",
                            Subject::Graph,
                            "re-rendering the description does not reproduce it",
                        );
                    }
                    g
                }
            };
            diags.extend(validate_graph(&g));
            let errors = ctx.report(&diags);
            if !errors {
                ctx.info(format!(
                    "ok: {} nodes, {} edges",
                    g.len(),
                    g.edges().count()
                ));
            }
            Ok(!errors)
        }
        Command::Lint { input } => {
            let g = match load_any(&input)? {
                Input::Graph(g) => g,
                Input::Text(d) => d.to_graph().or_else(|e| fail(e.code(), e))?.0,
            };
            let structural = validate_graph(&g);
            if ctx.report(&structural) {
                return Ok(false);
            }
            let report = lint_shapes(&g);
            let diags = report.to_diagnostics();
            for f in &diags.findings {
                println!("{f}");
            }
            let clean = diags.is_empty();
            if clean {
                ctx.info(format!("ok: {} nodes checked", report.entries.len()));
            }
            Ok(clean)
        }
        Command::Digest { input } => {
            let d = parse_text(&input)?;
            println!("{}", sha224_hex(d.text.as_bytes()));
            Ok(true)
        }
        Command::Diff { left, right } => {
            let a = parse_text(&left)?;
            let b = parse_text(&right)?;
            let d = diff_descriptions(&a, &b);
            if d.is_empty() {
                ctx.info("no differences");
            } else {
                print!("{d}");
            }
            Ok(true)
        }
        Command::Dot { input, output } => {
            let g = load_graph(&input)?;
            let order = ctx.order(&g)?;
            emit(output.as_deref(), &export_dot(&g, &order))?;
            Ok(true)
        }
        Command::Vectorize {
            input,
            output,
            vocab,
            tokens,
            save_vocab,
        } => {
            let d = parse_text(&input)?;
            if !tokens {
                if vocab.is_some() {
                    ctx.info("note: --vocab only affects --tokens output");
                }
                emit(output.as_deref(), &vectors_csv(&d))?;
                return Ok(true);
            }
            let mut v = match &vocab {
                Some(p) => Vocabulary::from_json(&read(p)?)
                    .or_else(|e| fail("InvalidVocabulary", format!("{}: {e}", p.display())))?,
                None => Vocabulary::default(),
            };
            let ts = match tokenize(&d, &mut v) {
                Ok(ts) => ts,
                Err(e) => return fail("UnknownToken", e),
            };
            let mut out = String::new();
            for unit in &ts.units {
                let row: Vec<serde_json::Value> = unit
                    .iter()
                    .map(|t| match t.value {
                        Some(x) => serde_json::json!([t.id, x]),
                        None => serde_json::json!(t.id),
                    })
                    .collect();
                out.push_str(&serde_json::Value::Array(row).to_string());
                out.push('\n');
            }
            emit(output.as_deref(), &out)?;
            if let Some(p) = save_vocab {
                fs::write(&p, v.to_json())
                    .or_else(|e| fail("IoError", format!("{}: {e}", p.display())))?;
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
    }
}
