//! Command-line front end.
//!
//! Exit codes: 0 positive, 1 negative, 2 unknown, 3 input error.

use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::check::run_suite;
use crate::error::{Error, Result};
use crate::finite::truncate;
use crate::format::{parse, serialize};
use crate::isoembed::{embed, twin_check, verify_witness, EmbedOutcome, SearchConfig, TwinVerdict, WitnessSummary};
use crate::normal::{canonical_code, iso_tuples, normalize};
use crate::presentation::GraphTuple;
use crate::rank::{kernel, rank};
use crate::twingen::{generate_twins, Generation};
use crate::witness::{EmbeddingWitness, Mode};

pub const POSITIVE: i32 = 0;
pub const NEGATIVE: i32 = 1;
pub const UNKNOWN: i32 = 2;
pub const INPUT_ERROR: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "rayless", version, about = "Rank, kernels, isomorphism, embeddings and twins of finitely presented rayless graphs")]
struct Cli {
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the rank.
    Rank { file: PathBuf },
    /// Print the kernel as a set of locations.
    Kernel { file: PathBuf },
    /// Print the normal form.
    Normalize { file: PathBuf },
    /// Print the canonical code.
    Canon { file: PathBuf },
    /// Decide isomorphism.
    Iso {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Search for an embedding of A into B.
    Embed {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value = "weak", value_parser = parse_mode)]
        mode: Mode,
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Decide whether A and B are twins.
    Twin {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value = "weak", value_parser = parse_mode)]
        mode: Mode,
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Build pairwise non-isomorphic twins of G from the twin pair (G, H).
    Generate {
        g: PathBuf,
        h: PathBuf,
        #[arg(long, default_value = "weak", value_parser = parse_mode)]
        mode: Mode,
        #[arg(short = 'k', default_value_t = 5)]
        k: usize,
        #[arg(long, default_value = "twins")]
        witness_dir: PathBuf,
    },
    /// Print the finite truncation with every infinite multiplicity set to N.
    Truncate {
        file: PathBuf,
        #[arg(short = 'n')]
        n: usize,
        #[arg(long)]
        dot: bool,
    },
    /// Run the differential suite against the finite oracle.
    Check {
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        #[arg(long, value_delimiter = ',', default_values_t = [2, 3, 4])]
        trunc: Vec<usize>,
    },
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(code: i32, stdout: String) -> Outcome {
        Outcome {
            code,
            stdout,
            stderr: String::new(),
        }
    }
}

/// Runs the command line `args` (program name first).
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => Outcome::ok(POSITIVE, text),
                _ => Outcome {
                    code: INPUT_ERROR,
                    stdout: String::new(),
                    stderr: text,
                },
            };
        }
    };
    match dispatch(&cli) {
        Ok(out) => out,
        Err(e) => Outcome {
            code: INPUT_ERROR,
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

fn load(path: &Path) -> Result<GraphTuple> {
    let text = if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Error::Precondition(format!("reading stdin: {e}")))?;
        s
    } else {
        std::fs::read_to_string(path).map_err(|e| Error::Precondition(format!("reading {}: {e}", path.display())))?
    };
    parse(&text)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Precondition(format!("writing {}: {e}", path.display())))
}

fn emit(json: bool, value: impl Serialize, text: impl FnOnce() -> String) -> String {
    if json {
        let mut s = serde_json::to_string_pretty(&value).expect("serializable");
        s.push('\n');
        s
    } else {
        text()
    }
}

fn hex(code: &[u32]) -> String {
    code.iter().fold(String::new(), |mut s, c| {
        let _ = write!(s, "{c:08x}");
        s
    })
}

/// Re-verifies a witness before it is written out.
fn dump_witness(
    path: Option<&PathBuf>,
    parts: &[(&EmbeddingWitness, &GraphTuple, &GraphTuple)],
) -> Result<Vec<WitnessSummary>> {
    let mut summaries = Vec::new();
    for (w, g, h) in parts {
        summaries.push(WitnessSummary {
            mode: w.mode,
            verified: verify_witness(w, g, h, w.mode)?,
            rendering: w.render(),
        });
    }
    if let Some(path) = path {
        if summaries.iter().any(|s| !s.verified) {
            return Err(Error::Precondition("witness failed re-verification".into()));
        }
        let text: String = summaries.iter().map(|s| s.rendering.clone()).collect::<Vec<_>>().join("\n");
        write_file(path, &text)?;
    }
    Ok(summaries)
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let json = cli.json;
    let config = SearchConfig::from_env();
    match &cli.command {
        Command::Rank { file } => {
            let t = load(file)?;
            let r = rank(&t.pres);
            Ok(Outcome::ok(POSITIVE, emit(json, json!({ "rank": r }), || format!("{r}\n"))))
        }
        Command::Kernel { file } => {
            let t = load(file)?;
            let k = kernel(&t.pres)?;
            let text = || k.locations.iter().map(|l| format!("{l}\n")).collect();
            Ok(Outcome::ok(POSITIVE, emit(json, &k, text)))
        }
        Command::Normalize { file } => {
            let t = load(file)?;
            let nf = normalize(&t)?;
            Ok(Outcome::ok(POSITIVE, emit(json, &nf, || serialize(&nf))))
        }
        Command::Canon { file } => {
            let t = load(file)?;
            let code = hex(&canonical_code(&t)?);
            Ok(Outcome::ok(POSITIVE, emit(json, json!({ "code": code }), || format!("{code}\n"))))
        }
        Command::Iso { a, b, witness } => {
            let (g, h) = (load(a)?, load(b)?);
            match iso_tuples(&g, &h)? {
                Some((ng, nh, iso)) => {
                    let w = EmbeddingWitness::from_iso(&ng.pres, &iso, Mode::Strong);
                    let summary = dump_witness(witness.as_ref(), &[(&w, &ng, &nh)])?;
                    let value = json!({ "verdict": "isomorphic", "witness": summary });
                    Ok(Outcome::ok(POSITIVE, emit(json, value, || "isomorphic\n".into())))
                }
                None => {
                    let value = json!({ "verdict": "not-isomorphic" });
                    Ok(Outcome::ok(NEGATIVE, emit(json, value, || "not-isomorphic\n".into())))
                }
            }
        }
        Command::Embed { a, b, mode, witness } => {
            let (g, h) = (load(a)?, load(b)?);
            match embed(&g, &h, *mode, config)? {
                EmbedOutcome::Found(e) => {
                    let summary = dump_witness(witness.as_ref(), &[(&e.witness, &e.source, &e.target)])?;
                    let value = json!({ "verdict": "embeds", "mode": mode, "witness": summary });
                    Ok(Outcome::ok(POSITIVE, emit(json, value, || "embeds\n".into())))
                }
                EmbedOutcome::None(why) => {
                    let value = json!({ "verdict": "no-embedding", "mode": mode, "reason": why });
                    Ok(Outcome::ok(NEGATIVE, emit(json, value, || format!("no-embedding\n{why}\n"))))
                }
                EmbedOutcome::Unknown(why) => {
                    let value = json!({ "verdict": "unknown", "mode": mode, "reason": why });
                    Ok(Outcome::ok(UNKNOWN, emit(json, value, || format!("unknown\n{why}\n"))))
                }
            }
        }
        Command::Twin { a, b, mode, witness } => {
            let (g, h) = (load(a)?, load(b)?);
            let verdict = twin_check(&g, &h, *mode, config)?;
            let label = verdict.label();
            let (code, value) = match &verdict {
                TwinVerdict::Twins { phi, psi } => {
                    let summary = dump_witness(
                        witness.as_ref(),
                        &[(&phi.witness, &phi.source, &phi.target), (&psi.witness, &psi.source, &psi.target)],
                    )?;
                    (POSITIVE, json!({ "verdict": label, "mode": mode, "witnesses": summary }))
                }
                TwinVerdict::Isomorphic(..) => (NEGATIVE, json!({ "verdict": label, "mode": mode })),
                TwinVerdict::NotTwins(why) => (NEGATIVE, json!({ "verdict": label, "mode": mode, "reason": why })),
                TwinVerdict::Unknown(why) => (UNKNOWN, json!({ "verdict": label, "mode": mode, "reason": why })),
            };
            Ok(Outcome::ok(code, emit(json, value, || format!("{label}\n"))))
        }
        Command::Generate { g, h, mode, k, witness_dir } => {
            let (g, h) = (load(g)?, load(h)?);
            match twin_check(&g, &h, *mode, config)? {
                TwinVerdict::Twins { .. } => {}
                TwinVerdict::Unknown(why) => {
                    return Ok(Outcome::ok(UNKNOWN, emit(json, json!({ "verdict": "unknown", "reason": why }), || format!("unknown\n{why}\n"))));
                }
                other => {
                    let label = other.label();
                    return Ok(Outcome::ok(NEGATIVE, emit(json, json!({ "verdict": label }), || format!("{label}\n"))));
                }
            }
            let generation = generate_twins(&g, &h, *mode, *k, config)?;
            let report = write_generation(&generation, witness_dir)?;
            let complete = generation.twins.len() == *k && generation.twins.iter().all(|t| t.verified);
            let text = || {
                let mut s = String::new();
                for r in &report {
                    let _ = writeln!(s, "{} count={} rank={} connected={} verified={}", r.file, r.count, r.rank, r.connected, r.verified);
                }
                s
            };
            Ok(Outcome::ok(if complete { POSITIVE } else { UNKNOWN }, emit(json, &report, text)))
        }
        Command::Truncate { file, n, dot } => {
            let t = load(file)?;
            let g = truncate(&t.pres, *n)?;
            if *dot {
                return Ok(Outcome::ok(POSITIVE, g.to_dot()));
            }
            let vertices: Vec<String> = g.vertices().iter().map(|v| v.to_string()).collect();
            let edges: Vec<(String, String)> = g
                .edges()
                .map(|(a, b)| (vertices[a].clone(), vertices[b].clone()))
                .collect();
            let text = || {
                let mut s = format!("vertices {}\nedges {}\n", vertices.len(), edges.len());
                for (a, b) in &edges {
                    let _ = writeln!(s, "{a} -- {b}");
                }
                s
            };
            Ok(Outcome::ok(POSITIVE, emit(json, json!({ "vertices": vertices, "edges": edges }), text)))
        }
        Command::Check { seeds, trunc } => {
            let report = run_suite(cli.seed..cli.seed + seeds, trunc);
            let text = || {
                let mut s = String::new();
                for (name, t) in &report.checks {
                    let _ = writeln!(s, "{name}: passed {} failed {} skipped {}", t.passed, t.failed, t.skipped);
                }
                for v in &report.violations {
                    let _ = writeln!(s, "violation: {v}");
                }
                s
            };
            let code = if report.ok() { POSITIVE } else { NEGATIVE };
            Ok(Outcome::ok(code, emit(json, &report, text)))
        }
    }
}

/// One line of the generation report.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRecord {
    pub file: String,
    pub count: String,
    pub rank: usize,
    pub connected: bool,
    pub verified: bool,
}

/// Writes each twin with its two witnesses, plus `report.json`.
pub fn write_generation(generation: &Generation, dir: &Path) -> Result<Vec<ReportRecord>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Precondition(format!("creating {}: {e}", dir.display())))?;
    let mut report = Vec::new();
    for (i, twin) in generation.twins.iter().enumerate() {
        let file = format!("twin-{}.rpg", i + 1);
        write_file(&dir.join(&file), &serialize(&twin.tuple))?;
        let witnesses = format!("{}\n{}", twin.into.render(), twin.back.render());
        write_file(&dir.join(format!("twin-{}.witness", i + 1)), &witnesses)?;
        report.push(ReportRecord {
            file,
            count: twin.count.to_string(),
            rank: twin.rank,
            connected: twin.connected,
            verified: twin.verified,
        });
    }
    let text = serde_json::to_string_pretty(&report).expect("serializable") + "\n";
    write_file(&dir.join("report.json"), &text)?;
    Ok(report)
}
