use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};
use stitch_core::corpus;
use stitch_core::lang::{self, expr_to_string, program_to_string, Method, Program};
use stitch_core::localize::{annotate, localize, LocalizeOptions};
use stitch_core::mutate::{Catalog, Operator};
use stitch_core::repair::{repair, Localization, RepairConfig};
use stitch_core::verify::{detect_many, Detection, VerifyOptions};
use stitch_core::Scope;

/// Exit code for usage and internal errors.
const ERROR_EXIT: u8 = 3;

#[derive(Parser)]
#[command(name = "stitch", version, about = "Bounded-exhaustive repair of contract-annotated methods")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Look for inputs in scope that violate the contract.
    Detect {
        #[command(flatten)]
        common: Common,
        /// Number of distinct counterexamples to report.
        #[arg(long, default_value_t = 1)]
        cexs: usize,
    },
    /// Blame statements using unsat cores of failing runs.
    Localize {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        cexs: usize,
        /// Fraction of cores a statement must appear in.
        #[arg(long, default_value_t = 1.0)]
        threshold: f64,
        /// Budget written for blamed statements in the printed source.
        #[arg(long, default_value_t = 1)]
        budget: u32,
    },
    /// Dump the mutation list of every statement with a budget.
    Mutants {
        #[command(flatten)]
        common: Common,
        /// Give every mutable statement this budget instead of the annotations.
        #[arg(long)]
        budget: Option<u32>,
    },
    /// Search for a fix.
    Repair {
        #[command(flatten)]
        common: Common,
        /// Localize with unsat cores and give each blamed statement this
        /// budget. Without it the source annotations are used.
        #[arg(long)]
        budget: Option<u32>,
        #[arg(long, default_value_t = 1.0)]
        threshold: f64,
        #[arg(long)]
        max_depth: Option<usize>,
        #[arg(long, value_enum, default_value_t = Switch::On)]
        prune: Switch,
        /// Seconds before giving up.
        #[arg(long)]
        timeout: Option<u64>,
        /// Keep searching after the first fix.
        #[arg(long)]
        explore_all: bool,
    },
    /// Write the seeded benchmark cases to a directory.
    Corpus {
        dir: PathBuf,
        #[arg(long, default_value_t = 3)]
        draws: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct Common {
    file: PathBuf,
    #[arg(long)]
    method: String,
    /// Objects per record type.
    #[arg(long)]
    scope: Option<u32>,
    #[arg(long)]
    int_width: Option<u32>,
    #[arg(long)]
    unroll: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated mutation operators, e.g. `AORB,ROR`.
    #[arg(long, value_delimiter = ',')]
    ops: Vec<Operator>,
    /// TOML file with defaults; see `docs/report.md`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the JSON result here as well as to stdout.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    operators: Option<Vec<String>>,
    scope: Option<u32>,
    int_width: Option<u32>,
    unroll: Option<u32>,
    max_depth: Option<usize>,
}

struct Loaded {
    prog: Program,
    method: Method,
    scope: Scope,
    catalog: Catalog,
    file: FileConfig,
}

fn load(c: &Common) -> Result<Loaded> {
    let file = match &c.config {
        Some(p) => toml::from_str(&std::fs::read_to_string(p).with_context(|| p.display().to_string())?)
            .with_context(|| format!("{}: bad config", p.display()))?,
        None => FileConfig::default(),
    };
    let src = std::fs::read_to_string(&c.file).with_context(|| c.file.display().to_string())?;
    let prog = lang::load(&src)
        .map_err(|e| anyhow!("{}:{e}", c.file.display()))?
        .into_program();
    let method = prog
        .method(&c.method)
        .ok_or_else(|| anyhow!("no method named `{}`", c.method))?
        .clone();
    let d = Scope::default();
    let scope = Scope::new(
        c.scope.or(file.scope).unwrap_or(d.objects),
        c.int_width.or(file.int_width).unwrap_or(d.int_width),
        c.unroll.or(file.unroll).unwrap_or(d.unroll),
    )?;
    let ops: Vec<Operator> = if !c.ops.is_empty() {
        c.ops.clone()
    } else if let Some(names) = &file.operators {
        names.iter().map(|n| n.parse()).collect::<Result<_, _>>()?
    } else {
        Operator::ALL.to_vec()
    };
    Ok(Loaded {
        prog,
        method,
        scope,
        catalog: Catalog::with_ops(ops),
        file,
    })
}

fn emit(report: Option<&Path>, v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v)?;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
        _ => {}
    }
    if let Some(p) = report {
        std::fs::write(p, text + "\n").with_context(|| p.display().to_string())?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    match cli.cmd {
        Cmd::Detect { common, cexs } => {
            let l = load(&common)?;
            let opts = VerifyOptions {
                seed: common.seed,
                ..VerifyOptions::default()
            };
            let (found, d) = detect_many(&l.prog, &l.method, l.scope, cexs.max(1), &opts)?;
            let (verdict, code, vacuous) = match d {
                Detection::Correct { vacuous } => ("correct", 0, vacuous),
                Detection::Faulty(_) => ("faulty", 1, false),
                Detection::Unknown => ("unknown", 2, false),
            };
            let list: Vec<Value> = found
                .iter()
                .map(|c| json!({"input": c.input, "outcome": c.outcome, "trace": c.trace}))
                .collect();
            emit(
                common.report.as_deref(),
                &json!({"method": l.method.name, "scope": l.scope, "verdict": verdict,
                        "vacuous": vacuous, "counterexamples": list}),
            )?;
            Ok(code)
        }
        Cmd::Localize {
            common,
            cexs,
            threshold,
            budget,
        } => {
            let l = load(&common)?;
            let opts = VerifyOptions {
                seed: common.seed,
                ..VerifyOptions::default()
            };
            let (found, _) = detect_many(&l.prog, &l.method, l.scope, cexs.max(1), &opts)?;
            if found.is_empty() {
                bail!("`{}` has no counterexample in scope", l.method.name);
            }
            let inputs: Vec<_> = found.iter().map(|c| c.input.clone()).collect();
            let lo = LocalizeOptions {
                threshold,
                seed: common.seed,
                ..LocalizeOptions::default()
            };
            let r = localize(&l.prog, &l.method, l.scope, &inputs, &lo)?;
            let annotated = l.prog.with_method(annotate(&l.method, &r, budget));
            emit(
                common.report.as_deref(),
                &json!({"method": l.method.name, "report": r, "annotated": program_to_string(&annotated)}),
            )?;
            Ok(0)
        }
        Cmd::Mutants { common, budget } => {
            let l = load(&common)?;
            let m = match budget {
                Some(b) => {
                    let all = l.method.statements().iter().map(|s| (s.id, b)).collect();
                    l.method.with_budgets(&all)
                }
                None => l.method.clone(),
            };
            let table = l.catalog.obtain_mutants(&l.prog, &m);
            let stmts: Vec<Value> = table
                .positions
                .iter()
                .zip(&table.lists)
                .enumerate()
                .map(|(pos, (id, list))| {
                    let muts: Vec<Value> = list
                        .iter()
                        .enumerate()
                        .map(|(j, mu)| {
                            json!({"index": j + 1, "operator": mu.op.to_string(),
                                   "site": format!("{:?}", mu.site), "description": mu.describe(),
                                   "expr": expr_to_string(&mu.expr)})
                        })
                        .collect();
                    json!({"position": pos + 1, "statement": id,
                           "budget": m.statement(*id).map(|s| s.budget), "mutations": muts})
                })
                .collect();
            emit(
                common.report.as_deref(),
                &json!({"method": m.name, "statements": stmts, "single_mutations": table.single_mutations()}),
            )?;
            Ok(0)
        }
        Cmd::Repair {
            common,
            budget,
            threshold,
            max_depth,
            prune,
            timeout,
            explore_all,
        } => {
            let l = load(&common)?;
            let d = RepairConfig::default();
            let cfg = RepairConfig {
                scope: l.scope,
                max_depth: max_depth.or(l.file.max_depth).unwrap_or(d.max_depth),
                prune: prune == Switch::On,
                catalog: l.catalog.clone(),
                localization: match budget {
                    Some(budget) => Localization::UnsatCore { budget, threshold },
                    None => Localization::Annotations,
                },
                seed: common.seed,
                timeout: timeout.map(Duration::from_secs),
                explore_all,
                ..d
            };
            let r = repair(&l.prog, &l.method.name, &cfg)?;
            for line in &r.feedback_log {
                eprintln!("{line}");
            }
            emit(common.report.as_deref(), &serde_json::from_str(&r.to_json())?)?;
            Ok(r.outcome.exit_code() as u8)
        }
        Cmd::Corpus { dir, draws } => {
            let cases = corpus::manifest(draws)?;
            corpus::export(&cases, &dir)?;
            println!("wrote {} cases to {}", cases.len(), dir.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { ERROR_EXIT } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(ERROR_EXIT)
        }
    }
}
