use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use opetopic::fixtures::{three_type, trivial};
use opetopic::freemon::Tree;
use opetopic::report::Report;
use opetopic::slice::OverSet;
use opetopic::suites;
use opetopic::web::{to_dot, Retyping, Webs};
use opetopic::{Monoid, MonoidSig};

/// Signatures with amalgamation, webs and opetopes.
#[derive(Parser)]
#[command(name = "opetopic", version)]
struct Cli {
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Upper bound on elements materialized by any single law check.
    #[arg(long, global = true, env = "OPETOPIC_CAP", default_value_t = 500)]
    cap: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    All,
    Sig,
    Sigmamon,
    Web,
}

#[derive(Subcommand)]
enum Command {
    /// Run the law suites on built-in and seeded random instances.
    Laws {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Total-node bound for web laws.
        #[arg(long, env = "OPETOPIC_NODE_BOUND", default_value_t = 4)]
        node_bound: usize,
        /// Random instances per randomized suite.
        #[arg(long, env = "OPETOPIC_CASES", default_value_t = 50)]
        cases: usize,
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
    },
    /// Build and validate the terminal opetopic set.
    Opetopes {
        #[arg(long, env = "OPETOPIC_DIM", default_value_t = 3)]
        dim: usize,
        #[arg(long, env = "OPETOPIC_NODE_BOUND", default_value_t = 4)]
        max_nodes: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// With `--format dot`, write one file per opetope into this directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Multiply webs: `{"outer": web, "inners": [web, ..]}` in, ν's result out.
    WebMul {
        input: PathBuf,
        /// Monoid JSON file, or `builtin:NAME`.
        #[arg(long, default_value = "builtin:three-type")]
        monoid: String,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Compare webs acting on a set over M with the free monoid on that set.
    Compare {
        /// Monoid JSON file, or `builtin:NAME`.
        #[arg(long)]
        monoid: String,
        #[arg(long, default_value_t = 2)]
        x_size: usize,
        #[arg(long, env = "OPETOPIC_STAGES", default_value_t = 3)]
        stages: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Reproduce the failed search for a standard retyping of the three-type monoid.
    Counterexample,
}

fn load_monoid(spec: &str) -> anyhow::Result<Arc<dyn Monoid>> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        return Ok(match name {
            "three-type" => three_type().shared(),
            "trivial" => trivial(&["*"]).shared(),
            other => bail!("unknown built-in monoid {other:?}"),
        });
    }
    let text = fs::read_to_string(spec).with_context(|| format!("reading {spec}"))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {spec}"))?;
    Ok(MonoidSig::from_json(&v)?.shared())
}

fn reports_json(reports: &[Report]) -> Value {
    json!({
        "passed": reports.iter().all(Report::passed),
        "reports": reports,
    })
}

/// Output text and whether every check passed.
fn run(cli: &Cli) -> anyhow::Result<(String, bool)> {
    let cap = cli.cap;
    match &cli.command {
        Command::Laws {
            seed,
            node_bound,
            cases,
            suite,
        } => {
            if *node_bound == 0 || *cases == 0 {
                bail!("bounds must be positive");
            }
            let want = |s: Suite| *suite == Suite::All || *suite == s;
            let mut reports = Vec::new();
            if want(Suite::Sig) {
                reports.push(suites::operad_suite(*seed, *cases * 10));
                reports.push(suites::tensor_suite(*seed, *cases, cap));
                reports.push(suites::free_monoid_suite(3, cap).1);
            }
            if want(Suite::Sigmamon) {
                reports.push(suites::odot_suite(*seed, *cases, cap));
                reports.push(suites::distributivity_suite(*seed, *cases, cap));
            }
            if want(Suite::Web) {
                reports.push(suites::web_suite(*node_bound, cap));
                reports.push(suites::three_type_suite()?.2);
            }
            let v = json!({ "seed": seed, "result": reports_json(&reports) });
            Ok((pretty(&v)?, reports.iter().all(Report::passed)))
        }
        Command::Opetopes {
            dim,
            max_nodes,
            format,
            out_dir,
        } => {
            if *dim == 0 || *max_nodes == 0 {
                bail!("bounds must be positive");
            }
            let (t, report) = suites::opetope_suite(*dim, *max_nodes, cap);
            let ok = report.passed();
            let text = match format {
                Format::Json => {
                    let mut v = t.to_json();
                    v["report"] = serde_json::to_value(&report)?;
                    pretty(&v)?
                }
                Format::Dot => {
                    let mut all = String::new();
                    for n in 2..=*dim {
                        for (i, c) in t.cells(n).iter().enumerate() {
                            let w = Tree::from_term(c)?;
                            let name = format!("opetope_{n}_{i}");
                            let dot = to_dot(&w, &name);
                            match out_dir {
                                Some(d) => {
                                    fs::create_dir_all(d)?;
                                    fs::write(d.join(format!("{name}.dot")), &dot)?;
                                }
                                None => all.push_str(&dot),
                            }
                        }
                    }
                    all
                }
            };
            Ok((text, ok))
        }
        Command::WebMul {
            input,
            monoid,
            format,
        } => {
            let m = load_monoid(monoid)?;
            let text = read(input)?;
            let v: Value = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", input.display()))?;
            let outer: Tree =
                serde_json::from_value(v["outer"].clone()).context("reading \"outer\"")?;
            let inners: Vec<Tree> =
                serde_json::from_value(v["inners"].clone()).context("reading \"inners\"")?;
            let r = Webs::new(&m).nu(&outer, &inners)?;
            let text = match format {
                Format::Json => pretty(&r.to_json())?,
                Format::Dot => to_dot(&r.web, "nu"),
            };
            Ok((text, true))
        }
        Command::Compare {
            monoid,
            x_size,
            stages,
            seed,
        } => {
            if *x_size == 0 || *stages == 0 {
                bail!("bounds must be positive");
            }
            let m = load_monoid(monoid)?;
            let x = OverSet::spread(&*m, *x_size)?;
            let (c, report) = suites::comparison_suite(&m, &x, *stages, *seed, cap)?;
            let v = json!({
                "monoid": c.monoid,
                "x": c.x,
                "stages": c.stages,
                "report": report,
                "passed": report.passed(),
            });
            Ok((pretty(&v)?, report.passed()))
        }
        Command::Counterexample => {
            let (instances, search, report) = suites::three_type_suite()?;
            let certificate = match &search {
                Retyping::Infeasible(c) => serde_json::to_value(c)?,
                Retyping::Feasible(_) => Value::Null,
            };
            let v = json!({
                "instances": instances,
                "search": search,
                "certificate": certificate,
                "report": report,
                "passed": report.passed(),
            });
            Ok((pretty(&v)?, report.passed()))
        }
    }
}

fn read(p: &Path) -> anyhow::Result<String> {
    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

fn pretty(v: &Value) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

/// Every failing law result anywhere in a report tree.
fn failures(v: &Value) -> Vec<Value> {
    match v {
        Value::Object(o)
            if o.get("passed") == Some(&Value::Bool(false)) && o.contains_key("law") =>
        {
            vec![v.clone()]
        }
        Value::Object(o) => o.values().flat_map(failures).collect(),
        Value::Array(a) => a.iter().flat_map(failures).collect(),
        _ => Vec::new(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((text, ok)) => {
            let written = match &cli.out {
                Some(p) => fs::write(p, &text).with_context(|| format!("writing {}", p.display())),
                None => {
                    print!("{text}");
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("{}", json!({ "error": format!("{e:#}") }));
                return ExitCode::from(2);
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                let failures: Vec<Value> = serde_json::from_str::<Value>(&text)
                    .map(|v| failures(&v))
                    .unwrap_or_default();
                eprintln!(
                    "{}",
                    json!({ "error": "law failure", "failures": failures })
                );
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": format!("{e:#}") }));
            ExitCode::from(2)
        }
    }
}
