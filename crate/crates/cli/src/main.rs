//! `mdag`: identification and verification for missing-data graphical
//! models from the command line.

mod report;

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mdag_core::graph::VertexId;
use mdag_core::id::{identify, trace_sequence, IdOptions, OutcomeQuery, Query, ReductionStep};
use mdag_core::mdag::{canonical_model, parse_model, CanonicalModel, MDag, VertexRole};
use mdag_core::oracle::verify_identification;

#[derive(Parser, Debug)]
#[command(name = "mdag", version, about = "Identification of target and full laws in missing-data DAG models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Write the report to this file instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Exit with status 1 when the query is not identified.
    #[arg(long, global = true)]
    strict: bool,
    /// Maximum length of a reduction sequence (default 2K + 2).
    #[arg(long, global = true)]
    budget_depth: Option<usize>,
    /// Maximum number of states kept per search level.
    #[arg(long, global = true, default_value_t = mdag_core::id::DEFAULT_FRONTIER)]
    budget_frontier: usize,
    /// Record failed extractions in the search diagnostics.
    #[arg(long, global = true)]
    trace: bool,
    /// Never read a propensity straight from the observed law.
    #[arg(long, global = true)]
    skip_immediate: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum QueryKind {
    Target,
    Full,
    Outcome,
}

#[derive(Args, Debug)]
struct QueryArgs {
    #[arg(long, value_enum, default_value_t = QueryKind::Target)]
    query: QueryKind,
    /// Treatment vertex of an outcome query.
    #[arg(long)]
    treatment: Option<String>,
    /// Base name of the missing outcome of an outcome query.
    #[arg(long)]
    outcome: Option<String>,
    /// Comma-separated covariates of an outcome query.
    #[arg(long, default_value = "")]
    covariates: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mechanism class and every structure witness.
    Analyze { model: String },
    /// Decide identifiability and print the identifying functional.
    Identify {
        model: String,
        #[command(flatten)]
        query: QueryArgs,
        /// Replay a reduction sequence for one indicator instead of
        /// searching, e.g. `R_X1: fix R_X2; marginalize X1(1), X1`.
        #[arg(long)]
        replay: Option<String>,
    },
    /// Check the identifying functional against sampled laws.
    Verify {
        model: String,
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// d-separation: `dsep MODEL X Y [| Z]` with comma-separated sets.
    Dsep {
        model: String,
        #[arg(num_args = 2.., allow_hyphen_values = false)]
        sets: Vec<String>,
        /// Conditioning set, as an alternative to `| Z`.
        #[arg(long)]
        given: Option<String>,
    },
    /// Graphical mechanism class: MCAR, MAR or MNAR.
    Classify { model: String },
    /// Print a built-in model file, or list them without a name.
    Canon { name: Option<String> },
}

/// An input or I/O error; exits with status 2.
struct Failure(String);

struct Outcome {
    report: String,
    /// False when the verdict should fail a `--strict` run.
    identified: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let strict = cli.common.strict;
    match run(&cli).and_then(|o| emit(&cli.common, &o.report).map(|()| o)) {
        Ok(o) if strict && !o.identified => ExitCode::from(1),
        Ok(_) => ExitCode::SUCCESS,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let c = &cli.common;
    let json = c.format == Format::Json;
    let opts = IdOptions {
        max_depth: c.budget_depth,
        max_frontier: c.budget_frontier,
        skip_immediate: c.skip_immediate,
        trace: c.trace,
    };
    if opts.max_frontier == 0 {
        return Err(Failure("--budget-frontier must be positive".into()));
    }
    match &cli.command {
        Command::Analyze { model } => {
            let m = load(model)?;
            Ok(done(report::analyze(&m, json)))
        }
        Command::Classify { model } => {
            let m = load(model)?;
            Ok(done(report::classify(&m, json)))
        }
        Command::Canon { name } => match name {
            None => Ok(done(report::canon_list(json))),
            Some(n) => {
                let c = CanonicalModel::from_str(n).map_err(|e| Failure(e.to_string()))?;
                Ok(done(report::canon(c, &canonical_model(c), json)))
            }
        },
        Command::Dsep { model, sets, given } => {
            let m = load(model)?;
            let (x, y, z) = dsep_sets(sets, given.as_deref())?;
            let report = report::dsep(&m, &x, &y, &z, json).map_err(Failure)?;
            Ok(done(report))
        }
        Command::Identify { model, query, replay } => {
            let m = load(model)?;
            if let Some(spec) = replay {
                let (rk, steps) = parse_replay(&m, spec)?;
                let events = trace_sequence(&m, &rk, &steps);
                let ok = events.last().is_some_and(|e| e.outcome.is_ok());
                return Ok(Outcome {
                    report: report::replay(&rk, &events, json),
                    identified: ok,
                });
            }
            let q = build_query(&m, query)?;
            let r = identify(&m, &q, &opts);
            Ok(Outcome {
                report: report::identify(&m, &r, json),
                identified: r.is_identified(),
            })
        }
        Command::Verify {
            model,
            query,
            trials,
            seed,
        } => {
            let m = load(model)?;
            if *trials == 0 {
                return Err(Failure("--trials must be positive".into()));
            }
            let q = build_query(&m, query)?;
            let r = identify(&m, &q, &opts);
            if !r.is_identified() || r.functional().is_none() {
                return Ok(Outcome {
                    report: report::not_verifiable(&r, json),
                    identified: false,
                });
            }
            let v = verify_identification(&m, &r, *trials, *seed).map_err(|e| Failure(e.to_string()))?;
            Ok(Outcome {
                report: report::verify(&v, json),
                identified: true,
            })
        }
    }
}

fn done(report: String) -> Outcome {
    Outcome {
        report,
        identified: true,
    }
}

/// Reads a model file; `-` reads standard input.
fn load(path: &str) -> Result<MDag, Failure> {
    let text = if path == "-" {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure(format!("standard input: {e}")))?;
        s
    } else {
        fs::read_to_string(path).map_err(|e| Failure(format!("{path}: {e}")))?
    };
    parse_model(&text).map_err(|e| Failure(format!("{path}: {e}")))
}

fn vertex_set(s: &str) -> Result<Vec<VertexId>, Failure> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| VertexId::parse(t).map_err(|e| Failure(e.to_string())))
        .collect()
}

type Sets = (Vec<VertexId>, Vec<VertexId>, Vec<VertexId>);

/// Splits `X Y [| Z]`. The bar may be its own word or glued to a set.
fn dsep_sets(words: &[String], given: Option<&str>) -> Result<Sets, Failure> {
    let joined = words.join(" ");
    let (left, right) = match joined.split_once('|') {
        Some((l, r)) => (l.to_string(), Some(r.to_string())),
        None => (joined.clone(), None),
    };
    let sides: Vec<&str> = left.split_whitespace().collect();
    if sides.len() != 2 {
        return Err(Failure(format!("expected `X Y [| Z]`, got `{joined}`")));
    }
    if right.is_some() && given.is_some() {
        return Err(Failure("give the conditioning set either after `|` or with --given".into()));
    }
    let z_text: String = right
        .map(|r| r.split_whitespace().collect::<Vec<_>>().join(","))
        .or_else(|| given.map(str::to_string))
        .unwrap_or_default();
    let (x, y, z) = (vertex_set(sides[0])?, vertex_set(sides[1])?, vertex_set(&z_text)?);
    if x.is_empty() || y.is_empty() {
        return Err(Failure("X and Y must be non-empty".into()));
    }
    Ok((x, y, z))
}

fn build_query(m: &MDag, a: &QueryArgs) -> Result<Query, Failure> {
    let outcome_flags = a.treatment.is_some() || a.outcome.is_some() || !a.covariates.trim().is_empty();
    match a.query {
        QueryKind::Target | QueryKind::Full if outcome_flags => Err(Failure(
            "--treatment, --outcome and --covariates only apply to --query outcome".into(),
        )),
        QueryKind::Target => Ok(Query::TargetLaw),
        QueryKind::Full => Ok(Query::FullLaw),
        QueryKind::Outcome => {
            let (Some(t), Some(y)) = (&a.treatment, &a.outcome) else {
                return Err(Failure("--query outcome needs --treatment and --outcome".into()));
            };
            let treatment = VertexId::parse(t).map_err(|e| Failure(e.to_string()))?;
            if !m.graph().contains(treatment.as_str()) {
                return Err(Failure(format!("unknown treatment `{t}`")));
            }
            if !m.missing().iter().any(|b| b == y) {
                return Err(Failure(format!("`{y}` is not a declared missing variable")));
            }
            Ok(Query::CounterfactualOutcome(OutcomeQuery {
                treatment,
                outcome: y.clone(),
                covariates: vertex_set(&a.covariates)?,
            }))
        }
    }
}

/// Parses `R_K: fix A, B; marginalize C; fix X(1)`.
fn parse_replay(m: &MDag, spec: &str) -> Result<(VertexId, Vec<ReductionStep>), Failure> {
    let (target, rest) = spec
        .split_once(':')
        .ok_or_else(|| Failure(format!("replay `{spec}`: expected `INDICATOR: STEP; STEP`")))?;
    let rk = VertexId::parse(target.trim()).map_err(|e| Failure(e.to_string()))?;
    if m.role(rk.as_str()) != Some(VertexRole::Indicator) {
        return Err(Failure(format!("`{rk}` is not an indicator")));
    }
    let mut steps = Vec::new();
    for part in rest.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (verb, args) = part.split_once(char::is_whitespace).unwrap_or((part, ""));
        let vs = vertex_set(args)?;
        if vs.is_empty() {
            return Err(Failure(format!("replay step `{part}` names no vertex")));
        }
        if let Some(v) = vs.iter().find(|v| !m.graph().contains(v.as_str())) {
            return Err(Failure(format!("replay step `{part}`: unknown vertex `{v}`")));
        }
        let step = match verb {
            "fix" if vs.len() == 1 && m.role(vs[0].as_str()) == Some(VertexRole::Counterfactual) => {
                ReductionStep::FixProxy { vertex: vs[0].clone() }
            }
            "fix" => ReductionStep::FixIndicator {
                indicators: vs,
                pseudo: false,
            },
            "marginalize" => ReductionStep::Marginalize { vertices: vs },
            other => return Err(Failure(format!("unknown replay step `{other}`"))),
        };
        steps.push(step);
    }
    Ok((rk, steps))
}

/// Writes the report to standard output, or atomically to `--out`.
fn emit(c: &Common, report: &str) -> Result<(), Failure> {
    match &c.out {
        None => {
            let mut out = io::stdout().lock();
            out.write_all(report.as_bytes())
                .and_then(|()| out.flush())
                .map_err(|e| Failure(format!("standard output: {e}")))
        }
        Some(path) => write_atomic(path, report.as_bytes()).map_err(|e| Failure(format!("{}: {e}", path.display()))),
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "not a file path"))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn dsep_bar_forms() {
        for text in ["A B | C,D", "A B |C,D", "A B| C D"] {
            let Ok((x, y, z)) = dsep_sets(&words(text), None) else {
                panic!("{text} rejected");
            };
            assert_eq!((x.len(), y.len(), z.len()), (1, 1, 2), "{text}");
        }
        assert!(dsep_sets(&words("A B C"), None).is_err());
        assert!(dsep_sets(&words("A B | C"), Some("D")).is_err());
    }

    #[test]
    fn replay_steps() {
        let m = canonical_model(CanonicalModel::PartialOrder3);
        let Ok((rk, steps)) = parse_replay(&m, "R_X1: fix R_X2, R_X3; marginalize X1(1), X1; fix X2(1)") else {
            panic!("replay rejected");
        };
        assert_eq!(rk.as_str(), "R_X1");
        assert_eq!(steps.len(), 3);
        assert!(matches!(steps[2], ReductionStep::FixProxy { .. }));
        assert!(parse_replay(&m, "X1(1): fix R_X2").is_err());
        assert!(parse_replay(&m, "R_X1: jump R_X2").is_err());
    }
}
