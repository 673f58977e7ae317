//! Text and JSON renderings of the reports.

use std::fmt::Write as _;

use mdag_core::expr::SCHEMA_VERSION;
use mdag_core::graph::VertexId;
use mdag_core::id::{full_law_witnesses, target_law_witnesses, IdResult, PropensityStatus, TraceEvent, Verdict};
use mdag_core::mdag::{
    detect_colluders, detect_colluding_paths, detect_criss_cross, detect_self_censoring, CanonicalModel, MDag,
    StructureWitness,
};
use mdag_core::oracle::{model_hash, VerifyReport};
use serde_json::{json, Value};

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

fn list<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn witness_lines(out: &mut String, label: &str, ws: &[StructureWitness]) {
    if ws.is_empty() {
        let _ = writeln!(out, "{label}: none");
        return;
    }
    let _ = writeln!(out, "{label}:");
    for w in ws {
        let _ = writeln!(out, "  {}", list(&w.edges));
    }
}

pub fn analyze(m: &MDag, json: bool) -> String {
    let groups = [
        ("self_censoring", detect_self_censoring(m)),
        ("colluders", detect_colluders(m)),
        ("criss_cross", detect_criss_cross(m)),
        ("colluding_paths", detect_colluding_paths(m)),
    ];
    let target = target_law_witnesses(m);
    let full = full_law_witnesses(m);
    if json {
        let mut w = serde_json::Map::new();
        for (k, v) in &groups {
            w.insert(k.to_string(), serde_json::to_value(v).expect("witnesses serialize"));
        }
        return pretty(&json!({
            "schema_version": SCHEMA_VERSION,
            "model_hash": model_hash(m),
            "missing": m.missing(),
            "observed": m.observed(),
            "hidden": m.hidden(),
            "mechanism": m.classify_mechanism(),
            "witnesses": w,
            "target_law_ruled_out": !target.is_empty(),
            "full_law_ruled_out": !full.is_empty(),
        }));
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "missing: {}\nobserved: {}\nhidden: {}",
        or_none(m.missing()),
        or_none(m.observed()),
        or_none(m.hidden())
    );
    let _ = writeln!(out, "mechanism: {}", m.classify_mechanism());
    for (label, ws) in [
        ("self-censoring", &groups[0].1),
        ("colluders", &groups[1].1),
        ("criss-cross", &groups[2].1),
        ("colluding paths", &groups[3].1),
    ] {
        witness_lines(&mut out, label, ws);
    }
    for (label, ws) in [("target law", &target), ("full law", &full)] {
        let _ = if ws.is_empty() {
            writeln!(out, "{label}: no structural obstruction")
        } else {
            writeln!(out, "{label}: not identified ({} witness{})", ws.len(), if ws.len() == 1 { "" } else { "es" })
        };
    }
    out
}

fn or_none(xs: &[String]) -> String {
    if xs.is_empty() {
        "none".into()
    } else {
        xs.join(", ")
    }
}

pub fn classify(m: &MDag, json: bool) -> String {
    if json {
        pretty(&json!({ "schema_version": SCHEMA_VERSION, "mechanism": m.classify_mechanism() }))
    } else {
        format!("{}\n", m.classify_mechanism())
    }
}

pub fn canon_list(json: bool) -> String {
    let names: Vec<&str> = CanonicalModel::ALL.iter().map(|c| c.name()).collect();
    if json {
        pretty(&json!({ "schema_version": SCHEMA_VERSION, "models": names }))
    } else {
        names.iter().map(|n| format!("{n}\n")).collect()
    }
}

pub fn canon(c: CanonicalModel, m: &MDag, json: bool) -> String {
    let text = m.to_model_text();
    if json {
        pretty(&json!({ "schema_version": SCHEMA_VERSION, "name": c.name(), "model": text }))
    } else {
        format!("# {}\n{text}", c.name())
    }
}

pub fn dsep(m: &MDag, x: &[VertexId], y: &[VertexId], z: &[VertexId], json: bool) -> Result<String, String> {
    let g = m.graph();
    let trail = g.d_connecting_trail(x, y, z).map_err(|e| e.to_string())?;
    let separated = trail.is_none();
    if json {
        return Ok(pretty(&json!({
            "schema_version": SCHEMA_VERSION,
            "x": x, "y": y, "z": z,
            "separated": separated,
            "open_trail": trail,
        })));
    }
    let mut out = format!("{{{}}} _||_ {{{}}} | {{{}}}: {separated}\n", list(x), list(y), list(z));
    match trail {
        None => out.push_str("every trail is blocked\n"),
        Some(t) => {
            let _ = writeln!(out, "open trail: {}", trail_text(m, &t));
        }
    }
    Ok(out)
}

/// Renders a trail with its edge marks, e.g. `A -> B <-> C`.
fn trail_text(m: &MDag, t: &[VertexId]) -> String {
    let g = m.graph();
    let mut s = t.first().map(|v| v.to_string()).unwrap_or_default();
    for w in t.windows(2) {
        let (a, b) = (w[0].as_str(), w[1].as_str());
        let mark = if g.has_edge(a, b) {
            "->"
        } else if g.has_edge(b, a) {
            "<-"
        } else {
            "<->"
        };
        let _ = write!(s, " {mark} {b}");
    }
    s
}

pub fn identify(m: &MDag, r: &IdResult, json: bool) -> String {
    if json {
        let mut s = r.to_json();
        s.push('\n');
        return s;
    }
    let mut out = String::new();
    let _ = writeln!(out, "query: {}", r.query);
    let _ = writeln!(out, "verdict: {}", r.verdict.name());
    match &r.verdict {
        Verdict::Identified { functional, pieces } => {
            match functional {
                Some(f) => {
                    let _ = writeln!(out, "functional: {f}");
                }
                None => {
                    let _ = writeln!(out, "functional: not assembled for {} missing variables", m.missing().len());
                }
            }
            if !pieces.is_empty() {
                let _ = writeln!(out, "pieces:");
                for p in pieces {
                    let _ = writeln!(out, "  {} = {}", p.name, p.functional);
                }
            }
        }
        Verdict::ProvablyNotIdentified { witnesses } => {
            let _ = writeln!(out, "witnesses:");
            for w in witnesses {
                let _ = writeln!(out, "  {w}");
            }
        }
        Verdict::NotIdentifiedByProcedure { diagnostics } => {
            for n in &diagnostics.notes {
                let _ = writeln!(out, "  {n}");
            }
        }
    }
    if !r.propensities.is_empty() {
        let _ = writeln!(out, "propensities:");
    }
    for p in &r.propensities {
        let _ = write!(out, "  p({} | {}): ", p.indicator, list(&p.conditioning));
        match &p.status {
            PropensityStatus::Identified {
                functional,
                partial_order,
                alternates,
                ..
            } => {
                let _ = writeln!(out, "{partial_order}");
                let _ = writeln!(out, "    = {functional}");
                for a in alternates {
                    let _ = writeln!(out, "    also {a}");
                }
            }
            PropensityStatus::IdentifiedJointly { partner, functional } => {
                let _ = writeln!(out, "jointly with {partner}");
                let _ = writeln!(out, "    = {functional}");
            }
            PropensityStatus::Unresolved { diagnostics: d } => {
                let _ = writeln!(
                    out,
                    "unresolved ({} states, depth {}{})",
                    d.states_visited,
                    d.depth_reached,
                    if d.budget_exhausted { ", budget exhausted" } else { "" }
                );
                for n in &d.notes {
                    let _ = writeln!(out, "    {n}");
                }
            }
        }
    }
    for n in &r.notes {
        let _ = writeln!(out, "note: {n}");
    }
    out
}

pub fn replay(rk: &VertexId, events: &[TraceEvent], json: bool) -> String {
    if json {
        let evs: Vec<Value> = events
            .iter()
            .map(|e| {
                let mut v = json!({
                    "step": e.step,
                    "selection": e.selection,
                });
                match &e.outcome {
                    Ok(f) => v["propensity"] = json!(f.to_string()),
                    Err(err) => v["error"] = json!(err.to_string()),
                }
                v
            })
            .collect();
        return pretty(&json!({ "schema_version": SCHEMA_VERSION, "indicator": rk, "events": evs }));
    }
    let mut out = format!("replay for {rk}:\n");
    for e in events {
        let step = e.step.as_ref().map(|s| s.to_string()).unwrap_or_else(|| "observed law".into());
        let _ = write!(out, "  {step} [selection {{{}}}]: ", list(&e.selection));
        let _ = match &e.outcome {
            Ok(f) => writeln!(out, "{f}"),
            Err(err) => writeln!(out, "{err}"),
        };
    }
    out
}

pub fn verify(v: &VerifyReport, json: bool) -> String {
    if json {
        let mut s = serde_json::to_string_pretty(v).expect("report serializes");
        s.push('\n');
        return s;
    }
    let mut out = String::new();
    let _ = writeln!(out, "query: {}", v.query);
    let _ = writeln!(out, "model hash: {}", v.model_hash);
    let _ = writeln!(out, "generator: {} (seed {})", v.generator, v.seed);
    let _ = writeln!(out, "trials: {}", v.trials.len());
    let _ = match v.worst_trial {
        Some(t) => writeln!(out, "max error: {:e} (trial {t})", v.max_error),
        None => writeln!(out, "max error: {:e}", v.max_error),
    };
    out
}

pub fn not_verifiable(r: &IdResult, json: bool) -> String {
    if json {
        return pretty(&json!({
            "schema_version": SCHEMA_VERSION,
            "query": r.query,
            "verdict": r.verdict.name(),
            "verified": false,
        }));
    }
    format!("query: {}\nverdict: {}\nnothing to verify\n", r.query, r.verdict.name())
}
