//! Breadth-first search over fixing and marginalization sequences that
//! expose one indicator's propensity.

use std::collections::{BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::expr::{Functional, FunctionalExpr};
use crate::graph::{TopoOrder, VertexId};
use crate::kernel::{Kernel, KernelError, Propensity};
use crate::mdag::{counterfactual_name, proxy_name, MDag, VertexRole};

use super::{partial_order_text, PropensityResult, PropensityStatus, ReductionStep, SearchDiagnostics};

pub const DEFAULT_FRONTIER: usize = 50_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdOptions {
    /// Maximum sequence length; `None` means `2K + 2` for `K` indicators.
    pub max_depth: Option<usize>,
    pub max_frontier: usize,
    /// Do not accept the propensity straight from the observed law.
    pub skip_immediate: bool,
    /// Record every expansion and failed extraction in the diagnostics.
    pub trace: bool,
}

impl Default for IdOptions {
    fn default() -> Self {
        IdOptions {
            max_depth: None,
            max_frontier: DEFAULT_FRONTIER,
            skip_immediate: false,
            trace: false,
        }
    }
}

/// What the caller needs from the propensity.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Requirement {
    /// Indicators and proxies in the tail must stay free variables, so the
    /// propensity is known for every value of `r`, not only at 1.
    pub free_tail: bool,
    /// Tail indicators exempt from `free_tail`.
    pub may_hold: BTreeSet<VertexId>,
}

/// A propensity found by search, before packaging into a result.
#[derive(Clone, Debug)]
pub struct Found {
    pub propensity: Propensity,
    pub steps: Vec<ReductionStep>,
    pub marginalized: Vec<VertexId>,
    pub alternates: Vec<String>,
}

/// Conditioning set of `rk`'s propensity in the model: its parents, or its
/// Markov pillow in the projected graph when there are hidden variables.
pub fn conditioning_set(m: &MDag, rk: &VertexId) -> BTreeSet<VertexId> {
    if m.has_hidden() {
        let k = Kernel::new(m);
        k.graph()
            .markov_pillow(rk.as_str(), &k.order())
            .expect("indicator is in the projected graph")
    } else {
        m.graph().parents(rk.as_str()).expect("indicator is in the graph")
    }
}

/// Reads `rk`'s propensity from `k` with its tail mapped through merges.
/// Fixed counterfactual arguments outside the tail are set to their first
/// state; the propensity does not depend on them.
pub fn extract(
    k: &Kernel<'_>,
    rk: &VertexId,
    cond: &BTreeSet<VertexId>,
    req: &Requirement,
) -> Result<Propensity, KernelError> {
    if req.free_tail {
        // A merged proxy parent is only known where its indicator is 1.
        for v in cond {
            if let (Some(VertexRole::Proxy), Some(base)) = (k.model().role(v.as_str()), k.model().base_of(v.as_str())) {
                let r = crate::mdag::indicator_name(base);
                if k.is_merged(base) && !req.may_hold.contains(&r) {
                    return Err(KernelError::NotCompilable {
                        vertex: v.clone(),
                        reason: format!("merged into its counterfactual after fixing {r}"),
                    });
                }
            }
        }
    }
    let tail: BTreeSet<VertexId> = cond.iter().map(|v| k.mapped(v)).collect();
    let mut p = k.propensity(rk, &tail, true, &BTreeSet::new())?;
    if req.free_tail {
        super::odds_ratio::tail_is_free(k.model(), &p, &req.may_hold).map_err(|reason| KernelError::NotCompilable {
            vertex: rk.clone(),
            reason,
        })?;
    }
    let tail_vars: BTreeSet<String> = p.tail_vars.iter().flatten().cloned().collect();
    for (v, val) in k.fixed() {
        if val.is_none() && !tail_vars.contains(v.as_str()) {
            p.expr = p.expr.substitute_value(v.as_str(), 0);
        }
    }
    Ok(p)
}

fn subsets(items: &[VertexId]) -> Vec<Vec<VertexId>> {
    let n = items.len();
    let mut out: Vec<Vec<VertexId>> = (1u32..(1 << n))
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).map(|i| items[i].clone()).collect())
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

enum Action {
    Fix(Vec<VertexId>),
    Marginalize(Vec<VertexId>),
}

fn candidates(k: &Kernel<'_>, rk: &VertexId, cond: &BTreeSet<VertexId>) -> Vec<Action> {
    let m = k.model();
    let free: Vec<VertexId> = m
        .indicators()
        .into_iter()
        .filter(|r| r != rk && k.is_random(r.as_str()) && !k.selection().contains(r))
        .collect();
    let mut out: Vec<Action> = subsets(&free).into_iter().map(Action::Fix).collect();
    for base in m.missing() {
        let cf = counterfactual_name(base);
        if k.is_merged(base) && k.is_random(cf.as_str()) {
            out.push(Action::Fix(vec![cf]));
        }
    }
    let mapped: BTreeSet<VertexId> = cond.iter().map(|v| k.mapped(v)).collect();
    let mut units: Vec<Vec<VertexId>> = Vec::new();
    for base in m.missing() {
        let unit: Vec<VertexId> = [counterfactual_name(base), proxy_name(base)]
            .into_iter()
            .filter(|v| k.graph().contains(v.as_str()))
            .collect();
        units.push(unit);
    }
    for w in m.observed_vertices() {
        if k.graph().contains(w.as_str()) {
            units.push(vec![w]);
        }
    }
    for unit in units {
        if unit.is_empty()
            || unit.iter().any(|v| mapped.contains(v) || !k.is_random(v.as_str()))
        {
            continue;
        }
        out.push(Action::Marginalize(unit));
    }
    out
}

fn describe(k: &Kernel<'_>) -> String {
    if k.steps().is_empty() {
        "observed law".to_string()
    } else {
        k.steps().iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ")
    }
}

/// Searches for a sequence after which `rk`'s propensity can be read.
pub fn search(
    m: &MDag,
    rk: &VertexId,
    cond: &BTreeSet<VertexId>,
    req: &Requirement,
    opts: &IdOptions,
    diag: &mut SearchDiagnostics,
) -> Option<Found> {
    let start = Kernel::new(m);
    let budget = opts.max_depth.unwrap_or(2 * m.missing().len() + 2);
    let note = |diag: &mut SearchDiagnostics, s: String| {
        if opts.trace {
            diag.notes.push(s);
        }
    };
    if !opts.skip_immediate {
        diag.states_visited += 1;
        match extract(&start, rk, cond, req) {
            Ok(p) => {
                return Some(Found {
                    propensity: p,
                    steps: Vec::new(),
                    marginalized: Vec::new(),
                    alternates: Vec::new(),
                })
            }
            Err(e) => note(diag, format!("depth 0 [observed law]: extract {rk}: {e}")),
        }
    }
    if m.has_hidden() && !start.graph().siblings(rk.as_str()).map(|s| s.is_empty()).unwrap_or(false) {
        diag.notes.push(format!("{rk} has a bidirected edge after projecting hidden variables; no search"));
        return None;
    }
    let mut seen: HashSet<_> = HashSet::new();
    seen.insert(start.key());
    let mut frontier: VecDeque<(Kernel<'_>, usize)> = VecDeque::new();
    frontier.push_back((start, 0));
    let mut found: Option<(Found, usize)> = None;
    while let Some((k, depth)) = frontier.pop_front() {
        if let Some((_, d)) = &found {
            if depth > *d {
                break;
            }
        }
        if depth > 0 {
            diag.states_visited += 1;
            diag.depth_reached = diag.depth_reached.max(depth);
            match extract(&k, rk, cond, req) {
                Ok(p) => {
                    if let Some((f, _)) = &mut found {
                        f.alternates.push(partial_order_text(k.steps(), rk));
                    } else {
                        found = Some((
                            Found {
                                propensity: p,
                                steps: k.steps().to_vec(),
                                marginalized: k.marginalized().iter().cloned().collect(),
                                alternates: Vec::new(),
                            },
                            depth,
                        ));
                    }
                    continue;
                }
                Err(e) => note(diag, format!("depth {depth} [{}]: extract {rk}: {e}", describe(&k))),
            }
        }
        if found.is_some() || depth >= budget {
            continue;
        }
        for action in candidates(&k, rk, cond) {
            let mut next = k.clone();
            let res = match &action {
                Action::Fix(vs) => next.fix(vs),
                Action::Marginalize(vs) => next.marginalize(vs),
            };
            if let Err(e) = res {
                let what = match &action {
                    Action::Fix(vs) => format!("fix {vs:?}"),
                    Action::Marginalize(vs) => format!("marginalize {vs:?}"),
                };
                note(diag, format!("depth {depth} [{}]: {what}: {e}", describe(&k)));
                continue;
            }
            if !seen.insert(next.key()) {
                continue;
            }
            if frontier.len() >= opts.max_frontier {
                diag.budget_exhausted = true;
                continue;
            }
            frontier.push_back((next, depth + 1));
            diag.frontier_peak = diag.frontier_peak.max(frontier.len());
        }
    }
    if found.is_none() && !frontier.is_empty() {
        diag.budget_exhausted = true;
    }
    found.map(|(f, _)| f)
}

/// Output variables of a found propensity: tail variables, then the head.
pub fn propensity_functional(p: &Propensity) -> Functional {
    let mut outputs: Vec<String> = p.tail_vars.iter().flatten().cloned().collect();
    outputs.push(p.head_var.clone());
    Functional::new(p.expr.clone(), outputs)
}

/// Identifies the propensity of `rk` given its parents (or Markov pillow).
pub fn identify_propensity(m: &MDag, rk: &VertexId, opts: &IdOptions) -> PropensityResult {
    identify_propensity_with(m, rk, &Requirement::default(), opts).0
}

pub(crate) fn identify_propensity_with(
    m: &MDag,
    rk: &VertexId,
    req: &Requirement,
    opts: &IdOptions,
) -> (PropensityResult, Option<Found>) {
    let cond = conditioning_set(m, rk);
    let mut diag = SearchDiagnostics::default();
    let found = search(m, rk, &cond, req, opts, &mut diag);
    let status = match &found {
        Some(f) => PropensityStatus::Identified {
            functional: propensity_functional(&f.propensity),
            sequence: f.steps.clone(),
            marginalized: f.marginalized.clone(),
            partial_order: partial_order_text(&f.steps, rk),
            alternates: f.alternates.clone(),
        },
        None => PropensityStatus::Unresolved { diagnostics: diag },
    };
    (
        PropensityResult {
            indicator: rk.clone(),
            conditioning: cond.into_iter().collect(),
            status,
        },
        found,
    )
}

/// Replays a fixed sequence of steps and reports, after each step, whether
/// `rk`'s propensity can be read. Errors from a step end the replay.
pub fn trace_sequence(m: &MDag, rk: &VertexId, steps: &[ReductionStep]) -> Vec<TraceEvent> {
    let cond = conditioning_set(m, rk);
    let mut k = Kernel::new(m);
    let mut out = vec![TraceEvent::from_extract(&k, rk, &cond, None)];
    for s in steps {
        let res = match s {
            ReductionStep::FixIndicator { indicators, .. } => k.fix(indicators),
            ReductionStep::FixProxy { vertex } => k.fix(std::slice::from_ref(vertex)),
            ReductionStep::Marginalize { vertices } => k.marginalize(vertices),
            ReductionStep::ConsistencySwap { .. } => Ok(()),
        };
        if let Err(e) = res {
            out.push(TraceEvent {
                step: Some(s.clone()),
                selection: k.selection().iter().cloned().collect(),
                outcome: Err(e),
            });
            return out;
        }
        out.push(TraceEvent::from_extract(&k, rk, &cond, Some(s.clone())));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceEvent {
    /// Step just applied; `None` for the observed law.
    pub step: Option<ReductionStep>,
    pub selection: Vec<VertexId>,
    /// Extraction result, or the error of the step itself.
    pub outcome: Result<FunctionalExpr, KernelError>,
}

impl TraceEvent {
    fn from_extract(k: &Kernel<'_>, rk: &VertexId, cond: &BTreeSet<VertexId>, step: Option<ReductionStep>) -> Self {
        TraceEvent {
            step,
            selection: k.selection().iter().cloned().collect(),
            outcome: extract(k, rk, cond, &Requirement::default()).map(|p| p.expr),
        }
    }
}

/// Order used when the caller does not supply one.
pub fn default_indicator_order(m: &MDag) -> Vec<VertexId> {
    let order: TopoOrder = m.canonical_order();
    order
        .as_slice()
        .iter()
        .filter(|v| m.role(v.as_str()) == Some(VertexRole::Indicator))
        .cloned()
        .collect()
}
