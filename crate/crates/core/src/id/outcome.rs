//! `p(Y(1))` under an intervention on a fully observed treatment, with a
//! missing outcome and fully observed covariates.

use std::collections::BTreeSet;

use crate::expr::{Functional, FunctionalExpr, Term};
use crate::graph::{Digraph, VertexId};
use crate::mdag::{counterfactual_name, indicator_name, proxy_name, MDag, VertexRole};

use super::{Diagnostics, IdResult, OutcomeQuery, Query, Verdict};

fn not_identified(q: &OutcomeQuery, notes: Vec<String>) -> IdResult {
    IdResult::new(
        Query::CounterfactualOutcome(q.clone()),
        Verdict::NotIdentifiedByProcedure {
            diagnostics: Diagnostics { notes },
        },
    )
}

/// The graph with the treatment's outgoing edges moved to a new vertex
/// standing for the intervened value.
fn split_treatment(g: &Digraph, a: &VertexId, value: &VertexId) -> Result<Digraph, String> {
    let mut vertices: Vec<VertexId> = g.vertices().cloned().collect();
    vertices.push(value.clone());
    let directed = g
        .directed_edges()
        .into_iter()
        .map(|(x, y)| if &x == a { (value.clone(), y) } else { (x, y) });
    Digraph::new(vertices, directed, g.bidirected_edges()).map_err(|e| e.to_string())
}

/// Checks the adjustment conditions and returns
/// `sum_x p(Y=Y(1) | x, a, R_Y=1) p(x | R_Y=1)` with outputs `(Y(1), A)`.
pub fn identify_counterfactual_outcome(m: &MDag, q: &OutcomeQuery) -> IdResult {
    let mut problems = Vec::new();
    let observed = |v: &VertexId| m.role(v.as_str()) == Some(VertexRole::Observed);
    if !observed(&q.treatment) {
        problems.push(format!("treatment {} must be a fully observed variable", q.treatment));
    }
    for x in &q.covariates {
        if !observed(x) {
            problems.push(format!("covariate {x} must be a fully observed variable"));
        }
    }
    if !m.missing().contains(&q.outcome) {
        problems.push(format!("outcome {} must be a missing variable", q.outcome));
    }
    if !problems.is_empty() {
        return not_identified(q, problems);
    }
    let g = m.graph();
    let r = indicator_name(&q.outcome);
    let y = counterfactual_name(&q.outcome);
    let de = g.descendants_of([&q.treatment]).expect("treatment in graph");
    if de.contains(&r) {
        problems.push(format!("{r} descends from {}", q.treatment));
    }
    for x in &q.covariates {
        if de.contains(x) {
            problems.push(format!("covariate {x} descends from {}", q.treatment));
        }
    }
    if !problems.is_empty() {
        return not_identified(q, problems);
    }
    let value = VertexId::new(format!("{}_value", q.treatment));
    let split = match split_treatment(g, &q.treatment, &value) {
        Ok(s) => s,
        Err(e) => return not_identified(q, vec![e]),
    };
    let a_set: BTreeSet<&VertexId> = [&value].into_iter().collect();
    if !split.d_separated([&y], [&r], a_set.iter().copied()).expect("vertices exist") {
        problems.push(format!("{y} is not independent of {r} under the intervention"));
    }
    let mut given: BTreeSet<&VertexId> = q.covariates.iter().collect();
    given.insert(&r);
    given.insert(&value);
    if !split.d_separated([&y], [&q.treatment], given.iter().copied()).expect("vertices exist") {
        problems.push(format!(
            "{y} is not independent of {} given the covariates and {r}",
            q.treatment
        ));
    }
    if !problems.is_empty() {
        return not_identified(q, problems);
    }
    let mut given_y: Vec<Term> = q.covariates.iter().map(|x| Term::var(x.as_str())).collect();
    given_y.push(Term::var(q.treatment.as_str()));
    given_y.push(Term::value(r.as_str(), 1));
    let outcome = FunctionalExpr::atom(vec![Term::bound(proxy_name(&q.outcome).as_str(), y.as_str())], given_y);
    let covariates = FunctionalExpr::atom(
        q.covariates.iter().map(|x| Term::var(x.as_str())).collect(),
        vec![Term::value(r.as_str(), 1)],
    );
    let xs: Vec<&str> = q.covariates.iter().map(|x| x.as_str()).collect();
    let expr = if xs.is_empty() {
        outcome
    } else {
        FunctionalExpr::sum(&xs, FunctionalExpr::product(vec![outcome, covariates]))
    };
    IdResult::new(
        Query::CounterfactualOutcome(q.clone()),
        Verdict::Identified {
            functional: Some(Functional::new(expr, vec![y.to_string(), q.treatment.to_string()])),
            pieces: Vec::new(),
        },
    )
}
