//! The target law `p(l(1), w)`.

use std::collections::BTreeSet;

use crate::expr::{Functional, FunctionalExpr, Term};
use crate::mdag::{
    counterfactual_name, detect_colluding_paths, detect_criss_cross, detect_self_censoring, MDag, StructureWitness,
    VertexRole,
};

use super::odds_ratio::pair_block;
use super::search::{identify_propensity_with, IdOptions, Requirement};
use super::{Diagnostics, IdResult, PropensityResult, PropensityStatus, Query, Verdict};

/// `p(R=1, l, w)` with every proxy read as its counterfactual.
pub(crate) fn complete_case_atom(m: &MDag) -> FunctionalExpr {
    let head = m
        .observed_law_vertices()
        .iter()
        .map(|v| match m.role(v.as_str()) {
            Some(VertexRole::Indicator) => Term::value(v.as_str(), 1),
            Some(VertexRole::Proxy) => {
                let base = m.base_of(v.as_str()).expect("proxy has a base");
                Term::bound(v.as_str(), counterfactual_name(base).as_str())
            }
            _ => Term::var(v.as_str()),
        })
        .collect();
    FunctionalExpr::atom(head, vec![])
}

/// Evaluates a propensity-like expression on `R = 1` with proxies read as
/// counterfactuals.
pub(crate) fn at_complete_case(m: &MDag, e: &FunctionalExpr) -> FunctionalExpr {
    let mut e = e.clone();
    for r in m.indicators() {
        e = e.substitute_value(r.as_str(), 1);
    }
    for base in m.missing() {
        e = e.rename(base, counterfactual_name(base).as_str());
    }
    e
}

/// Colluding paths through a hidden variable with no indicator collider.
fn hidden_colluding_paths(m: &MDag) -> Vec<StructureWitness> {
    detect_colluding_paths(m)
        .into_iter()
        .filter(|w| {
            let through_hidden = w.vertices.iter().any(|v| m.role(v.as_str()) == Some(VertexRole::Hidden));
            let indicator_collider = (1..w.vertices.len().saturating_sub(1)).any(|i| {
                let v = &w.vertices[i];
                m.role(v.as_str()) == Some(VertexRole::Indicator)
                    && w.edges[i - 1].to == *v
                    && w.edges[i].to == *v
            });
            through_hidden && !indicator_collider
        })
        .collect()
}

/// Structures that rule out identification of the target law.
pub fn target_law_witnesses(m: &MDag) -> Vec<StructureWitness> {
    let mut w = detect_self_censoring(m);
    w.extend(detect_criss_cross(m));
    if m.has_hidden() {
        w.extend(hidden_colluding_paths(m));
    }
    w
}

pub fn identify_target_law(m: &MDag, opts: &IdOptions) -> IdResult {
    let witnesses = target_law_witnesses(m);
    if !witnesses.is_empty() {
        return IdResult::new(Query::TargetLaw, Verdict::ProvablyNotIdentified { witnesses });
    }
    identify_target_law_unchecked(m, opts)
}

pub fn identify_target_law_unchecked(m: &MDag, opts: &IdOptions) -> IdResult {
    let indicators = m.indicators();
    let mut results: Vec<PropensityResult> = Vec::new();
    let mut factors: Vec<Option<FunctionalExpr>> = Vec::new();
    for r in &indicators {
        let (res, found) = identify_propensity_with(m, r, &Requirement::default(), opts);
        factors.push(found.map(|f| f.propensity.expr));
        results.push(res);
    }
    let mut notes = Vec::new();
    let mut paired: BTreeSet<usize> = BTreeSet::new();
    let mut blocks = Vec::new();
    for i in 0..indicators.len() {
        if factors[i].is_some() || paired.contains(&i) {
            continue;
        }
        let r = &indicators[i];
        let mut done = false;
        for (j, other) in indicators.iter().enumerate() {
            if j == i || paired.contains(&j) {
                continue;
            }
            let (child, parent) = if m.graph().has_edge(other.as_str(), r.as_str()) {
                (r, other)
            } else if m.graph().has_edge(r.as_str(), other.as_str()) {
                (other, r)
            } else {
                continue;
            };
            match pair_block(m, child, parent, false, opts) {
                Ok(b) => {
                    let joint = b.expr.substitute_value(child.as_str(), 1).substitute_value(parent.as_str(), 1);
                    let f = Functional::new(at_complete_case(m, &joint), joint_outputs(m, &joint));
                    for (k, partner) in [(i, other), (j, r)] {
                        results[k].status = PropensityStatus::IdentifiedJointly {
                            partner: partner.clone(),
                            functional: f.clone(),
                        };
                    }
                    paired.insert(i);
                    paired.insert(j);
                    blocks.push(joint);
                    done = true;
                    break;
                }
                Err(e) => notes.push(format!("pair ({child}, {parent}): {e}")),
            }
        }
        if !done {
            let mut result = IdResult::new(
                Query::TargetLaw,
                Verdict::NotIdentifiedByProcedure {
                    diagnostics: Diagnostics {
                        notes: vec![format!("no reduction exposes the propensity of {r}")],
                    },
                },
            );
            result.propensities = results;
            result.notes = notes;
            return result;
        }
    }
    let mut denominator: Vec<FunctionalExpr> = factors
        .iter()
        .enumerate()
        .filter(|(i, _)| !paired.contains(i))
        .map(|(_, f)| f.clone().expect("resolved"))
        .collect();
    denominator.extend(blocks);
    let denominator: Vec<FunctionalExpr> = denominator.iter().map(|e| at_complete_case(m, e)).collect();
    let expr = FunctionalExpr::ratio(complete_case_atom(m), FunctionalExpr::product(denominator)).normalized();
    let outputs = m.target_vertices().iter().map(|v| v.to_string()).collect();
    let mut result = IdResult::new(
        Query::TargetLaw,
        Verdict::Identified {
            functional: Some(Functional::new(expr, outputs)),
            pieces: Vec::new(),
        },
    );
    result.propensities = results;
    result.notes = notes;
    result
}

fn joint_outputs(m: &MDag, e: &FunctionalExpr) -> Vec<String> {
    at_complete_case(m, e).free_vars().into_iter().collect()
}
