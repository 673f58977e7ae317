//! The full law `p(l(1), w, r)`.

use std::collections::BTreeSet;

use crate::expr::{Functional, FunctionalExpr};
use crate::mdag::{detect_colluders, detect_colluding_paths, detect_self_censoring, MDag, StructureWitness};

use super::odds_ratio::pair_block;
use super::search::{identify_propensity_with, IdOptions, Requirement};
use super::target::complete_case_atom;
use super::{Diagnostics, IdResult, Piece, PropensityStatus, Query, Verdict};

/// Above this many missing variables only the identified pieces are
/// returned, without the assembled functional.
pub const MAX_ASSEMBLED: usize = 3;

/// Structures that rule out identification of the full law.
pub fn full_law_witnesses(m: &MDag) -> Vec<StructureWitness> {
    if m.has_hidden() {
        detect_colluding_paths(m)
    } else {
        let mut w = detect_self_censoring(m);
        w.extend(detect_colluders(m));
        w
    }
}

pub fn identify_full_law(m: &MDag, opts: &IdOptions) -> IdResult {
    let witnesses = full_law_witnesses(m);
    if !witnesses.is_empty() {
        return IdResult::new(Query::FullLaw, Verdict::ProvablyNotIdentified { witnesses });
    }
    let req = Requirement {
        free_tail: true,
        may_hold: BTreeSet::new(),
    };
    let indicators = m.indicators();
    let mut results = Vec::new();
    let mut factors: Vec<Option<FunctionalExpr>> = Vec::new();
    for r in &indicators {
        let (res, found) = identify_propensity_with(m, r, &req, opts);
        factors.push(found.map(|f| f.propensity.expr));
        results.push(res);
    }
    let mut notes = Vec::new();
    let mut paired = BTreeSet::new();
    let mut pieces = Vec::new();
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
            match pair_block(m, child, parent, true, opts) {
                Ok(b) => {
                    let outputs: Vec<String> = b.expr.free_vars().into_iter().collect();
                    let f = Functional::new(b.expr.clone(), outputs);
                    for (k, partner) in [(i, other), (j, r)] {
                        results[k].status = PropensityStatus::IdentifiedJointly {
                            partner: partner.clone(),
                            functional: f.clone(),
                        };
                    }
                    pieces.push(Piece {
                        name: format!("p({child}, {parent} | {})", join(&b.context)),
                        functional: f,
                    });
                    paired.insert(i);
                    paired.insert(j);
                    blocks.push(b.expr);
                    done = true;
                    break;
                }
                Err(e) => notes.push(format!("pair ({child}, {parent}): {e}")),
            }
        }
        if !done {
            let mut diag = vec![format!("no reduction exposes the propensity of {r} as a function of its parents")];
            let with_children = m.proxies_with_children();
            if !with_children.is_empty() {
                diag.push(format!(
                    "proxies with children ({}) are not covered by the construction",
                    join(&with_children)
                ));
            }
            let mut result = IdResult::new(Query::FullLaw, Verdict::NotIdentifiedByProcedure { diagnostics: Diagnostics { notes: diag } });
            result.propensities = results;
            result.notes = notes;
            return result;
        }
    }
    let mut all_pieces: Vec<Piece> = results
        .iter()
        .filter_map(|res| match &res.status {
            PropensityStatus::Identified { functional, .. } => Some(Piece {
                name: format!("p({} | {})", res.indicator, join(&res.conditioning)),
                functional: functional.clone(),
            }),
            _ => None,
        })
        .collect();
    all_pieces.extend(pieces);
    let functional = (m.missing().len() <= MAX_ASSEMBLED).then(|| {
        let mut parts: Vec<FunctionalExpr> = factors
            .iter()
            .enumerate()
            .filter(|(i, _)| !paired.contains(i))
            .map(|(_, f)| f.clone().expect("resolved"))
            .collect();
        parts.extend(blocks);
        assemble(m, FunctionalExpr::product(parts))
    });
    let mut result = IdResult::new(Query::FullLaw, Verdict::Identified { functional, pieces: all_pieces });
    result.propensities = results;
    result.notes = notes;
    result
}

/// `p(R=1, l(1), w) M(r, x) / M(1, x)` for the product `M` of
/// propensities, with proxies in `M` tied to their counterfactuals.
fn assemble(m: &MDag, product: FunctionalExpr) -> Functional {
    let free = product.free_vars();
    let proxies: Vec<&String> = m.missing().iter().filter(|b| free.contains(b.as_str())).collect();
    let mut body = vec![product];
    body.extend(proxies.iter().map(|b| FunctionalExpr::proxy(b)));
    let mech = FunctionalExpr::sum(&proxies, FunctionalExpr::product(body));
    let mut at_one = mech.clone();
    for r in m.indicators() {
        at_one = at_one.substitute_value(r.as_str(), 1);
    }
    let expr = FunctionalExpr::product(vec![complete_case_atom(m), FunctionalExpr::ratio(mech, at_one)]).normalized();
    let mut outputs: Vec<String> = m.target_vertices().iter().map(|v| v.to_string()).collect();
    outputs.extend(m.indicators().iter().map(|v| v.to_string()));
    outputs.sort();
    Functional::new(expr, outputs)
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}
