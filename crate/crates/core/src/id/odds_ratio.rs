//! Joint propensity of an indicator pair through the odds-ratio
//! parameterization.
//!
//! For a child `c` with indicator parent `p` and context
//! `C = pa(c) ∪ pa(p) \ {c, p}`,
//!
//! ```text
//! p(r_c, r_p | C) ∝ p(r_c | r_p = 1, C) p(r_p | r_c = 1, C) OR(r_c, r_p | C)
//! ```
//!
//! where the odds ratio relative to `(1, 1)` only needs `p(r_p | r_c, C)`.

use std::collections::BTreeSet;

use crate::expr::FunctionalExpr;
use crate::graph::VertexId;
use crate::kernel::{Kernel, Propensity};
use crate::mdag::{MDag, VertexRole};

use super::search::{identify_propensity_with, Found, IdOptions, Requirement};

#[derive(Clone, Debug)]
pub struct PairBlock {
    pub child: VertexId,
    pub parent: VertexId,
    pub context: Vec<VertexId>,
    /// `p(r_c, r_p | C)`; free in both indicators and the context.
    pub expr: FunctionalExpr,
    pub child_factor: Found,
    pub parent_given_child: Propensity,
}

/// Checks that every indicator or proxy in the tail is a free variable.
pub(crate) fn tail_is_free(m: &MDag, p: &Propensity, may_hold: &BTreeSet<VertexId>) -> Result<(), String> {
    for (t, var) in p.tail.iter().zip(&p.tail_vars) {
        let held = match m.role(t.as_str()) {
            Some(VertexRole::Indicator) => var.is_none(),
            Some(VertexRole::Proxy) => var.as_deref() != Some(t.as_str()),
            _ => false,
        };
        if held && !may_hold.contains(t) {
            return Err(format!("`{t}` is held at 1 in p({} | ...)", p.head));
        }
    }
    Ok(())
}

pub fn pair_block(
    m: &MDag,
    child: &VertexId,
    parent: &VertexId,
    free_tail: bool,
    opts: &IdOptions,
) -> Result<PairBlock, String> {
    if m.has_hidden() {
        return Err("odds-ratio blocks are only built without hidden variables".into());
    }
    let g = m.graph();
    let pa_c = g.parents(child.as_str()).map_err(|e| e.to_string())?;
    let pa_p = g.parents(parent.as_str()).map_err(|e| e.to_string())?;
    if !pa_c.contains(parent) {
        return Err(format!("{parent} is not a parent of {child}"));
    }
    let mut ctx: BTreeSet<VertexId> = pa_c.union(&pa_p).cloned().collect();
    ctx.remove(child);
    ctx.remove(parent);
    let de = g.descendants_of([child, parent]).map_err(|e| e.to_string())?;
    if let Some(d) = ctx.iter().find(|v| de.contains(*v)) {
        return Err(format!("context vertex {d} descends from the pair"));
    }

    let req = Requirement {
        free_tail,
        may_hold: [parent.clone()].into_iter().collect(),
    };
    let (_, found) = identify_propensity_with(m, child, &req, opts);
    let a = found.ok_or_else(|| format!("p({child} | pa) with {parent} held at 1 is not identified"))?;
    let mut a_expr = a.propensity.expr.clone();
    if a.propensity.tail_vars.iter().flatten().any(|v| v == parent.as_str()) {
        a_expr = a_expr.substitute_value(parent.as_str(), 1);
    }

    let mut tail = ctx.clone();
    tail.insert(child.clone());
    let k = Kernel::new(m);
    let b = k
        .propensity(parent, &tail, true, &BTreeSet::new())
        .map_err(|e| format!("p({parent} | {child}, context): {e}"))?;
    if !b.tail_vars.iter().flatten().any(|v| v == child.as_str()) {
        return Err(format!("{child} is held at 1 in p({parent} | {child}, context)"));
    }
    if free_tail {
        tail_is_free(m, &b, &BTreeSet::new())?;
    }
    let c = child.as_str();
    let p = parent.as_str();
    let b_expr = b.expr.clone();
    // A(r_c | r_p=1) B(r_p | r_c=1) OR(r_c, r_p)
    let b_c1 = b_expr.substitute_value(c, 1);
    let b_p1 = b_expr.substitute_value(p, 1);
    let b_11 = b_c1.substitute_value(p, 1);
    let odds = FunctionalExpr::ratio(
        FunctionalExpr::product(vec![b_expr, b_11]),
        FunctionalExpr::product(vec![b_p1, b_c1.clone()]),
    );
    let unnormalized = FunctionalExpr::product(vec![a_expr, b_c1, odds]);
    let expr = FunctionalExpr::ratio(
        unnormalized.clone(),
        FunctionalExpr::sum(&[c, p], unnormalized),
    )
    .normalized();
    Ok(PairBlock {
        child: child.clone(),
        parent: parent.clone(),
        context: ctx.into_iter().collect(),
        expr,
        child_factor: a,
        parent_given_child: b,
    })
}
