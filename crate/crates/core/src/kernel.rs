//! Symbolic kernels over the observed law.
//!
//! A [`Kernel`] pairs a conditional graph with an expression for the
//! kernel's margin over its observable coordinates. Fixing an indicator
//! at 1 divides by its propensity and merges the missing variable's proxy
//! into the counterfactual. A propensity whose tail needs an unobserved
//! counterfactual `N(1)` is read on the slice `R_N = 1` ("pin"); after a
//! fixing that used pins the kernel only exists on that slice, and the
//! pinned indicators become the *selection*.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::expr::{FunctionalExpr, Term};
use crate::graph::{Digraph, GraphError, TopoOrder, VertexId};
use crate::id::ReductionStep;
use crate::mdag::{counterfactual_name, indicator_name, proxy_name, MDag, VertexRole};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("`{vertex}` is selected at 1 and cannot vary or be summed")]
    SelectionBlocked { vertex: VertexId },
    #[error("`{head}` is not independent of {others:?} given {given:?}")]
    NotIndependent {
        head: VertexId,
        others: Vec<VertexId>,
        given: Vec<VertexId>,
    },
    #[error("`{vertex}` is not fixable: {reason}")]
    NotFixable { vertex: VertexId, reason: String },
    #[error("cannot express a quantity involving `{vertex}`: {reason}")]
    NotCompilable { vertex: VertexId, reason: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A propensity `q(head | tail)` read from a kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct Propensity {
    pub head: VertexId,
    pub head_var: String,
    pub tail: Vec<VertexId>,
    /// Variable of each tail vertex; `None` when it is held at 1.
    pub tail_vars: Vec<Option<String>>,
    pub pins: BTreeSet<VertexId>,
    pub expr: FunctionalExpr,
}

#[derive(Clone, Debug)]
pub struct Kernel<'m> {
    model: &'m MDag,
    graph: Digraph,
    /// Fixed vertices: indicators at 1, counterfactuals as free arguments.
    fixed: BTreeMap<VertexId, Option<usize>>,
    selection: BTreeSet<VertexId>,
    marginalized: BTreeSet<VertexId>,
    expr: FunctionalExpr,
    steps: Vec<ReductionStep>,
}

/// Memo key of a kernel state.
pub type StateKey = (Vec<VertexId>, Vec<VertexId>, Vec<VertexId>);

impl<'m> Kernel<'m> {
    /// The observed law as a kernel over the m-DAG with hidden variables
    /// projected out.
    pub fn new(model: &'m MDag) -> Self {
        let graph = if model.has_hidden() {
            model
                .graph()
                .latent_project(model.hidden_vertices().iter())
                .expect("hidden vertices belong to the graph")
        } else {
            model.graph().clone()
        };
        let head = model
            .observed_law_vertices()
            .iter()
            .map(|v| Term::var(v.as_str()))
            .collect();
        Kernel {
            model,
            graph,
            fixed: BTreeMap::new(),
            selection: BTreeSet::new(),
            marginalized: BTreeSet::new(),
            expr: FunctionalExpr::atom(head, vec![]),
            steps: Vec::new(),
        }
    }

    pub fn model(&self) -> &'m MDag {
        self.model
    }

    pub fn graph(&self) -> &Digraph {
        &self.graph
    }

    pub fn fixed(&self) -> &BTreeMap<VertexId, Option<usize>> {
        &self.fixed
    }

    pub fn selection(&self) -> &BTreeSet<VertexId> {
        &self.selection
    }

    pub fn marginalized(&self) -> &BTreeSet<VertexId> {
        &self.marginalized
    }

    pub fn expr(&self) -> &FunctionalExpr {
        &self.expr
    }

    pub fn steps(&self) -> &[ReductionStep] {
        &self.steps
    }

    pub fn key(&self) -> StateKey {
        (
            self.fixed.keys().cloned().collect(),
            self.selection.iter().cloned().collect(),
            self.marginalized.iter().cloned().collect(),
        )
    }

    fn role(&self, v: &str) -> Option<VertexRole> {
        self.model.role(v)
    }

    /// True once the base's indicator has been fixed.
    pub fn is_merged(&self, base: &str) -> bool {
        self.fixed.contains_key(indicator_name(base).as_str())
    }

    /// Random vertex of the current graph: present and not fixed.
    pub fn is_random(&self, v: &str) -> bool {
        self.graph.contains(v) && !self.fixed.contains_key(v)
    }

    /// Current name of an original vertex: a merged proxy stands for its
    /// counterfactual.
    pub fn mapped(&self, v: &VertexId) -> VertexId {
        if self.role(v.as_str()) == Some(VertexRole::Proxy) {
            let base = self.model.base_of(v.as_str()).expect("proxy has a base");
            if self.is_merged(base) {
                return counterfactual_name(base);
            }
        }
        v.clone()
    }

    /// Expression variable carrying vertex `v`, given extra pinned
    /// indicators. `None` when the vertex is held at 1 or not observable.
    fn var_with(&self, v: &str, pins: &BTreeSet<VertexId>) -> Option<String> {
        let pinned = |r: &VertexId| self.selection.contains(r) || pins.contains(r);
        match self.role(v)? {
            VertexRole::Indicator => {
                let id = VertexId::new(v);
                (!self.fixed.contains_key(v) && !pinned(&id)).then(|| v.to_string())
            }
            VertexRole::Proxy => {
                let base = self.model.base_of(v)?;
                if self.is_merged(base) {
                    None
                } else if pinned(&indicator_name(base)) {
                    Some(counterfactual_name(base).to_string())
                } else {
                    Some(v.to_string())
                }
            }
            VertexRole::Counterfactual => {
                let base = self.model.base_of(v)?;
                (self.is_merged(base) || pinned(&indicator_name(base))).then(|| v.to_string())
            }
            VertexRole::Observed => Some(v.to_string()),
            VertexRole::Hidden => None,
        }
    }

    pub fn var_of(&self, v: &str) -> Option<String> {
        self.var_with(v, &BTreeSet::new())
    }

    fn pin_expr(&self, e: FunctionalExpr, r: &VertexId) -> FunctionalExpr {
        let base = self.model.base_of(r.as_str()).expect("indicator has a base");
        e.substitute_value(r.as_str(), 1)
            .rename(proxy_name(base).as_str(), counterfactual_name(base).as_str())
    }

    fn not_compilable(v: &VertexId, reason: impl Into<String>) -> KernelError {
        KernelError::NotCompilable {
            vertex: v.clone(),
            reason: reason.into(),
        }
    }

    /// Indicators that must be held at 1 to observe `tail`.
    pub fn required_pins(&self, head: &VertexId, tail: &BTreeSet<VertexId>) -> Result<BTreeSet<VertexId>, KernelError> {
        let mut pins = BTreeSet::new();
        for t in tail {
            if !self.graph.contains(t.as_str()) {
                return Err(Self::not_compilable(t, "not in the current graph"));
            }
            match self.role(t.as_str()) {
                Some(VertexRole::Hidden) => return Err(Self::not_compilable(t, "hidden")),
                Some(VertexRole::Counterfactual) if self.var_of(t.as_str()).is_none() && !self.fixed.contains_key(t) => {
                    let base = self.model.base_of(t.as_str()).expect("counterfactual has a base");
                    let r = indicator_name(base);
                    if &r == head {
                        return Err(Self::not_compilable(t, "observing it requires its own indicator"));
                    }
                    pins.insert(r);
                }
                _ => {}
            }
        }
        Ok(pins)
    }

    /// `q(head | tail)` on the current kernel. Pins needed by the tail are
    /// added to `extra_pins`; the head must be independent of every pinned
    /// or selected indicator outside the tail given the tail and the fixed
    /// vertices.
    pub fn propensity(
        &self,
        head: &VertexId,
        tail: &BTreeSet<VertexId>,
        pin_allowed: bool,
        extra_pins: &BTreeSet<VertexId>,
    ) -> Result<Propensity, KernelError> {
        if !self.graph.contains(head.as_str()) {
            return Err(Self::not_compilable(head, "not in the current graph"));
        }
        if self.selection.contains(head) {
            return Err(KernelError::SelectionBlocked { vertex: head.clone() });
        }
        if self.fixed.contains_key(head) {
            return Err(Self::not_compilable(head, "already fixed"));
        }
        if tail.contains(head) {
            return Err(Self::not_compilable(head, "appears in its own tail"));
        }
        let head_var = self
            .var_of(head.as_str())
            .ok_or_else(|| Self::not_compilable(head, "not observable in this kernel"))?;
        let pins = self.required_pins(head, tail)?;
        if !pins.is_empty() && !pin_allowed {
            return Err(Self::not_compilable(
                pins.iter().next().expect("nonempty"),
                "tail needs a pinned indicator",
            ));
        }
        let mut all_pins: BTreeSet<VertexId> = pins.union(extra_pins).cloned().collect();
        all_pins.remove(head);
        let others: BTreeSet<VertexId> = all_pins
            .iter()
            .chain(&self.selection)
            .filter(|v| !tail.contains(*v))
            .cloned()
            .collect();
        let given: BTreeSet<VertexId> = tail
            .iter()
            .chain(self.fixed.keys())
            .filter(|v| *v != head)
            .cloned()
            .collect();
        if !others.is_empty() && !self.graph.d_separated([head], &others, &given)? {
            return Err(KernelError::NotIndependent {
                head: head.clone(),
                others: others.into_iter().collect(),
                given: given.into_iter().collect(),
            });
        }
        let mut e = self.expr.clone();
        for r in &all_pins {
            e = self.pin_expr(e, r);
        }
        let tail_vars: Vec<Option<String>> = tail.iter().map(|t| self.var_with(t.as_str(), &all_pins)).collect();
        let mut keep: BTreeSet<String> = tail_vars.iter().flatten().cloned().collect();
        keep.insert(head_var.clone());
        for (v, val) in &self.fixed {
            if val.is_none() {
                keep.insert(v.to_string());
            }
        }
        let sum_vars: Vec<String> = e.free_vars().into_iter().filter(|v| !keep.contains(v)).collect();
        let margin = FunctionalExpr::sum(&sum_vars, e);
        let expr = FunctionalExpr::ratio(margin.clone(), FunctionalExpr::sum(&[head_var.as_str()], margin)).normalized();
        Ok(Propensity {
            head: head.clone(),
            head_var,
            tail: tail.iter().cloned().collect(),
            tail_vars,
            pins: all_pins,
            expr,
        })
    }

    /// Checks `dis(v) ∩ de(v) = {v}` for a random, unselected vertex.
    pub fn check_fixable(&self, v: &VertexId) -> Result<(), KernelError> {
        let reason = |r: &str| KernelError::NotFixable {
            vertex: v.clone(),
            reason: r.to_string(),
        };
        if !self.graph.contains(v.as_str()) {
            return Err(reason("not in the current graph"));
        }
        if self.fixed.contains_key(v) {
            return Err(reason("already fixed"));
        }
        if self.selection.contains(v) {
            return Err(KernelError::SelectionBlocked { vertex: v.clone() });
        }
        let dis = self.graph.district(v.as_str())?;
        let de = self.graph.descendants_of([v])?;
        if dis.intersection(&de).count() != 1 {
            return Err(reason("its district meets its descendants"));
        }
        Ok(())
    }

    /// Conditioning set for fixing `v`: the Markov blanket of `v` within
    /// the ancestors of its district.
    pub fn fixing_tail(&self, v: &VertexId) -> Result<BTreeSet<VertexId>, KernelError> {
        let dis = self.graph.district(v.as_str())?;
        let an = self.graph.ancestors_of(dis.iter())?;
        let sub = self.graph.induced(&an)?;
        let d = sub.district(v.as_str())?;
        let mut mb = d.clone();
        for x in &d {
            mb.extend(sub.parents(x.as_str())?);
        }
        mb.remove(v);
        Ok(mb)
    }

    /// Fixes `members` in parallel: every propensity is read from the
    /// current kernel. Indicators are fixed at 1, counterfactuals as free
    /// arguments.
    pub fn fix(&mut self, members: &[VertexId]) -> Result<(), KernelError> {
        if members.is_empty() {
            return Err(GraphError::Argument("empty fixing group".into()).into());
        }
        let mut tails = Vec::new();
        for v in members {
            self.check_fixable(v)?;
            if members.len() > 1 && self.graph.district(v.as_str())?.len() > 1 {
                return Err(KernelError::NotFixable {
                    vertex: v.clone(),
                    reason: "parallel fixing needs a singleton district".into(),
                });
            }
            tails.push(self.fixing_tail(v)?);
        }
        let mut pins = BTreeSet::new();
        for (v, t) in members.iter().zip(&tails) {
            pins.extend(self.required_pins(v, t)?);
        }
        let mut props = Vec::new();
        for (v, t) in members.iter().zip(&tails) {
            props.push(self.propensity(v, t, true, &pins)?.expr);
        }
        let mut e = self.expr.clone();
        for r in &pins {
            e = self.pin_expr(e, r);
        }
        e = FunctionalExpr::ratio(e, FunctionalExpr::product(props));
        let mut graph = self.graph.clone();
        for v in members {
            graph = graph.without_incoming(v.as_str())?;
        }
        let member_set: BTreeSet<&VertexId> = members.iter().collect();
        for v in members {
            if self.role(v.as_str()) == Some(VertexRole::Indicator) {
                e = self.pin_expr(e, v);
                let base = self.model.base_of(v.as_str()).expect("indicator has a base");
                graph = merge_proxy(&graph, base)?;
                self.fixed.insert(v.clone(), Some(1));
            } else {
                self.fixed.insert(v.clone(), None);
            }
        }
        self.expr = e.normalized();
        self.graph = graph;
        let new_selection: Vec<VertexId> = pins.into_iter().filter(|p| !member_set.contains(p)).collect();
        let pseudo = !new_selection.is_empty();
        self.selection.extend(new_selection);
        if members.len() == 1 && self.role(members[0].as_str()) == Some(VertexRole::Counterfactual) {
            self.steps.push(ReductionStep::FixProxy {
                vertex: members[0].clone(),
            });
        } else {
            self.steps.push(ReductionStep::FixIndicator {
                indicators: members.to_vec(),
                pseudo,
            });
        }
        Ok(())
    }

    /// Sums out `vs` and projects them from the graph.
    pub fn marginalize(&mut self, vs: &[VertexId]) -> Result<(), KernelError> {
        let mut vars = Vec::new();
        for v in vs {
            if !self.graph.contains(v.as_str()) {
                return Err(Self::not_compilable(v, "not in the current graph"));
            }
            if self.fixed.contains_key(v) {
                return Err(Self::not_compilable(v, "fixed vertices cannot be summed"));
            }
            if self.selection.contains(v) {
                return Err(KernelError::SelectionBlocked { vertex: v.clone() });
            }
            if let Some(x) = self.var_of(v.as_str()) {
                if !vars.contains(&x) {
                    vars.push(x);
                }
            }
        }
        self.expr = FunctionalExpr::sum(&vars, self.expr.clone()).normalized();
        self.graph = self.graph.latent_project(vs.iter())?;
        self.marginalized.extend(vs.iter().cloned());
        self.steps.push(ReductionStep::Marginalize { vertices: vs.to_vec() });
        Ok(())
    }

    /// Topological order of the current graph induced by the model's
    /// canonical order.
    pub fn order(&self) -> TopoOrder {
        TopoOrder::new(
            self.model
                .canonical_order()
                .as_slice()
                .iter()
                .filter(|v| self.graph.contains(v.as_str()))
                .cloned()
                .collect(),
        )
    }
}

/// Removes the proxy of `base` and hangs its children from the
/// counterfactual.
fn merge_proxy(g: &Digraph, base: &str) -> Result<Digraph, GraphError> {
    let proxy = proxy_name(base);
    if !g.contains(proxy.as_str()) {
        return Ok(g.clone());
    }
    let cf = counterfactual_name(base);
    let swap = |v: VertexId| if v == proxy { cf.clone() } else { v };
    let mut directed = BTreeSet::new();
    for (a, b) in g.directed_edges() {
        if b == proxy {
            continue;
        }
        directed.insert((swap(a), b));
    }
    let mut bidirected = BTreeSet::new();
    for (a, b) in g.bidirected_edges() {
        let (a, b) = (swap(a), swap(b));
        if a != b {
            bidirected.insert(if a < b { (a, b) } else { (b, a) });
        }
    }
    let vertices: Vec<VertexId> = g.vertices().filter(|v| **v != proxy).cloned().collect();
    Digraph::new(vertices, directed, bidirected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdag::{canonical_model, CanonicalModel};

    fn v(s: &str) -> VertexId {
        VertexId::new(s)
    }

    fn set(xs: &[&str]) -> BTreeSet<VertexId> {
        xs.iter().map(|x| v(x)).collect()
    }

    #[test]
    fn fixing_merges_the_proxy() {
        let m = canonical_model(CanonicalModel::Permutation2);
        let mut k = Kernel::new(&m);
        k.fix(&[v("R_X2")]).unwrap();
        assert!(!k.graph().contains("X2"));
        assert!(k.is_merged("X2"));
        assert_eq!(k.var_of("X2(1)").as_deref(), Some("X2(1)"));
        assert!(k.selection().is_empty());
        let p = k.propensity(&v("R_X1"), &set(&["X2(1)"]), false, &BTreeSet::new()).unwrap();
        assert_eq!(p.head_var, "R_X1");
    }

    #[test]
    fn pinning_makes_selection_and_blocks_later_heads() {
        let m = canonical_model(CanonicalModel::BlockParallel2);
        let mut k = Kernel::new(&m);
        k.fix(&[v("R_X2")]).unwrap();
        assert_eq!(k.selection(), &set(&["R_X1"]));
        let err = k
            .propensity(&v("R_X1"), &set(&["X2(1)"]), true, &BTreeSet::new())
            .unwrap_err();
        assert!(matches!(err, KernelError::SelectionBlocked { .. }));
    }

    #[test]
    fn dependence_on_pin_is_rejected() {
        let m = canonical_model(CanonicalModel::Permutation2);
        let k = Kernel::new(&m);
        let err = k
            .propensity(&v("R_X1"), &set(&["X2(1)"]), true, &BTreeSet::new())
            .unwrap_err();
        assert!(matches!(err, KernelError::NotIndependent { .. }));
    }

    #[test]
    fn marginalizing_projects() {
        let m = canonical_model(CanonicalModel::BlockParallel2);
        let mut k = Kernel::new(&m);
        k.marginalize(&[v("X1(1)"), v("X1")]).unwrap();
        assert!(k.graph().has_bidirected("R_X2", "X2(1)"));
        assert!(!k.expr().free_vars().contains("X1"));
    }
}
