//! Missing-data DAGs: construction, validation, classification.
//!
//! A missing variable `N` expands into three vertices: the counterfactual
//! `N(1)`, the indicator `R_N` and the proxy `N`. The proxy edges
//! `N(1) -> N` and `R_N -> N` are deterministic and inserted automatically.

mod canonical;
mod parse;
mod witness;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{is_identifier, Digraph, GraphError, TopoOrder, VertexId};

pub use canonical::{canonical_model, CanonicalModel};
pub use parse::{parse_model, ParseError};
pub use witness::{
    detect_colluders, detect_colluding_paths, detect_criss_cross, detect_self_censoring,
    StructureWitness, WitnessKind,
};

/// Largest supported state count for counterfactual, observed and hidden
/// variables.
pub const MAX_CARDINALITY: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VertexRole {
    Counterfactual,
    Indicator,
    Proxy,
    Observed,
    Hidden,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MechanismClass {
    #[serde(rename = "MCAR")]
    Mcar,
    #[serde(rename = "MAR")]
    Mar,
    #[serde(rename = "MNAR")]
    Mnar,
}

impl fmt::Display for MechanismClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MechanismClass::Mcar => "MCAR",
            MechanismClass::Mar => "MAR",
            MechanismClass::Mnar => "MNAR",
        })
    }
}

/// A directed edge, displayed as `A -> B`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub from: VertexId,
    pub to: VertexId,
}

impl Edge {
    pub fn new(from: impl Into<VertexId>, to: impl Into<VertexId>) -> Self {
        Edge {
            from: from.into(),
            to: to.into(),
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.from, self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid variable name `{0}`")]
    InvalidName(String),
    #[error("name `{0}` is declared or derived more than once")]
    DuplicateName(String),
    #[error("variable `{name}`: cardinality {card} outside 2..={max}", max = MAX_CARDINALITY)]
    InvalidCardinality { name: String, card: usize },
    #[error("edge {edge}: unknown vertex `{name}`")]
    UnknownVertex { edge: Edge, name: String },
    #[error("edge {edge} violates restriction (a): {reason}")]
    RestrictionA { edge: Edge, reason: String },
    #[error("edge {edge} violates restriction (b): {reason}")]
    RestrictionB { edge: Edge, reason: String },
    #[error("edge {edge} closes a directed cycle")]
    Acyclicity { edge: Edge },
    #[error("duplicate edge {edge}")]
    DuplicateEdge { edge: Edge },
    #[error("unknown canonical model `{0}`")]
    UnknownCanonical(String),
}

pub fn counterfactual_name(base: &str) -> VertexId {
    VertexId::new(format!("{base}(1)"))
}

pub fn indicator_name(base: &str) -> VertexId {
    VertexId::new(format!("R_{base}"))
}

pub fn proxy_name(base: &str) -> VertexId {
    VertexId::new(base)
}

/// A validated m-DAG.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MDag {
    graph: Digraph,
    roles: BTreeMap<VertexId, VertexRole>,
    base: BTreeMap<VertexId, String>,
    missing: Vec<String>,
    observed: Vec<String>,
    hidden: Vec<String>,
    cardinalities: BTreeMap<String, usize>,
    prob_edges: Vec<Edge>,
}

/// Declarative input for [`build_mdag`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ModelSpec {
    pub missing: Vec<String>,
    pub observed: Vec<String>,
    pub hidden: Vec<String>,
    pub edges: Vec<(String, String)>,
    /// State counts by base/observed/hidden name; absent names default to 2.
    pub cardinalities: BTreeMap<String, usize>,
}

impl ModelSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn missing(mut self, names: &[&str]) -> Self {
        self.missing.extend(names.iter().map(|s| s.to_string()));
        self
    }

    pub fn observed(mut self, names: &[&str]) -> Self {
        self.observed.extend(names.iter().map(|s| s.to_string()));
        self
    }

    pub fn hidden(mut self, names: &[&str]) -> Self {
        self.hidden.extend(names.iter().map(|s| s.to_string()));
        self
    }

    pub fn edge(mut self, from: &str, to: &str) -> Self {
        self.edges.push((from.to_string(), to.to_string()));
        self
    }

    pub fn edges(mut self, edges: &[(&str, &str)]) -> Self {
        for (a, b) in edges {
            self.edges.push((a.to_string(), b.to_string()));
        }
        self
    }

    pub fn cardinality(mut self, name: &str, card: usize) -> Self {
        self.cardinalities.insert(name.to_string(), card);
        self
    }

    pub fn build(&self) -> Result<MDag, ModelError> {
        build_mdag(self)
    }
}

/// Builds and validates an m-DAG from declared variables and probabilistic
/// edges.
pub fn build_mdag(spec: &ModelSpec) -> Result<MDag, ModelError> {
    let mut roles = BTreeMap::new();
    let mut base = BTreeMap::new();
    let mut insert = |v: VertexId, role: VertexRole, b: Option<&str>| -> Result<(), ModelError> {
        if roles.insert(v.clone(), role).is_some() {
            return Err(ModelError::DuplicateName(v.to_string()));
        }
        if let Some(b) = b {
            base.insert(v, b.to_string());
        }
        Ok(())
    };
    for n in &spec.missing {
        if !is_identifier(n) {
            return Err(ModelError::InvalidName(n.clone()));
        }
        insert(counterfactual_name(n), VertexRole::Counterfactual, Some(n))?;
        insert(indicator_name(n), VertexRole::Indicator, Some(n))?;
        insert(proxy_name(n), VertexRole::Proxy, Some(n))?;
    }
    for (names, role) in [(&spec.observed, VertexRole::Observed), (&spec.hidden, VertexRole::Hidden)] {
        for n in names {
            if !is_identifier(n) {
                return Err(ModelError::InvalidName(n.clone()));
            }
            insert(VertexId::new(n.as_str()), role, None)?;
        }
    }
    let mut cardinalities = BTreeMap::new();
    for n in spec.missing.iter().chain(&spec.observed).chain(&spec.hidden) {
        cardinalities.insert(n.clone(), 2);
    }
    for (name, &card) in &spec.cardinalities {
        if !cardinalities.contains_key(name) {
            return Err(ModelError::InvalidName(name.clone()));
        }
        if !(2..=MAX_CARDINALITY).contains(&card) {
            return Err(ModelError::InvalidCardinality {
                name: name.clone(),
                card,
            });
        }
        cardinalities.insert(name.clone(), card);
    }

    let mut prob_edges = Vec::new();
    let mut seen = BTreeSet::new();
    for (a, b) in &spec.edges {
        let edge = Edge::new(a.as_str(), b.as_str());
        let ra = *roles.get(a.as_str()).ok_or_else(|| ModelError::UnknownVertex {
            edge: edge.clone(),
            name: a.clone(),
        })?;
        let rb = *roles.get(b.as_str()).ok_or_else(|| ModelError::UnknownVertex {
            edge: edge.clone(),
            name: b.clone(),
        })?;
        check_edge(&edge, ra, rb, &base)?;
        if !seen.insert(edge.clone()) {
            return Err(ModelError::DuplicateEdge { edge });
        }
        prob_edges.push(edge);
    }

    let mut directed: Vec<(VertexId, VertexId)> =
        prob_edges.iter().map(|e| (e.from.clone(), e.to.clone())).collect();
    for n in &spec.missing {
        directed.push((counterfactual_name(n), proxy_name(n)));
        directed.push((indicator_name(n), proxy_name(n)));
    }
    let graph = Digraph::dag(roles.keys().cloned(), directed).map_err(|e| match e {
        GraphError::Cycle { from, to } => ModelError::Acyclicity {
            edge: Edge::new(from, to),
        },
        other => ModelError::InvalidName(other.to_string()),
    })?;
    // Sorted so that declaration order never shows in results.
    let sorted = |v: &Vec<String>| {
        let mut v = v.clone();
        v.sort();
        v
    };
    prob_edges.sort();
    Ok(MDag {
        graph,
        roles,
        base,
        missing: sorted(&spec.missing),
        observed: sorted(&spec.observed),
        hidden: sorted(&spec.hidden),
        cardinalities,
        prob_edges,
    })
}

fn check_edge(
    edge: &Edge,
    ra: VertexRole,
    rb: VertexRole,
    base: &BTreeMap<VertexId, String>,
) -> Result<(), ModelError> {
    use VertexRole::*;
    if edge.from == edge.to {
        return Err(ModelError::Acyclicity { edge: edge.clone() });
    }
    if rb == Proxy {
        let reason = if base.get(&edge.from) == base.get(&edge.to) {
            "proxy edges are deterministic and implicit"
        } else {
            "a proxy's parents are exactly its counterfactual and its indicator"
        };
        return Err(ModelError::RestrictionA {
            edge: edge.clone(),
            reason: reason.into(),
        });
    }
    if matches!(ra, Indicator | Proxy) && matches!(rb, Counterfactual | Observed | Hidden) {
        return Err(ModelError::RestrictionB {
            edge: edge.clone(),
            reason: "indicators and proxies cannot point into counterfactual, observed or hidden variables"
                .into(),
        });
    }
    if ra == Proxy && rb == Indicator && base.get(&edge.from) == base.get(&edge.to) {
        return Err(ModelError::Acyclicity { edge: edge.clone() });
    }
    Ok(())
}

impl MDag {
    pub fn graph(&self) -> &Digraph {
        &self.graph
    }

    pub fn role(&self, v: &str) -> Option<VertexRole> {
        self.roles.get(v).copied()
    }

    pub fn roles(&self) -> &BTreeMap<VertexId, VertexRole> {
        &self.roles
    }

    /// Base name of a counterfactual, indicator or proxy vertex.
    pub fn base_of(&self, v: &str) -> Option<&str> {
        self.base.get(v).map(String::as_str)
    }

    /// Missing base names in declaration order.
    pub fn missing(&self) -> &[String] {
        &self.missing
    }

    pub fn observed(&self) -> &[String] {
        &self.observed
    }

    pub fn hidden(&self) -> &[String] {
        &self.hidden
    }

    pub fn has_hidden(&self) -> bool {
        !self.hidden.is_empty()
    }

    /// Declared probabilistic edges in declaration order.
    pub fn prob_edges(&self) -> &[Edge] {
        &self.prob_edges
    }

    /// State count of a declared name (base, observed or hidden).
    pub fn cardinality(&self, name: &str) -> Option<usize> {
        self.cardinalities.get(name).copied()
    }

    pub fn cardinalities(&self) -> &BTreeMap<String, usize> {
        &self.cardinalities
    }

    /// State count of a vertex; proxies carry one extra state for "?".
    pub fn state_count(&self, v: &str) -> Option<usize> {
        match self.role(v)? {
            VertexRole::Indicator => Some(2),
            VertexRole::Proxy => Some(self.cardinality(self.base_of(v)?)? + 1),
            VertexRole::Counterfactual => self.cardinality(self.base_of(v)?),
            VertexRole::Observed | VertexRole::Hidden => self.cardinality(v),
        }
    }

    pub fn vertices_with_role(&self, role: VertexRole) -> Vec<VertexId> {
        self.roles
            .iter()
            .filter(|(_, r)| **r == role)
            .map(|(v, _)| v.clone())
            .collect()
    }

    /// Indicators in the order of [`MDag::missing`], which is sorted.
    pub fn indicators(&self) -> Vec<VertexId> {
        self.missing.iter().map(|n| indicator_name(n)).collect()
    }

    pub fn counterfactuals(&self) -> Vec<VertexId> {
        self.missing.iter().map(|n| counterfactual_name(n)).collect()
    }

    pub fn observed_vertices(&self) -> Vec<VertexId> {
        self.observed.iter().map(|n| VertexId::new(n.as_str())).collect()
    }

    pub fn hidden_vertices(&self) -> Vec<VertexId> {
        self.hidden.iter().map(|n| VertexId::new(n.as_str())).collect()
    }

    /// Vertices whose law is the identification target: counterfactuals
    /// and fully observed variables, sorted by name.
    pub fn target_vertices(&self) -> Vec<VertexId> {
        let mut out = self.counterfactuals();
        out.extend(self.observed_vertices());
        out.sort();
        out
    }

    /// Axes of the observed law: indicators, proxies and observed variables,
    /// sorted by name.
    pub fn observed_law_vertices(&self) -> Vec<VertexId> {
        let mut out: Vec<VertexId> = self.indicators();
        out.extend(self.missing.iter().map(|n| proxy_name(n)));
        out.extend(self.observed_vertices());
        out.sort();
        out
    }

    /// True for the two implicit edges into a proxy.
    pub fn is_deterministic_edge(&self, from: &str, to: &str) -> bool {
        self.role(to) == Some(VertexRole::Proxy)
            && self.graph.has_edge(from, to)
            && self.base_of(from) == self.base_of(to)
    }

    /// Proxies that have children.
    pub fn proxies_with_children(&self) -> Vec<VertexId> {
        self.missing
            .iter()
            .map(|n| proxy_name(n))
            .filter(|p| self.graph.children(p.as_str()).map(|c| !c.is_empty()).unwrap_or(false))
            .collect()
    }

    /// Topological order putting counterfactual, observed and hidden
    /// vertices first, then indicators, then proxies; ties lexicographic.
    pub fn canonical_order(&self) -> TopoOrder {
        self.graph.topological_order_by_key(|v| match self.role(v.as_str()) {
            Some(VertexRole::Indicator) => 1u8,
            Some(VertexRole::Proxy) => 2,
            _ => 0,
        })
    }

    pub fn classify_mechanism(&self) -> MechanismClass {
        classify_mechanism(self)
    }

    /// Model file text that parses back to an equal m-DAG.
    pub fn to_model_text(&self) -> String {
        let mut out = String::new();
        let decl = |out: &mut String, kw: &str, n: &String| {
            let card = self.cardinalities[n];
            if card == 2 {
                out.push_str(&format!("{kw} {n}\n"));
            } else {
                out.push_str(&format!("{kw} {n} card={card}\n"));
            }
        };
        for n in &self.missing {
            decl(&mut out, "missing", n);
        }
        for n in &self.observed {
            decl(&mut out, "observed", n);
        }
        for n in &self.hidden {
            decl(&mut out, "hidden", n);
        }
        for e in &self.prob_edges {
            out.push_str(&format!("edge {e}\n"));
        }
        out
    }
}

/// Most specific class of the missingness mechanism, read off the graph.
pub fn classify_mechanism(m: &MDag) -> MechanismClass {
    let mut any_parent = false;
    for r in m.indicators() {
        for p in m.graph.parents(r.as_str()).expect("indicator in graph") {
            any_parent = true;
            if matches!(
                m.role(p.as_str()),
                Some(VertexRole::Counterfactual | VertexRole::Hidden)
            ) {
                return MechanismClass::Mnar;
            }
        }
    }
    if any_parent {
        MechanismClass::Mar
    } else {
        MechanismClass::Mcar
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_model() {
        let m = ModelSpec::new()
            .missing(&["X1", "X2"])
            .edges(&[("X1(1)", "X2(1)"), ("X2(1)", "R_X1"), ("R_X1", "R_X2"), ("X1", "R_X2")])
            .build()
            .unwrap();
        assert_eq!(m.graph().len(), 6);
        assert!(m.is_deterministic_edge("X1(1)", "X1"));
        assert!(m.is_deterministic_edge("R_X1", "X1"));
        assert!(!m.is_deterministic_edge("X1", "R_X2"));
        assert_eq!(m.state_count("X1"), Some(3));
        assert_eq!(m.state_count("R_X1"), Some(2));
        assert_eq!(m.classify_mechanism(), MechanismClass::Mnar);
        let parents: Vec<String> = m.graph().parents("R_X2").unwrap().iter().map(|v| v.to_string()).collect();
        assert_eq!(parents, ["R_X1", "X1"]);
    }

    #[test]
    fn single_mcar() {
        let m = ModelSpec::new().missing(&["X"]).build().unwrap();
        assert_eq!(m.classify_mechanism(), MechanismClass::Mcar);
        assert_eq!(m.graph().len(), 3);
    }

    #[test]
    fn restriction_errors() {
        let base = ModelSpec::new().missing(&["X1", "X2"]);
        let err = base.clone().edge("R_X1", "X2(1)").build().unwrap_err();
        assert!(matches!(err, ModelError::RestrictionB { .. }), "{err}");
        let err = base.clone().edge("X1(1)", "X2").build().unwrap_err();
        assert!(matches!(err, ModelError::RestrictionA { .. }), "{err}");
        let err = base.clone().edge("X1", "R_X1").build().unwrap_err();
        assert!(matches!(err, ModelError::Acyclicity { .. }), "{err}");
        let err = base.clone().edge("X1(1)", "X3(1)").build().unwrap_err();
        assert!(matches!(err, ModelError::UnknownVertex { .. }), "{err}");
        let err = base
            .clone()
            .edge("R_X1", "R_X2")
            .edge("R_X2", "R_X1")
            .build()
            .unwrap_err();
        assert!(matches!(err, ModelError::Acyclicity { .. }), "{err}");
        let err = base.clone().cardinality("X1", 5).build().unwrap_err();
        assert!(matches!(err, ModelError::InvalidCardinality { .. }), "{err}");
        let err = ModelSpec::new().missing(&["X"]).observed(&["R_X"]).build().unwrap_err();
        assert!(matches!(err, ModelError::DuplicateName(_)), "{err}");
    }

    #[test]
    fn mar_allows_proxy_and_indicator_parents() {
        let m = ModelSpec::new()
            .missing(&["X1", "X2"])
            .edges(&[("X1(1)", "X2(1)"), ("R_X1", "R_X2"), ("X1", "R_X2")])
            .build()
            .unwrap();
        assert_eq!(m.classify_mechanism(), MechanismClass::Mar);
    }
}
