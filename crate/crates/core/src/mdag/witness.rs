//! Structural witnesses of non-identification.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{counterfactual_name, indicator_name, Edge, MDag, VertexRole};
use crate::graph::VertexId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WitnessKind {
    SelfCensoring,
    Colluder,
    CrissCross,
    ColludingPath,
}

impl fmt::Display for WitnessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WitnessKind::SelfCensoring => "self-censoring",
            WitnessKind::Colluder => "colluder",
            WitnessKind::CrissCross => "criss-cross",
            WitnessKind::ColludingPath => "colluding path",
        })
    }
}

/// A graph pattern. `vertices` lists the pattern's vertices (for paths, in
/// path order); `edges` are the m-DAG edges that realize it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StructureWitness {
    pub kind: WitnessKind,
    pub vertices: Vec<VertexId>,
    pub edges: Vec<Edge>,
}

impl fmt::Display for StructureWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges: Vec<String> = self.edges.iter().map(|e| e.to_string()).collect();
        write!(f, "{}: {}", self.kind, edges.join(", "))
    }
}

/// Every edge `N(1) -> R_N`.
pub fn detect_self_censoring(m: &MDag) -> Vec<StructureWitness> {
    m.missing()
        .iter()
        .filter_map(|n| {
            let (l, r) = (counterfactual_name(n), indicator_name(n));
            m.graph().has_edge(l.as_str(), r.as_str()).then(|| StructureWitness {
                kind: WitnessKind::SelfCensoring,
                vertices: vec![l.clone(), r.clone()],
                edges: vec![Edge::new(l, r)],
            })
        })
        .collect()
}

/// Every `L_i(1) -> R_j <- R_i` with `i != j`.
pub fn detect_colluders(m: &MDag) -> Vec<StructureWitness> {
    let g = m.graph();
    let mut out = Vec::new();
    for i in m.missing() {
        let (li, ri) = (counterfactual_name(i), indicator_name(i));
        for j in m.missing() {
            if i == j {
                continue;
            }
            let rj = indicator_name(j);
            if g.has_edge(li.as_str(), rj.as_str()) && g.has_edge(ri.as_str(), rj.as_str()) {
                out.push(StructureWitness {
                    kind: WitnessKind::Colluder,
                    vertices: vec![li.clone(), rj.clone(), ri.clone()],
                    edges: vec![Edge::new(li.clone(), rj.clone()), Edge::new(ri.clone(), rj)],
                });
            }
        }
    }
    out
}

/// Every ordered pair with `L_i(1)` adjacent to `L_j(1)` and
/// `L_i(1) -> R_j <- R_i <- L_j(1)`.
pub fn detect_criss_cross(m: &MDag) -> Vec<StructureWitness> {
    let g = m.graph();
    let mut out = Vec::new();
    for i in m.missing() {
        let (li, ri) = (counterfactual_name(i), indicator_name(i));
        for j in m.missing() {
            if i == j {
                continue;
            }
            let (lj, rj) = (counterfactual_name(j), indicator_name(j));
            let link = if g.has_edge(li.as_str(), lj.as_str()) {
                Edge::new(li.clone(), lj.clone())
            } else if g.has_edge(lj.as_str(), li.as_str()) {
                Edge::new(lj.clone(), li.clone())
            } else {
                continue;
            };
            if g.has_edge(li.as_str(), rj.as_str())
                && g.has_edge(ri.as_str(), rj.as_str())
                && g.has_edge(lj.as_str(), ri.as_str())
            {
                out.push(StructureWitness {
                    kind: WitnessKind::CrissCross,
                    vertices: vec![li.clone(), rj.clone(), ri.clone(), lj.clone()],
                    edges: vec![
                        link,
                        Edge::new(li.clone(), rj.clone()),
                        Edge::new(ri.clone(), rj),
                        Edge::new(lj, ri.clone()),
                    ],
                });
            }
        }
    }
    out
}

/// Every simple path between some `L_k(1)` and `R_k` whose colliders are
/// counterfactuals, indicators or observed variables and whose
/// non-colliders are hidden. The direct edge `L_k(1) -> R_k` is included as
/// the path without interior vertices.
pub fn detect_colluding_paths(m: &MDag) -> Vec<StructureWitness> {
    let mut out = Vec::new();
    for k in m.missing() {
        let (start, end) = (counterfactual_name(k), indicator_name(k));
        let mut path = vec![start.clone()];
        let mut on_path = BTreeSet::from([start.clone()]);
        extend_paths(m, &end, &mut path, &mut on_path, &mut out);
    }
    out
}

fn extend_paths(
    m: &MDag,
    end: &VertexId,
    path: &mut Vec<VertexId>,
    on_path: &mut BTreeSet<VertexId>,
    out: &mut Vec<StructureWitness>,
) {
    let g = m.graph();
    let last = path.last().expect("path starts non-empty").clone();
    let mut neighbours: BTreeSet<VertexId> = g.parents(last.as_str()).expect("vertex in graph");
    neighbours.extend(g.children(last.as_str()).expect("vertex in graph"));
    for next in neighbours {
        if on_path.contains(&next) || m.role(next.as_str()) == Some(VertexRole::Proxy) {
            continue;
        }
        // Status of `last` as an interior vertex now that both its path
        // edges are known.
        if path.len() >= 2 {
            let prev = &path[path.len() - 2];
            let collider =
                g.has_edge(prev.as_str(), last.as_str()) && g.has_edge(next.as_str(), last.as_str());
            let ok = match m.role(last.as_str()) {
                Some(VertexRole::Hidden) => !collider,
                Some(VertexRole::Counterfactual | VertexRole::Indicator | VertexRole::Observed) => collider,
                _ => false,
            };
            if !ok {
                continue;
            }
        }
        if &next == end {
            let mut vertices = path.clone();
            vertices.push(next.clone());
            let edges = vertices
                .windows(2)
                .map(|w| {
                    if g.has_edge(w[0].as_str(), w[1].as_str()) {
                        Edge::new(w[0].clone(), w[1].clone())
                    } else {
                        Edge::new(w[1].clone(), w[0].clone())
                    }
                })
                .collect();
            out.push(StructureWitness {
                kind: WitnessKind::ColludingPath,
                vertices,
                edges,
            });
            continue;
        }
        // The other indicator-side endpoint never sits in the interior.
        if m.role(next.as_str()) == Some(VertexRole::Counterfactual)
            && m.base_of(next.as_str()) == m.base_of(end.as_str())
        {
            continue;
        }
        path.push(next.clone());
        on_path.insert(next.clone());
        extend_paths(m, end, path, on_path, out);
        on_path.remove(&next);
        path.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdag::{canonical_model, CanonicalModel, ModelSpec};

    #[test]
    fn self_censoring_found() {
        let m = canonical_model(CanonicalModel::SelfCensor1);
        assert_eq!(detect_self_censoring(&m).len(), 1);
        let paths = detect_colluding_paths(&m);
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].vertices.len(), 2);
    }

    #[test]
    fn colluders_in_partial_order_and_outside_models() {
        let m = canonical_model(CanonicalModel::PartialOrder3);
        let w = detect_colluders(&m);
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].edges, vec![Edge::new("X1(1)", "R_X2"), Edge::new("R_X1", "R_X2")]);
        let m = canonical_model(CanonicalModel::OutsideR4);
        let w = detect_colluders(&m);
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].edges, vec![Edge::new("X2(1)", "R_X1"), Edge::new("R_X2", "R_X1")]);
        for c in [CanonicalModel::SeqPar3, CanonicalModel::BlockParallel2] {
            assert!(detect_colluders(&canonical_model(c)).is_empty());
        }
    }

    #[test]
    fn criss_cross_pattern() {
        let m = ModelSpec::new()
            .missing(&["X1", "X2"])
            .edges(&[("X1(1)", "X2(1)"), ("X1(1)", "R_X2"), ("R_X1", "R_X2"), ("X2(1)", "R_X1")])
            .build()
            .unwrap();
        let w = detect_criss_cross(&m);
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].vertices[0].as_str(), "X1(1)");
        assert!(detect_criss_cross(&canonical_model(CanonicalModel::BlockParallel2)).is_empty());
        assert!(detect_criss_cross(&ModelSpec::new().missing(&["X"]).build().unwrap()).is_empty());
    }

    #[test]
    fn colluding_path_through_hidden_and_observed() {
        let m = canonical_model(CanonicalModel::ConfoundedOutcome);
        let w = detect_colluding_paths(&m);
        assert_eq!(w.len(), 1);
        let names: Vec<&str> = w[0].vertices.iter().map(|v| v.as_str()).collect();
        assert_eq!(names, ["Y(1)", "U1", "X", "U2", "R_Y"]);
    }
}
