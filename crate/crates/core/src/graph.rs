//! Directed acyclic graphs and acyclic directed mixed graphs (ADMGs).
//!
//! A [`Digraph`] holds directed edges plus an optional set of bidirected
//! edges. Bidirected edges stand for a hidden common parent; every query
//! here treats them that way.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Name of a vertex.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(String);

impl VertexId {
    /// Wraps a name without validating it.
    pub fn new(name: impl Into<String>) -> Self {
        VertexId(name.into())
    }

    /// Validates `name` against `[A-Za-z][A-Za-z0-9_]*` with an optional
    /// `(1)` suffix.
    pub fn parse(name: &str) -> Result<Self, GraphError> {
        if is_valid_name(name) {
            Ok(VertexId(name.to_string()))
        } else {
            Err(GraphError::InvalidName(name.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// True for `[A-Za-z][A-Za-z0-9_]*`, optionally followed by `(1)`.
pub fn is_valid_name(name: &str) -> bool {
    let stem = name.strip_suffix("(1)").unwrap_or(name);
    is_identifier(stem)
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for VertexId {
    fn from(s: &str) -> Self {
        VertexId(s.to_string())
    }
}

impl From<String> for VertexId {
    fn from(s: String) -> Self {
        VertexId(s)
    }
}

impl std::borrow::Borrow<str> for VertexId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("invalid vertex name `{0}`")]
    InvalidName(String),
    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("duplicate edge {0}")]
    DuplicateEdge(String),
    #[error("edge {from} -> {to} closes a directed cycle")]
    Cycle { from: String, to: String },
    #[error("invalid argument: {0}")]
    Argument(String),
}

/// Genealogical relations. Ancestors and descendants include the vertex
/// itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Parents,
    Children,
    Descendants,
    Ancestors,
}

/// A topological order. Built by [`Digraph::topological_order`] or checked
/// against a graph with [`TopoOrder::is_valid_for`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopoOrder {
    sequence: Vec<VertexId>,
}

impl TopoOrder {
    pub fn new(sequence: Vec<VertexId>) -> Self {
        TopoOrder { sequence }
    }

    pub fn as_slice(&self) -> &[VertexId] {
        &self.sequence
    }

    pub fn position(&self, v: &str) -> Option<usize> {
        self.sequence.iter().position(|x| x.as_str() == v)
    }

    /// Covers every vertex of `g` exactly once and respects every directed edge.
    pub fn is_valid_for(&self, g: &Digraph) -> bool {
        if self.sequence.len() != g.len() {
            return false;
        }
        let mut pos = vec![usize::MAX; g.len()];
        for (i, v) in self.sequence.iter().enumerate() {
            match g.idx(v.as_str()) {
                Some(j) if pos[j] == usize::MAX => pos[j] = i,
                _ => return false,
            }
        }
        (0..g.len()).all(|v| g.children[v].iter().all(|&c| pos[v] < pos[c]))
    }
}

/// Directed graph with optional bidirected edges. Immutable once built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Digraph {
    names: Vec<VertexId>,
    index: HashMap<VertexId, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    siblings: Vec<Vec<usize>>,
}

impl Digraph {
    /// Builds a graph, rejecting unknown endpoints, self-loops, duplicate
    /// edges and directed cycles.
    pub fn new<V, D, B>(vertices: V, directed: D, bidirected: B) -> Result<Self, GraphError>
    where
        V: IntoIterator,
        V::Item: Into<VertexId>,
        D: IntoIterator<Item = (VertexId, VertexId)>,
        B: IntoIterator<Item = (VertexId, VertexId)>,
    {
        let mut set = BTreeSet::new();
        for v in vertices {
            let v: VertexId = v.into();
            if !set.insert(v.clone()) {
                return Err(GraphError::DuplicateVertex(v.0));
            }
        }
        let names: Vec<VertexId> = set.into_iter().collect();
        let index: HashMap<VertexId, usize> =
            names.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        let n = names.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        let mut siblings = vec![Vec::new(); n];
        let lookup = |v: &VertexId| {
            index
                .get(v)
                .copied()
                .ok_or_else(|| GraphError::UnknownVertex(v.0.clone()))
        };
        let mut directed_edges = Vec::new();
        for (a, b) in directed {
            let (i, j) = (lookup(&a)?, lookup(&b)?);
            if i == j {
                return Err(GraphError::SelfLoop(a.0));
            }
            if children[i].contains(&j) {
                return Err(GraphError::DuplicateEdge(format!("{a} -> {b}")));
            }
            children[i].push(j);
            parents[j].push(i);
            directed_edges.push((i, j));
        }
        for (a, b) in bidirected {
            let (i, j) = (lookup(&a)?, lookup(&b)?);
            if i == j {
                return Err(GraphError::SelfLoop(a.0));
            }
            if siblings[i].contains(&j) {
                return Err(GraphError::DuplicateEdge(format!("{a} <-> {b}")));
            }
            siblings[i].push(j);
            siblings[j].push(i);
        }
        for list in parents.iter_mut().chain(children.iter_mut()).chain(siblings.iter_mut()) {
            list.sort_unstable();
        }
        let g = Digraph {
            names,
            index,
            parents,
            children,
            siblings,
        };
        if let Some((a, b)) = g.cycle_edge(&directed_edges) {
            return Err(GraphError::Cycle {
                from: g.names[a].0.clone(),
                to: g.names[b].0.clone(),
            });
        }
        Ok(g)
    }

    /// A DAG with no bidirected edges.
    pub fn dag<V, D>(vertices: V, directed: D) -> Result<Self, GraphError>
    where
        V: IntoIterator,
        V::Item: Into<VertexId>,
        D: IntoIterator<Item = (VertexId, VertexId)>,
    {
        Digraph::new(vertices, directed, std::iter::empty())
    }

    // Returns an edge lying on a directed cycle, if any.
    fn cycle_edge(&self, edges: &[(usize, usize)]) -> Option<(usize, usize)> {
        let n = self.len();
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut removed = vec![false; n];
        while let Some(v) = queue.pop_front() {
            removed[v] = true;
            for &c in &self.children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        // An edge between two leftover vertices lies on a cycle only if its
        // head reaches its tail; pick the first such edge in input order.
        edges.iter().copied().find(|&(a, b)| {
            !removed[a] && !removed[b] && self.reach_down(&[b], &removed).contains(&a)
        })
    }

    fn reach_down(&self, start: &[usize], skip: &[bool]) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<usize> = start.to_vec();
        while let Some(v) = stack.pop() {
            if skip[v] || !seen.insert(v) {
                continue;
            }
            stack.extend(self.children[v].iter().copied());
        }
        seen
    }

    pub(crate) fn idx(&self, v: &str) -> Option<usize> {
        self.index.get(v).copied()
    }

    fn require(&self, v: &str) -> Result<usize, GraphError> {
        self.idx(v).ok_or_else(|| GraphError::UnknownVertex(v.to_string()))
    }

    fn require_set<'a, I>(&self, set: I) -> Result<Vec<usize>, GraphError>
    where
        I: IntoIterator<Item = &'a VertexId>,
    {
        set.into_iter().map(|v| self.require(v.as_str())).collect()
    }

    fn to_names(&self, idx: impl IntoIterator<Item = usize>) -> BTreeSet<VertexId> {
        idx.into_iter().map(|i| self.names[i].clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn contains(&self, v: &str) -> bool {
        self.index.contains_key(v)
    }

    /// Vertices in lexicographic order.
    pub fn vertices(&self) -> impl Iterator<Item = &VertexId> {
        self.names.iter()
    }

    pub fn directed_edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut out = Vec::new();
        for (i, cs) in self.children.iter().enumerate() {
            for &c in cs {
                out.push((self.names[i].clone(), self.names[c].clone()));
            }
        }
        out
    }

    /// Bidirected edges with the endpoints in lexicographic order.
    pub fn bidirected_edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut out = Vec::new();
        for (i, ss) in self.siblings.iter().enumerate() {
            for &s in ss {
                if i < s {
                    out.push((self.names[i].clone(), self.names[s].clone()));
                }
            }
        }
        out
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        match (self.idx(a), self.idx(b)) {
            (Some(i), Some(j)) => self.children[i].binary_search(&j).is_ok(),
            _ => false,
        }
    }

    pub fn has_bidirected(&self, a: &str, b: &str) -> bool {
        match (self.idx(a), self.idx(b)) {
            (Some(i), Some(j)) => self.siblings[i].binary_search(&j).is_ok(),
            _ => false,
        }
    }

    /// Adjacent by an edge of any kind.
    pub fn adjacent(&self, a: &str, b: &str) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a) || self.has_bidirected(a, b)
    }

    pub fn genealogy(&self, v: &str, relation: Relation) -> Result<BTreeSet<VertexId>, GraphError> {
        let i = self.require(v)?;
        Ok(match relation {
            Relation::Parents => self.to_names(self.parents[i].iter().copied()),
            Relation::Children => self.to_names(self.children[i].iter().copied()),
            Relation::Descendants => self.to_names(self.closure(&[i], &self.children)),
            Relation::Ancestors => self.to_names(self.closure(&[i], &self.parents)),
        })
    }

    pub fn parents(&self, v: &str) -> Result<BTreeSet<VertexId>, GraphError> {
        self.genealogy(v, Relation::Parents)
    }

    pub fn children(&self, v: &str) -> Result<BTreeSet<VertexId>, GraphError> {
        self.genealogy(v, Relation::Children)
    }

    pub fn siblings(&self, v: &str) -> Result<BTreeSet<VertexId>, GraphError> {
        let i = self.require(v)?;
        Ok(self.to_names(self.siblings[i].iter().copied()))
    }

    /// Ancestors of a set, the set included.
    pub fn ancestors_of<'a, I>(&self, set: I) -> Result<BTreeSet<VertexId>, GraphError>
    where
        I: IntoIterator<Item = &'a VertexId>,
    {
        let idx = self.require_set(set)?;
        Ok(self.to_names(self.closure(&idx, &self.parents)))
    }

    /// Descendants of a set, the set included.
    pub fn descendants_of<'a, I>(&self, set: I) -> Result<BTreeSet<VertexId>, GraphError>
    where
        I: IntoIterator<Item = &'a VertexId>,
    {
        let idx = self.require_set(set)?;
        Ok(self.to_names(self.closure(&idx, &self.children)))
    }

    fn closure(&self, start: &[usize], adj: &[Vec<usize>]) -> Vec<usize> {
        let mut seen = vec![false; self.len()];
        let mut stack = start.to_vec();
        while let Some(v) = stack.pop() {
            if std::mem::replace(&mut seen[v], true) {
                continue;
            }
            stack.extend(adj[v].iter().copied());
        }
        (0..self.len()).filter(|&v| seen[v]).collect()
    }

    /// Topological order with ties broken by lexicographic vertex name.
    pub fn topological_order(&self) -> TopoOrder {
        self.topological_order_by_key(|_| 0u8)
    }

    /// Topological order that, among available vertices, picks the smallest
    /// `(key, name)`.
    pub fn topological_order_by_key<K: Ord>(&self, key: impl Fn(&VertexId) -> K) -> TopoOrder {
        let n = self.len();
        let keys: Vec<K> = self.names.iter().map(&key).collect();
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        // Vertex indices follow name order, so (key, index) orders by name
        // within a key.
        let mut heap: BinaryHeap<Reverse<(&K, usize)>> = (0..n)
            .filter(|&v| indeg[v] == 0)
            .map(|v| Reverse((&keys[v], v)))
            .collect();
        let mut seq = Vec::with_capacity(n);
        while let Some(Reverse((_, v))) = heap.pop() {
            seq.push(self.names[v].clone());
            for &c in &self.children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    heap.push(Reverse((&keys[c], c)));
                }
            }
        }
        TopoOrder { sequence: seq }
    }

    fn check_disjoint(&self, sets: [&[usize]; 3]) -> Result<(), GraphError> {
        let mut seen = vec![false; self.len()];
        for set in sets {
            let mut local = BTreeSet::new();
            for &v in set {
                if !local.insert(v) {
                    continue;
                }
                if std::mem::replace(&mut seen[v], true) {
                    return Err(GraphError::Argument(format!(
                        "vertex `{}` appears in more than one set",
                        self.names[v]
                    )));
                }
            }
        }
        Ok(())
    }

    /// d-separation (m-separation for ADMGs) of `x` and `y` given `z`,
    /// by reachability. Empty `x` or `y` is trivially separated.
    pub fn d_separated<'a, X, Y, Z>(&self, x: X, y: Y, z: Z) -> Result<bool, GraphError>
    where
        X: IntoIterator<Item = &'a VertexId>,
        Y: IntoIterator<Item = &'a VertexId>,
        Z: IntoIterator<Item = &'a VertexId>,
    {
        let (x, y, z) = (self.require_set(x)?, self.require_set(y)?, self.require_set(z)?);
        self.check_disjoint([&x, &y, &z])?;
        Ok(self.open_trail(&x, &y, &z).is_none())
    }

    /// An open trail from `x` to `y` given `z`, or `None` when separated.
    pub fn d_connecting_trail<'a, X, Y, Z>(
        &self,
        x: X,
        y: Y,
        z: Z,
    ) -> Result<Option<Vec<VertexId>>, GraphError>
    where
        X: IntoIterator<Item = &'a VertexId>,
        Y: IntoIterator<Item = &'a VertexId>,
        Z: IntoIterator<Item = &'a VertexId>,
    {
        let (x, y, z) = (self.require_set(x)?, self.require_set(y)?, self.require_set(z)?);
        self.check_disjoint([&x, &y, &z])?;
        Ok(self
            .open_trail(&x, &y, &z)
            .map(|t| t.into_iter().map(|i| self.names[i].clone()).collect()))
    }

    // Bayes-ball over states (vertex, arrived with an arrowhead at vertex).
    // A bidirected edge puts arrowheads at both ends.
    fn open_trail(&self, x: &[usize], y: &[usize], z: &[usize]) -> Option<Vec<usize>> {
        let n = self.len();
        let mut in_z = vec![false; n];
        for &v in z {
            in_z[v] = true;
        }
        let mut in_y = vec![false; n];
        for &v in y {
            in_y[v] = true;
        }
        let mut an_z = vec![false; n];
        for v in self.closure(z, &self.parents) {
            an_z[v] = true;
        }
        // prev[(v, head)] = previous state, for trail reconstruction.
        let mut prev: HashMap<(usize, bool), Option<(usize, bool)>> = HashMap::new();
        let mut queue = VecDeque::new();
        for &s in x {
            // Start as if arrived by a tail, so every edge out of s is usable
            // and s itself is never treated as a collider.
            if prev.insert((s, false), None).is_none() {
                queue.push_back((s, false));
            }
        }
        let x_set: BTreeSet<usize> = x.iter().copied().collect();
        while let Some(state @ (v, head)) = queue.pop_front() {
            if in_y[v] {
                let mut trail = vec![v];
                let mut cur = prev[&state];
                while let Some(p) = cur {
                    trail.push(p.0);
                    cur = prev[&p];
                }
                trail.reverse();
                return Some(trail);
            }
            let start = prev[&state].is_none() && x_set.contains(&v);
            let mut push = |next: (usize, bool), queue: &mut VecDeque<(usize, bool)>| {
                if let std::collections::hash_map::Entry::Vacant(e) = prev.entry(next) {
                    e.insert(Some(state));
                    queue.push_back(next);
                }
            };
            let pass_noncollider = start || !in_z[v];
            if head && !start {
                // Arrived with an arrowhead: leaving through another arrowhead
                // makes v a collider.
                if an_z[v] {
                    for &p in &self.parents[v] {
                        push((p, false), &mut queue);
                    }
                    for &s in &self.siblings[v] {
                        push((s, true), &mut queue);
                    }
                }
                if pass_noncollider {
                    for &c in &self.children[v] {
                        push((c, true), &mut queue);
                    }
                }
            } else if pass_noncollider {
                for &p in &self.parents[v] {
                    push((p, false), &mut queue);
                }
                for &s in &self.siblings[v] {
                    push((s, true), &mut queue);
                }
                for &c in &self.children[v] {
                    push((c, true), &mut queue);
                }
            }
        }
        None
    }

    /// d-separation by moralizing the ancestral subgraph. Slower than
    /// [`Digraph::d_separated`]; kept as an independent check.
    pub fn d_separated_moral<'a, X, Y, Z>(&self, x: X, y: Y, z: Z) -> Result<bool, GraphError>
    where
        X: IntoIterator<Item = &'a VertexId>,
        Y: IntoIterator<Item = &'a VertexId>,
        Z: IntoIterator<Item = &'a VertexId>,
    {
        let (x, y, z) = (self.require_set(x)?, self.require_set(y)?, self.require_set(z)?);
        self.check_disjoint([&x, &y, &z])?;
        if x.is_empty() || y.is_empty() {
            return Ok(true);
        }
        // Each bidirected edge becomes a fresh latent parent numbered from n.
        let n = self.len();
        let mut parents: Vec<Vec<usize>> = self.parents.clone();
        let mut latent = 0;
        for i in 0..n {
            for &s in &self.siblings[i] {
                if i < s {
                    let l = n + latent;
                    latent += 1;
                    parents[i].push(l);
                    parents[s].push(l);
                }
            }
        }
        parents.resize(n + latent, Vec::new());
        let total = n + latent;
        let mut keep = vec![false; total];
        let mut stack: Vec<usize> = x.iter().chain(&y).chain(&z).copied().collect();
        while let Some(v) = stack.pop() {
            if std::mem::replace(&mut keep[v], true) {
                continue;
            }
            stack.extend(parents[v].iter().copied());
        }
        let mut adj = vec![BTreeSet::new(); total];
        for v in (0..total).filter(|&v| keep[v]) {
            let ps = &parents[v];
            for &p in ps {
                adj[v].insert(p);
                adj[p].insert(v);
            }
            for (i, &a) in ps.iter().enumerate() {
                for &b in &ps[i + 1..] {
                    adj[a].insert(b);
                    adj[b].insert(a);
                }
            }
        }
        let mut blocked = vec![false; total];
        for &v in &z {
            blocked[v] = true;
        }
        let mut seen = vec![false; total];
        let mut stack = x.clone();
        let y_set: BTreeSet<usize> = y.iter().copied().collect();
        while let Some(v) = stack.pop() {
            if std::mem::replace(&mut seen[v], true) {
                continue;
            }
            if y_set.contains(&v) {
                return Ok(false);
            }
            for &w in &adj[v] {
                if keep[w] && !blocked[w] && !seen[w] {
                    stack.push(w);
                }
            }
        }
        Ok(true)
    }

    /// Latent projection onto the vertices outside `hide`.
    pub fn latent_project<'a, I>(&self, hide: I) -> Result<Digraph, GraphError>
    where
        I: IntoIterator<Item = &'a VertexId>,
    {
        let hide = self.require_set(hide)?;
        let mut hidden = vec![false; self.len()];
        for &h in &hide {
            hidden[h] = true;
        }
        if !self.is_empty() && hidden.iter().all(|&h| h) {
            return Err(GraphError::Argument("cannot hide every vertex".into()));
        }
        let visible: Vec<usize> = (0..self.len()).filter(|&v| !hidden[v]).collect();
        // up[v]: v plus hidden vertices reaching v through hidden-only
        // directed paths.
        let up: HashMap<usize, BTreeSet<usize>> = visible
            .iter()
            .map(|&v| {
                let mut seen = BTreeSet::from([v]);
                let mut stack: Vec<usize> =
                    self.parents[v].iter().copied().filter(|&p| hidden[p]).collect();
                while let Some(h) = stack.pop() {
                    if seen.insert(h) {
                        stack.extend(self.parents[h].iter().copied().filter(|&p| hidden[p]));
                    }
                }
                (v, seen)
            })
            .collect();
        let mut directed = Vec::new();
        for &b in &visible {
            let mut pa = BTreeSet::new();
            for &h in &up[&b] {
                for &p in &self.parents[h] {
                    if !hidden[p] {
                        pa.insert(p);
                    }
                }
            }
            for p in pa {
                directed.push((self.names[p].clone(), self.names[b].clone()));
            }
        }
        let mut bidirected = Vec::new();
        for (i, &a) in visible.iter().enumerate() {
            for &b in &visible[i + 1..] {
                let (ua, ub) = (&up[&a], &up[&b]);
                // Hidden fork shared by both, or a bidirected edge joining
                // the two hidden ancestries.
                let fork = ua.iter().any(|h| hidden[*h] && ub.contains(h));
                let joined = fork
                    || ua
                        .iter()
                        .any(|&s| self.siblings[s].iter().any(|t| ub.contains(t)));
                if joined {
                    bidirected.push((self.names[a].clone(), self.names[b].clone()));
                }
            }
        }
        Digraph::new(
            visible.iter().map(|&v| self.names[v].clone()),
            directed,
            bidirected,
        )
    }

    /// Connected component of `v` in the bidirected part.
    pub fn district(&self, v: &str) -> Result<BTreeSet<VertexId>, GraphError> {
        let i = self.require(v)?;
        Ok(self.to_names(self.closure(&[i], &self.siblings)))
    }

    /// All districts, each as a sorted set, ordered by their first member.
    pub fn districts(&self) -> Vec<BTreeSet<VertexId>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for v in 0..self.len() {
            if seen[v] {
                continue;
            }
            let comp = self.closure(&[v], &self.siblings);
            for &c in &comp {
                seen[c] = true;
            }
            out.push(self.to_names(comp));
        }
        out
    }

    /// Markov pillow of `v` under `order`: the district of `v` in the
    /// subgraph induced by `v` and its predecessors, plus that district's
    /// parents, minus `v`.
    pub fn markov_pillow(&self, v: &str, order: &TopoOrder) -> Result<BTreeSet<VertexId>, GraphError> {
        if !order.is_valid_for(self) {
            return Err(GraphError::Argument("order is not a topological order of the graph".into()));
        }
        let pos = order
            .position(v)
            .ok_or_else(|| GraphError::UnknownVertex(v.to_string()))?;
        let prefix: BTreeSet<VertexId> = order.as_slice()[..=pos].iter().cloned().collect();
        let sub = self.induced(&prefix)?;
        let dis = sub.district(v)?;
        let mut out = dis.clone();
        for d in &dis {
            out.extend(sub.parents(d.as_str())?);
        }
        out.remove(v);
        Ok(out)
    }

    /// Subgraph induced by `keep`.
    pub fn induced(&self, keep: &BTreeSet<VertexId>) -> Result<Digraph, GraphError> {
        for v in keep {
            self.require(v.as_str())?;
        }
        let directed = self
            .directed_edges()
            .into_iter()
            .filter(|(a, b)| keep.contains(a) && keep.contains(b));
        let bidirected = self
            .bidirected_edges()
            .into_iter()
            .filter(|(a, b)| keep.contains(a) && keep.contains(b));
        Digraph::new(keep.iter().cloned(), directed, bidirected)
    }

    /// Copy of the graph with every edge into `v` removed (directed and
    /// bidirected).
    pub fn without_incoming(&self, v: &str) -> Result<Digraph, GraphError> {
        self.require(v)?;
        let directed = self.directed_edges().into_iter().filter(|(_, b)| b.as_str() != v);
        let bidirected = self
            .bidirected_edges()
            .into_iter()
            .filter(|(a, b)| a.as_str() != v && b.as_str() != v);
        Digraph::new(self.names.iter().cloned(), directed, bidirected)
    }

    /// Edge lists grouped for display: `parent -> [children]`.
    pub fn adjacency(&self) -> BTreeMap<VertexId, BTreeSet<VertexId>> {
        self.names
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), self.to_names(self.children[i].iter().copied())))
            .collect()
    }
}
