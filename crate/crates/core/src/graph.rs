//! Countable weighted graphs exposed as neighbor oracles.
//!
//! A graph is a symmetric weight function `b: X × X → [0, ∞)` with zero
//! diagonal and finite weighted degree at every vertex. Infinite graphs are
//! represented by a neighbor function that returns, for each vertex, the
//! finite list of its positively-weighted neighbors; finite graphs are the
//! special case where the function is backed by an adjacency map. Every
//! represented graph is therefore locally finite.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Canonical printable vertex identifier with a total order.
///
/// The order (integers, then integer pairs, then names, then tagged names)
/// fixes the row/column order of every matrix assembled from a vertex set,
/// so all downstream linear algebra is deterministic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VertexId {
    Int(i64),
    Pair(i64, i64),
    Name(String),
    Tag(String, i64),
}

impl VertexId {
    pub fn tag(name: &str, index: i64) -> Self {
        VertexId::Tag(name.to_string(), index)
    }

    pub fn name(name: &str) -> Self {
        VertexId::Name(name.to_string())
    }

    /// Parses a printable token back into a `VertexId`.
    ///
    /// Integers parse as `Int`, comma-separated integer pairs (with or
    /// without parentheses) as `Pair`, `name_3` as `Tag("name", 3)`, and
    /// anything else as `Name`. Round-trips with `Display` for every token
    /// this crate itself produces.
    pub fn parse(token: &str) -> Self {
        let t = token.trim();
        if let Ok(n) = t.parse::<i64>() {
            return VertexId::Int(n);
        }
        let inner = t
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .unwrap_or(t);
        if let Some((a, b)) = inner.split_once(',') {
            if let (Ok(a), Ok(b)) = (a.trim().parse::<i64>(), b.trim().parse::<i64>()) {
                return VertexId::Pair(a, b);
            }
        }
        if let Some((name, num)) = t.rsplit_once('_') {
            if !name.is_empty() && !name.starts_with(|c: char| c.is_ascii_digit() || c == '-') {
                if let Ok(k) = num.parse::<i64>() {
                    return VertexId::Tag(name.to_string(), k);
                }
            }
        }
        VertexId::Name(t.to_string())
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexId::Int(n) => write!(f, "{n}"),
            VertexId::Pair(a, b) => write!(f, "({a},{b})"),
            VertexId::Name(s) => write!(f, "{s}"),
            VertexId::Tag(s, k) => write!(f, "{s}_{k}"),
        }
    }
}

impl From<i64> for VertexId {
    fn from(n: i64) -> Self {
        VertexId::Int(n)
    }
}

impl Serialize for VertexId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

struct VertexIdVisitor;

impl Visitor<'_> for VertexIdVisitor {
    type Value = VertexId;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a vertex token (integer or string)")
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<VertexId, E> {
        Ok(VertexId::Int(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<VertexId, E> {
        i64::try_from(v)
            .map(VertexId::Int)
            .map_err(|_| E::custom("vertex integer out of range"))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<VertexId, E> {
        Ok(VertexId::parse(v))
    }
}

impl<'de> Deserialize<'de> for VertexId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        d.deserialize_any(VertexIdVisitor)
    }
}

/// Outcome of a bounded connected-component probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ComponentProbe {
    /// The component was exhausted; carries its exact size.
    Finite(usize),
    /// More vertices than the budget were reachable.
    ExceedsBudget,
}

type NeighborFn = dyn Fn(&VertexId) -> Option<Vec<(VertexId, f64)>> + Send + Sync;

/// A countable weighted graph behind a neighbor function.
///
/// The function returns `None` for tokens that are not vertices, and the
/// finite list of `(neighbor, weight)` pairs otherwise (weights strictly
/// positive, no self entry). Oracles are immutable and cheap to clone.
#[derive(Clone)]
pub struct GraphOracle {
    neighbors_fn: Arc<NeighborFn>,
    infinite_components_asserted: bool,
    description: Arc<str>,
    truncation_level: Option<usize>,
}

impl fmt::Debug for GraphOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GraphOracle")
            .field("description", &self.description)
            .field(
                "infinite_components_asserted",
                &self.infinite_components_asserted,
            )
            .finish()
    }
}

impl GraphOracle {
    /// Wraps a neighbor function. `infinite_components_asserted` is the
    /// constructor's promise that every connected component is infinite;
    /// it is evidence for certification, never verified exhaustively.
    pub fn from_fn<F>(description: &str, infinite_components_asserted: bool, f: F) -> Self
    where
        F: Fn(&VertexId) -> Option<Vec<(VertexId, f64)>> + Send + Sync + 'static,
    {
        GraphOracle {
            neighbors_fn: Arc::new(f),
            infinite_components_asserted,
            description: Arc::from(description),
            truncation_level: None,
        }
    }

    /// Builds a finite graph from a vertex list and undirected edges.
    ///
    /// Each undirected edge is listed once and mirrored internally.
    /// Zero-weight entries are dropped; self-loops, negative weights,
    /// duplicate pairs, and unknown endpoints are rejected.
    pub fn finite<V, E>(description: &str, vertices: V, edges: E) -> Result<Self>
    where
        V: IntoIterator<Item = VertexId>,
        E: IntoIterator<Item = (VertexId, VertexId, f64)>,
    {
        let mut adj: BTreeMap<VertexId, BTreeMap<VertexId, f64>> = BTreeMap::new();
        for v in vertices {
            adj.entry(v).or_default();
        }
        for (u, v, w) in edges {
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at {u}")));
            }
            if w < 0.0 || !w.is_finite() {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u},{v}) has invalid weight {w}"
                )));
            }
            if !adj.contains_key(&u) {
                return Err(Error::InvalidGraph(format!("unknown endpoint {u}")));
            }
            if !adj.contains_key(&v) {
                return Err(Error::InvalidGraph(format!("unknown endpoint {v}")));
            }
            if w == 0.0 {
                continue;
            }
            if adj[&u].contains_key(&v) {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u},{v}) listed more than once"
                )));
            }
            adj.get_mut(&u).unwrap().insert(v.clone(), w);
            adj.get_mut(&v).unwrap().insert(u, w);
        }
        let adj = Arc::new(adj);
        let description = description.to_string();
        Ok(GraphOracle::from_fn(&description, false, move |x| {
            adj.get(x)
                .map(|n| n.iter().map(|(y, w)| (y.clone(), *w)).collect())
        }))
    }

    pub(crate) fn with_truncation(mut self, level: usize) -> Self {
        self.truncation_level = Some(level);
        self
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn infinite_components_asserted(&self) -> bool {
        self.infinite_components_asserted
    }

    /// Truncation level of a finite shadow of a non-locally-finite graph,
    /// when this oracle was produced by such a generator.
    pub fn truncation_level(&self) -> Option<usize> {
        self.truncation_level
    }

    pub fn contains(&self, x: &VertexId) -> bool {
        (self.neighbors_fn)(x).is_some()
    }

    /// The finite list of `(neighbor, weight)` pairs, sorted by vertex.
    pub fn neighbors(&self, x: &VertexId) -> Result<Vec<(VertexId, f64)>> {
        let mut n = (self.neighbors_fn)(x).ok_or_else(|| Error::InvalidVertex(x.clone()))?;
        n.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(n)
    }

    /// Weighted degree `deg(x) = Σ_y b(x,y)`; zero for isolated vertices.
    pub fn degree(&self, x: &VertexId) -> Result<f64> {
        Ok(self.neighbors(x)?.iter().map(|(_, w)| w).sum())
    }

    /// Combinatorial ball `B_n(x)`, breadth-first. `B_0(x) = {x}`.
    pub fn ball(&self, x: &VertexId, n: usize) -> Result<BTreeSet<VertexId>> {
        self.ball_of_set(std::iter::once(x.clone()), n)
    }

    /// Union of balls `B_n` around every seed vertex.
    pub fn ball_of_set<I>(&self, seeds: I, n: usize) -> Result<BTreeSet<VertexId>>
    where
        I: IntoIterator<Item = VertexId>,
    {
        let mut seen = BTreeSet::new();
        let mut frontier = Vec::new();
        for s in seeds {
            if !self.contains(&s) {
                return Err(Error::InvalidVertex(s));
            }
            if seen.insert(s.clone()) {
                frontier.push(s);
            }
        }
        for _ in 0..n {
            let mut next = Vec::new();
            for v in &frontier {
                for (y, _) in self.neighbors(v)? {
                    if seen.insert(y.clone()) {
                        next.push(y);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        Ok(seen)
    }

    /// Breadth-first probe of the connected component of `x`, visiting at
    /// most `budget` vertices. Returns `Finite(size)` when the component is
    /// exhausted within the budget. Monotone: `Finite(s)` at budget `β`
    /// stays `Finite(s)` at every budget `≥ β`.
    pub fn component_probe(&self, x: &VertexId, budget: usize) -> Result<ComponentProbe> {
        assert!(budget >= 1, "component probe budget must be >= 1");
        Ok(match self.component_within(x, budget)? {
            Some(set) => ComponentProbe::Finite(set.len()),
            None => ComponentProbe::ExceedsBudget,
        })
    }

    /// As `component_probe`, but returns the component's vertex set when it
    /// fits within the budget.
    pub fn component_within(
        &self,
        x: &VertexId,
        budget: usize,
    ) -> Result<Option<BTreeSet<VertexId>>> {
        if !self.contains(x) {
            return Err(Error::InvalidVertex(x.clone()));
        }
        let mut visited = BTreeSet::new();
        visited.insert(x.clone());
        let mut queue = VecDeque::new();
        queue.push_back(x.clone());
        while let Some(v) = queue.pop_front() {
            for (y, _) in self.neighbors(&v)? {
                if !visited.contains(&y) {
                    if visited.len() >= budget {
                        return Ok(None);
                    }
                    visited.insert(y.clone());
                    queue.push_back(y);
                }
            }
        }
        Ok(Some(visited))
    }

    /// Weight matrix restricted to the given vertex set, rows and columns
    /// in the canonical vertex order. Edges leaving the set are not part of
    /// the matrix but still count toward `degree`.
    pub fn finite_view(&self, vertices: &BTreeSet<VertexId>) -> Result<FiniteGraphView> {
        let order: Vec<VertexId> = vertices.iter().cloned().collect();
        let index: BTreeMap<&VertexId, usize> =
            order.iter().enumerate().map(|(i, v)| (v, i)).collect();
        let n = order.len();
        let mut weights = DMatrix::<f64>::zeros(n, n);
        for (i, x) in order.iter().enumerate() {
            for (y, w) in self.neighbors(x)? {
                if let Some(&j) = index.get(&y) {
                    weights[(i, j)] = w;
                }
            }
        }
        Ok(FiniteGraphView {
            vertices: order,
            weights,
        })
    }
}

/// A finite window onto a graph: ordered vertices plus their weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteGraphView {
    vertices: Vec<VertexId>,
    weights: DMatrix<f64>,
}

impl FiniteGraphView {
    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn index_of(&self, x: &VertexId) -> Option<usize> {
        self.vertices.binary_search(x).ok()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }
}
