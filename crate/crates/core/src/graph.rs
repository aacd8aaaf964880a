//! Finite weighted graphs with a vertex measure.
//!
//! A [`WeightedGraph`] is a finite truncation of a locally finite graph: every
//! vertex carries a measure `mu(x) > 0`, every undirected edge a weight
//! `w_xy > 0`. Vertex ids are opaque strings mapped to dense indices on
//! construction; all numerics work on the dense index.
//!
//! Construction only rejects input that cannot be indexed (unknown or
//! duplicated vertex ids). Everything else (sign of weights and measures,
//! symmetry, connectivity, loops, repeated edges) is reported by
//! [`WeightedGraph::validate`], so that a malformed graph can still be
//! inspected.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("unknown vertex id `{0}`")]
    UnknownVertex(String),
    #[error("vertex index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("duplicate vertex id `{0}`")]
    DuplicateVertex(String),
    #[error("graph has no vertices")]
    Empty,
    #[error("invalid graph: {0}")]
    Invalid(ValidationReport),
    #[error("cannot read graph file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse graph file {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// On-disk graph description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub vertices: Vec<VertexRecord>,
    pub edges: Vec<EdgeRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexRecord {
    pub id: String,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub u: String,
    pub v: String,
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// A single broken standing assumption.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonpositiveWeight { u: String, v: String, weight: f64 },
    AsymmetricWeight { u: String, v: String, forward: f64, backward: f64 },
    DuplicateEdge { u: String, v: String },
    SelfLoop { vertex: String },
    NonpositiveMeasure { vertex: String, mu: f64 },
    NonFinite { what: String },
    Disconnected { components: usize },
}

impl Violation {
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::NonpositiveWeight { .. } => "nonpositive weight",
            Violation::AsymmetricWeight { .. } => "asymmetric weight",
            Violation::DuplicateEdge { .. } => "duplicate edge",
            Violation::SelfLoop { .. } => "self-loop",
            Violation::NonpositiveMeasure { .. } => "nonpositive measure",
            Violation::NonFinite { .. } => "non-finite value",
            Violation::Disconnected { .. } => "disconnected",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonpositiveWeight { u, v, weight } => {
                write!(f, "nonpositive weight {weight} on edge {u}-{v}")
            }
            Violation::AsymmetricWeight { u, v, forward, backward } => {
                write!(f, "asymmetric weight on {u}-{v}: {forward} vs {backward}")
            }
            Violation::DuplicateEdge { u, v } => write!(f, "duplicate edge {u}-{v}"),
            Violation::SelfLoop { vertex } => write!(f, "self-loop at {vertex}"),
            Violation::NonpositiveMeasure { vertex, mu } => {
                write!(f, "nonpositive measure {mu} at {vertex}")
            }
            Violation::NonFinite { what } => write!(f, "non-finite value in {what}"),
            Violation::Disconnected { components } => {
                write!(f, "disconnected ({components} components)")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: &str) -> bool {
        self.violations.iter().any(|v| v.kind() == kind)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Immutable weighted graph with vertex measure.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    mu: Vec<f64>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, f64)>>,
    mu0: f64,
}

impl WeightedGraph {
    /// Builds a graph from `(id, mu)` pairs and `(u, v, w)` edges given by id.
    pub fn new<S: AsRef<str>>(
        vertices: &[(S, f64)],
        edges: &[(S, S, f64)],
    ) -> Result<Self, GraphError> {
        let ids: Vec<String> = vertices.iter().map(|(id, _)| id.as_ref().to_owned()).collect();
        let mu: Vec<f64> = vertices.iter().map(|(_, m)| *m).collect();
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(GraphError::DuplicateVertex(id.clone()));
            }
        }
        let mut indexed = Vec::with_capacity(edges.len());
        for (u, v, w) in edges {
            let a = *index
                .get(u.as_ref())
                .ok_or_else(|| GraphError::UnknownVertex(u.as_ref().to_owned()))?;
            let b = *index
                .get(v.as_ref())
                .ok_or_else(|| GraphError::UnknownVertex(v.as_ref().to_owned()))?;
            indexed.push(Edge { a, b, weight: *w });
        }
        Self::from_indexed(ids, mu, indexed)
    }

    /// Builds a graph from dense data. Ids must be unique.
    pub fn from_indexed(ids: Vec<String>, mu: Vec<f64>, edges: Vec<Edge>) -> Result<Self, GraphError> {
        if ids.is_empty() {
            return Err(GraphError::Empty);
        }
        let n = ids.len();
        let mut index = HashMap::with_capacity(n);
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(GraphError::DuplicateVertex(id.clone()));
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for e in &edges {
            if e.a >= n {
                return Err(GraphError::IndexOutOfRange(e.a));
            }
            if e.b >= n {
                return Err(GraphError::IndexOutOfRange(e.b));
            }
            adjacency[e.a].push((e.b, e.weight));
            if e.a != e.b {
                adjacency[e.b].push((e.a, e.weight));
            }
        }
        let mu0 = mu.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self { ids, index, mu, edges, adjacency, mu0 })
    }

    /// Builds and validates; any violation is an error.
    pub fn checked<S: AsRef<str>>(
        vertices: &[(S, f64)],
        edges: &[(S, S, f64)],
    ) -> Result<Self, GraphError> {
        let g = Self::new(vertices, edges)?;
        g.ensure_valid()?;
        Ok(g)
    }

    pub fn from_file_data(data: &GraphFile) -> Result<Self, GraphError> {
        let vertices: Vec<(&str, f64)> =
            data.vertices.iter().map(|v| (v.id.as_str(), v.mu)).collect();
        let edges: Vec<(&str, &str, f64)> =
            data.edges.iter().map(|e| (e.u.as_str(), e.v.as_str(), e.w)).collect();
        Self::new(&vertices, &edges)
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let data: GraphFile = serde_json::from_str(text)
            .map_err(|source| GraphError::Parse { path: "<string>".into(), source })?;
        Self::from_file_data(&data)
    }

    /// Loads a graph file; the result is not validated.
    pub fn load(path: &Path) -> Result<Self, GraphError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path)
            .map_err(|source| GraphError::Io { path: shown.clone(), source })?;
        let data: GraphFile =
            serde_json::from_str(&text).map_err(|source| GraphError::Parse { path: shown, source })?;
        Self::from_file_data(&data)
    }

    pub fn to_file_data(&self) -> GraphFile {
        GraphFile {
            vertices: self
                .ids
                .iter()
                .zip(&self.mu)
                .map(|(id, &mu)| VertexRecord { id: id.clone(), mu })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeRecord { u: self.ids[e.a].clone(), v: self.ids[e.b].clone(), w: e.weight })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, x: usize) -> &str {
        &self.ids[x]
    }

    pub fn index_of(&self, id: &str) -> Result<usize, GraphError> {
        self.index.get(id).copied().ok_or_else(|| GraphError::UnknownVertex(id.to_owned()))
    }

    pub fn mu(&self, x: usize) -> f64 {
        self.mu[x]
    }

    pub fn measure(&self) -> &[f64] {
        &self.mu
    }

    /// Smallest vertex measure.
    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn mu_max(&self) -> f64 {
        self.mu.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, x: usize) -> &[(usize, f64)] {
        &self.adjacency[x]
    }

    fn check_index(&self, x: usize) -> Result<(), GraphError> {
        if x < self.len() {
            Ok(())
        } else {
            Err(GraphError::IndexOutOfRange(x))
        }
    }

    /// `deg(x) = sum of w_xy over neighbors y`.
    pub fn degree(&self, x: usize) -> Result<f64, GraphError> {
        self.check_index(x)?;
        Ok(self.adjacency[x].iter().map(|&(_, w)| w).sum())
    }

    pub fn degree_of(&self, id: &str) -> Result<f64, GraphError> {
        self.degree(self.index_of(id)?)
    }

    /// Hop distances from `source`; `None` marks unreachable vertices.
    pub fn bfs(&self, source: usize) -> Result<Vec<Option<usize>>, GraphError> {
        self.check_index(source)?;
        let mut dist = vec![None; self.len()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(x) = queue.pop_front() {
            let d = dist[x].unwrap_or(0);
            for &(y, _) in &self.adjacency[x] {
                if dist[y].is_none() {
                    dist[y] = Some(d + 1);
                    queue.push_back(y);
                }
            }
        }
        Ok(dist)
    }

    /// Minimal number of edges joining `x` and `y`; `None` when disconnected.
    pub fn dist(&self, x: usize, y: usize) -> Result<Option<usize>, GraphError> {
        self.check_index(y)?;
        Ok(self.bfs(x)?[y])
    }

    /// Hop distance from `anchor` to every vertex. Fails on a disconnected graph.
    pub fn distances_from(&self, anchor: usize) -> Result<Vec<usize>, GraphError> {
        let d = self.bfs(anchor)?;
        d.into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| GraphError::Invalid(ValidationReport {
                violations: vec![Violation::Disconnected { components: self.component_count() }],
            }))
    }

    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.len()];
        let mut count = 0;
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(x) = stack.pop() {
                for &(y, _) in &self.adjacency[x] {
                    if !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    /// Largest hop distance between two vertices, `None` when disconnected.
    pub fn diameter(&self) -> Option<usize> {
        let mut best = 0;
        for x in 0..self.len() {
            for d in self.bfs(x).ok()? {
                best = best.max(d?);
            }
        }
        Some(best)
    }

    /// Induced subgraph on the hop ball of radius `radius` around `center`.
    /// Vertex order and ids are preserved.
    pub fn ball_truncate(&self, center: usize, radius: usize) -> Result<WeightedGraph, GraphError> {
        let dist = self.bfs(center)?;
        let mut remap = vec![usize::MAX; self.len()];
        let mut ids = Vec::new();
        let mut mu = Vec::new();
        for x in 0..self.len() {
            if matches!(dist[x], Some(d) if d <= radius) {
                remap[x] = ids.len();
                ids.push(self.ids[x].clone());
                mu.push(self.mu[x]);
            }
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| remap[e.a] != usize::MAX && remap[e.b] != usize::MAX)
            .map(|e| Edge { a: remap[e.a], b: remap[e.b], weight: e.weight })
            .collect();
        WeightedGraph::from_indexed(ids, mu, edges)
    }

    /// Lists every violated standing assumption; empty means valid.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for (x, &m) in self.mu.iter().enumerate() {
            if !m.is_finite() {
                violations.push(Violation::NonFinite { what: format!("mu({})", self.ids[x]) });
            } else if m <= 0.0 {
                violations.push(Violation::NonpositiveMeasure { vertex: self.ids[x].clone(), mu: m });
            }
        }
        let mut seen: HashMap<(usize, usize), (usize, f64)> = HashMap::new();
        for e in &self.edges {
            let (u, v) = (self.ids[e.a].clone(), self.ids[e.b].clone());
            if e.a == e.b {
                violations.push(Violation::SelfLoop { vertex: u });
                continue;
            }
            if !e.weight.is_finite() {
                violations.push(Violation::NonFinite { what: format!("weight {u}-{v}") });
            } else if e.weight <= 0.0 {
                violations.push(Violation::NonpositiveWeight { u: u.clone(), v: v.clone(), weight: e.weight });
            }
            let key = (e.a.min(e.b), e.a.max(e.b));
            match seen.get(&key) {
                None => {
                    seen.insert(key, (e.a, e.weight));
                }
                Some(&(first_a, w)) => {
                    if first_a != e.a && w != e.weight {
                        violations.push(Violation::AsymmetricWeight { u, v, forward: w, backward: e.weight });
                    } else {
                        violations.push(Violation::DuplicateEdge { u, v });
                    }
                }
            }
        }
        let components = self.component_count();
        if components > 1 {
            violations.push(Violation::Disconnected { components });
        }
        ValidationReport { violations }
    }

    pub fn ensure_valid(&self) -> Result<(), GraphError> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(GraphError::Invalid(report))
        }
    }
}

/// Small graph families used by presets, tests and the demo.
pub mod families {
    use super::{Edge, WeightedGraph};

    fn build(n: usize, prefix: &str, edges: Vec<(usize, usize)>) -> WeightedGraph {
        let ids = (0..n).map(|i| format!("{prefix}{i}")).collect();
        let edges = edges.into_iter().map(|(a, b)| Edge { a, b, weight: 1.0 }).collect();
        WeightedGraph::from_indexed(ids, vec![1.0; n], edges).expect("family graphs are well formed")
    }

    /// Path `v0 - v1 - ... - v{n-1}`, unit weights and measure.
    pub fn path(n: usize) -> WeightedGraph {
        build(n, "v", (1..n).map(|i| (i - 1, i)).collect())
    }

    /// Star with center `c` and leaves `l1..=l{leaves}`, unit weights and measure.
    pub fn star(leaves: usize) -> WeightedGraph {
        let mut ids = vec!["c".to_owned()];
        ids.extend((1..=leaves).map(|i| format!("l{i}")));
        let edges = (1..=leaves).map(|i| Edge { a: 0, b: i, weight: 1.0 }).collect();
        WeightedGraph::from_indexed(ids, vec![1.0; leaves + 1], edges).expect("star is well formed")
    }

    /// Cycle on `n >= 3` vertices.
    pub fn cycle(n: usize) -> WeightedGraph {
        let mut e: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        e.push((n - 1, 0));
        build(n, "v", e)
    }

    /// `rows x cols` grid graph.
    pub fn grid(rows: usize, cols: usize) -> WeightedGraph {
        let mut e = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let i = r * cols + c;
                if c + 1 < cols {
                    e.push((i, i + 1));
                }
                if r + 1 < rows {
                    e.push((i, i + cols));
                }
            }
        }
        build(rows * cols, "v", e)
    }

    /// Connected graph on `n` vertices: a random spanning tree plus each
    /// remaining pair with probability `extra`, weights in `(0, 2]`, measures
    /// in `[0.5, 2]`. Same seed, same graph.
    pub fn random_connected(n: usize, extra: f64, seed: u64) -> WeightedGraph {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let weight = |rng: &mut rand_chacha::ChaCha8Rng| 2.0 - rng.random_range(0.0..2.0);
        let mut pairs = std::collections::BTreeSet::new();
        let mut edges = Vec::new();
        for b in 1..n {
            let a = rng.random_range(0..b);
            pairs.insert((a, b));
            edges.push(Edge { a, b, weight: weight(&mut rng) });
        }
        for b in 1..n {
            for a in 0..b {
                if !pairs.contains(&(a, b)) && rng.random_bool(extra.clamp(0.0, 1.0)) {
                    edges.push(Edge { a, b, weight: weight(&mut rng) });
                }
            }
        }
        let mu = (0..n).map(|_| rng.random_range(0.5..=2.0)).collect();
        let ids = (0..n).map(|i| format!("v{i}")).collect();
        WeightedGraph::from_indexed(ids, mu, edges).expect("random graphs are well formed")
    }
}
