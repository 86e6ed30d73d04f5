//! Planarity-based graph filtration.
//!
//! Greedy filters over association matrices: edges are taken in decreasing
//! weight order and kept only while the graph stays planar, stopping at
//! 3(N-2) edges (maximal planar). PMFG filters a symmetric correlation
//! matrix into an undirected graph; PCPG filters the asymmetric influence
//! matrix into a directed graph with at most one direction per node pair;
//! MST is the N-1-edge spanning filtration contained in the PMFG.
//!
//! Rejections are final: adding edges can only destroy planarity, so a pair
//! that fails the test never becomes insertable later, and a single pass
//! over all candidate pairs always ends at an edge-maximal planar graph.

mod lr;

use serde::{Deserialize, Serialize};

use crate::assoc::{CorrelationMatrix, InfluenceMatrix};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Filtration kind; drives edge count, directedness, and SVAR restrictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Pmfg,
    Pcpg,
    Mst,
}

impl GraphKind {
    /// Number of edges the filtration retains for `n` nodes.
    pub fn edge_count(self, n: usize) -> usize {
        match self {
            GraphKind::Pmfg | GraphKind::Pcpg => 3 * (n - 2),
            GraphKind::Mst => n - 1,
        }
    }

    pub fn directed(self) -> bool {
        matches!(self, GraphKind::Pcpg)
    }
}

impl std::fmt::Display for GraphKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GraphKind::Pmfg => write!(f, "PMFG"),
            GraphKind::Pcpg => write!(f, "PCPG"),
            GraphKind::Mst => write!(f, "MST"),
        }
    }
}

impl std::str::FromStr for GraphKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pmfg" => Ok(GraphKind::Pmfg),
            "pcpg" => Ok(GraphKind::Pcpg),
            "mst" => Ok(GraphKind::Mst),
            other => Err(Error::Config(format!("unknown graph kind '{other}'"))),
        }
    }
}

/// Whether candidate edges are ranked by raw or absolute weight. Raw ranking
/// is the default; absolute ranking is an opt-in for sign-agnostic coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightOrdering {
    #[default]
    Raw,
    Absolute,
}

/// One weighted edge; `source -> target` for directed kinds, an unordered
/// pair otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge<S> {
    pub source: usize,
    pub target: usize,
    pub weight: S,
}

/// A planarity-filtered graph, connected by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredGraph<S: Scalar> {
    labels: Vec<String>,
    kind: GraphKind,
    directed: bool,
    edges: Vec<GraphEdge<S>>,
    adjacency: Matrix<S>,
}

impl<S: Scalar> FilteredGraph<S> {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn directed(&self) -> bool {
        self.directed
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn edges(&self) -> &[GraphEdge<S>] {
        &self.edges
    }

    /// `adjacency[(source, target)]` carries the edge weight; symmetric for
    /// undirected kinds.
    pub fn adjacency(&self) -> &Matrix<S> {
        &self.adjacency
    }

    pub fn has_edge(&self, source: usize, target: usize) -> bool {
        self.edges
            .iter()
            .any(|e| e.source == source && e.target == target)
    }

    /// Unordered endpoint pairs of the underlying undirected graph.
    pub fn undirected_pairs(&self) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .map(|e| {
                if e.source < e.target {
                    (e.source, e.target)
                } else {
                    (e.target, e.source)
                }
            })
            .collect()
    }

    fn from_document(doc: GraphDocument<S>) -> Result<Self> {
        let index = |label: &str| -> Result<usize> {
            doc.labels
                .iter()
                .position(|l| l == label)
                .ok_or_else(|| Error::Lookup(format!("unknown node label '{label}'")))
        };
        let mut edges = Vec::with_capacity(doc.edges.len());
        for (s, t, w) in &doc.edges {
            edges.push(GraphEdge {
                source: index(s)?,
                target: index(t)?,
                weight: *w,
            });
        }
        let n = doc.labels.len();
        let mut adjacency = Matrix::<S>::zeros(n, n);
        for e in &edges {
            adjacency[(e.source, e.target)] = e.weight;
            if !doc.directed {
                adjacency[(e.target, e.source)] = e.weight;
            }
        }
        let graph = FilteredGraph {
            labels: doc.labels,
            kind: doc.kind,
            directed: doc.directed,
            edges,
            adjacency,
        };
        graph.validate()?;
        Ok(graph)
    }

    /// Re-checks the construction invariants: edge count, planarity of the
    /// underlying graph, connectivity, adjacency symmetry (undirected), and
    /// the no-reciprocal rule (directed).
    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        let expected = self.kind.edge_count(n);
        if self.edges.len() != expected {
            return Err(Error::Graph(format!(
                "{} on {n} nodes must hold {expected} edges, found {}",
                self.kind,
                self.edges.len()
            )));
        }
        let pairs = self.undirected_pairs();
        if !is_planar(&pairs, n)? {
            return Err(Error::Graph("underlying graph is not planar".into()));
        }
        if !is_connected(&pairs, n) {
            return Err(Error::Graph("graph is not connected".into()));
        }
        if self.directed {
            for e in &self.edges {
                if self.has_edge(e.target, e.source) {
                    return Err(Error::Graph(format!(
                        "reciprocal directed pair {} <-> {}",
                        self.labels[e.source], self.labels[e.target]
                    )));
                }
            }
        } else if !self.adjacency.is_symmetric(S::zero()) {
            return Err(Error::Graph(
                "undirected adjacency must be symmetric".into(),
            ));
        }
        Ok(())
    }
}

/// Planarity test for a simple undirected graph given as unordered pairs.
/// Self-loops and duplicate edges are rejected rather than tolerated.
pub fn is_planar(edges: &[(usize, usize)], n: usize) -> Result<bool> {
    let mut seen = std::collections::HashSet::with_capacity(edges.len());
    for &(u, v) in edges {
        if u == v {
            return Err(Error::Graph(format!("self-loop at node {u}")));
        }
        if u >= n || v >= n {
            return Err(Error::Graph(format!(
                "edge ({u},{v}) out of range for {n} nodes"
            )));
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(Error::Graph(format!("duplicate edge ({u},{v})")));
        }
    }
    Ok(lr::lr_planarity(n, edges))
}

fn is_connected(pairs: &[(usize, usize)], n: usize) -> bool {
    if n == 0 {
        return true;
    }
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in pairs {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                stack.push(w);
            }
        }
    }
    count == n
}

fn rank_value<S: Scalar>(w: S, ordering: WeightOrdering) -> S {
    match ordering {
        WeightOrdering::Raw => w,
        WeightOrdering::Absolute => w.abs(),
    }
}

/// Candidate edge in the greedy insertion order.
struct Candidate<'a, S> {
    value: S,
    min_label: &'a str,
    max_label: &'a str,
    /// directed edge source -> target
    source: usize,
    target: usize,
    weight: S,
}

/// Decreasing value, ties by (min label, max label). Direction ties within a
/// pair are resolved before this sort, so the comparator is total.
fn sort_candidates<S: Scalar>(cands: &mut [Candidate<'_, S>]) {
    cands.sort_by(|a, b| {
        b.value
            .partial_cmp(&a.value)
            .expect("association values are finite")
            .then_with(|| a.min_label.cmp(b.min_label))
            .then_with(|| a.max_label.cmp(b.max_label))
    });
}

fn greedy_planar_filter<S: Scalar>(
    n: usize,
    candidates: Vec<Candidate<'_, S>>,
    target: usize,
) -> Vec<GraphEdge<S>> {
    let mut kept_pairs: Vec<(usize, usize)> = Vec::with_capacity(target);
    let mut edges: Vec<GraphEdge<S>> = Vec::with_capacity(target);
    for cand in candidates {
        if edges.len() == target {
            break;
        }
        let pair = (cand.source.min(cand.target), cand.source.max(cand.target));
        kept_pairs.push(pair);
        if lr::lr_planarity(n, &kept_pairs) {
            edges.push(GraphEdge {
                source: cand.source,
                target: cand.target,
                weight: cand.weight,
            });
        } else {
            kept_pairs.pop();
        }
    }
    edges
}

/// Planar maximally filtered graph of a correlation matrix: undirected,
/// 3(N-2) edges, inserted in decreasing correlation order.
pub fn pmfg<S: Scalar>(c: &CorrelationMatrix<S>) -> Result<FilteredGraph<S>> {
    pmfg_with(c, WeightOrdering::Raw)
}

pub fn pmfg_with<S: Scalar>(
    c: &CorrelationMatrix<S>,
    ordering: WeightOrdering,
) -> Result<FilteredGraph<S>> {
    let n = c.n();
    if n < 3 {
        return Err(Error::Domain(format!(
            "PMFG needs at least 3 nodes, got {n}"
        )));
    }
    let labels = c.labels();
    let mut candidates = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in 0..i {
            let w = c.get(i, j);
            let (a, b) = ordered_by_label(labels, j, i);
            candidates.push(Candidate {
                value: rank_value(w, ordering),
                min_label: &labels[a],
                max_label: &labels[b],
                source: j,
                target: i,
                weight: w,
            });
        }
    }
    sort_candidates(&mut candidates);
    let edges = greedy_planar_filter(n, candidates, GraphKind::Pmfg.edge_count(n));

    let mut adjacency = Matrix::<S>::zeros(n, n);
    for e in &edges {
        adjacency[(e.source, e.target)] = e.weight;
        adjacency[(e.target, e.source)] = e.weight;
    }
    let graph = FilteredGraph {
        labels: labels.to_vec(),
        kind: GraphKind::Pmfg,
        directed: false,
        edges,
        adjacency,
    };
    graph.validate()?;
    Ok(graph)
}

/// Partial-correlation planar graph of an influence matrix: directed,
/// 3(N-2) edges. For each unordered pair only the stronger influence
/// competes (`D(i,j)` in the candidate list excludes `D(j,i)`); the element
/// `D(i,j)` becomes the edge `j -> i`. Equal influences prefer the edge
/// pointing into the lexicographically smaller label.
pub fn pcpg<S: Scalar>(d: &InfluenceMatrix<S>) -> Result<FilteredGraph<S>> {
    pcpg_with(d, WeightOrdering::Raw)
}

pub fn pcpg_with<S: Scalar>(
    d: &InfluenceMatrix<S>,
    ordering: WeightOrdering,
) -> Result<FilteredGraph<S>> {
    let n = d.n();
    if n < 3 {
        return Err(Error::Domain(format!(
            "PCPG needs at least 3 nodes, got {n}"
        )));
    }
    let labels = d.labels();
    let mut candidates = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in 0..i {
            // pair {j, i}: element D(i,j) is the edge j->i, D(j,i) is i->j
            let v_ij = rank_value(d.get(i, j), ordering);
            let v_ji = rank_value(d.get(j, i), ordering);
            let (la, lb) = ordered_by_label(labels, j, i);
            let prefer_ij = la == i;
            let (source, target) = if v_ij > v_ji || (v_ij == v_ji && prefer_ij) {
                (j, i)
            } else {
                (i, j)
            };
            let weight = d.get(target, source);
            candidates.push(Candidate {
                value: rank_value(weight, ordering),
                min_label: &labels[la],
                max_label: &labels[lb],
                source,
                target,
                weight,
            });
        }
    }
    sort_candidates(&mut candidates);
    let edges = greedy_planar_filter(n, candidates, GraphKind::Pcpg.edge_count(n));

    let mut adjacency = Matrix::<S>::zeros(n, n);
    for e in &edges {
        adjacency[(e.source, e.target)] = e.weight;
    }
    let graph = FilteredGraph {
        labels: labels.to_vec(),
        kind: GraphKind::Pcpg,
        directed: true,
        edges,
        adjacency,
    };
    graph.validate()?;
    Ok(graph)
}

/// Maximum-correlation spanning tree (equivalently, the minimum spanning
/// tree of any decreasing distance transform of the correlations).
pub fn mst<S: Scalar>(c: &CorrelationMatrix<S>) -> Result<FilteredGraph<S>> {
    let n = c.n();
    if n < 2 {
        return Err(Error::Domain(format!(
            "MST needs at least 2 nodes, got {n}"
        )));
    }
    let labels = c.labels();
    let mut candidates = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in 0..i {
            let w = c.get(i, j);
            let (a, b) = ordered_by_label(labels, j, i);
            candidates.push(Candidate {
                value: w,
                min_label: &labels[a],
                max_label: &labels[b],
                source: j,
                target: i,
                weight: w,
            });
        }
    }
    sort_candidates(&mut candidates);

    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut parent: Vec<usize> = (0..n).collect();
    let mut edges = Vec::with_capacity(n - 1);
    let mut adjacency = Matrix::<S>::zeros(n, n);
    for cand in candidates {
        if edges.len() == n - 1 {
            break;
        }
        let (ra, rb) = (
            find(&mut parent, cand.source),
            find(&mut parent, cand.target),
        );
        if ra != rb {
            parent[ra] = rb;
            adjacency[(cand.source, cand.target)] = cand.weight;
            adjacency[(cand.target, cand.source)] = cand.weight;
            edges.push(GraphEdge {
                source: cand.source,
                target: cand.target,
                weight: cand.weight,
            });
        }
    }
    let graph = FilteredGraph {
        labels: labels.to_vec(),
        kind: GraphKind::Mst,
        directed: false,
        edges,
        adjacency,
    };
    graph.validate()?;
    Ok(graph)
}

fn ordered_by_label(labels: &[String], a: usize, b: usize) -> (usize, usize) {
    if labels[a] <= labels[b] {
        (a, b)
    } else {
        (b, a)
    }
}

/// Free-parameter counting for B-type SVAR identification.
///
/// `free` counts unrestricted B entries (the diagonal plus one per directed
/// edge or two per undirected edge); `restrictions = N^2 - free` must reach
/// `N(N-1)/2`. Signed arithmetic keeps the algebra meaningful for degenerate
/// small N, matching the closed-form conditions (PMFG identified iff N <= 2
/// or N >= 11; PCPG for every N, in particular all N >= 4).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentificationReport {
    pub kind: GraphKind,
    pub n: usize,
    pub free_parameters: i64,
    pub restrictions: i64,
    pub required: i64,
    pub identified: bool,
}

pub fn identification_check(kind: GraphKind, n: usize) -> IdentificationReport {
    let ni = n as i64;
    let free_parameters = match kind {
        GraphKind::Pmfg => 2 * 3 * (ni - 2) + ni,
        GraphKind::Pcpg => 3 * (ni - 2) + ni,
        GraphKind::Mst => 2 * (ni - 1) + ni,
    };
    let restrictions = ni * ni - free_parameters;
    let required = ni * (ni - 1) / 2;
    IdentificationReport {
        kind,
        n,
        free_parameters,
        restrictions,
        required,
        identified: restrictions >= required,
    }
}

// --- export / import ---

/// Serializable graph document (labels on edges rather than indices).
#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphDocument<S> {
    labels: Vec<String>,
    kind: GraphKind,
    directed: bool,
    edges: Vec<(String, String, S)>,
}

impl<S: Scalar + Serialize + for<'de> Deserialize<'de>> FilteredGraph<S> {
    /// JSON adjacency-list document with label-named edges.
    pub fn to_json(&self) -> Result<String> {
        let doc = GraphDocument {
            labels: self.labels.clone(),
            kind: self.kind,
            directed: self.directed,
            edges: self
                .edges
                .iter()
                .map(|e| {
                    (
                        self.labels[e.source].clone(),
                        self.labels[e.target].clone(),
                        e.weight,
                    )
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GraphDocument<S> = serde_json::from_str(text)?;
        Self::from_document(doc)
    }

    /// DOT rendering: `digraph` with `->` for directed kinds, `graph` with
    /// `--` otherwise; weights as edge labels.
    pub fn to_dot(&self) -> String {
        let (header, arrow) = if self.directed {
            ("digraph", "->")
        } else {
            ("graph", "--")
        };
        let mut out = format!("{} {} {{\n", header, self.kind.to_string().to_lowercase());
        for l in &self.labels {
            out.push_str(&format!("  \"{l}\";\n"));
        }
        for e in &self.edges {
            out.push_str(&format!(
                "  \"{}\" {} \"{}\" [label={}];\n",
                self.labels[e.source], arrow, self.labels[e.target], e.weight
            ));
        }
        out.push_str("}\n");
        out
    }

    /// Parse the DOT subset emitted by [`Self::to_dot`].
    pub fn from_dot(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty DOT input".into()))?;
        let (directed, rest) = if let Some(r) = header.strip_prefix("digraph ") {
            (true, r)
        } else if let Some(r) = header.strip_prefix("graph ") {
            (false, r)
        } else {
            return Err(Error::Parse(format!("unrecognized DOT header '{header}'")));
        };
        let kind: GraphKind = rest.trim_end_matches('{').trim().parse()?;

        let mut labels: Vec<String> = Vec::new();
        let mut raw_edges: Vec<(String, String, S)> = Vec::new();
        let arrow = if directed { "->" } else { "--" };
        for line in lines {
            if line == "}" {
                break;
            }
            let line = line.trim_end_matches(';');
            if let Some((lhs, rhs)) = line.split_once(arrow) {
                let source = unquote(lhs.trim())?;
                let (target_part, attr) = rhs
                    .split_once('[')
                    .ok_or_else(|| Error::Parse(format!("edge without label: '{line}'")))?;
                let target = unquote(target_part.trim())?;
                let weight_str = attr
                    .trim_end_matches(']')
                    .trim()
                    .strip_prefix("label=")
                    .ok_or_else(|| Error::Parse(format!("missing label attr: '{line}'")))?;
                let weight: f64 = weight_str
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad weight '{weight_str}'")))?;
                raw_edges.push((source, target, S::from_f64_lossy(weight)));
            } else {
                labels.push(unquote(line)?);
            }
        }
        Self::from_document(GraphDocument {
            labels,
            kind,
            directed,
            edges: raw_edges,
        })
    }
}

fn unquote(s: &str) -> Result<String> {
    s.strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .map(str::to_string)
        .ok_or_else(|| Error::Parse(format!("expected quoted identifier, got '{s}'")))
}

// serde round-trips through the label-named document form
impl<S: Scalar + Serialize> Serialize for FilteredGraph<S> {
    fn serialize<Ser: serde::Serializer>(
        &self,
        serializer: Ser,
    ) -> std::result::Result<Ser::Ok, Ser::Error> {
        let doc = GraphDocument {
            labels: self.labels.clone(),
            kind: self.kind,
            directed: self.directed,
            edges: self
                .edges
                .iter()
                .map(|e| {
                    (
                        self.labels[e.source].clone(),
                        self.labels[e.target].clone(),
                        e.weight,
                    )
                })
                .collect(),
        };
        doc.serialize(serializer)
    }
}

impl<'de, S: Scalar + Deserialize<'de>> Deserialize<'de> for FilteredGraph<S> {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = GraphDocument::<S>::deserialize(deserializer)?;
        FilteredGraph::from_document(doc).map_err(|e| D::Error::custom(e.to_string()))
    }
}
