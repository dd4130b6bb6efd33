//! Weighted graphs, directed-edge indexing, torus builders and edge cuts.
//!
//! A `WeightedGraph` is a finite simple connected graph with positive edge
//! weights x_e. Every algorithm in this crate works on the *directed* edge set:
//! undirected edge `i = {u, v}` owns the two directed edges `2i = u→v` and
//! `2i+1 = v→u`, so `reverse(a) = a ^ 1` and `undirected(a) = a >> 1`.
//!
//! The boundary ∂G is the set of edges incident to a degree-1 vertex. Cutting a
//! graph along an edge set H replaces each e = {u, v} ∈ H by two pendant
//! half-edges {u, u'} and {v', v} carrying the same weight, with fresh degree-1
//! vertices u', v' appended after the original ids.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Identifier of a directed edge; `2i` and `2i+1` are the two orientations of
/// undirected edge `i`.
pub type DirectedEdge = usize;

/// Finite simple connected graph with positive edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n_vertices: usize,
    /// Edge list `(u, v, x_e)`; the directed edge `2i` points u→v.
    edges: Vec<(usize, usize, f64)>,
    /// Edge ids incident to each vertex, in increasing order.
    incident: Vec<Vec<usize>>,
    /// Free-form metadata carried through serialization.
    pub meta: serde_json::Value,
}

/// Serialized form: `{"vertices": count, "edges": [[u, v, x_e], ...], "meta": {...}}`.
#[derive(Serialize, Deserialize)]
struct GraphJson {
    vertices: usize,
    edges: Vec<(usize, usize, f64)>,
    #[serde(default)]
    meta: serde_json::Value,
}

impl WeightedGraph {
    /// Builds a graph from an edge list, validating simplicity, connectivity
    /// and weight positivity.
    pub fn new(n_vertices: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        if n_vertices == 0 {
            return Err(Error::InvalidGraph("graph needs at least one vertex".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for &(u, v, x) in &edges {
            if u >= n_vertices || v >= n_vertices {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) references a vertex ≥ {n_vertices}"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidGraph(format!("parallel edge ({u}, {v})")));
            }
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) has non-positive weight {x}"
                )));
            }
        }
        let mut incident = vec![Vec::new(); n_vertices];
        for (i, &(u, v, _)) in edges.iter().enumerate() {
            incident[u].push(i);
            incident[v].push(i);
        }
        let g = WeightedGraph { n_vertices, edges, incident, meta: serde_json::Value::Null };
        if !g.is_connected() {
            return Err(Error::InvalidGraph("graph is not connected".into()));
        }
        Ok(g)
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n_vertices];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &e in &self.incident[v] {
                let w = self.other_endpoint(e, v);
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.n_vertices
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Number of directed edges, 2|E|.
    pub fn n_directed(&self) -> usize {
        2 * self.edges.len()
    }

    /// Endpoints and weight of undirected edge `i`.
    pub fn edge(&self, i: usize) -> (usize, usize, f64) {
        self.edges[i]
    }

    /// Weight x_e of undirected edge `i`.
    pub fn weight(&self, i: usize) -> f64 {
        self.edges[i].2
    }

    /// All edge weights, indexed by edge id.
    pub fn weights(&self) -> Vec<f64> {
        self.edges.iter().map(|&(_, _, x)| x).collect()
    }

    /// Returns a copy with every edge weight replaced by `x`.
    pub fn with_uniform_weight(&self, x: f64) -> Result<Self> {
        let edges = self.edges.iter().map(|&(u, v, _)| (u, v, x)).collect();
        let mut g = WeightedGraph::new(self.n_vertices, edges)?;
        g.meta = self.meta.clone();
        Ok(g)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.incident[v].len()
    }

    /// Edge ids incident to `v`, increasing.
    pub fn incident_edges(&self, v: usize) -> &[usize] {
        &self.incident[v]
    }

    fn other_endpoint(&self, e: usize, v: usize) -> usize {
        let (u, w, _) = self.edges[e];
        if u == v {
            w
        } else {
            u
        }
    }

    /// Edges incident to a degree-1 vertex (the boundary ∂G).
    pub fn boundary(&self) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.n_vertices)
            .filter(|&v| self.degree(v) == 1)
            .map(|v| self.incident[v][0])
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Degree-1 vertices.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        (0..self.n_vertices).filter(|&v| self.degree(v) == 1).collect()
    }

    /// Source vertex of directed edge `a`.
    pub fn tail(&self, a: DirectedEdge) -> usize {
        let (u, v, _) = self.edges[a >> 1];
        if a & 1 == 0 {
            u
        } else {
            v
        }
    }

    /// Target vertex of directed edge `a`.
    pub fn head(&self, a: DirectedEdge) -> usize {
        self.tail(a ^ 1)
    }

    /// Weight of the undirected edge underlying directed edge `a`.
    pub fn directed_weight(&self, a: DirectedEdge) -> f64 {
        self.edges[a >> 1].2
    }

    /// The directed orientation of undirected edge `e` whose tail is `v`.
    pub fn oriented_from(&self, e: usize, v: usize) -> DirectedEdge {
        let (u, _, _) = self.edges[e];
        if u == v {
            2 * e
        } else {
            2 * e + 1
        }
    }

    /// Non-backtracking continuations of directed edge `a`: directed edges g
    /// with tail(g) = head(a) and g ≠ reverse(a).
    pub fn continuations(&self, a: DirectedEdge) -> Vec<DirectedEdge> {
        let h = self.head(a);
        self.incident[h]
            .iter()
            .filter(|&&e| e != a >> 1)
            .map(|&e| self.oriented_from(e, h))
            .collect()
    }

    /// Distance in the line graph: 0 for e = f, 1 for distinct edges sharing a
    /// vertex, and so on; BFS over edge adjacency.
    pub fn edge_graph_distance(&self, e: usize, f: usize) -> usize {
        self.edge_distances_from(e)[f]
    }

    /// Line-graph BFS distances from edge `e` to every edge.
    pub fn edge_distances_from(&self, e: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.edges.len()];
        dist[e] = 0;
        let mut queue = std::collections::VecDeque::from([e]);
        while let Some(c) = queue.pop_front() {
            let (u, v, _) = self.edges[c];
            for &w in &[u, v] {
                for &g in &self.incident[w] {
                    if dist[g] == usize::MAX {
                        dist[g] = dist[c] + 1;
                        queue.push_back(g);
                    }
                }
            }
        }
        dist
    }

    /// Connected-component label per vertex (labels are 0-based, assigned in
    /// increasing order of the smallest vertex of each component).
    pub fn component_labels(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.n_vertices];
        let mut next = 0;
        for start in 0..self.n_vertices {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            let mut queue = std::collections::VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &e in &self.incident[v] {
                    let w = self.other_endpoint(e, v);
                    if label[w] == usize::MAX {
                        label[w] = next;
                        queue.push_back(w);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Serializes to the stable JSON form `{vertices, edges, meta}`.
    pub fn to_json(&self) -> String {
        let j = GraphJson {
            vertices: self.n_vertices,
            edges: self.edges.clone(),
            meta: self.meta.clone(),
        };
        serde_json::to_string_pretty(&j).expect("graph serialization cannot fail")
    }

    /// Parses the JSON form produced by [`WeightedGraph::to_json`].
    pub fn from_json(s: &str) -> Result<Self> {
        let j: GraphJson =
            serde_json::from_str(s).map_err(|e| Error::InvalidGraph(format!("bad JSON: {e}")))?;
        let mut g = WeightedGraph::new(j.vertices, j.edges)?;
        g.meta = j.meta;
        Ok(g)
    }
}

/// Like [`WeightedGraph::new`] but allows a disconnected result; used
/// internally for cut graphs, whose components are meaningful.
fn new_possibly_disconnected(
    n_vertices: usize,
    edges: Vec<(usize, usize, f64)>,
) -> Result<WeightedGraph> {
    let mut incident = vec![Vec::new(); n_vertices];
    for (i, &(u, v, _)) in edges.iter().enumerate() {
        incident[u].push(i);
        incident[v].push(i);
    }
    Ok(WeightedGraph { n_vertices, edges, incident, meta: serde_json::Value::Null })
}

/// One cut edge: undirected edge `edge = {u, v}` of the base graph, replaced in
/// the cut graph by the half-edge `{u, u_prime}` (kept at id `edge`) and the
/// half-edge `{v_prime, v}` (appended at id `v_half`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutEdge {
    pub edge: usize,
    pub v_half: usize,
    pub u: usize,
    pub v: usize,
    pub u_prime: usize,
    pub v_prime: usize,
}

/// A graph together with the bookkeeping of a cut along an edge set H.
#[derive(Debug, Clone, PartialEq)]
pub struct CutGraph {
    /// The graph after the cut; may be disconnected and has one degree-1
    /// vertex per half-edge.
    pub graph: WeightedGraph,
    /// Vertex count of the base graph (fresh vertices have ids ≥ this).
    pub base_vertices: usize,
    /// The replaced edges, in increasing id order.
    pub cut: Vec<CutEdge>,
}

impl WeightedGraph {
    /// Cuts the graph along the edge set `h` (edge ids, deduplicated).
    ///
    /// Each cut edge `{u, v}` of weight x becomes two pendant half-edges of
    /// weight x: `{u, u'}` keeps the original edge id, `{v', v}` is appended.
    /// Fresh vertices are appended pairwise (`u'` then `v'`) in increasing
    /// order of the cut edge ids, so the result is deterministic.
    pub fn cut_along(&self, h: &[usize]) -> Result<CutGraph> {
        let mut cut_ids: Vec<usize> = h.to_vec();
        cut_ids.sort_unstable();
        cut_ids.dedup();
        if let Some(&bad) = cut_ids.iter().find(|&&e| e >= self.edges.len()) {
            return Err(Error::InvalidGraph(format!("cut edge id {bad} out of range")));
        }
        let mut edges = self.edges.clone();
        let mut cut = Vec::with_capacity(cut_ids.len());
        let mut next_vertex = self.n_vertices;
        for &e in &cut_ids {
            let (u, v, x) = self.edges[e];
            let u_prime = next_vertex;
            let v_prime = next_vertex + 1;
            next_vertex += 2;
            edges[e] = (u, u_prime, x);
            let v_half = edges.len();
            edges.push((v_prime, v, x));
            cut.push(CutEdge { edge: e, v_half, u, v, u_prime, v_prime });
        }
        let graph = new_possibly_disconnected(next_vertex, edges)?;
        Ok(CutGraph { graph, base_vertices: self.n_vertices, cut })
    }
}

impl CutGraph {
    /// Undoes the cut, reconstructing the base graph (for round-trip checks).
    pub fn glue(&self) -> Result<WeightedGraph> {
        let mut edges = Vec::new();
        let halves: std::collections::HashSet<usize> =
            self.cut.iter().map(|c| c.v_half).collect();
        for (i, &(u, v, x)) in self.graph.edges.iter().enumerate() {
            if let Some(c) = self.cut.iter().find(|c| c.edge == i) {
                edges.push((c.u, c.v, x));
            } else if !halves.contains(&i) {
                edges.push((u, v, x));
            }
        }
        WeightedGraph::new(self.base_vertices, edges)
    }

    /// Half-edge ids (in the cut graph) of the boundary created by the cut:
    /// for each cut edge, the u-side half then the v-side half.
    pub fn half_edge_ids(&self) -> Vec<usize> {
        self.cut.iter().flat_map(|c| [c.edge, c.v_half]).collect()
    }
}

/// Parameters of a d-dimensional discrete torus (Z/nZ)^d with axis weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusSpec {
    pub d: usize,
    pub n: usize,
    /// Per-axis edge weights x_1, …, x_d.
    pub weights: Vec<f64>,
}

impl TorusSpec {
    pub fn new(d: usize, n: usize, weights: Vec<f64>) -> Result<Self> {
        let spec = TorusSpec { d, n, weights };
        spec.validate()?;
        Ok(spec)
    }

    /// Shape checks shared by the constructor and by functions that accept a
    /// spec built directly from its public fields.
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidGraph("torus dimension must be ≥ 1".into()));
        }
        if self.n < 3 {
            return Err(Error::InvalidGraph(format!(
                "torus side n = {} must be ≥ 3 to keep the graph simple",
                self.n
            )));
        }
        if self.weights.len() != self.d {
            return Err(Error::InvalidGraph(format!(
                "expected {} axis weights, got {}",
                self.d,
                self.weights.len()
            )));
        }
        if let Some(&x) = self.weights.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidGraph(format!("non-positive axis weight {x}")));
        }
        Ok(())
    }

    /// Uniform weight on every axis.
    pub fn homogeneous(d: usize, n: usize, x: f64) -> Result<Self> {
        TorusSpec::new(d, n, vec![x; d])
    }

    pub fn n_vertices(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    /// Vertex id of the coordinate tuple, lexicographic: the first coordinate
    /// is most significant.
    pub fn vertex_id(&self, coords: &[usize]) -> usize {
        coords.iter().fold(0, |acc, &k| acc * self.n + (k % self.n))
    }

    /// Coordinate tuple of a vertex id.
    pub fn vertex_coords(&self, mut id: usize) -> Vec<usize> {
        let mut coords = vec![0; self.d];
        for j in (0..self.d).rev() {
            coords[j] = id % self.n;
            id /= self.n;
        }
        coords
    }

    /// Id of the edge leaving `vertex` in the +axis direction; edges are
    /// ordered by (vertex, axis), so this is `d * vertex + axis`.
    pub fn edge_id(&self, vertex: usize, axis: usize) -> usize {
        self.d * vertex + axis
    }

    /// Builds the torus graph: n^d vertices in lexicographic order, d·n^d
    /// edges ordered by (vertex, axis), each axis-j edge with weight x_j.
    pub fn build(&self) -> Result<WeightedGraph> {
        let nv = self.n_vertices();
        let mut edges = Vec::with_capacity(self.d * nv);
        for id in 0..nv {
            let coords = self.vertex_coords(id);
            for j in 0..self.d {
                let mut c = coords.clone();
                c[j] = (c[j] + 1) % self.n;
                edges.push((id, self.vertex_id(&c), self.weights[j]));
            }
        }
        let mut g = WeightedGraph::new(nv, edges)?;
        g.meta = serde_json::json!({"torus": {"d": self.d, "n": self.n}});
        Ok(g)
    }
}
