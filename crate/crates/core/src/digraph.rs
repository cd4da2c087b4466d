//! Weighted directed graphs, hop distances and the Lipschitz calculus.
//!
//! A graph is stored as a dense `n × n` weight matrix `mu` with
//! `mu[(x, y)] > 0` exactly when the arc `x -> y` exists. Distances count
//! arcs on a shortest directed path; weights never enter them.
//!
//! Input comes either as an edge list,
//!
//! ```text
//! # src dst [weight]
//! 0 1 1
//! 1 2
//! 2 0 0.5
//! ```
//!
//! or as a JSON document `{"n": 3, "arcs": [[0, 1, 1.0], [1, 2], [2, 0, 0.5]]}`.

use std::collections::{HashSet, VecDeque};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DirectedGraph {
    mu: DMatrix<f64>,
    labels: Option<Vec<String>>,
    components: usize,
}

impl DirectedGraph {
    /// Builds a graph on `n` vertices from `(src, dst, weight)` triples.
    ///
    /// Zero weights are treated as absent arcs.
    pub fn from_arcs<I>(n: usize, arcs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut mu = DMatrix::zeros(n, n);
        let mut seen = HashSet::new();
        for (src, dst, weight) in arcs {
            check_arc(n, src, dst, weight)?;
            if !seen.insert((src, dst)) {
                return Err(Error::DuplicateArc(src, dst));
            }
            mu[(src, dst)] = weight;
        }
        Self::from_matrix(mu)
    }

    /// Builds a graph directly from a weight matrix.
    pub fn from_matrix(mu: DMatrix<f64>) -> Result<Self> {
        if mu.nrows() != mu.ncols() {
            return Err(Error::DimensionMismatch {
                expected: mu.nrows(),
                got: mu.ncols(),
            });
        }
        let n = mu.nrows();
        for x in 0..n {
            for y in 0..n {
                let w = mu[(x, y)];
                if x == y && w != 0.0 {
                    return Err(Error::SelfLoop(x));
                }
                if x != y {
                    check_arc(n, x, y, w)?;
                }
            }
        }
        let mut g = DirectedGraph {
            mu,
            labels: None,
            components: 0,
        };
        g.components = strongly_connected_components(&g.out_adjacency()).len();
        Ok(g)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.mu.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.mu
    }

    pub fn weight(&self, x: usize, y: usize) -> f64 {
        self.mu[(x, y)]
    }

    pub fn has_arc(&self, x: usize, y: usize) -> bool {
        self.mu[(x, y)] > 0.0
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Display name of a vertex: its label if present, otherwise its id.
    pub fn label(&self, x: usize) -> String {
        match &self.labels {
            Some(l) => l[x].clone(),
            None => x.to_string(),
        }
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n();
        (0..n).flat_map(move |x| {
            (0..n)
                .filter(move |&y| self.has_arc(x, y))
                .map(move |y| (x, y, self.mu[(x, y)]))
        })
    }

    pub fn arc_count(&self) -> usize {
        self.arcs().count()
    }

    /// Total out-weight `mu(x)`.
    pub fn out_weight(&self, x: usize) -> f64 {
        self.mu.row(x).sum()
    }

    /// Outer neighbourhood: `{y : x -> y}`.
    pub fn out_neighbors(&self, x: usize) -> Vec<usize> {
        (0..self.n()).filter(|&y| self.has_arc(x, y)).collect()
    }

    /// Inner neighbourhood: `{y : y -> x}`.
    pub fn in_neighbors(&self, x: usize) -> Vec<usize> {
        (0..self.n()).filter(|&y| self.has_arc(y, x)).collect()
    }

    /// Union of the outer and inner neighbourhoods.
    pub fn neighborhood(&self, x: usize) -> Vec<usize> {
        (0..self.n())
            .filter(|&y| self.has_arc(x, y) || self.has_arc(y, x))
            .collect()
    }

    /// True when `mu` is symmetric.
    pub fn is_undirected(&self) -> bool {
        self.mu == self.mu.transpose()
    }

    pub fn reversed(&self) -> DirectedGraph {
        DirectedGraph {
            mu: self.mu.transpose(),
            labels: self.labels.clone(),
            components: self.components,
        }
    }

    pub fn scc_count(&self) -> usize {
        self.components
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.components == 1
    }

    pub fn require_strongly_connected(&self) -> Result<()> {
        if self.is_strongly_connected() {
            Ok(())
        } else {
            Err(Error::NotStronglyConnected {
                components: self.components,
            })
        }
    }

    fn out_adjacency(&self) -> Vec<Vec<usize>> {
        (0..self.n()).map(|x| self.out_neighbors(x)).collect()
    }
}

fn check_arc(n: usize, src: usize, dst: usize, weight: f64) -> Result<()> {
    for v in [src, dst] {
        if v >= n {
            return Err(Error::VertexOutOfRange { vertex: v, n });
        }
    }
    if src == dst {
        return Err(Error::SelfLoop(src));
    }
    if !weight.is_finite() || weight < 0.0 {
        return Err(Error::NegativeWeight { src, dst, weight });
    }
    Ok(())
}

/// True iff every ordered pair of vertices is joined by a directed path.
pub fn is_strongly_connected(g: &DirectedGraph) -> bool {
    g.is_strongly_connected()
}

/// Tarjan's algorithm, iterative. Components are returned in reverse
/// topological order of the condensation.
pub fn strongly_connected_components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    const UNSEEN: usize = usize::MAX;
    let n = adj.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut next = 0;
    // (vertex, position in its adjacency list)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if let Some(&w) = adj[v].get(*pos) {
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comps.push(comp);
            }
        }
    }
    comps
}

/// Hop distances and the symmetrized neighbourhood diameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<usize>,
    dvert: Vec<usize>,
    lambda: usize,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `d(x, y)`: number of arcs on a shortest directed path from `x` to `y`.
    pub fn d(&self, x: usize, y: usize) -> usize {
        self.d[x * self.n + y]
    }

    pub fn df(&self, x: usize, y: usize) -> f64 {
        self.d(x, y) as f64
    }

    /// `max{d(x, y), d(y, x)}`.
    pub fn dsym(&self, x: usize, y: usize) -> usize {
        self.d(x, y).max(self.d(y, x))
    }

    /// Largest symmetrized distance from `x` to one of its neighbours.
    pub fn vertex_diameter(&self, x: usize) -> usize {
        self.dvert[x]
    }

    pub fn vertex_diameters(&self) -> &[usize] {
        &self.dvert
    }

    /// Supremum of the vertex diameters.
    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn max_distance(&self) -> usize {
        self.d.iter().copied().max().unwrap_or(0)
    }

    pub fn rows(&self) -> Vec<Vec<usize>> {
        self.d.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    /// Distances as a dense cost matrix.
    pub fn cost_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |x, y| self.df(x, y))
    }

    pub fn transpose(&self) -> Vec<usize> {
        let n = self.n;
        (0..n * n).map(|k| self.d[(k % n) * n + k / n]).collect()
    }
}

/// All-pairs hop distances by breadth-first search from every source.
pub fn distances(g: &DirectedGraph) -> Result<DistanceMatrix> {
    g.require_strongly_connected()?;
    let n = g.n();
    let adj = g.out_adjacency();
    let mut d = vec![usize::MAX; n * n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        let row = &mut d[s * n..(s + 1) * n];
        row[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if row[w] == usize::MAX {
                    row[w] = row[v] + 1;
                    queue.push_back(w);
                }
            }
        }
    }
    let mut dm = DistanceMatrix {
        n,
        d,
        dvert: vec![0; n],
        lambda: 0,
    };
    for x in 0..n {
        dm.dvert[x] = g
            .neighborhood(x)
            .into_iter()
            .map(|y| dm.dsym(x, y))
            .max()
            .unwrap_or(0);
    }
    dm.lambda = dm.dvert.iter().copied().max().unwrap_or(0);
    Ok(dm)
}

/// Directed difference quotient `(f(y) - f(x)) / d(x, y)`.
pub fn gradient(f: &[f64], x: usize, y: usize, d: &DistanceMatrix) -> Result<f64> {
    if x == y {
        return Err(Error::SameVertex(x));
    }
    Ok(gradient_unchecked(f, x, y, d))
}

#[inline]
pub(crate) fn gradient_unchecked(f: &[f64], x: usize, y: usize, d: &DistanceMatrix) -> f64 {
    (f[y] - f[x]) / d.df(x, y)
}

/// Supremum of the gradient over all ordered pairs of distinct vertices.
pub fn lipschitz_constant(f: &[f64], d: &DistanceMatrix) -> f64 {
    lipschitz_with_argmax(f, d).0
}

/// Lipschitz constant together with an ordered pair attaining it.
pub fn lipschitz_with_argmax(f: &[f64], d: &DistanceMatrix) -> (f64, (usize, usize)) {
    let n = d.n();
    let mut best = (f64::NEG_INFINITY, (0, 0));
    for x in 0..n {
        for y in 0..n {
            if x != y {
                let g = gradient_unchecked(f, x, y, d);
                if g > best.0 {
                    best = (g, (x, y));
                }
            }
        }
    }
    if n < 2 {
        best.0 = 0.0;
    }
    best
}

/// `f(w) - f(z) <= L d(z, w) + tol` for all ordered pairs.
pub fn is_lipschitz(f: &[f64], d: &DistanceMatrix, l: f64, tol: f64) -> bool {
    let n = d.n();
    (0..n).all(|z| (0..n).all(|w| z == w || f[w] - f[z] <= l * d.df(z, w) + tol))
}

#[derive(Debug, Deserialize)]
struct GraphDocument {
    n: usize,
    arcs: Vec<ArcEntry>,
    #[serde(default)]
    labels: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ArcEntry {
    Weighted(usize, usize, f64),
    Plain(usize, usize),
}

/// Parses the text edge-list format. The vertex count is one more than the
/// largest id mentioned.
pub fn parse_edge_list(text: &str) -> Result<DirectedGraph> {
    let mut arcs = Vec::new();
    let mut n = 0;
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: k + 1, message };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(parse_err(format!(
                "expected \"src dst [weight]\", got {} fields",
                fields.len()
            )));
        }
        let vertex = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| parse_err(format!("invalid vertex id {s:?}")))
        };
        let src = vertex(fields[0])?;
        let dst = vertex(fields[1])?;
        let weight = match fields.get(2) {
            Some(s) => s
                .parse::<f64>()
                .map_err(|_| parse_err(format!("invalid weight {s:?}")))?,
            None => 1.0,
        };
        n = n.max(src + 1).max(dst + 1);
        arcs.push((src, dst, weight));
    }
    if n == 0 {
        return Err(Error::Parse {
            line: 0,
            message: "no arcs".into(),
        });
    }
    DirectedGraph::from_arcs(n, arcs)
}

pub fn parse_json(text: &str) -> Result<DirectedGraph> {
    let doc: GraphDocument = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    let arcs = doc.arcs.into_iter().map(|a| match a {
        ArcEntry::Weighted(s, t, w) => (s, t, w),
        ArcEntry::Plain(s, t) => (s, t, 1.0),
    });
    let g = DirectedGraph::from_arcs(doc.n, arcs)?;
    match doc.labels {
        Some(l) => g.with_labels(l),
        None => Ok(g),
    }
}

/// Parses either input format, choosing JSON when the text starts with `{`.
pub fn load_graph(text: &str) -> Result<DirectedGraph> {
    if text.trim_start().starts_with('{') {
        parse_json(text)
    } else {
        parse_edge_list(text)
    }
}

pub fn load_graph_file(path: impl AsRef<Path>) -> Result<DirectedGraph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
        line: 0,
        message: format!("{}: {e}", path.display()),
    })?;
    load_graph(&text)
}
