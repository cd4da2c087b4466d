//! Small reference graphs with hand-checkable curvature.

use crate::digraph::DirectedGraph;

/// Directed 3-cycle `0 -> 1 -> 2 -> 0`, unit weights.
pub fn cycle3() -> DirectedGraph {
    DirectedGraph::from_arcs(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).expect("valid fixture")
}

/// `0 -> 1`, `1 -> 0`, `1 -> 2`, `2 -> 0`, unit weights.
pub fn triangle() -> DirectedGraph {
    DirectedGraph::from_arcs(3, [(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 0, 1.0)])
        .expect("valid fixture")
}

/// Bidirected triangle, all six arcs with unit weight.
pub fn complete3() -> DirectedGraph {
    complete(3)
}

/// Complete bidirected graph on `n` vertices.
pub fn complete(n: usize) -> DirectedGraph {
    let arcs = (0..n).flat_map(|x| (0..n).filter(move |&y| y != x).map(move |y| (x, y, 1.0)));
    DirectedGraph::from_arcs(n, arcs).expect("valid fixture")
}

/// Directed cycle on `n` vertices.
pub fn cycle(n: usize) -> DirectedGraph {
    DirectedGraph::from_arcs(n, (0..n).map(|x| (x, (x + 1) % n, 1.0))).expect("valid fixture")
}
