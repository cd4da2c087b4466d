//! Shared inputs for the criterion benches.

use dricci_core::report::Prepared;
use dricci_core::sampling::{random_measure, random_strongly_connected, stream};
use dricci_core::DirectedGraph;

/// Graph sizes swept by the per-size benches.
pub const SIZES: [usize; 3] = [8, 16, 32];

/// A fixed random strongly connected graph on `n` vertices with arc
/// density 0.3, plus everything derived from it.
pub fn workload(n: usize) -> (DirectedGraph, Prepared) {
    let mut rng = stream(7, n as u64);
    let g = random_strongly_connected(n, 0.3, &mut rng).expect("graph");
    let p = Prepared::new(&g).expect("kernels");
    (g, p)
}

/// Two fixed random probability vectors of length `n`.
pub fn measures(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rng = stream(11, n as u64);
    (random_measure(n, &mut rng), random_measure(n, &mut rng))
}
