//! Seeded generators for test functions, densities, measures and graphs.
//!
//! Every generator draws from a [`ChaCha8Rng`] stream derived from
//! `(seed, stream)`, so independent sweeps never share randomness and a
//! sample of size `k` is a prefix of the sample of size `k + 1`.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chain::mean;
use crate::digraph::{DirectedGraph, DistanceMatrix};
use crate::error::Result;

pub const DEFAULT_SEED: u64 = 424242;

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One random 1-Lipschitz function.
///
/// Half the time `f(z) = min_a (d(a, z) + c_a)` over a random anchor set,
/// otherwise `f(z) = max_a (c_a - d(z, a))`. Both are 1-Lipschitz for the
/// directed metric by the triangle inequality. The result is scaled by a
/// factor in `[0.25, 1]`.
pub fn random_lipschitz(d: &DistanceMatrix, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = d.n();
    let spread = d.max_distance() as f64;
    let anchors: Vec<(usize, f64)> = {
        let k = rng.random_range(1..=n);
        (0..k)
            .map(|_| (rng.random_range(0..n), rng.random_range(0.0..spread)))
            .collect()
    };
    let scale = rng.random_range(0.25..=1.0);
    let upper = rng.random_bool(0.5);
    (0..n)
        .map(|z| {
            let v = if upper {
                anchors
                    .iter()
                    .map(|&(a, c)| d.df(a, z) + c)
                    .fold(f64::INFINITY, f64::min)
            } else {
                anchors
                    .iter()
                    .map(|&(a, c)| c - d.df(z, a))
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            scale * v
        })
        .collect()
}

/// Vertex distance functions `d(a, .)` and `-d(., a)` for every `a`.
/// These are vertices of the 1-Lipschitz polytope.
pub fn extremal_lipschitz(d: &DistanceMatrix) -> Vec<Vec<f64>> {
    let n = d.n();
    let mut out = Vec::with_capacity(2 * n);
    for a in 0..n {
        out.push((0..n).map(|z| d.df(a, z)).collect());
        out.push((0..n).map(|z| -d.df(z, a)).collect());
    }
    out
}

/// `count` 1-Lipschitz functions: the extremal family first, then random
/// draws from stream `stream_id`.
pub fn lipschitz_sample(d: &DistanceMatrix, count: usize, seed: u64, stream_id: u64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = extremal_lipschitz(d).into_iter().take(count).collect();
    let mut rng = stream(seed, stream_id);
    while out.len() < count {
        out.push(random_lipschitz(d, &mut rng));
    }
    out
}

/// Recentres `f` so that `m(f) = 0`.
pub fn centred(f: &[f64], m: &[f64]) -> Vec<f64> {
    let c = mean(f, m);
    f.iter().map(|v| v - c).collect()
}

/// Density `delta_x / m(x)`.
pub fn point_density(m: &[f64], x: usize) -> Vec<f64> {
    let mut rho = vec![0.0; m.len()];
    rho[x] = 1.0 / m[x];
    rho
}

/// Random probability density with respect to `m`: `g / m(g)` with `g`
/// exponential, and a random subset of entries zeroed a third of the time.
pub fn random_density(m: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = m.len();
    let mut g: Vec<f64> = (0..n)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    if rng.random_bool(1.0 / 3.0) {
        let keep = rng.random_range(0..n);
        for (x, v) in g.iter_mut().enumerate() {
            if x != keep && rng.random_bool(0.5) {
                *v = 0.0;
            }
        }
    }
    if g.iter().all(|&v| v == 0.0) {
        g[0] = 1.0;
    }
    let total = mean(&g, m);
    g.iter().map(|v| v / total).collect()
}

/// `count` densities: the point masses `delta_x / m(x)` first, then the
/// constant density, then random draws.
pub fn density_sample(m: &[f64], count: usize, seed: u64, stream_id: u64) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut out: Vec<Vec<f64>> = (0..n).map(|x| point_density(m, x)).take(count).collect();
    if out.len() < count {
        out.push(vec![1.0; n]);
    }
    let mut rng = stream(seed, stream_id);
    while out.len() < count {
        out.push(random_density(m, &mut rng));
    }
    out
}

/// Random probability vector, sparse a third of the time.
pub fn random_measure(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    random_density(&vec![1.0 / n as f64; n], rng)
        .into_iter()
        .map(|v| v / n as f64)
        .collect()
}

/// Random simple strongly connected digraph on `n` vertices.
///
/// A Hamiltonian cycle through a random permutation guarantees strong
/// connectivity; every other ordered pair becomes an arc with probability
/// `density`. Weights are uniform in `[0.5, 2]`.
pub fn random_strongly_connected(n: usize, density: f64, rng: &mut ChaCha8Rng) -> Result<DirectedGraph> {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut arc = vec![false; n * n];
    for i in 0..n {
        arc[order[i] * n + order[(i + 1) % n]] = true;
    }
    let mut arcs = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            if arc[x * n + y] || rng.random_bool(density) {
                arcs.push((x, y, rng.random_range(0.5..=2.0)));
            }
        }
    }
    DirectedGraph::from_arcs(n, arcs)
}

/// `count` random strongly connected graphs with `n` drawn from
/// `min_n..=max_n` and arc density drawn from `[0.1, 0.6]`.
pub fn graph_corpus(count: usize, min_n: usize, max_n: usize, seed: u64) -> Result<Vec<DirectedGraph>> {
    (0..count)
        .map(|i| {
            let mut rng = stream(seed, 1_000_000 + i as u64);
            let n = rng.random_range(min_n..=max_n);
            let p = rng.random_range(0.1..=0.6);
            random_strongly_connected(n, p, &mut rng)
        })
        .collect()
}
