//! Ricci curvature of ordered vertex pairs.
//!
//! Two independent routes:
//!
//! * [`kappa_lp`]: the limit-free formula
//!   `kappa(x, y) = min { grad_xy L f : f 1-Lipschitz, grad_xy f = 1 }`,
//!   one small LP per pair over the values of `f`;
//! * [`kappa_limit`]: `kappa_eps(x, y) / eps` at small `eps`, with
//!   `kappa_eps = 1 - W(nu_x^eps, nu_y^eps) / d(x, y)` and
//!   `nu_x^eps = (1 - eps) delta_x + eps Pmean(x, .)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::chain::MarkovData;
use crate::digraph::DistanceMatrix;
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Sense, solve_lp};
use crate::transport::wasserstein_value;

pub const DEFAULT_EPS_GRID: [f64; 2] = [1e-3, 5e-4];

fn check_pair(x: usize, y: usize, n: usize) -> Result<()> {
    for v in [x, y] {
        if v >= n {
            return Err(Error::VertexOutOfRange { vertex: v, n });
        }
    }
    if x == y {
        return Err(Error::SameVertex(x));
    }
    Ok(())
}

/// `nu_x^eps = (1 - eps) delta_x + eps Pmean(x, .)`.
pub fn smoothed_measure(md: &MarkovData, x: usize, eps: f64) -> Vec<f64> {
    let pm = md.mean();
    (0..md.n())
        .map(|z| {
            let base = if z == x { 1.0 - eps } else { 0.0 };
            base + eps * pm[(x, z)]
        })
        .collect()
}

/// `1 - W(nu_x^eps, nu_y^eps) / d(x, y)`.
pub fn kappa_eps(x: usize, y: usize, eps: f64, md: &MarkovData, d: &DistanceMatrix) -> Result<f64> {
    check_pair(x, y, md.n())?;
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::EpsOutOfRange(eps));
    }
    let w = wasserstein_value(&smoothed_measure(md, x, eps), &smoothed_measure(md, y, eps), d)?;
    Ok(1.0 - w / d.df(x, y))
}

/// `grad_xy L f = (L f(y) - L f(x)) / d(x, y)`.
pub fn gradient_of_laplacian(f: &[f64], x: usize, y: usize, md: &MarkovData, d: &DistanceMatrix) -> f64 {
    let pm = md.mean();
    let lf = |u: usize| f[u] - (0..md.n()).map(|z| pm[(u, z)] * f[z]).sum::<f64>();
    (lf(y) - lf(x)) / d.df(x, y)
}

#[derive(Debug, Clone, Serialize)]
pub struct LpCurvature {
    pub value: f64,
    /// Optimal `f`, normalized so that `f(x) = 0`.
    pub witness: Vec<f64>,
    pub gap: f64,
    pub iterations: usize,
}

/// Limit-free curvature by linear programming.
///
/// Variables are the values of `f`, with `f(x)` pinned to zero. The
/// constraints are `f(w) - f(z) <= d(z, w)` for every ordered pair and
/// `f(y) - f(x) = d(x, y)`; `f(z) = d(x, z)` is always feasible.
pub fn kappa_lp(x: usize, y: usize, md: &MarkovData, d: &DistanceMatrix) -> Result<LpCurvature> {
    check_pair(x, y, md.n())?;
    let n = md.n();
    let pm = md.mean();
    let dxy = d.df(x, y);
    let objective: Vec<f64> = (0..n)
        .map(|z| {
            let dy = if z == y { 1.0 } else { 0.0 };
            let dx = if z == x { 1.0 } else { 0.0 };
            (dy - dx - pm[(y, z)] + pm[(x, z)]) / dxy
        })
        .collect();
    let mut prog = LinearProgram::minimize(objective);
    for z in 0..n {
        prog.set_free(z);
    }
    prog.set_bounds(x, 0.0, 0.0);
    for z in 0..n {
        for w in 0..n {
            if z != w {
                prog.add_sparse_constraint(&[(w, 1.0), (z, -1.0)], Sense::Le, d.df(z, w));
            }
        }
    }
    prog.add_sparse_constraint(&[(y, 1.0), (x, -1.0)], Sense::Eq, dxy);
    let sol = solve_lp(&prog)?.into_optimal()?;
    Ok(LpCurvature {
        value: sol.objective,
        witness: sol.x,
        gap: sol.gap,
        iterations: sol.iterations,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitEstimate {
    pub value: f64,
    /// Spread of the grid values.
    pub residual: f64,
    /// `(eps, kappa_eps / eps)` for each grid point.
    pub samples: Vec<(f64, f64)>,
}

/// `kappa_eps / eps` at the smallest grid point, with the spread across the
/// grid as an error proxy.
pub fn kappa_limit(
    x: usize,
    y: usize,
    md: &MarkovData,
    d: &DistanceMatrix,
    eps_grid: &[f64],
) -> Result<LimitEstimate> {
    if eps_grid.len() < 2 || eps_grid.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err(Error::InvalidArgument(
            "epsilon grid needs at least two points in (0, 1]".into(),
        ));
    }
    let mut samples = eps_grid
        .iter()
        .map(|&e| Ok((e, kappa_eps(x, y, e, md, d)? / e)))
        .collect::<Result<Vec<_>>>()?;
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lo = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(LimitEstimate {
        value: samples[0].1,
        residual: hi - lo,
        samples,
    })
}

/// Which ordered pairs a report covers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PairScope {
    /// Every ordered pair `x != y`. The minimum is the curvature bound.
    #[default]
    AllPairs,
    /// Arcs `x -> y` only. Cheaper, but the minimum can overestimate the
    /// bound, so it is labelled heuristic.
    EdgesOnly,
    Selected(Vec<(usize, usize)>),
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvatureOptions {
    pub scope: PairScope,
    /// Also run [`kappa_limit`] on every pair.
    pub cross_check: bool,
    pub eps_grid: Vec<f64>,
    pub parallel: bool,
}

impl Default for CurvatureOptions {
    fn default() -> Self {
        CurvatureOptions {
            scope: PairScope::AllPairs,
            cross_check: false,
            eps_grid: DEFAULT_EPS_GRID.to_vec(),
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Lp,
    EpsilonLimit,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairCurvature {
    pub x: usize,
    pub y: usize,
    pub kappa: f64,
    pub method: Method,
    pub witness: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<LimitEstimate>,
    /// `|kappa - limit|` when the cross-check ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agreement: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvatureReport {
    pub n: usize,
    /// `kappa[x][y]`; NaN on the diagonal and on pairs outside the scope.
    pub kappa: Vec<Vec<f64>>,
    /// Minimum over the evaluated pairs.
    pub k: f64,
    pub argmin: (usize, usize),
    pub scope: PairScope,
    pub heuristic: bool,
    pub pairs: Vec<PairCurvature>,
    /// Largest LP / limit disagreement, when cross-checked.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_disagreement: Option<f64>,
}

impl CurvatureReport {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.kappa[x][y]
    }
}

fn scoped_pairs(md: &MarkovData, scope: &PairScope) -> Result<Vec<(usize, usize)>> {
    let n = md.n();
    let pairs: Vec<(usize, usize)> = match scope {
        PairScope::AllPairs => (0..n)
            .flat_map(|x| (0..n).filter(move |&y| y != x).map(move |y| (x, y)))
            .collect(),
        PairScope::EdgesOnly => (0..n)
            .flat_map(|x| (0..n).filter(move |&y| y != x).map(move |y| (x, y)))
            .filter(|&(x, y)| md.transition()[(x, y)] > 0.0)
            .collect(),
        PairScope::Selected(p) => {
            for &(x, y) in p {
                check_pair(x, y, n)?;
            }
            p.clone()
        }
    };
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("no vertex pairs to evaluate".into()));
    }
    Ok(pairs)
}

fn evaluate_pair(
    x: usize,
    y: usize,
    md: &MarkovData,
    d: &DistanceMatrix,
    opts: &CurvatureOptions,
) -> Result<PairCurvature> {
    let lp = kappa_lp(x, y, md, d)?;
    let limit = if opts.cross_check {
        Some(kappa_limit(x, y, md, d, &opts.eps_grid)?)
    } else {
        None
    };
    let agreement = limit.as_ref().map(|l| (l.value - lp.value).abs());
    Ok(PairCurvature {
        x,
        y,
        kappa: lp.value,
        method: Method::Lp,
        witness: lp.witness,
        limit,
        agreement,
    })
}

/// Curvature of every ordered pair `x != y` and its minimum `K`.
pub fn curvature_matrix(md: &MarkovData, d: &DistanceMatrix) -> Result<CurvatureReport> {
    curvature_report(md, d, &CurvatureOptions::default())
}

pub fn curvature_report(
    md: &MarkovData,
    d: &DistanceMatrix,
    opts: &CurvatureOptions,
) -> Result<CurvatureReport> {
    let n = md.n();
    let pairs = scoped_pairs(md, &opts.scope)?;
    let results: Vec<PairCurvature> = if opts.parallel {
        pairs
            .par_iter()
            .map(|&(x, y)| evaluate_pair(x, y, md, d, opts))
            .collect::<Result<_>>()?
    } else {
        pairs
            .iter()
            .map(|&(x, y)| evaluate_pair(x, y, md, d, opts))
            .collect::<Result<_>>()?
    };
    let mut kappa = vec![vec![f64::NAN; n]; n];
    let mut k = f64::INFINITY;
    let mut argmin = results[0].x_y();
    for r in &results {
        kappa[r.x][r.y] = r.kappa;
        if r.kappa < k {
            k = r.kappa;
            argmin = r.x_y();
        }
    }
    let max_disagreement = opts.cross_check.then(|| {
        results
            .iter()
            .filter_map(|r| r.agreement)
            .fold(0.0, f64::max)
    });
    Ok(CurvatureReport {
        n,
        kappa,
        k,
        argmin,
        heuristic: opts.scope == PairScope::EdgesOnly,
        scope: opts.scope.clone(),
        pairs: results,
        max_disagreement,
    })
}

impl PairCurvature {
    fn x_y(&self) -> (usize, usize) {
        (self.x, self.y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digraph::{distances, is_lipschitz};
    use crate::fixtures;
    use approx::assert_abs_diff_eq;

    fn setup(g: &crate::DirectedGraph) -> (MarkovData, DistanceMatrix) {
        (MarkovData::new(g).unwrap(), distances(g).unwrap())
    }

    #[test]
    fn eps_zero_is_zero() {
        let (md, d) = setup(&fixtures::triangle());
        for (x, y) in [(0, 1), (1, 2), (2, 1)] {
            assert_abs_diff_eq!(kappa_eps(x, y, 0.0, &md, &d).unwrap(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn eps_form_on_cycle() {
        let (md, d) = setup(&fixtures::cycle3());
        let k = kappa_eps(0, 1, 1e-3, &md, &d).unwrap();
        assert_abs_diff_eq!(k / 1e-3, 1.5, epsilon = 1e-6);
        for e in [0.1, 0.5, 1.0] {
            assert!(kappa_eps(1, 0, e, &md, &d).unwrap() <= 1.0);
        }
    }

    #[test]
    fn eps_errors() {
        let (md, d) = setup(&fixtures::cycle3());
        assert_eq!(kappa_eps(1, 1, 0.1, &md, &d), Err(Error::SameVertex(1)));
        assert_eq!(kappa_eps(0, 1, 1.5, &md, &d), Err(Error::EpsOutOfRange(1.5)));
        assert_eq!(kappa_eps(0, 1, -0.1, &md, &d), Err(Error::EpsOutOfRange(-0.1)));
        assert!(matches!(kappa_lp(0, 0, &md, &d), Err(Error::SameVertex(0))));
    }

    #[test]
    fn lp_on_fixtures() {
        for g in [fixtures::cycle3(), fixtures::complete3()] {
            let (md, d) = setup(&g);
            for x in 0..3 {
                for y in 0..3 {
                    if x == y {
                        continue;
                    }
                    let r = kappa_lp(x, y, &md, &d).unwrap();
                    assert_abs_diff_eq!(r.value, 1.5, epsilon = 1e-12);
                    assert_eq!(r.witness[x], 0.0);
                    assert!(is_lipschitz(&r.witness, &d, 1.0, 1e-9));
                    assert_abs_diff_eq!(r.witness[y] - r.witness[x], d.df(x, y), epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn lp_value_matches_witness_objective() {
        let (md, d) = setup(&fixtures::triangle());
        for (x, y) in [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)] {
            let r = kappa_lp(x, y, &md, &d).unwrap();
            let v = gradient_of_laplacian(&r.witness, x, y, &md, &d);
            assert_abs_diff_eq!(v, r.value, epsilon = 1e-10);
            let dist: Vec<f64> = (0..3).map(|z| d.df(x, z)).collect();
            assert!(r.value <= gradient_of_laplacian(&dist, x, y, &md, &d) + 1e-12);
        }
    }

    #[test]
    fn limit_agrees_on_triangle() {
        let (md, d) = setup(&fixtures::triangle());
        for (x, y) in [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)] {
            let lp = kappa_lp(x, y, &md, &d).unwrap().value;
            let lim = kappa_limit(x, y, &md, &d, &DEFAULT_EPS_GRID).unwrap();
            assert!((lp - lim.value).abs() <= 1e-4, "{x}->{y}: {lp} vs {}", lim.value);
        }
    }

    #[test]
    fn limit_on_cycle() {
        let (md, d) = setup(&fixtures::cycle3());
        let lim = kappa_limit(0, 1, &md, &d, &DEFAULT_EPS_GRID).unwrap();
        assert_abs_diff_eq!(lim.value, 1.5, epsilon = 1e-6);
        assert!(lim.residual <= 1e-6);
        assert!(kappa_limit(0, 1, &md, &d, &[1e-3]).is_err());
    }

    #[test]
    fn matrix_reports() {
        for g in [fixtures::cycle3(), fixtures::complete3()] {
            let (md, d) = setup(&g);
            let r = curvature_matrix(&md, &d).unwrap();
            assert_abs_diff_eq!(r.k, 1.5, epsilon = 1e-12);
            assert_eq!(r.pairs.len(), 6);
            assert!((0..3).all(|x| r.get(x, x).is_nan()));
            assert!(!r.heuristic);
        }
    }

    #[test]
    fn scoped_reports() {
        let (md, d) = setup(&fixtures::triangle());
        let opts = CurvatureOptions {
            scope: PairScope::EdgesOnly,
            cross_check: true,
            ..Default::default()
        };
        let r = curvature_report(&md, &d, &opts).unwrap();
        assert_eq!(r.pairs.len(), 4);
        assert!(r.heuristic);
        assert!(r.get(0, 2).is_nan());
        assert!(r.max_disagreement.unwrap() <= 1e-4);
        let opts = CurvatureOptions {
            scope: PairScope::Selected(vec![(0, 1)]),
            ..Default::default()
        };
        let one = curvature_report(&md, &d, &opts).unwrap();
        assert_eq!(one.pairs.len(), 1);
        assert_abs_diff_eq!(one.k, kappa_lp(0, 1, &md, &d).unwrap().value, epsilon = 1e-15);
        let bad = CurvatureOptions {
            scope: PairScope::Selected(vec![(1, 1)]),
            ..Default::default()
        };
        assert!(curvature_report(&md, &d, &bad).is_err());
    }

    #[test]
    fn weight_scaling_is_exact() {
        let g = fixtures::triangle();
        let scaled = crate::DirectedGraph::from_matrix(g.weights() * 4.0).unwrap();
        let (md, d) = setup(&g);
        let (ms, ds) = setup(&scaled);
        let a = curvature_matrix(&md, &d).unwrap();
        let b = curvature_matrix(&ms, &ds).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                if x != y {
                    assert_eq!(a.get(x, y), b.get(x, y));
                }
            }
        }
    }
}
