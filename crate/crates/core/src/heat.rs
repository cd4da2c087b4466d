//! Heat semigroup `P_t = exp(-t L)` and the heat-flow characterizations
//! of a curvature lower bound.
//!
//! `Pmean` is reversible with respect to `m`, so
//! `S = D^{1/2} Pmean D^{-1/2}` (with `D = diag m`) is symmetric and
//!
//! ```text
//! P_t = D^{-1/2} Q exp(-t (I - Sigma)) Q^T D^{1/2}
//! ```
//!
//! for the eigendecomposition `S = Q Sigma Q^T`. Row `x` of `P_t` is the
//! heat kernel measure `p_x^t`.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::certificate::InequalityCertificate;
use crate::chain::MarkovData;
use crate::digraph::{DistanceMatrix, lipschitz_constant, lipschitz_with_argmax};
use crate::error::{Error, Result};
use crate::tolerance::{HEAT_CLAMP, INEQUALITY, REVERSIBILITY};
use crate::transport::wasserstein_value;

pub const DEFAULT_TIME_GRID: [f64; 4] = [0.01, 0.1, 1.0, 5.0];
pub const DEFAULT_LIMIT_GRID: [f64; 3] = [1e-2, 1e-3, 1e-4];

#[derive(Debug, Clone)]
pub struct HeatOperator {
    /// Eigenvalues of `L`, ascending.
    eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors of `S`, columns matching `eigenvalues`.
    q: DMatrix<f64>,
    sqrt_m: Vec<f64>,
    m: Vec<f64>,
    pmean: DMatrix<f64>,
}

impl HeatOperator {
    pub fn new(md: &MarkovData) -> Result<Self> {
        let s = md.symmetrized_mean();
        let asym = (&s - s.transpose()).amax();
        if asym > REVERSIBILITY.max(1e-13) {
            return Err(Error::NonSymmetricResidual(asym));
        }
        let s = (&s + s.transpose()) * 0.5;
        let eig = SymmetricEigen::new(s);
        let n = md.n();
        let mut order: Vec<usize> = (0..n).collect();
        let lam: Vec<f64> = eig.eigenvalues.iter().map(|sigma| 1.0 - sigma).collect();
        order.sort_by(|&a, &b| lam[a].total_cmp(&lam[b]));
        let q = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(HeatOperator {
            eigenvalues: order.iter().map(|&i| lam[i]).collect(),
            q,
            sqrt_m: md.measure().iter().map(|v| v.sqrt()).collect(),
            m: md.measure().to_vec(),
            pmean: md.mean().clone(),
        })
    }

    pub fn n(&self) -> usize {
        self.m.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Smallest nonzero eigenvalue of `L`.
    pub fn spectral_gap(&self) -> f64 {
        self.eigenvalues.get(1).copied().unwrap_or(0.0)
    }

    pub fn measure(&self) -> &[f64] {
        &self.m
    }

    fn check_time(t: f64) -> Result<()> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeTime(t));
        }
        Ok(())
    }

    /// `P_t f`.
    pub fn apply(&self, t: f64, f: &[f64]) -> Result<Vec<f64>> {
        Self::check_time(t)?;
        let n = self.n();
        if f.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: f.len(),
            });
        }
        if t == 0.0 {
            return Ok(f.to_vec());
        }
        let coeffs: Vec<f64> = (0..n)
            .map(|i| {
                let proj: f64 = (0..n).map(|z| self.q[(z, i)] * self.sqrt_m[z] * f[z]).sum();
                proj * (-t * self.eigenvalues[i]).exp()
            })
            .collect();
        Ok((0..n)
            .map(|x| (0..n).map(|i| self.q[(x, i)] * coeffs[i]).sum::<f64>() / self.sqrt_m[x])
            .collect())
    }

    /// Dense `P_t`.
    pub fn matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        Self::check_time(t)?;
        let n = self.n();
        if t == 0.0 {
            return Ok(DMatrix::identity(n, n));
        }
        let decay: Vec<f64> = self.eigenvalues.iter().map(|l| (-t * l).exp()).collect();
        Ok(DMatrix::from_fn(n, n, |x, y| {
            let s: f64 = (0..n).map(|i| self.q[(x, i)] * decay[i] * self.q[(y, i)]).sum();
            s * self.sqrt_m[y] / self.sqrt_m[x]
        }))
    }

    /// Heat kernel measure `p_x^t`, row `x` of `P_t`.
    ///
    /// Entries in `[-1e-12, 0)` are rounding noise and are clamped to zero
    /// before renormalizing; anything more negative is an error.
    pub fn heat_kernel(&self, x: usize, t: f64) -> Result<Vec<f64>> {
        Self::check_time(t)?;
        let n = self.n();
        if x >= n {
            return Err(Error::VertexOutOfRange { vertex: x, n });
        }
        if t == 0.0 {
            let mut row = vec![0.0; n];
            row[x] = 1.0;
            return Ok(row);
        }
        let decay: Vec<f64> = self.eigenvalues.iter().map(|l| (-t * l).exp()).collect();
        let mut row: Vec<f64> = (0..n)
            .map(|y| {
                let s: f64 = (0..n).map(|i| self.q[(x, i)] * decay[i] * self.q[(y, i)]).sum();
                s * self.sqrt_m[y] / self.sqrt_m[x]
            })
            .collect();
        for v in &mut row {
            if *v < 0.0 {
                if *v < -HEAT_CLAMP {
                    return Err(Error::NegativeHeatKernel(*v));
                }
                *v = 0.0;
            }
        }
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= total);
        Ok(row)
    }

    /// All heat kernel rows at time `t`.
    pub fn heat_kernels(&self, t: f64) -> Result<Vec<Vec<f64>>> {
        (0..self.n()).map(|x| self.heat_kernel(x, t)).collect()
    }

    /// `e^{-t} sum_k t^k Pmean^k f / k!`, summed until the Poisson weights
    /// are negligible. Independent of the eigendecomposition.
    pub fn apply_uniformized(&self, t: f64, f: &[f64]) -> Result<Vec<f64>> {
        Self::check_time(t)?;
        let n = self.n();
        let mut term = f.to_vec();
        let mut weight = (-t).exp();
        let mut out: Vec<f64> = term.iter().map(|v| weight * v).collect();
        let mut k = 0usize;
        while k < 10_000 {
            k += 1;
            term = (0..n)
                .map(|x| (0..n).map(|y| self.pmean[(x, y)] * term[y]).sum())
                .collect();
            weight *= t / k as f64;
            for (o, v) in out.iter_mut().zip(&term) {
                *o += weight * v;
            }
            if k as f64 > t && weight < 1e-18 {
                break;
            }
        }
        Ok(out)
    }
}

/// Checks `Lip(P_t f) <= e^{-K t} Lip(f)` on every sampled `f` and time.
pub fn verify_gradient_estimate(
    h: &HeatOperator,
    d: &DistanceMatrix,
    k: f64,
    fs: &[Vec<f64>],
    ts: &[f64],
) -> Result<InequalityCertificate> {
    if fs.is_empty() || ts.is_empty() {
        return Err(Error::InvalidArgument("need at least one function and one time".into()));
    }
    let mut cert = InequalityCertificate::new("gradient_estimate", INEQUALITY).with_hypothesis("K", k);
    for &t in ts {
        if t <= 0.0 {
            return Err(Error::InvalidArgument(format!("time {t} must be positive")));
        }
        let pt = h.matrix(t)?;
        let bound = (-k * t).exp();
        for (i, f) in fs.iter().enumerate() {
            let ptf: Vec<f64> = (0..h.n())
                .map(|x| (0..h.n()).map(|y| pt[(x, y)] * f[y]).sum())
                .collect();
            let (lhs, pair) = lipschitz_with_argmax(&ptf, d);
            let lip = lipschitz_constant(f, d);
            cert.observe(lhs, bound * lip, || json!({ "sample": i, "t": t, "pair": pair }));
        }
    }
    Ok(cert)
}

/// Checks `W(p_x^t, p_y^t) <= e^{-K t} d(x, y)` on every ordered pair and
/// time in the grid.
pub fn verify_transport_contraction(
    h: &HeatOperator,
    d: &DistanceMatrix,
    k: f64,
    ts: &[f64],
) -> Result<InequalityCertificate> {
    let n = h.n();
    let mut cert = InequalityCertificate::new("transport_contraction", INEQUALITY).with_hypothesis("K", k);
    for &t in ts {
        if t <= 0.0 {
            return Err(Error::InvalidArgument(format!("time {t} must be positive")));
        }
        let rows = h.heat_kernels(t)?;
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|x| (0..n).filter(move |&y| y != x).map(move |y| (x, y)))
            .collect();
        let values = pairs
            .par_iter()
            .map(|&(x, y)| wasserstein_value(&rows[x], &rows[y], d))
            .collect::<Result<Vec<f64>>>()?;
        let decay = (-k * t).exp();
        for (&(x, y), w) in pairs.iter().zip(values) {
            cert.observe(w, decay * d.df(x, y), || json!({ "t": t, "pair": [x, y] }));
        }
    }
    Ok(cert)
}

#[derive(Debug, Clone, Serialize)]
pub struct HeatLimit {
    pub x: usize,
    pub y: usize,
    /// Two-point linear extrapolation to `t = 0`.
    pub estimate: f64,
    /// Spread of the finite-time values.
    pub residual: f64,
    /// `(t, (1 - W(p_x^t, p_y^t) / d(x, y)) / t)`, ascending in `t`.
    pub samples: Vec<(f64, f64)>,
}

/// `lim_{t -> 0} (1 - W(p_x^t, p_y^t) / d(x, y)) / t`, estimated from a
/// time grid and extrapolated linearly through the two smallest times.
pub fn mw_limit(h: &HeatOperator, d: &DistanceMatrix, x: usize, y: usize, t_grid: &[f64]) -> Result<HeatLimit> {
    let n = h.n();
    for v in [x, y] {
        if v >= n {
            return Err(Error::VertexOutOfRange { vertex: v, n });
        }
    }
    if x == y {
        return Err(Error::SameVertex(x));
    }
    if t_grid.len() < 2 || t_grid.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidArgument("time grid needs at least two positive points".into()));
    }
    let dxy = d.df(x, y);
    let mut samples = t_grid
        .iter()
        .map(|&t| {
            let w = wasserstein_value(&h.heat_kernel(x, t)?, &h.heat_kernel(y, t)?, d)?;
            Ok((t, (1.0 - w / dxy) / t))
        })
        .collect::<Result<Vec<_>>>()?;
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (ta, ga) = samples[0];
    let (tb, gb) = samples[1];
    let estimate = (tb * ga - ta * gb) / (tb - ta);
    let lo = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(HeatLimit {
        x,
        y,
        estimate,
        residual: hi - lo,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{inner, mean};
    use crate::digraph::distances;
    use crate::fixtures;
    use crate::sampling::lipschitz_sample;
    use approx::assert_abs_diff_eq;

    fn setup(g: &crate::DirectedGraph) -> (MarkovData, DistanceMatrix, HeatOperator) {
        let md = MarkovData::new(g).unwrap();
        let h = HeatOperator::new(&md).unwrap();
        (md, distances(g).unwrap(), h)
    }

    #[test]
    fn identity_and_constants() {
        let (_, _, h) = setup(&fixtures::triangle());
        let f = [0.3, -1.2, 2.5];
        assert_eq!(h.apply(0.0, &f).unwrap(), f.to_vec());
        for t in [0.1, 1.0, 10.0] {
            for v in h.apply(t, &[1.0; 3]).unwrap() {
                assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
            }
        }
        assert_eq!(h.apply(-1.0, &f), Err(Error::NegativeTime(-1.0)));
        assert!(matches!(h.heat_kernel(0, -0.5), Err(Error::NegativeTime(_))));
    }

    #[test]
    fn cycle_spectrum_and_decay() {
        let (md, _, h) = setup(&fixtures::cycle3());
        assert_abs_diff_eq!(h.eigenvalues()[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(h.eigenvalues()[1], 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(h.eigenvalues()[2], 1.5, epsilon = 1e-14);
        let f = [0.0, 1.0, 2.0];
        let mf = mean(&f, md.measure());
        for t in [0.1, 1.0, 3.0] {
            let ptf = h.apply(t, &f).unwrap();
            for x in 0..3 {
                assert_abs_diff_eq!(ptf[x], mf + (-1.5 * t).exp() * (f[x] - mf), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn heat_kernel_rows() {
        for g in [fixtures::cycle3(), fixtures::triangle(), fixtures::complete3()] {
            let (md, _, h) = setup(&g);
            assert_eq!(h.heat_kernel(1, 0.0).unwrap(), vec![0.0, 1.0, 0.0]);
            for x in 0..3 {
                let p = h.heat_kernel(x, 50.0).unwrap();
                for y in 0..3 {
                    assert_abs_diff_eq!(p[y], md.measure()[y], epsilon = 1e-8);
                }
            }
            let f = [1.0, -2.0, 0.5];
            let ptf = h.apply(0.7, &f).unwrap();
            for x in 0..3 {
                let p = h.heat_kernel(x, 0.7).unwrap();
                assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(inner(&p, &f, &[1.0; 3]), ptf[x], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn uniformization_matches_spectral() {
        let (_, _, h) = setup(&fixtures::triangle());
        let f = [0.2, 1.7, -0.4];
        for t in [0.01, 0.5, 2.0, 8.0] {
            let a = h.apply(t, &f).unwrap();
            let b = h.apply_uniformized(t, &f).unwrap();
            for x in 0..3 {
                assert_abs_diff_eq!(a[x], b[x], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn symmetry_identity() {
        let (md, _, h) = setup(&fixtures::triangle());
        let m = md.measure();
        let pt = h.matrix(0.9).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                assert_abs_diff_eq!(m[x] * pt[(x, y)], m[y] * pt[(y, x)], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn certificates_on_cycle() {
        let (_, d, h) = setup(&fixtures::cycle3());
        let fs = lipschitz_sample(&d, 200, 424242, 0);
        let g = verify_gradient_estimate(&h, &d, 1.5, &fs, &[0.01, 0.1, 1.0]).unwrap();
        assert!(g.pass, "{g:?}");
        let c = verify_transport_contraction(&h, &d, 1.5, &DEFAULT_TIME_GRID).unwrap();
        assert!(c.pass, "{c:?}");
        assert_eq!(c.checked, 24);
        let g = verify_gradient_estimate(&h, &d, 1.6, &fs, &[0.01, 0.1, 1.0]).unwrap();
        assert!(!g.pass);
        let c = verify_transport_contraction(&h, &d, 1.6, &DEFAULT_TIME_GRID).unwrap();
        assert!(!c.pass);
    }

    #[test]
    fn constant_function_is_trivial() {
        let (_, d, h) = setup(&fixtures::triangle());
        let g = verify_gradient_estimate(&h, &d, 10.0, &[vec![2.0; 3]], &[0.1]).unwrap();
        assert!(g.pass);
        assert_abs_diff_eq!(g.lhs, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn heat_flow_limit_on_cycle() {
        let (_, d, h) = setup(&fixtures::cycle3());
        let l = mw_limit(&h, &d, 0, 1, &DEFAULT_LIMIT_GRID).unwrap();
        assert_abs_diff_eq!(l.estimate, 1.5, epsilon = 1e-4);
        assert!(mw_limit(&h, &d, 1, 1, &DEFAULT_LIMIT_GRID).is_err());
    }
}
