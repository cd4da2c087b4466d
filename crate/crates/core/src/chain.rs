//! Random-walk kernels of a strongly connected digraph and the Chung
//! Laplacian built from them.
//!
//! ```text
//! P(x, y)     = mu_xy / mu(x)                 transition kernel
//! m           = m P,  sum m = 1               stationary (Perron) measure
//! Prev(x, y)  = m(y) P(y, x) / m(x)           time reversal
//! Pmean       = (P + Prev) / 2                reversible w.r.t. m
//! m_xy        = m(x) Pmean(x, y) = m_yx
//! L f (x)     = f(x) - sum_y Pmean(x, y) f(y)
//! ```

use nalgebra::DMatrix;
use serde::Serialize;

use crate::digraph::DirectedGraph;
use crate::error::{Error, Result};
use crate::tolerance::PERRON_BALANCE;

/// Row-stochastic kernel `mu_xy / mu(x)`.
pub fn transition_kernel(g: &DirectedGraph) -> Result<DMatrix<f64>> {
    let n = g.n();
    let mut p = g.weights().clone();
    for x in 0..n {
        let total = g.out_weight(x);
        if total <= 0.0 {
            return Err(Error::ZeroOutDegree(x));
        }
        for y in 0..n {
            p[(x, y)] /= total;
        }
    }
    Ok(p)
}

/// Stationary probability vector of an irreducible kernel.
///
/// Solved directly from `(P^T - I) m = 0` with the last equation replaced
/// by `sum m = 1`; iteration would oscillate on periodic chains.
pub fn perron_measure(p: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = p.nrows();
    if n == 0 || p.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.ncols(),
        });
    }
    let mut a = p.transpose() - DMatrix::identity(n, n);
    let mut rhs = nalgebra::DVector::zeros(n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    rhs[n - 1] = 1.0;
    let lu = a.clone().lu();
    let mut m = lu.solve(&rhs).ok_or(Error::SingularSystem)?;
    // one step of iterative refinement
    let r = &rhs - &a * &m;
    if let Some(dm) = lu.solve(&r) {
        m += dm;
    }
    let m: Vec<f64> = m.iter().copied().collect();
    if m.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    if balance_residual(p, &m) > PERRON_BALANCE {
        return Err(Error::SingularSystem);
    }
    Ok(m)
}

/// `max_x |sum_y m(y) P(y, x) - m(x)|`.
pub fn balance_residual(p: &DMatrix<f64>, m: &[f64]) -> f64 {
    let n = m.len();
    (0..n)
        .map(|x| ((0..n).map(|y| m[y] * p[(y, x)]).sum::<f64>() - m[x]).abs())
        .fold(0.0, f64::max)
}

/// Kernels and measures of the random walk on a strongly connected graph.
#[derive(Debug, Clone, Serialize)]
pub struct MarkovData {
    #[serde(skip)]
    p: DMatrix<f64>,
    m: Vec<f64>,
    #[serde(skip)]
    prev: DMatrix<f64>,
    #[serde(skip)]
    pmean: DMatrix<f64>,
    #[serde(skip)]
    mxy: DMatrix<f64>,
}

impl MarkovData {
    pub fn new(g: &DirectedGraph) -> Result<Self> {
        g.require_strongly_connected()?;
        let p = transition_kernel(g)?;
        let m = perron_measure(&p)?;
        Ok(mean_kernel(p, m))
    }

    pub fn n(&self) -> usize {
        self.m.len()
    }

    /// Transition kernel `P`.
    pub fn transition(&self) -> &DMatrix<f64> {
        &self.p
    }

    /// Stationary measure.
    pub fn measure(&self) -> &[f64] {
        &self.m
    }

    pub fn reverse(&self) -> &DMatrix<f64> {
        &self.prev
    }

    /// Mean kernel `(P + Prev) / 2`.
    pub fn mean(&self) -> &DMatrix<f64> {
        &self.pmean
    }

    /// Symmetric edge measure `m_xy`.
    pub fn edge_measure(&self) -> &DMatrix<f64> {
        &self.mxy
    }

    pub fn laplacian(&self) -> LaplacianOperator {
        let n = self.n();
        LaplacianOperator {
            matrix: DMatrix::identity(n, n) - &self.pmean,
        }
    }

    /// `D^{1/2} Pmean D^{-1/2}` with `D = diag(m)`, formed from the
    /// symmetric edge measure so it is symmetric to the last bit.
    pub fn symmetrized_mean(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |x, y| self.mxy[(x, y)] / (self.m[x] * self.m[y]).sqrt())
    }

    /// `max |m(x) Pmean(x, y) - m(y) Pmean(y, x)|`.
    pub fn reversibility_residual(&self) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        for x in 0..n {
            for y in 0..n {
                let r = self.m[x] * self.pmean[(x, y)] - self.m[y] * self.pmean[(y, x)];
                worst = worst.max(r.abs());
            }
        }
        worst
    }
}

/// Assembles reverse and mean kernels from `P` and its stationary measure.
pub fn mean_kernel(p: DMatrix<f64>, m: Vec<f64>) -> MarkovData {
    let n = m.len();
    let prev = DMatrix::from_fn(n, n, |x, y| m[y] * p[(y, x)] / m[x]);
    let pmean = (&p + &prev) * 0.5;
    let mxy = DMatrix::from_fn(n, n, |x, y| 0.5 * (m[x] * p[(x, y)] + m[y] * p[(y, x)]));
    MarkovData {
        p,
        m,
        prev,
        pmean,
        mxy,
    }
}

/// Dense matrix of `L = I - Pmean`.
#[derive(Debug, Clone)]
pub struct LaplacianOperator {
    matrix: DMatrix<f64>,
}

impl LaplacianOperator {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        (0..n)
            .map(|x| (0..n).map(|y| self.matrix[(x, y)] * f[y]).sum())
            .collect()
    }

    /// Negative Laplacian `Delta = -L`.
    pub fn apply_negative(&self, f: &[f64]) -> Vec<f64> {
        self.apply(f).into_iter().map(|v| -v).collect()
    }
}

pub fn laplacian_apply(l: &LaplacianOperator, f: &[f64]) -> Vec<f64> {
    l.apply(f)
}

/// Carré du champ from the local sum
/// `Gamma(f0, f1)(x) = 1/2 sum_y (f0(y) - f0(x)) (f1(y) - f1(x)) Pmean(x, y)`.
pub fn gamma(f0: &[f64], f1: &[f64], md: &MarkovData) -> Vec<f64> {
    let n = md.n();
    let pm = md.mean();
    (0..n)
        .map(|x| {
            0.5 * (0..n)
                .map(|y| (f0[y] - f0[x]) * (f1[y] - f1[x]) * pm[(x, y)])
                .sum::<f64>()
        })
        .collect()
}

/// `Gamma(f) = Gamma(f, f)`.
pub fn gamma_sq(f: &[f64], md: &MarkovData) -> Vec<f64> {
    gamma(f, f, md)
}

/// Carré du champ through `1/2 (Delta(f0 f1) - f0 Delta f1 - f1 Delta f0)`.
/// Kept as a cross-check of [`gamma`].
pub fn gamma_via_laplacian(f0: &[f64], f1: &[f64], md: &MarkovData) -> Vec<f64> {
    let l = md.laplacian();
    let prod: Vec<f64> = f0.iter().zip(f1).map(|(a, b)| a * b).collect();
    let dp = l.apply_negative(&prod);
    let d0 = l.apply_negative(f0);
    let d1 = l.apply_negative(f1);
    (0..f0.len())
        .map(|x| 0.5 * (dp[x] - f0[x] * d1[x] - f1[x] * d0[x]))
        .collect()
}

/// `(f0, f1) = sum f0 f1 m`.
pub fn inner(f0: &[f64], f1: &[f64], m: &[f64]) -> f64 {
    f0.iter().zip(f1).zip(m).map(|((a, b), w)| a * b * w).sum()
}

/// `m(f) = sum f m`.
pub fn mean(f: &[f64], m: &[f64]) -> f64 {
    f.iter().zip(m).map(|(a, w)| a * w).sum()
}

/// Both sides of the subset integration-by-parts formula together with
/// the global identities `(L f0, f1) = m(Gamma(f0, f1)) = (f0, L f1)`.
#[derive(Debug, Clone, Serialize)]
pub struct IntegrationByPartsReport {
    pub subset_lhs: f64,
    pub subset_rhs: f64,
    pub lf0_f1: f64,
    pub energy: f64,
    pub f0_lf1: f64,
    pub max_residual: f64,
}

pub fn check_integration_by_parts(
    md: &MarkovData,
    omega: &[usize],
    f0: &[f64],
    f1: &[f64],
) -> Result<IntegrationByPartsReport> {
    if omega.is_empty() {
        return Err(Error::EmptySubset);
    }
    let n = md.n();
    if let Some(&v) = omega.iter().find(|&&v| v >= n) {
        return Err(Error::VertexOutOfRange { vertex: v, n });
    }
    let mut inside = vec![false; n];
    for &v in omega {
        inside[v] = true;
    }
    let m = md.measure();
    let mxy = md.edge_measure();
    let l = md.laplacian();
    let lf0 = l.apply(f0);
    let lf1 = l.apply(f1);

    let subset_lhs: f64 = (0..n).filter(|&x| inside[x]).map(|x| lf0[x] * f1[x] * m[x]).sum();
    let mut interior = 0.0;
    let mut boundary = 0.0;
    for x in (0..n).filter(|&x| inside[x]) {
        for y in 0..n {
            if inside[y] {
                interior += (f0[y] - f0[x]) * (f1[y] - f1[x]) * mxy[(x, y)];
            } else {
                boundary += (f0[y] - f0[x]) * f1[x] * mxy[(x, y)];
            }
        }
    }
    let subset_rhs = 0.5 * interior - boundary;

    let lf0_f1 = inner(&lf0, f1, m);
    let energy = mean(&gamma(f0, f1, md), m);
    let f0_lf1 = inner(f0, &lf1, m);
    let max_residual = [
        (subset_lhs - subset_rhs).abs(),
        (lf0_f1 - energy).abs(),
        (energy - f0_lf1).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Ok(IntegrationByPartsReport {
        subset_lhs,
        subset_rhs,
        lf0_f1,
        energy,
        f0_lf1,
        max_residual,
    })
}
