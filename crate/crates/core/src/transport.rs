//! Wasserstein distance for the non-symmetric hop metric, with a
//! Kantorovich potential certifying every value.
//!
//! The primal is solved by the transportation simplex. Its potentials are
//! turned into a 1-Lipschitz function by the c-transform
//! `f(w) = min_{x in supp nu0} (d(x, w) - u(x))`, whose pairing with
//! `nu1 - nu0` equals the primal value at an optimum. [`kantorovich_dual`]
//! solves the dual LP over function values independently.

use serde::Serialize;

use crate::digraph::DistanceMatrix;
use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, Sense, solve_lp};

#[derive(Debug, Clone, Serialize)]
pub struct TransportPlan {
    /// Optimal coupling, rows indexed by the source measure.
    pub pi: Vec<Vec<f64>>,
    pub value: f64,
    /// 1-Lipschitz potential attaining the dual value, normalized so its
    /// minimum is zero.
    pub dual_f: Vec<f64>,
    /// `sum dual_f (nu1 - nu0)`.
    pub dual_value: f64,
    /// `|value - dual_value|`.
    pub gap: f64,
    pub marginal_residual: f64,
}

/// How much checking [`wasserstein_with`] does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Primal plus c-transform certificate.
    #[default]
    Fast,
    /// Additionally solves the dual LP and reports the larger gap.
    Verify,
}

/// `W(nu0, nu1) = inf over couplings of sum d(x, y) pi(x, y)`.
pub fn wasserstein(nu0: &[f64], nu1: &[f64], d: &DistanceMatrix) -> Result<TransportPlan> {
    wasserstein_with(nu0, nu1, d, Mode::Fast)
}

/// Only the optimal transport cost.
pub fn wasserstein_value(nu0: &[f64], nu1: &[f64], d: &DistanceMatrix) -> Result<f64> {
    check_len(nu0, d)?;
    check_len(nu1, d)?;
    Ok(lp::solve_transport(&d.cost_matrix(), nu0, nu1)?.value)
}

pub fn wasserstein_with(
    nu0: &[f64],
    nu1: &[f64],
    d: &DistanceMatrix,
    mode: Mode,
) -> Result<TransportPlan> {
    check_len(nu0, d)?;
    check_len(nu1, d)?;
    let n = d.n();
    let sol = lp::solve_transport(&d.cost_matrix(), nu0, nu1)?;
    let mut dual_f: Vec<f64> = (0..n)
        .map(|w| {
            sol.row_support
                .iter()
                .map(|&x| d.df(x, w) - sol.row_potential[x])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let lowest = dual_f.iter().copied().fold(f64::INFINITY, f64::min);
    dual_f.iter_mut().for_each(|v| *v -= lowest);
    let dual_value = pairing(&dual_f, nu0, nu1);
    let mut gap = (sol.value - dual_value).abs();
    if mode == Mode::Verify {
        let (lp_value, _) = kantorovich_dual(nu0, nu1, d)?;
        gap = gap.max((sol.value - lp_value).abs());
    }
    Ok(TransportPlan {
        pi: (0..n).map(|x| sol.plan.row(x).iter().copied().collect()).collect(),
        value: sol.value,
        dual_f,
        dual_value,
        gap,
        marginal_residual: sol.marginal_residual,
    })
}

/// `sup over 1-Lipschitz f of sum f (nu1 - nu0)`, solved as an LP over the
/// values of `f` with one constraint `f(w) - f(z) <= d(z, w)` per ordered
/// pair. `f(0)` is pinned to zero.
pub fn kantorovich_dual(nu0: &[f64], nu1: &[f64], d: &DistanceMatrix) -> Result<(f64, Vec<f64>)> {
    check_len(nu0, d)?;
    check_len(nu1, d)?;
    lp::check_marginals(nu0, nu1)?;
    let n = d.n();
    let objective: Vec<f64> = (0..n).map(|x| nu1[x] - nu0[x]).collect();
    let mut prog = LinearProgram::maximize(objective);
    for j in 0..n {
        prog.set_free(j);
    }
    prog.set_bounds(0, 0.0, 0.0);
    for z in 0..n {
        for w in 0..n {
            if z != w {
                prog.add_sparse_constraint(&[(w, 1.0), (z, -1.0)], Sense::Le, d.df(z, w));
            }
        }
    }
    let sol = solve_lp(&prog)?.into_optimal()?;
    Ok((sol.objective, sol.x))
}

/// `sum f (nu1 - nu0)`.
pub fn pairing(f: &[f64], nu0: &[f64], nu1: &[f64]) -> f64 {
    f.iter().zip(nu0.iter().zip(nu1)).map(|(fv, (a, b))| fv * (b - a)).sum()
}

fn check_len(nu: &[f64], d: &DistanceMatrix) -> Result<()> {
    if nu.len() != d.n() {
        return Err(Error::DimensionMismatch {
            expected: d.n(),
            got: nu.len(),
        });
    }
    Ok(())
}

/// Point mass at `x` on `n` vertices.
pub fn dirac(n: usize, x: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[x] = 1.0;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digraph::{distances, is_lipschitz};
    use crate::fixtures;
    use approx::assert_abs_diff_eq;

    #[test]
    fn asymmetric_point_masses_on_cycle() {
        let d = distances(&fixtures::cycle3()).unwrap();
        let w01 = wasserstein(&dirac(3, 0), &dirac(3, 1), &d).unwrap();
        let w10 = wasserstein(&dirac(3, 1), &dirac(3, 0), &d).unwrap();
        assert_eq!(w01.value, 1.0);
        assert_eq!(w10.value, 2.0);
        assert!(w01.gap <= 1e-12 && w10.gap <= 1e-12);
        assert!(is_lipschitz(&w01.dual_f, &d, 1.0, 1e-12));
        assert_abs_diff_eq!(w01.dual_f[1] - w01.dual_f[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dual_lp_on_cycle() {
        let d = distances(&fixtures::cycle3()).unwrap();
        let (v, f) = kantorovich_dual(&dirac(3, 0), &dirac(3, 1), &d).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f[1] - f[0], 1.0, epsilon = 1e-12);
        let nu = [0.3, 0.3, 0.4];
        let (v, _) = kantorovich_dual(&nu, &nu, &d).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn self_distance_is_zero() {
        let d = distances(&fixtures::triangle()).unwrap();
        let nu = [0.1, 0.6, 0.3];
        assert_abs_diff_eq!(wasserstein(&nu, &nu, &d).unwrap().value, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn point_masses_recover_distances() {
        let d = distances(&fixtures::triangle()).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                let w = wasserstein_with(&dirac(3, x), &dirac(3, y), &d, Mode::Verify).unwrap();
                assert_eq!(w.value, d.df(x, y));
                assert!(w.gap <= 1e-8);
            }
        }
    }

    #[test]
    fn marginal_errors() {
        let d = distances(&fixtures::cycle3()).unwrap();
        assert!(matches!(
            wasserstein(&[0.5, 0.2, 0.2], &dirac(3, 1), &d),
            Err(Error::MarginalMismatch { .. })
        ));
        assert!(matches!(
            wasserstein(&[1.0, 0.0], &dirac(3, 1), &d),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
