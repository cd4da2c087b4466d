//! Transportation simplex (MODI / stepping-stone) for coupling problems
//!
//! ```text
//! min sum_xy cost(x, y) pi(x, y),  sum_y pi(x, y) = nu0(x),  sum_x pi(x, y) = nu1(y),  pi >= 0
//! ```
//!
//! Rows and columns are restricted to the supports of the marginals. The
//! basis is a spanning tree of the bipartite support graph; the initial
//! tree comes from the northwest-corner rule.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use serde::Serialize;

use super::{LinearProgram, Sense, solve_lp};
use crate::error::{Error, Result};
use crate::tolerance::PROBABILITY_MASS;

#[derive(Debug, Clone, Serialize)]
pub struct TransportSolution {
    #[serde(skip)]
    pub plan: DMatrix<f64>,
    pub value: f64,
    /// Row potentials `u`, zero off the support of `nu0`.
    pub row_potential: Vec<f64>,
    /// Column potentials `v`, zero off the support of `nu1`.
    pub col_potential: Vec<f64>,
    pub row_support: Vec<usize>,
    pub col_support: Vec<usize>,
    /// `sum u nu0 + sum v nu1`.
    pub dual_value: f64,
    pub gap: f64,
    pub marginal_residual: f64,
    pub iterations: usize,
}

pub(crate) fn check_marginals(nu0: &[f64], nu1: &[f64]) -> Result<()> {
    let mass0: f64 = nu0.iter().sum();
    let mass1: f64 = nu1.iter().sum();
    let valid = |nu: &[f64], mass: f64| {
        nu.iter().all(|v| v.is_finite() && *v >= 0.0) && (mass - 1.0).abs() <= PROBABILITY_MASS
    };
    if !valid(nu0, mass0) || !valid(nu1, mass1) {
        return Err(Error::MarginalMismatch { mass0, mass1 });
    }
    Ok(())
}

/// Row and column sum violations of a coupling.
pub fn marginal_residual(plan: &DMatrix<f64>, nu0: &[f64], nu1: &[f64]) -> f64 {
    let rows = (0..plan.nrows()).map(|i| (plan.row(i).sum() - nu0[i]).abs());
    let cols = (0..plan.ncols()).map(|j| (plan.column(j).sum() - nu1[j]).abs());
    rows.chain(cols).fold(0.0, f64::max)
}

/// The coupling problem as an explicit LP over `n0 * n1` variables
/// (`pi(x, y)` at index `x * n1 + y`).
pub fn coupling_lp(cost: &DMatrix<f64>, nu0: &[f64], nu1: &[f64]) -> LinearProgram {
    let (n0, n1) = (nu0.len(), nu1.len());
    let c: Vec<f64> = (0..n0 * n1).map(|k| cost[(k / n1, k % n1)]).collect();
    let mut lp = LinearProgram::minimize(c);
    for (x, &mass) in nu0.iter().enumerate() {
        let terms: Vec<(usize, f64)> = (0..n1).map(|y| (x * n1 + y, 1.0)).collect();
        lp.add_sparse_constraint(&terms, Sense::Eq, mass);
    }
    for (y, &mass) in nu1.iter().enumerate() {
        let terms: Vec<(usize, f64)> = (0..n0).map(|x| (x * n1 + y, 1.0)).collect();
        lp.add_sparse_constraint(&terms, Sense::Eq, mass);
    }
    lp
}

struct Basis {
    p: usize,
    q: usize,
    /// basic cells `(row, col, value)`
    cells: Vec<(usize, usize, f64)>,
}

impl Basis {
    fn northwest(supply: &[f64], demand: &[f64]) -> Self {
        let (p, q) = (supply.len(), demand.len());
        let mut s = supply.to_vec();
        let mut d = demand.to_vec();
        let mut cells = Vec::with_capacity(p + q - 1);
        let (mut i, mut j) = (0, 0);
        while i < p && j < q {
            let last_row = i == p - 1;
            let last_col = j == q - 1;
            if last_row && last_col {
                cells.push((i, j, s[i].max(d[j]).max(0.0)));
                break;
            }
            let amount = s[i].min(d[j]).max(0.0);
            cells.push((i, j, amount));
            let row_done = if last_row {
                false
            } else if last_col {
                true
            } else {
                s[i] < d[j]
            };
            s[i] -= amount;
            d[j] -= amount;
            if row_done {
                i += 1;
            } else {
                j += 1;
            }
        }
        Basis { p, q, cells }
    }

    /// Tree adjacency: node `i < p` is a row, `p + j` a column. Each entry is
    /// `(neighbour, cell index)`.
    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.p + self.q];
        for (k, &(i, j, _)) in self.cells.iter().enumerate() {
            adj[i].push((self.p + j, k));
            adj[self.p + j].push((i, k));
        }
        adj
    }

    fn potentials(&self, cost: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
        let adj = self.adjacency();
        let mut pot = vec![f64::NAN; self.p + self.q];
        pot[0] = 0.0;
        let mut queue = VecDeque::from([0]);
        while let Some(v) = queue.pop_front() {
            for &(w, k) in &adj[v] {
                if pot[w].is_nan() {
                    let (i, j, _) = self.cells[k];
                    pot[w] = cost[i][j] - pot[v];
                    queue.push_back(w);
                }
            }
        }
        if pot.iter().any(|v| v.is_nan()) {
            return Err(Error::Numerics("transport basis is not a spanning tree".into()));
        }
        let v = pot.split_off(self.p);
        Ok((pot, v))
    }

    /// Cell indices on the tree path from row `i` to column `j`.
    fn path(&self, i: usize, j: usize) -> Result<Vec<usize>> {
        let adj = self.adjacency();
        let target = self.p + j;
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; self.p + self.q];
        let mut seen = vec![false; self.p + self.q];
        seen[i] = true;
        let mut queue = VecDeque::from([i]);
        while let Some(v) = queue.pop_front() {
            if v == target {
                break;
            }
            for &(w, k) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    prev[w] = Some((v, k));
                    queue.push_back(w);
                }
            }
        }
        if !seen[target] {
            return Err(Error::Numerics("no tree path in transport basis".into()));
        }
        let mut path = Vec::new();
        let mut v = target;
        while let Some((u, k)) = prev[v] {
            path.push(k);
            v = u;
        }
        path.reverse();
        Ok(path)
    }
}

/// Solves a coupling problem with the transportation simplex.
///
/// Entering cells are chosen by Bland's rule (first improving cell in
/// row-major order); ties for the leaving cell go to the lowest cell index.
/// Falls back to the generic simplex if the iteration budget runs out.
pub fn solve_transport(cost: &DMatrix<f64>, nu0: &[f64], nu1: &[f64]) -> Result<TransportSolution> {
    let n0 = nu0.len();
    let n1 = nu1.len();
    if cost.nrows() != n0 || cost.ncols() != n1 {
        return Err(Error::DimensionMismatch {
            expected: n0 * n1,
            got: cost.nrows() * cost.ncols(),
        });
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument("non-finite transport cost".into()));
    }
    check_marginals(nu0, nu1)?;

    let rows: Vec<usize> = (0..n0).filter(|&x| nu0[x] > 0.0).collect();
    let cols: Vec<usize> = (0..n1).filter(|&y| nu1[y] > 0.0).collect();
    let supply: Vec<f64> = rows.iter().map(|&x| nu0[x]).collect();
    let demand: Vec<f64> = cols.iter().map(|&y| nu1[y]).collect();
    let c: Vec<Vec<f64>> = rows
        .iter()
        .map(|&x| cols.iter().map(|&y| cost[(x, y)]).collect())
        .collect();

    match transport_simplex(&c, &supply, &demand) {
        Ok((basis, u, v, iterations)) => {
            let mut plan = DMatrix::zeros(n0, n1);
            for &(i, j, val) in &basis.cells {
                plan[(rows[i], cols[j])] += val;
            }
            let mut row_potential = vec![0.0; n0];
            let mut col_potential = vec![0.0; n1];
            for (k, &x) in rows.iter().enumerate() {
                row_potential[x] = u[k];
            }
            for (k, &y) in cols.iter().enumerate() {
                col_potential[y] = v[k];
            }
            Ok(finish(cost, nu0, nu1, plan, row_potential, col_potential, rows, cols, iterations))
        }
        Err(Error::Numerics(_)) => solve_with_generic_lp(cost, nu0, nu1, rows, cols),
        Err(e) => Err(e),
    }
}

type SimplexOutcome = (Basis, Vec<f64>, Vec<f64>, usize);

fn transport_simplex(c: &[Vec<f64>], supply: &[f64], demand: &[f64]) -> Result<SimplexOutcome> {
    let (p, q) = (supply.len(), demand.len());
    let mut basis = Basis::northwest(supply, demand);
    let scale = 1.0 + c.iter().flatten().fold(0.0_f64, |a, &v| a.max(v.abs()));
    let tol = 1e-12 * scale;
    let max_iterations = 1000 + 50 * p * q;
    let mut in_basis = vec![false; p * q];
    for &(i, j, _) in &basis.cells {
        in_basis[i * q + j] = true;
    }

    for iterations in 0..max_iterations {
        let (u, v) = basis.potentials(c)?;
        let entering = (0..p * q).find(|&k| {
            let (i, j) = (k / q, k % q);
            !in_basis[k] && c[i][j] - u[i] - v[j] < -tol
        });
        let Some(k) = entering else {
            return Ok((basis, u, v, iterations));
        };
        let (ei, ej) = (k / q, k % q);
        let path = basis.path(ei, ej)?;
        // path cells alternate -, +, -, ... starting next to the entering cell
        let mut leave: Option<usize> = None;
        for &cell in path.iter().step_by(2) {
            let (ci, cj, val) = basis.cells[cell];
            leave = match leave {
                None => Some(cell),
                Some(l) => {
                    let (li, lj, lval) = basis.cells[l];
                    let better = val < lval - 1e-15
                        || (val <= lval + 1e-15 && ci * q + cj < li * q + lj);
                    Some(if better { cell } else { l })
                }
            };
        }
        let leave = leave.expect("cycle has a decreasing cell");
        let theta = basis.cells[leave].2.max(0.0);
        for (pos, &cell) in path.iter().enumerate() {
            let entry = &mut basis.cells[cell].2;
            if pos % 2 == 0 {
                *entry = (*entry - theta).max(0.0);
            } else {
                *entry += theta;
            }
        }
        let (li, lj, _) = basis.cells[leave];
        in_basis[li * q + lj] = false;
        in_basis[k] = true;
        basis.cells[leave] = (ei, ej, theta);
    }
    Err(Error::Numerics("transportation simplex iteration limit".into()))
}

fn solve_with_generic_lp(
    cost: &DMatrix<f64>,
    nu0: &[f64],
    nu1: &[f64],
    rows: Vec<usize>,
    cols: Vec<usize>,
) -> Result<TransportSolution> {
    let (n0, n1) = (nu0.len(), nu1.len());
    let sol = solve_lp(&coupling_lp(cost, nu0, nu1))?.into_optimal()?;
    let plan = DMatrix::from_fn(n0, n1, |x, y| sol.x[x * n1 + y].max(0.0));
    let row_potential = sol.duals[..n0].to_vec();
    let col_potential = sol.duals[n0..].to_vec();
    Ok(finish(cost, nu0, nu1, plan, row_potential, col_potential, rows, cols, sol.iterations))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    cost: &DMatrix<f64>,
    nu0: &[f64],
    nu1: &[f64],
    plan: DMatrix<f64>,
    row_potential: Vec<f64>,
    col_potential: Vec<f64>,
    row_support: Vec<usize>,
    col_support: Vec<usize>,
    iterations: usize,
) -> TransportSolution {
    let value = plan.component_mul(cost).sum();
    let dual_value = super::dot(&row_potential, nu0) + super::dot(&col_potential, nu1);
    TransportSolution {
        marginal_residual: marginal_residual(&plan, nu0, nu1),
        plan,
        value,
        gap: (value - dual_value).abs(),
        row_potential,
        col_potential,
        row_support,
        col_support,
        dual_value,
        iterations,
    }
}
