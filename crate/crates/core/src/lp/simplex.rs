//! Two-phase tableau simplex with Bland's rule.
//!
//! The user problem is rewritten as `min c^T z, A z = b, z >= 0, b >= 0`
//! with one artificial column per row. Artificial columns stay in the
//! tableau during phase two (barred from entering) so that `B^{-1}` and with
//! it the dual multipliers can be read off at the end.

use nalgebra::{DMatrix, DVector};

use super::{Direction, LinearProgram, LpSolution, LpStatus, Sense, dot};
use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const OPT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;

/// How a user variable is expressed through standard-form columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    Fixed(f64),
    /// `x = lo + z`
    Shifted { col: usize, lo: f64 },
    /// `x = hi - z`
    Mirrored { col: usize, hi: f64 },
    /// `x = z+ - z-`
    Split { pos: usize, neg: usize },
}

struct StandardForm {
    /// rows × structural columns (user columns and slacks), rhs already
    /// sign-normalized
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    /// `+1`/`-1` multiplier applied to each row
    row_sign: Vec<f64>,
    /// objective constant from shifts and fixed variables
    offset: f64,
    vars: Vec<VarMap>,
    /// number of rows coming from user constraints (the rest are bound rows)
    user_rows: usize,
}

fn standardize(lp: &LinearProgram) -> StandardForm {
    let n = lp.num_vars();
    let dir = match lp.direction() {
        Direction::Minimize => 1.0,
        Direction::Maximize => -1.0,
    };
    let mut vars = Vec::with_capacity(n);
    let mut ncols = 0;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (lo, hi) = lp.bounds(j);
        let map = if lo == hi {
            VarMap::Fixed(lo)
        } else if lo.is_finite() {
            let col = ncols;
            ncols += 1;
            if hi.is_finite() {
                bound_rows.push((col, hi - lo));
            }
            VarMap::Shifted { col, lo }
        } else if hi.is_finite() {
            ncols += 1;
            VarMap::Mirrored { col: ncols - 1, hi }
        } else {
            ncols += 2;
            VarMap::Split {
                pos: ncols - 2,
                neg: ncols - 1,
            }
        };
        vars.push(map);
    }

    let mut c = vec![0.0; ncols];
    let mut offset = 0.0;
    for (j, map) in vars.iter().enumerate() {
        let cj = dir * lp.objective()[j];
        match *map {
            VarMap::Fixed(v) => offset += cj * v,
            VarMap::Shifted { col, lo } => {
                c[col] += cj;
                offset += cj * lo;
            }
            VarMap::Mirrored { col, hi } => {
                c[col] -= cj;
                offset += cj * hi;
            }
            VarMap::Split { pos, neg } => {
                c[pos] += cj;
                c[neg] -= cj;
            }
        }
    }

    let user_rows = lp.num_constraints();
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::with_capacity(user_rows + bound_rows.len());
    for con in lp.constraints() {
        let mut row = vec![0.0; ncols];
        let mut rhs = con.rhs;
        for (j, &a) in con.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            match vars[j] {
                VarMap::Fixed(v) => rhs -= a * v,
                VarMap::Shifted { col, lo } => {
                    row[col] += a;
                    rhs -= a * lo;
                }
                VarMap::Mirrored { col, hi } => {
                    row[col] -= a;
                    rhs -= a * hi;
                }
                VarMap::Split { pos, neg } => {
                    row[pos] += a;
                    row[neg] -= a;
                }
            }
        }
        rows.push((row, con.sense, rhs));
    }
    for &(col, ub) in &bound_rows {
        let mut row = vec![0.0; ncols];
        row[col] = 1.0;
        rows.push((row, Sense::Le, ub));
    }

    let slacks = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let total = ncols + slacks;
    c.resize(total, 0.0);
    let mut a = Vec::with_capacity(rows.len());
    let mut b = Vec::with_capacity(rows.len());
    let mut row_sign = Vec::with_capacity(rows.len());
    let mut next_slack = ncols;
    for (mut row, sense, rhs) in rows {
        row.resize(total, 0.0);
        match sense {
            Sense::Le => {
                row[next_slack] = 1.0;
                next_slack += 1;
            }
            Sense::Ge => {
                row[next_slack] = -1.0;
                next_slack += 1;
            }
            Sense::Eq => {}
        }
        let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
        if sign < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
        a.push(row);
        b.push(sign * rhs);
        row_sign.push(sign);
    }
    StandardForm {
        a,
        b,
        c,
        row_sign,
        offset,
        vars,
        user_rows,
    }
}

/// Dense tableau `[A | I | b]` with a reduced-cost row.
struct Tableau {
    m: usize,
    /// structural columns; artificial column `i` is `ncols + i`
    ncols: usize,
    width: usize,
    t: Vec<f64>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    iterations: usize,
    max_iterations: usize,
}

impl Tableau {
    fn new(sf: &StandardForm) -> Self {
        let m = sf.b.len();
        let ncols = sf.c.len();
        let width = ncols + m + 1;
        let mut t = vec![0.0; m * width];
        for i in 0..m {
            let row = &mut t[i * width..(i + 1) * width];
            row[..ncols].copy_from_slice(&sf.a[i]);
            row[ncols + i] = 1.0;
            row[width - 1] = sf.b[i];
        }
        Tableau {
            m,
            ncols,
            width,
            t,
            obj: vec![0.0; width],
            basis: (ncols..ncols + m).collect(),
            iterations: 0,
            max_iterations: 20_000 + 200 * (m + ncols),
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width - 1)
    }

    /// Sets the cost row to `c - c_B B^{-1} A` for the given column costs.
    fn price(&mut self, cost: &[f64]) {
        self.obj.iter_mut().for_each(|v| *v = 0.0);
        self.obj[..cost.len()].copy_from_slice(cost);
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.width..(i + 1) * self.width];
                for (o, r) in self.obj.iter_mut().zip(row) {
                    *o -= cb * r;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let w = self.width;
        let piv = self.at(r, e);
        {
            let row = &mut self.t[r * w..(r + 1) * w];
            row.iter_mut().for_each(|v| *v /= piv);
            row[e] = 1.0;
        }
        let prow: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + e];
            if f != 0.0 {
                let row = &mut self.t[i * w..(i + 1) * w];
                for (v, p) in row.iter_mut().zip(&prow) {
                    *v -= f * p;
                }
                row[e] = 0.0;
                if row[w - 1] < 0.0 && row[w - 1] > -FEAS_TOL {
                    row[w - 1] = 0.0;
                }
            }
        }
        let f = self.obj[e];
        if f != 0.0 {
            for (v, p) in self.obj.iter_mut().zip(&prow) {
                *v -= f * p;
            }
            self.obj[e] = 0.0;
        }
        self.basis[r] = e;
        self.iterations += 1;
    }

    /// Runs simplex iterations over columns `< allowed`. Returns `false` when
    /// the problem is unbounded along an entering column.
    fn optimize(&mut self, allowed: usize) -> Result<bool> {
        loop {
            if self.iterations > self.max_iterations {
                return Err(Error::Numerics(format!(
                    "iteration limit {} exceeded",
                    self.max_iterations
                )));
            }
            // Bland: lowest-index column with negative reduced cost
            let Some(e) = (0..allowed).find(|&j| self.obj[j] < -OPT_TOL) else {
                return Ok(true);
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, e);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                        if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match best {
                Some((r, _)) => self.pivot(r, e),
                None => return Ok(false),
            }
        }
    }
}

pub(super) fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    let sf = standardize(lp);
    let m = sf.b.len();
    let ncols = sf.c.len();
    let mut tab = Tableau::new(&sf);

    // phase one: minimize the sum of artificials
    let mut phase1 = vec![0.0; ncols + m];
    phase1[ncols..].iter_mut().for_each(|v| *v = 1.0);
    tab.price(&phase1);
    tab.optimize(ncols + m)?;
    let infeasibility = -tab.obj[tab.width - 1];
    let scale = 1.0 + sf.b.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    if infeasibility > FEAS_TOL * scale {
        return Ok(LpSolution::without_point(LpStatus::Infeasible, tab.iterations));
    }

    // drive remaining artificials out of the basis where possible
    for r in 0..m {
        if tab.basis[r] < ncols {
            continue;
        }
        let candidate = (0..ncols)
            .map(|j| (j, tab.at(r, j).abs()))
            .filter(|&(_, a)| a > 1e-9)
            .max_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((j, _)) = candidate {
            tab.pivot(r, j);
        }
    }

    // phase two
    let mut cost = sf.c.clone();
    cost.resize(ncols + m, 0.0);
    tab.price(&cost);
    if !tab.optimize(ncols)? {
        return Ok(LpSolution::without_point(LpStatus::Unbounded, tab.iterations));
    }

    let (z, y) = refine(&sf, &tab);
    Ok(assemble(lp, &sf, &z, &y, tab.iterations))
}

/// Recomputes the basic solution and the multipliers from the original
/// data with an LU factorization of the final basis.
fn refine(sf: &StandardForm, tab: &Tableau) -> (Vec<f64>, Vec<f64>) {
    let m = tab.m;
    let ncols = tab.ncols;
    let column = |j: usize, i: usize| {
        if j < ncols {
            sf.a[i][j]
        } else if j - ncols == i {
            1.0
        } else {
            0.0
        }
    };
    let cost_of = |j: usize| if j < ncols { sf.c[j] } else { 0.0 };

    // tableau readout as fallback
    let mut z = vec![0.0; ncols];
    for i in 0..m {
        if tab.basis[i] < ncols {
            z[tab.basis[i]] = tab.rhs(i).max(0.0);
        }
    }
    let mut y: Vec<f64> = (0..m).map(|i| -tab.obj[ncols + i]).collect();
    if m == 0 {
        return (z, y);
    }

    let bmat = DMatrix::from_fn(m, m, |i, k| column(tab.basis[k], i));
    let lu = bmat.clone().lu();
    let b = DVector::from_column_slice(&sf.b);
    if let Some(xb) = lu.solve(&b) {
        if xb.iter().all(|v| *v >= -FEAS_TOL && v.is_finite()) {
            z.iter_mut().for_each(|v| *v = 0.0);
            for (k, &bj) in tab.basis.iter().enumerate() {
                if bj < ncols {
                    z[bj] = xb[k].max(0.0);
                }
            }
        }
    }
    let cb = DVector::from_iterator(m, tab.basis.iter().map(|&j| cost_of(j)));
    if let Some(yv) = bmat.transpose().lu().solve(&cb) {
        if yv.iter().all(|v| v.is_finite()) {
            y = yv.iter().copied().collect();
        }
    }
    (z, y)
}

fn assemble(lp: &LinearProgram, sf: &StandardForm, z: &[f64], y: &[f64], iterations: usize) -> LpSolution {
    let dir = match lp.direction() {
        Direction::Minimize => 1.0,
        Direction::Maximize => -1.0,
    };
    let x: Vec<f64> = sf
        .vars
        .iter()
        .map(|map| match *map {
            VarMap::Fixed(v) => v,
            VarMap::Shifted { col, lo } => lo + z[col],
            VarMap::Mirrored { col, hi } => hi - z[col],
            VarMap::Split { pos, neg } => z[pos] - z[neg],
        })
        .collect();

    let m = sf.b.len();
    let ncols = sf.c.len();
    let mut dual_infeasibility: f64 = 0.0;
    let mut complementarity: f64 = 0.0;
    for j in 0..ncols {
        let r = sf.c[j] - (0..m).map(|i| sf.a[i][j] * y[i]).sum::<f64>();
        dual_infeasibility = dual_infeasibility.max(-r);
        complementarity = complementarity.max((z[j] * r).abs());
    }
    let duals: Vec<f64> = (0..sf.user_rows)
        .map(|i| dir * sf.row_sign[i] * y[i])
        .collect();
    let objective = lp.objective_value(&x);
    let dual_objective = dir * (dot(&sf.b, y) + sf.offset);
    LpSolution {
        status: LpStatus::Optimal,
        primal_residual: lp.primal_residual(&x),
        x,
        objective,
        duals,
        dual_objective,
        gap: (objective - dual_objective).abs(),
        dual_infeasibility,
        complementarity,
        iterations,
    }
}
