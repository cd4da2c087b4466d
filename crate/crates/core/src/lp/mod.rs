//! Dense linear programming.
//!
//! [`solve_lp`] runs a two-phase tableau simplex with Bland's anti-cycling
//! rule on a general problem
//!
//! ```text
//! min / max   c^T x
//! subject to  a_i^T x  (<= | = | >=)  b_i
//!             lower_j <= x_j <= upper_j      (either side may be infinite)
//! ```
//!
//! Optimal solutions carry one dual value per constraint, using the
//! shadow-price convention `dual_i = d(optimal value) / d(b_i)`.
//!
//! [`solve_transport`] is a transportation simplex specialized to coupling
//! problems; [`coupling_lp`] assembles the same problem for the generic path.

mod simplex;
mod transportation;

use serde::Serialize;

use crate::error::{Error, Result};

pub use transportation::{TransportSolution, coupling_lp, marginal_residual, solve_transport};
pub(crate) use transportation::check_marginals;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    direction: Direction,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl LinearProgram {
    /// New problem over `objective.len()` variables, each bounded below by 0.
    pub fn new(direction: Direction, objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            direction,
            objective,
            constraints: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn minimize(objective: Vec<f64>) -> Self {
        Self::new(Direction::Minimize, objective)
    }

    pub fn maximize(objective: Vec<f64>) -> Self {
        Self::new(Direction::Maximize, objective)
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) -> &mut Self {
        self.constraints.push(Constraint { coeffs, sense, rhs });
        self
    }

    /// Adds `sum coeff * x_j (sense) rhs` from sparse `(j, coeff)` pairs.
    pub fn add_sparse_constraint(
        &mut self,
        terms: &[(usize, f64)],
        sense: Sense,
        rhs: f64,
    ) -> &mut Self {
        let mut coeffs = vec![0.0; self.num_vars()];
        for &(j, a) in terms {
            coeffs[j] += a;
        }
        self.add_constraint(coeffs, sense, rhs)
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) -> &mut Self {
        self.lower[j] = lower;
        self.upper[j] = upper;
        self
    }

    pub fn set_free(&mut self, j: usize) -> &mut Self {
        self.set_bounds(j, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lower[j], self.upper[j])
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            let lhs = dot(&c.coeffs, x);
            let v = match c.sense {
                Sense::Le => lhs - c.rhs,
                Sense::Ge => c.rhs - lhs,
                Sense::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (j, &xj) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - xj).max(xj - self.upper[j]);
        }
        worst
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if n == 0 {
            return Err(Error::InvalidArgument("linear program has no variables".into()));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite objective coefficient".into()));
        }
        for c in &self.constraints {
            if c.coeffs.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: c.coeffs.len(),
                });
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|a| !a.is_finite()) {
                return Err(Error::InvalidArgument("non-finite constraint data".into()));
            }
        }
        for j in 0..n {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY
            {
                return Err(Error::InvalidArgument(format!("invalid bounds on variable {j}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point (empty unless optimal).
    pub x: Vec<f64>,
    pub objective: f64,
    /// Shadow price of each constraint (empty unless optimal).
    pub duals: Vec<f64>,
    /// Value of the dual objective at the returned multipliers.
    pub dual_objective: f64,
    /// `|objective - dual_objective|`.
    pub gap: f64,
    pub primal_residual: f64,
    /// Most negative reduced cost, clipped at zero.
    pub dual_infeasibility: f64,
    /// `max_j |x_j r_j|` over standard-form columns.
    pub complementarity: f64,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    fn without_point(status: LpStatus, iterations: usize) -> Self {
        LpSolution {
            status,
            x: Vec::new(),
            objective: f64::NAN,
            duals: Vec::new(),
            dual_objective: f64::NAN,
            gap: f64::NAN,
            primal_residual: f64::NAN,
            dual_infeasibility: f64::NAN,
            complementarity: f64::NAN,
            iterations,
        }
    }

    /// Converts a non-optimal status into the matching error.
    pub fn into_optimal(self) -> Result<Self> {
        match self.status {
            LpStatus::Optimal => Ok(self),
            LpStatus::Infeasible => Err(Error::Infeasible),
            LpStatus::Unbounded => Err(Error::Unbounded),
        }
    }
}

/// Solves a linear program with the dense two-phase simplex method.
///
/// Infeasible and unbounded problems are reported through
/// [`LpSolution::status`]; `Err` is reserved for malformed input and
/// numerical breakdown.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    simplex::solve(lp)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_variable_lower_bound() {
        let mut lp = LinearProgram::minimize(vec![1.0]);
        lp.add_constraint(vec![1.0], Sense::Ge, 3.0);
        let s = solve_lp(&lp).unwrap();
        assert!(s.is_optimal());
        assert_abs_diff_eq!(s.x[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.objective, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.duals[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn box_maximization() {
        let mut lp = LinearProgram::maximize(vec![1.0, 1.0]);
        lp.add_constraint(vec![1.0, 1.0], Sense::Le, 1.0);
        let s = solve_lp(&lp).unwrap();
        assert_abs_diff_eq!(s.objective, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.duals[0], 1.0, epsilon = 1e-12);
        assert!(s.gap <= 1e-12);
    }

    #[test]
    fn textbook_problem_with_duals() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18: optimum (2, 6) = 36,
        // shadow prices (0, 3/2, 1)
        let mut lp = LinearProgram::maximize(vec![3.0, 5.0]);
        lp.add_constraint(vec![1.0, 0.0], Sense::Le, 4.0)
            .add_constraint(vec![0.0, 2.0], Sense::Le, 12.0)
            .add_constraint(vec![3.0, 2.0], Sense::Le, 18.0);
        let s = solve_lp(&lp).unwrap();
        assert_abs_diff_eq!(s.objective, 36.0, epsilon = 1e-10);
        assert_abs_diff_eq!(s.x[0], 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(s.x[1], 6.0, epsilon = 1e-10);
        for (d, e) in s.duals.iter().zip([0.0, 1.5, 1.0]) {
            assert_abs_diff_eq!(*d, e, epsilon = 1e-10);
        }
    }

    #[test]
    fn free_and_bounded_variables() {
        // min x - y, -1 <= x <= 2, y free, x + y = 1, y <= 5  ->  x = -1, y = 2
        let mut lp = LinearProgram::minimize(vec![1.0, -1.0]);
        lp.set_bounds(0, -1.0, 2.0).set_free(1);
        lp.add_constraint(vec![1.0, 1.0], Sense::Eq, 1.0)
            .add_constraint(vec![0.0, 1.0], Sense::Le, 5.0);
        let s = solve_lp(&lp).unwrap();
        assert_abs_diff_eq!(s.x[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.x[1], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.objective, -3.0, epsilon = 1e-12);
        assert!(s.gap <= 1e-10, "gap {}", s.gap);
    }

    #[test]
    fn upper_bounded_only_and_fixed() {
        // max x + y with x <= 3 (no lower bound), y fixed at 2, x + y <= 10
        let mut lp = LinearProgram::maximize(vec![1.0, 1.0]);
        lp.set_bounds(0, f64::NEG_INFINITY, 3.0).set_bounds(1, 2.0, 2.0);
        lp.add_constraint(vec![1.0, 1.0], Sense::Le, 10.0);
        let s = solve_lp(&lp).unwrap();
        assert_abs_diff_eq!(s.objective, 5.0, epsilon = 1e-12);
        assert!(s.gap <= 1e-10);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::minimize(vec![1.0]);
        lp.add_constraint(vec![1.0], Sense::Le, -1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);

        let mut lp = LinearProgram::maximize(vec![1.0, 0.0]);
        lp.add_constraint(vec![1.0, -1.0], Sense::Le, 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
        assert_eq!(
            solve_lp(&lp).unwrap().into_optimal().unwrap_err(),
            Error::Unbounded
        );
    }

    #[test]
    fn redundant_equalities() {
        // x + y = 1 stated twice and 2x + 2y = 2
        let mut lp = LinearProgram::minimize(vec![1.0, 2.0]);
        lp.add_constraint(vec![1.0, 1.0], Sense::Eq, 1.0)
            .add_constraint(vec![1.0, 1.0], Sense::Eq, 1.0)
            .add_constraint(vec![2.0, 2.0], Sense::Eq, 2.0);
        let s = solve_lp(&lp).unwrap();
        assert_abs_diff_eq!(s.objective, 1.0, epsilon = 1e-12);
        assert!(s.gap <= 1e-10);
        assert!(s.primal_residual <= 1e-12);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's example, which cycles under the largest-coefficient rule.
        let mut lp = LinearProgram::minimize(vec![-0.75, 150.0, -0.02, 6.0]);
        lp.add_constraint(vec![0.25, -60.0, -0.04, 9.0], Sense::Le, 0.0)
            .add_constraint(vec![0.5, -90.0, -0.02, 3.0], Sense::Le, 0.0)
            .add_constraint(vec![0.0, 0.0, 1.0, 0.0], Sense::Le, 1.0);
        let s = solve_lp(&lp).unwrap();
        assert_abs_diff_eq!(s.objective, -0.05, epsilon = 1e-12);
    }

    #[test]
    fn negative_rhs_equality_duals() {
        // min x + y, x - y = -2 -> x = 0, y = 2; shadow price of the
        // equality is -1
        let mut lp = LinearProgram::minimize(vec![1.0, 1.0]);
        lp.add_constraint(vec![1.0, -1.0], Sense::Eq, -2.0);
        let s = solve_lp(&lp).unwrap();
        assert_abs_diff_eq!(s.objective, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.duals[0], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_malformed_problems() {
        let mut lp = LinearProgram::minimize(vec![1.0, 1.0]);
        lp.add_constraint(vec![1.0], Sense::Le, 1.0);
        assert!(matches!(solve_lp(&lp), Err(Error::DimensionMismatch { .. })));
        let mut lp = LinearProgram::minimize(vec![1.0]);
        lp.add_constraint(vec![1.0], Sense::Le, f64::INFINITY);
        assert!(solve_lp(&lp).is_err());
        assert!(solve_lp(&LinearProgram::minimize(vec![])).is_err());
    }
}
