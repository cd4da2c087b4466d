//! Numeric tolerances shared by the solvers and the certificate checks.
//!
//! Each constant has a field in [`Tolerances`] so callers (the CLI in
//! particular) can override it per run.

use serde::{Deserialize, Serialize};

/// Residual allowed in the stationary balance equation.
pub const PERRON_BALANCE: f64 = 1e-12;
/// Self-adjointness and integration-by-parts residuals.
pub const ADJOINTNESS: f64 = 1e-10;
/// Reversibility of the mean kernel with respect to the stationary measure.
pub const REVERSIBILITY: f64 = 1e-14;
/// Primal feasibility for LP solutions.
pub const LP_FEASIBILITY: f64 = 1e-9;
/// Primal-dual gap at an LP optimum.
pub const LP_GAP: f64 = 1e-8;
/// Marginal residual of a transport coupling.
pub const MARGINAL: f64 = 1e-10;
/// Mass tolerance for input probability vectors.
pub const PROBABILITY_MASS: f64 = 1e-12;
/// Slack for the heat-flow and functional inequalities.
pub const INEQUALITY: f64 = 1e-9;
/// Slack for the exact pointwise lemmas.
pub const LEMMA: f64 = 1e-10;
/// Semigroup law residual.
pub const SEMIGROUP: f64 = 1e-9;
/// Heat kernel mass and pairing residuals.
pub const HEAT_KERNEL: f64 = 1e-10;
/// Negative heat kernel entries above this are clamped to zero.
pub const HEAT_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub perron_balance: f64,
    pub adjointness: f64,
    pub lp_feasibility: f64,
    pub lp_gap: f64,
    pub marginal: f64,
    pub inequality: f64,
    pub lemma: f64,
    pub semigroup: f64,
    pub heat_kernel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            perron_balance: PERRON_BALANCE,
            adjointness: ADJOINTNESS,
            lp_feasibility: LP_FEASIBILITY,
            lp_gap: LP_GAP,
            marginal: MARGINAL,
            inequality: INEQUALITY,
            lemma: LEMMA,
            semigroup: SEMIGROUP,
            heat_kernel: HEAT_KERNEL,
        }
    }
}
