//! Discrete Ricci curvature for strongly connected weighted digraphs.
//!
//! The pipeline is: a [`DirectedGraph`] gives hop distances and a transition
//! kernel; the kernel gives a Perron measure, its time reversal and the mean
//! kernel; the mean kernel drives the Laplacian, the carré du champ and the
//! heat semigroup. Curvature is computed per ordered pair by a linear
//! program over 1-Lipschitz functions, and the minimum over pairs feeds a
//! family of concentration and transport inequalities that can be checked
//! numerically.

pub mod certificate;
pub mod chain;
pub mod concentration;
pub mod curvature;
pub mod digraph;
pub mod error;
pub mod fixtures;
pub mod heat;
pub mod lp;
pub mod report;
pub mod sampling;
pub mod tolerance;
pub mod transport;

pub use certificate::{InequalityCertificate, Status};
pub use chain::{MarkovData, mean_kernel, perron_measure, transition_kernel};
pub use curvature::{CurvatureReport, curvature_matrix, kappa_lp};
pub use digraph::{DirectedGraph, DistanceMatrix, distances, lipschitz_constant};
pub use heat::HeatOperator;
pub use error::{Error, Result};
pub use report::{AnalysisConfig, VerificationReport, analyze};
pub use tolerance::Tolerances;
pub use transport::{TransportPlan, wasserstein};
