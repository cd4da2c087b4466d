//! Laplace functional, concentration, Fisher information, relative entropy
//! and the functional inequalities that follow from a positive curvature
//! bound `K` and the neighbourhood diameter `Lambda`.
//!
//! Suprema over 1-Lipschitz functions and over densities are not computed
//! exactly. Every check evaluates its inequality on a supplied sample, so a
//! pass is evidence and a fail is a genuine counterexample.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::certificate::InequalityCertificate;
use crate::chain::{MarkovData, gamma, gamma_sq, inner, mean};
use crate::digraph::{DistanceMatrix, lipschitz_constant};
use crate::error::{Error, Result};
use crate::tolerance::{INEQUALITY, LEMMA, PROBABILITY_MASS};
use crate::transport::wasserstein_value;

pub const DEFAULT_LAMBDA_GRID: [f64; 3] = [0.5, 1.0, 2.0];

/// `r = 0.25, 0.5, ..., 3`.
pub fn default_r_grid() -> Vec<f64> {
    (0..=12).map(|i| 0.25 * i as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Random,
    Extremal,
    User,
}

/// Probability density with respect to the stationary measure.
#[derive(Debug, Clone, Serialize)]
pub struct DensityFixture {
    pub rho: Vec<f64>,
    pub provenance: Provenance,
}

impl DensityFixture {
    pub fn new(rho: Vec<f64>, m: &[f64], provenance: Provenance) -> Result<Self> {
        check_density(&rho, m)?;
        Ok(DensityFixture { rho, provenance })
    }

    /// The measure `rho m`.
    pub fn measure(&self, m: &[f64]) -> Vec<f64> {
        self.rho.iter().zip(m).map(|(r, w)| r * w).collect()
    }
}

fn check_density(rho: &[f64], m: &[f64]) -> Result<()> {
    if rho.len() != m.len() {
        return Err(Error::DimensionMismatch {
            expected: m.len(),
            got: rho.len(),
        });
    }
    if rho.iter().any(|&r| !(r >= 0.0 && r.is_finite())) {
        return Err(Error::InvalidArgument("density must be finite and non-negative".into()));
    }
    let mass = mean(rho, m);
    if (mass - 1.0).abs() > PROBABILITY_MASS {
        return Err(Error::MarginalMismatch { mass0: mass, mass1: 1.0 });
    }
    Ok(())
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) {
        return Err(Error::HypothesisUnmet(format!("{name} = {v} must be positive")));
    }
    Ok(())
}

/// `m(e^{lambda f})` for `f` recentred to mean zero.
pub fn laplace_value(m: &[f64], f: &[f64], lambda: f64) -> f64 {
    let c = mean(f, m);
    f.iter().zip(m).map(|(v, w)| w * (lambda * (v - c)).exp()).sum()
}

/// Lower bound for the Laplace functional
/// `E(lambda) = sup { m(e^{lambda f}) : f 1-Lipschitz, m(f) = 0 }`: the
/// largest value over the sampled functions.
pub fn laplace_lower_bound(md: &MarkovData, d: &DistanceMatrix, lambda: f64, fs: &[Vec<f64>]) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda {lambda} must be non-negative")));
    }
    let mut best = f64::NEG_INFINITY;
    for f in fs {
        let lip = lipschitz_constant(f, d);
        if lip > 1.0 + 1e-12 {
            return Err(Error::NotLipschitz(lip));
        }
        best = best.max(laplace_value(md.measure(), f, lambda));
    }
    Ok(best)
}

/// `E(lambda) <= exp(lambda^2 Lambda^2 / (4 K))` on every sampled `f` and
/// grid point.
pub fn check_laplace_bound(
    md: &MarkovData,
    d: &DistanceMatrix,
    k: f64,
    lambda_big: f64,
    lambda_grid: &[f64],
    fs: &[Vec<f64>],
) -> Result<InequalityCertificate> {
    require_positive("K", k)?;
    for f in fs {
        let lip = lipschitz_constant(f, d);
        if lip > 1.0 + 1e-12 {
            return Err(Error::NotLipschitz(lip));
        }
    }
    let mut cert = InequalityCertificate::new("laplace_bound", INEQUALITY)
        .with_hypothesis("K", k)
        .with_hypothesis("Lambda", lambda_big);
    for &lambda in lambda_grid {
        let rhs = (lambda * lambda * lambda_big * lambda_big / (4.0 * k)).exp();
        for (i, f) in fs.iter().enumerate() {
            let lhs = laplace_value(md.measure(), f, lambda);
            cert.observe(lhs, rhs, || json!({ "sample": i, "lambda": lambda }));
        }
    }
    Ok(cert)
}

/// `m(Gamma(f, e^{lambda f})) <= lambda (e^{lambda f}, Gamma(f))`.
pub fn check_lemma_gamma_exp(md: &MarkovData, f: &[f64], lambda: f64) -> Result<InequalityCertificate> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda {lambda} must be non-negative")));
    }
    let m = md.measure();
    let e: Vec<f64> = f.iter().map(|v| (lambda * v).exp()).collect();
    let lhs = mean(&gamma(f, &e, md), m);
    let rhs = lambda * inner(&e, &gamma_sq(f, md), m);
    let mut cert = InequalityCertificate::new("gamma_exp", LEMMA).with_hypothesis("lambda", lambda);
    cert.observe(lhs, rhs, || json!({ "lambda": lambda }));
    Ok(cert)
}

/// `m(Gamma(e^f)) <= (e^{2f}, Gamma(f))`.
pub fn check_lemma_gamma_exp2(md: &MarkovData, f: &[f64]) -> InequalityCertificate {
    let m = md.measure();
    let e: Vec<f64> = f.iter().map(|v| v.exp()).collect();
    let e2: Vec<f64> = f.iter().map(|v| (2.0 * v).exp()).collect();
    let lhs = mean(&gamma_sq(&e, md), m);
    let rhs = inner(&e2, &gamma_sq(f, md), m);
    let mut cert = InequalityCertificate::new("gamma_exp_squared", LEMMA);
    cert.observe(lhs, rhs, || json!(null));
    cert
}

/// `m({f >= m(f) + r}) <= exp(-K r^2 / Lambda^2)` for each `r`, with the
/// tail mass summed exactly. Ties at the threshold count towards the tail.
pub fn concentration_tail(
    md: &MarkovData,
    d: &DistanceMatrix,
    k: f64,
    lambda_big: f64,
    f: &[f64],
    r_grid: &[f64],
) -> Result<InequalityCertificate> {
    require_positive("K", k)?;
    let lip = lipschitz_constant(f, d);
    if lip > 1.0 + 1e-12 {
        return Err(Error::NotLipschitz(lip));
    }
    let m = md.measure();
    let mf = mean(f, m);
    let mut cert = InequalityCertificate::new("concentration_tail", INEQUALITY)
        .with_hypothesis("K", k)
        .with_hypothesis("Lambda", lambda_big);
    for &r in r_grid {
        let threshold = mf + r - 1e-12;
        let lhs: f64 = f.iter().zip(m).filter(|(v, _)| **v >= threshold).map(|(_, w)| w).sum();
        let rhs = (-k * r * r / (lambda_big * lambda_big)).exp();
        cert.observe(lhs, rhs, || json!({ "r": r }));
    }
    Ok(cert)
}

/// `I(rho) = 2 sum_{x,y} (sqrt rho(y) - sqrt rho(x))^2 m_xy`.
pub fn fisher_information(md: &MarkovData, rho: &[f64]) -> f64 {
    let n = md.n();
    let mxy = md.edge_measure();
    let s: Vec<f64> = rho.iter().map(|r| r.sqrt()).collect();
    let mut total = 0.0;
    for x in 0..n {
        for y in 0..n {
            let diff = s[y] - s[x];
            total += diff * diff * mxy[(x, y)];
        }
    }
    2.0 * total
}

/// `4 m(Gamma(sqrt rho))`, the same quantity through the carré du champ.
pub fn fisher_information_gamma(md: &MarkovData, rho: &[f64]) -> f64 {
    let s: Vec<f64> = rho.iter().map(|r| r.sqrt()).collect();
    4.0 * mean(&gamma_sq(&s, md), md.measure())
}

/// `Ent(rho) = m(rho log rho)` with `0 log 0 = 0`.
pub fn relative_entropy(md: &MarkovData, rho: &[f64]) -> f64 {
    rho.iter()
        .zip(md.measure())
        .filter(|(r, _)| **r > 0.0)
        .map(|(r, w)| w * r * r.ln())
        .sum()
}

/// `(g, rho)` when `m(e^g) <= 1`, a lower bound for the entropy by its
/// variational formula. `None` if `g` is outside the admissible set.
pub fn entropy_dual_lower_bound(md: &MarkovData, rho: &[f64], g: &[f64]) -> Option<f64> {
    let m = md.measure();
    let z: f64 = g.iter().zip(m).map(|(v, w)| w * v.exp()).sum();
    (z <= 1.0 + 1e-15).then(|| inner(g, rho, m))
}

/// Shifts `g` so that `m(e^g) = 1`.
pub fn normalize_dual(md: &MarkovData, g: &[f64]) -> Vec<f64> {
    let z: f64 = g.iter().zip(md.measure()).map(|(v, w)| w * v.exp()).sum();
    let shift = z.ln();
    g.iter().map(|v| v - shift).collect()
}

/// `W(m, rho m)`.
pub fn transport_from_stationary(md: &MarkovData, d: &DistanceMatrix, rho: &[f64]) -> Result<f64> {
    check_density(rho, md.measure())?;
    let target: Vec<f64> = rho.iter().zip(md.measure()).map(|(r, w)| r * w).collect();
    wasserstein_value(md.measure(), &target, d)
}

/// `sum_{x,y} |rho(y) - rho(x)| m_xy`.
pub fn total_variation_energy(md: &MarkovData, rho: &[f64]) -> f64 {
    let n = md.n();
    let mxy = md.edge_measure();
    (0..n)
        .flat_map(|x| (0..n).map(move |y| (x, y)))
        .map(|(x, y)| (rho[y] - rho[x]).abs() * mxy[(x, y)])
        .sum()
}

/// `W(m, rho m) <= (Lambda / 2K) sum |rho(y) - rho(x)| m_xy`.
pub fn check_w1_l1_bound(
    md: &MarkovData,
    d: &DistanceMatrix,
    k: f64,
    lambda_big: f64,
    rho: &[f64],
) -> Result<InequalityCertificate> {
    require_positive("K", k)?;
    let w = transport_from_stationary(md, d, rho)?;
    let rhs = lambda_big / (2.0 * k) * total_variation_energy(md, rho);
    let mut cert = InequalityCertificate::new("w1_l1_bound", INEQUALITY)
        .with_hypothesis("K", k)
        .with_hypothesis("Lambda", lambda_big);
    cert.observe(w, rhs, || json!({ "W": w }));
    Ok(cert)
}

/// `W(m, rho m)^2 <= (Lambda^2 / 2K^2) I (1 - I / 8) <= (Lambda^2 / 2K^2) I`.
///
/// Both forms are checked; the refined one is always meaningful because
/// `I <= 8` for every density.
pub fn check_transport_information(
    md: &MarkovData,
    d: &DistanceMatrix,
    k: f64,
    lambda_big: f64,
    rho: &[f64],
) -> Result<InequalityCertificate> {
    require_positive("K", k)?;
    let w = transport_from_stationary(md, d, rho)?;
    let info = fisher_information(md, rho);
    let scale = lambda_big * lambda_big / (2.0 * k * k);
    let relaxed = scale * info;
    let refined = scale * info * (1.0 - info / 8.0);
    let mut cert = InequalityCertificate::new("transport_information", INEQUALITY)
        .with_hypothesis("K", k)
        .with_hypothesis("Lambda", lambda_big);
    let witness = || json!({ "W": w, "I": info, "refined_rhs": refined, "relaxed_rhs": relaxed });
    cert.observe(w * w, refined, witness);
    cert.observe(w * w, relaxed, witness);
    cert.observe(refined, relaxed, witness);
    Ok(cert)
}

/// `W(m, rho m)^2 <= (2 Lambda^2 / K) Ent(rho)`.
pub fn check_transport_entropy(
    md: &MarkovData,
    d: &DistanceMatrix,
    k: f64,
    lambda_big: f64,
    rho: &[f64],
) -> Result<InequalityCertificate> {
    require_positive("K", k)?;
    let w = transport_from_stationary(md, d, rho)?;
    let ent = relative_entropy(md, rho);
    let rhs = 2.0 * lambda_big * lambda_big / k * ent;
    let mut cert = InequalityCertificate::new("transport_entropy", INEQUALITY)
        .with_hypothesis("K", k)
        .with_hypothesis("Lambda", lambda_big);
    cert.observe(w * w, rhs, || json!({ "W": w, "entropy": ent }));
    Ok(cert)
}

/// `exp(-c r^2 / 2)`, the tail bound obtained from
/// `E(lambda) <= exp(lambda^2 / 2c)` by optimizing Markov's inequality.
pub fn chernoff_tail_from_laplace(c: f64, r: f64) -> Result<f64> {
    require_positive("c", c)?;
    if !(r >= 0.0) {
        return Err(Error::InvalidArgument(format!("r {r} must be non-negative")));
    }
    Ok((-c * r * r / 2.0).exp())
}

/// Sample-level check of the equivalence between
/// (1) `W(m, rho m)^2 <= (2/c) Ent(rho)` for all densities and
/// (2) `E(lambda) <= exp(lambda^2 / 2c)` for all `lambda`.
///
/// Only necessary conditions are testable: each statement is evaluated on
/// its own sample, and the implications are reported as consistent unless
/// one side holds on its sample while the other is violated.
#[derive(Debug, Clone, Serialize)]
pub struct BobkovGoetzeReport {
    pub c: f64,
    /// Statement (1) on the density sample.
    pub transport_entropy: InequalityCertificate,
    /// Statement (2) on the function sample.
    pub laplace: InequalityCertificate,
    /// `false` when (2) held on its sample but (1) failed on its sample.
    pub laplace_implies_transport: bool,
    /// `false` when (1) held on its sample but (2) failed on its sample.
    pub transport_implies_laplace: bool,
}

impl BobkovGoetzeReport {
    /// Certificate view: statement (1) with both implication flags noted.
    pub fn certificate(&self) -> InequalityCertificate {
        let mut c = self.transport_entropy.clone();
        c.name = "bobkov_goetze".into();
        c.merge(self.laplace.clone());
        c.note = Some(format!(
            "sample-level necessary conditions only; (2)=>(1) consistent: {}, (1)=>(2) consistent: {}",
            self.laplace_implies_transport, self.transport_implies_laplace
        ));
        c
    }
}

pub fn bobkov_goetze_forward(
    md: &MarkovData,
    d: &DistanceMatrix,
    c: f64,
    rhos: &[Vec<f64>],
    lambda_grid: &[f64],
    fs: &[Vec<f64>],
) -> Result<BobkovGoetzeReport> {
    require_positive("c", c)?;
    let mut transport = InequalityCertificate::new("bg_transport_entropy", INEQUALITY).with_hypothesis("c", c);
    let ws = rhos
        .par_iter()
        .map(|rho| transport_from_stationary(md, d, rho))
        .collect::<Result<Vec<f64>>>()?;
    for (i, (rho, w)) in rhos.iter().zip(ws).enumerate() {
        let ent = relative_entropy(md, rho);
        transport.observe(w * w, 2.0 / c * ent, || json!({ "density": i, "W": w, "entropy": ent }));
    }
    let mut laplace = InequalityCertificate::new("bg_laplace", INEQUALITY).with_hypothesis("c", c);
    for &lambda in lambda_grid {
        let rhs = (lambda * lambda / (2.0 * c)).exp();
        for (i, f) in fs.iter().enumerate() {
            laplace.observe(laplace_value(md.measure(), f, lambda), rhs, || {
                json!({ "sample": i, "lambda": lambda })
            });
        }
    }
    Ok(BobkovGoetzeReport {
        c,
        laplace_implies_transport: !laplace.pass || transport.pass,
        transport_implies_laplace: !transport.pass || laplace.pass,
        transport_entropy: transport,
        laplace,
    })
}

/// Given `W^2 <= I / c^2` on a density, checks `W^2 <= (sqrt 2 Lambda / c) Ent`.
///
/// Samples violating the hypothesis are counted and left out. The
/// implication is a theorem only when the hypothesis holds for every
/// density, so a per-sample failure is reported but is not by itself a
/// counterexample.
#[derive(Debug, Clone, Serialize)]
pub struct InfoToEntropyReport {
    pub certificate: InequalityCertificate,
    pub hypothesis_satisfied: usize,
    pub hypothesis_violated: usize,
}

pub fn check_info_to_entropy(
    md: &MarkovData,
    d: &DistanceMatrix,
    c: f64,
    lambda_big: f64,
    rhos: &[Vec<f64>],
) -> Result<InfoToEntropyReport> {
    require_positive("c", c)?;
    let mut cert = InequalityCertificate::new("information_to_entropy", INEQUALITY)
        .with_hypothesis("c", c)
        .with_hypothesis("Lambda", lambda_big);
    let ws = rhos
        .par_iter()
        .map(|rho| transport_from_stationary(md, d, rho))
        .collect::<Result<Vec<f64>>>()?;
    let (mut sat, mut viol) = (0, 0);
    let factor = 2f64.sqrt() * lambda_big / c;
    for (i, (rho, w)) in rhos.iter().zip(ws).enumerate() {
        let info = fisher_information(md, rho);
        if w * w > info / (c * c) + INEQUALITY {
            viol += 1;
            continue;
        }
        sat += 1;
        let ent = relative_entropy(md, rho);
        cert.observe(w * w, factor * ent, || json!({ "density": i, "W": w, "entropy": ent, "I": info }));
    }
    cert.note = Some(format!("{sat} samples satisfied the hypothesis, {viol} did not"));
    Ok(InfoToEntropyReport {
        certificate: cert,
        hypothesis_satisfied: sat,
        hypothesis_violated: viol,
    })
}
