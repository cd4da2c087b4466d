//! End-to-end verification: distances, kernels, curvature, then every
//! heat-flow and functional inequality at the resulting bound `K`.

use serde::Serialize;
use serde_json::json;

use crate::certificate::{InequalityCertificate, Status};
use crate::chain::{MarkovData, balance_residual, check_integration_by_parts};
use crate::concentration::{
    self, DEFAULT_LAMBDA_GRID, bobkov_goetze_forward, check_info_to_entropy, check_laplace_bound,
    check_lemma_gamma_exp, check_lemma_gamma_exp2, check_transport_entropy,
    check_transport_information, check_w1_l1_bound, concentration_tail,
};
use crate::curvature::{CurvatureOptions, CurvatureReport, DEFAULT_EPS_GRID, PairScope, curvature_report};
use crate::digraph::{DirectedGraph, DistanceMatrix, distances};
use crate::error::Result;
use crate::heat::{
    DEFAULT_LIMIT_GRID, DEFAULT_TIME_GRID, HeatLimit, HeatOperator, mw_limit, verify_gradient_estimate,
    verify_transport_contraction,
};
use crate::sampling::{self, DEFAULT_SEED, density_sample, lipschitz_sample};
use crate::tolerance::Tolerances;

pub const SCHEMA_VERSION: u32 = 1;
/// Allowed gap between the heat-flow limit and the LP curvature.
pub const HEAT_LIMIT_TOLERANCE: f64 = 1e-3;

// Sample streams, one per consumer.
const STREAM_GRADIENT: u64 = 1;
const STREAM_FUNCTIONAL: u64 = 2;
const STREAM_DENSITY: u64 = 3;
const STREAM_LEMMA: u64 = 4;
const STREAM_IBP: u64 = 5;

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisConfig {
    pub seed: u64,
    pub eps_grid: Vec<f64>,
    pub time_grid: Vec<f64>,
    pub limit_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub r_grid: Vec<f64>,
    pub lipschitz_samples: usize,
    pub density_samples: usize,
    /// Replaces the computed curvature bound in every downstream check.
    pub k_override: Option<f64>,
    pub scope: PairScope,
    pub cross_check: bool,
    pub heat_limits: bool,
    pub parallel: bool,
    pub tolerances: Tolerances,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            seed: DEFAULT_SEED,
            eps_grid: DEFAULT_EPS_GRID.to_vec(),
            time_grid: DEFAULT_TIME_GRID.to_vec(),
            limit_grid: DEFAULT_LIMIT_GRID.to_vec(),
            lambda_grid: DEFAULT_LAMBDA_GRID.to_vec(),
            r_grid: concentration::default_r_grid(),
            lipschitz_samples: 200,
            density_samples: 100,
            k_override: None,
            scope: PairScope::AllPairs,
            cross_check: true,
            heat_limits: true,
            parallel: true,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphSummary {
    pub n: usize,
    pub arcs: usize,
    pub strongly_connected: bool,
    pub undirected: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl GraphSummary {
    pub fn of(g: &DirectedGraph) -> Self {
        GraphSummary {
            n: g.n(),
            arcs: g.arc_count(),
            strongly_connected: g.is_strongly_connected(),
            undirected: g.is_undirected(),
            labels: g.labels().map(|l| l.to_vec()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub graph: GraphSummary,
    pub perron: Vec<f64>,
    pub lambda: usize,
    pub vertex_diameters: Vec<usize>,
    pub spectral_gap: f64,
    pub curvature: CurvatureReport,
    /// Minimum curvature over the evaluated pairs.
    pub k_star: f64,
    /// Bound used by the checks: `k_override` if given, else `k_star`.
    pub k_used: f64,
    pub heat_limits: Vec<HeatLimit>,
    pub certificates: Vec<InequalityCertificate>,
    pub seed: u64,
    pub config: AnalysisConfig,
    pub all_pass: bool,
}

impl VerificationReport {
    pub fn certificate(&self, name: &str) -> Option<&InequalityCertificate> {
        self.certificates.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&InequalityCertificate> {
        self.certificates.iter().filter(|c| c.status == Status::Fail).collect()
    }
}

/// Everything derived from the graph before any inequality is checked.
pub struct Prepared {
    pub md: MarkovData,
    pub d: DistanceMatrix,
    pub heat: HeatOperator,
}

impl Prepared {
    pub fn new(g: &DirectedGraph) -> Result<Self> {
        let d = distances(g)?;
        let md = MarkovData::new(g)?;
        let heat = HeatOperator::new(&md)?;
        Ok(Prepared { md, d, heat })
    }
}

fn operator_certificates(p: &Prepared, cfg: &AnalysisConfig) -> Result<Vec<InequalityCertificate>> {
    let tol = &cfg.tolerances;
    let n = p.md.n();
    let mut balance = InequalityCertificate::new("perron_balance", 0.0);
    balance.observe(balance_residual(p.md.transition(), p.md.measure()), tol.perron_balance, || json!(null));
    let mut ibp = InequalityCertificate::new("integration_by_parts", 0.0);
    let mut semigroup = InequalityCertificate::new("semigroup_law", 0.0);
    let fs = lipschitz_sample(&p.d, 8, cfg.seed, STREAM_IBP);
    for (i, f0) in fs.iter().enumerate() {
        let f1 = &fs[(i + 1) % fs.len()];
        let omega: Vec<usize> = (0..n).filter(|x| (x + i) % 2 == 0).collect();
        let r = check_integration_by_parts(&p.md, &omega, f0, f1)?;
        ibp.observe(r.max_residual, tol.adjointness, || json!({ "sample": i }));
        let (s, t) = (0.3 + 0.1 * i as f64, 0.7);
        let lhs = p.heat.apply(s + t, f0)?;
        let rhs = p.heat.apply(s, &p.heat.apply(t, f0)?)?;
        let err = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        semigroup.observe(err, tol.semigroup, || json!({ "sample": i, "s": s, "t": t }));
    }
    Ok(vec![balance, ibp, semigroup])
}

/// Every functional inequality at curvature bound `k`. Without `k > 0`
/// the whole suite is skipped.
pub fn functional_certificates(
    md: &MarkovData,
    d: &DistanceMatrix,
    k: f64,
    cfg: &AnalysisConfig,
) -> Result<Vec<InequalityCertificate>> {
    let lambda_big = d.lambda() as f64;
    let fs: Vec<Vec<f64>> = lipschitz_sample(d, cfg.lipschitz_samples, cfg.seed, STREAM_FUNCTIONAL);
    let rhos = density_sample(md.measure(), cfg.density_samples, cfg.seed, STREAM_DENSITY);
    let mut rng = sampling::stream(cfg.seed, STREAM_LEMMA);
    let lemma_fs: Vec<Vec<f64>> = (0..cfg.lipschitz_samples)
        .map(|_| {
            let f = sampling::random_lipschitz(d, &mut rng);
            f.iter().map(|v| 2.0 * v).collect()
        })
        .collect();

    let mut out = Vec::new();

    let mut g1 = InequalityCertificate::new("gamma_exp", cfg.tolerances.lemma);
    let mut g2 = InequalityCertificate::new("gamma_exp_squared", cfg.tolerances.lemma);
    for f in &lemma_fs {
        for &lambda in &cfg.lambda_grid {
            g1.merge(check_lemma_gamma_exp(md, f, lambda)?);
        }
        g2.merge(check_lemma_gamma_exp2(md, f));
    }
    out.push(g1);
    out.push(g2);

    let names = [
        "laplace_bound",
        "concentration_tail",
        "w1_l1_bound",
        "transport_information",
        "transport_entropy",
        "bobkov_goetze",
        "information_to_entropy",
    ];
    if !(k > 0.0) {
        for name in names {
            out.push(InequalityCertificate::skipped(name, format!("requires K > 0, got {k}")));
        }
        return Ok(out);
    }

    out.push(check_laplace_bound(md, d, k, lambda_big, &cfg.lambda_grid, &fs)?);

    let mut tail = InequalityCertificate::new("concentration_tail", cfg.tolerances.inequality)
        .with_hypothesis("K", k)
        .with_hypothesis("Lambda", lambda_big);
    for f in &fs {
        tail.merge(concentration_tail(md, d, k, lambda_big, f, &cfg.r_grid)?);
    }
    out.push(tail);

    let mut w1 = InequalityCertificate::new("w1_l1_bound", cfg.tolerances.inequality);
    let mut ti = InequalityCertificate::new("transport_information", cfg.tolerances.inequality);
    let mut te = InequalityCertificate::new("transport_entropy", cfg.tolerances.inequality);
    for (i, rho) in rhos.iter().enumerate() {
        let tag = |mut c: InequalityCertificate| {
            c.witness = json!({ "density": i, "detail": c.witness });
            c
        };
        w1.merge(tag(check_w1_l1_bound(md, d, k, lambda_big, rho)?));
        ti.merge(tag(check_transport_information(md, d, k, lambda_big, rho)?));
        te.merge(tag(check_transport_entropy(md, d, k, lambda_big, rho)?));
    }
    for c in [&mut w1, &mut ti, &mut te] {
        c.hypotheses.insert("K".into(), k);
        c.hypotheses.insert("Lambda".into(), lambda_big);
    }
    out.extend([w1, ti, te]);

    let c_bg = 2.0 * k / (lambda_big * lambda_big);
    out.push(bobkov_goetze_forward(md, d, c_bg, &rhos, &cfg.lambda_grid, &fs)?.certificate());

    let c_info = 2f64.sqrt() * k / lambda_big;
    out.push(check_info_to_entropy(md, d, c_info, lambda_big, &rhos)?.certificate);
    Ok(out)
}

fn heat_limit_certificate(limits: &[HeatLimit], curvature: &CurvatureReport) -> InequalityCertificate {
    let mut c = InequalityCertificate::new("heat_flow_limit", 0.0);
    for l in limits {
        let kappa = curvature.get(l.x, l.y);
        c.observe((l.estimate - kappa).abs(), HEAT_LIMIT_TOLERANCE, || {
            json!({ "pair": [l.x, l.y], "estimate": l.estimate, "kappa": kappa })
        });
    }
    c
}

fn curvature_certificate(curvature: &CurvatureReport, eps_tol: f64) -> Option<InequalityCertificate> {
    let mut c = InequalityCertificate::new("curvature_cross_check", 0.0);
    for p in &curvature.pairs {
        let a = p.agreement?;
        c.observe(a, eps_tol, || json!({ "pair": [p.x, p.y] }));
    }
    Some(c)
}

pub fn analyze(g: &DirectedGraph, cfg: &AnalysisConfig) -> Result<VerificationReport> {
    let p = Prepared::new(g)?;
    analyze_prepared(g, &p, cfg)
}

pub fn analyze_prepared(g: &DirectedGraph, p: &Prepared, cfg: &AnalysisConfig) -> Result<VerificationReport> {
    let opts = CurvatureOptions {
        scope: cfg.scope.clone(),
        cross_check: cfg.cross_check,
        eps_grid: cfg.eps_grid.clone(),
        parallel: cfg.parallel,
    };
    let curvature = curvature_report(&p.md, &p.d, &opts)?;
    let k_star = curvature.k;
    let k = cfg.k_override.unwrap_or(k_star);

    let mut certificates = operator_certificates(p, cfg)?;
    if let Some(c) = curvature_certificate(&curvature, 1e-4) {
        certificates.push(c);
    }

    let fs = lipschitz_sample(&p.d, cfg.lipschitz_samples, cfg.seed, STREAM_GRADIENT);
    certificates.push(verify_gradient_estimate(&p.heat, &p.d, k, &fs, &cfg.time_grid)?);
    certificates.push(verify_transport_contraction(&p.heat, &p.d, k, &cfg.time_grid)?);

    let heat_limits = if cfg.heat_limits {
        let limits = curvature
            .pairs
            .iter()
            .map(|pc| mw_limit(&p.heat, &p.d, pc.x, pc.y, &cfg.limit_grid))
            .collect::<Result<Vec<_>>>()?;
        certificates.push(heat_limit_certificate(&limits, &curvature));
        limits
    } else {
        Vec::new()
    };

    certificates.extend(functional_certificates(&p.md, &p.d, k, cfg)?);
    let inequality_tol = cfg.tolerances.inequality;
    for c in &mut certificates {
        if c.tolerance == crate::tolerance::INEQUALITY && inequality_tol != c.tolerance {
            c.retolerate(inequality_tol);
        }
    }
    let all_pass = certificates.iter().all(|c| c.status != Status::Fail);
    Ok(VerificationReport {
        schema_version: SCHEMA_VERSION,
        graph: GraphSummary::of(g),
        perron: p.md.measure().to_vec(),
        lambda: p.d.lambda(),
        vertex_diameters: p.d.vertex_diameters().to_vec(),
        spectral_gap: p.heat.spectral_gap(),
        curvature,
        k_star,
        k_used: k,
        heat_limits,
        certificates,
        seed: cfg.seed,
        config: cfg.clone(),
        all_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cycle_passes_everything() {
        let r = analyze(&fixtures::cycle3(), &AnalysisConfig::default()).unwrap();
        assert_abs_diff_eq!(r.k_star, 1.5, epsilon = 1e-12);
        assert_eq!(r.lambda, 2);
        assert!(r.all_pass, "{:#?}", r.failures());
        assert!(r.certificates.iter().all(|c| c.status == Status::Pass));
    }

    #[test]
    fn overstated_bound_fails() {
        let cfg = AnalysisConfig {
            k_override: Some(1.6),
            ..Default::default()
        };
        let r = analyze(&fixtures::cycle3(), &cfg).unwrap();
        assert!(!r.all_pass);
        assert_eq!(r.certificate("gradient_estimate").unwrap().status, Status::Fail);
        assert_eq!(r.certificate("transport_contraction").unwrap().status, Status::Fail);
    }

    #[test]
    fn non_positive_bound_skips_functional_suite() {
        let cfg = AnalysisConfig {
            k_override: Some(-0.5),
            ..Default::default()
        };
        let r = analyze(&fixtures::triangle(), &cfg).unwrap();
        assert!(r.certificate("transport_entropy").unwrap().is_skipped());
        assert!(r.all_pass);
    }

    #[test]
    fn analysis_is_deterministic() {
        let cfg = AnalysisConfig::default();
        let a = serde_json::to_string(&analyze(&fixtures::triangle(), &cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&analyze(&fixtures::triangle(), &cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
