//! `dricci`: curvature, transport and heat-flow checks for weighted digraphs.
//!
//! Exit codes: 0 when every certificate passes, 1 when any fails, 2 on
//! invalid input or a numerical error.

mod input;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use dricci_core::curvature::{CurvatureOptions, CurvatureReport, DEFAULT_EPS_GRID, PairScope, curvature_report};
use dricci_core::digraph::{DirectedGraph, load_graph_file};
use dricci_core::report::{Prepared, SCHEMA_VERSION, analyze_prepared, functional_certificates};
use dricci_core::sampling::DEFAULT_SEED;
use dricci_core::transport::{Mode, wasserstein_with};
use dricci_core::{AnalysisConfig, InequalityCertificate, MarkovData, Status, distances, tolerance};

use output::{num, short, to_csv, to_json, to_table};

#[derive(Parser)]
#[command(name = "dricci", version, about = "Ricci curvature of weighted directed graphs")]
struct Cli {
    /// Seed for every sampled function and density.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: curvature, heat-flow and functional certificates.
    Analyze {
        input: PathBuf,
        /// Check the inequalities at this K instead of the computed one.
        #[arg(long, allow_hyphen_values = true)]
        k_override: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        time_grid: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        eps_grid: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        limit_grid: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        lambda_grid: Option<Vec<f64>>,
        #[arg(long)]
        lipschitz_samples: Option<usize>,
        #[arg(long)]
        density_samples: Option<usize>,
        /// Only evaluate pairs joined by an arc (K becomes heuristic).
        #[arg(long)]
        edges_only: bool,
        /// Skip the epsilon-limit cross-check of the LP curvature.
        #[arg(long)]
        no_cross_check: bool,
        /// Skip the heat-flow limit per pair.
        #[arg(long)]
        no_heat_limits: bool,
        /// Slack for the inequality certificates.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Curvature matrix and its minimum K.
    Curvature {
        input: PathBuf,
        /// Add the epsilon-limit estimate and its agreement per pair.
        #[arg(long)]
        cross_check: bool,
        #[arg(long, conflicts_with = "pairs")]
        edges_only: bool,
        /// Pairs as "x,y;x,y".
        #[arg(long)]
        pairs: Option<String>,
        #[arg(long, value_delimiter = ',')]
        eps_grid: Option<Vec<f64>>,
    },
    /// Optimal transport cost W(nu0, nu1) with its dual certificate.
    Wasserstein {
        input: PathBuf,
        /// dirac:<v>, uniform, perron, or a file of n weights.
        nu0: String,
        nu1: String,
        /// Include the optimal coupling.
        #[arg(long)]
        plan: bool,
        /// Also solve the dual LP.
        #[arg(long)]
        verify: bool,
    },
    /// Heat semigroup: P_t f, a heat kernel row, or the whole matrix.
    Heat {
        input: PathBuf,
        #[arg(long)]
        time: f64,
        /// Function values, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "vertex")]
        f: Option<Vec<f64>>,
        /// Print the heat kernel row p_x^t.
        #[arg(long)]
        vertex: Option<usize>,
    },
    /// Stationary measure of the transition kernel.
    Perron { input: PathBuf },
    /// Concentration and transport-entropy certificates only.
    VerifyFunctional {
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        k_override: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        lambda_grid: Option<Vec<f64>>,
        #[arg(long)]
        lipschitz_samples: Option<usize>,
        #[arg(long)]
        density_samples: Option<usize>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
}

/// Rendered output plus whether every certificate held.
struct Outcome {
    text: String,
    pass: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(o) => {
            if let Err(e) = emit(cli.out.as_deref(), &o.text) {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
            if o.pass { ExitCode::SUCCESS } else { ExitCode::from(1) }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let fmt = cli.format;
    match &cli.command {
        Command::Analyze {
            input,
            k_override,
            time_grid,
            eps_grid,
            limit_grid,
            lambda_grid,
            lipschitz_samples,
            density_samples,
            edges_only,
            no_cross_check,
            no_heat_limits,
            tolerance,
        } => {
            let g = load(input)?;
            let mut cfg = AnalysisConfig { seed: cli.seed, k_override: *k_override, ..Default::default() };
            set(&mut cfg.time_grid, time_grid);
            set(&mut cfg.eps_grid, eps_grid);
            set(&mut cfg.limit_grid, limit_grid);
            set(&mut cfg.lambda_grid, lambda_grid);
            set(&mut cfg.lipschitz_samples, lipschitz_samples);
            set(&mut cfg.density_samples, density_samples);
            set(&mut cfg.tolerances.inequality, tolerance);
            if *edges_only {
                cfg.scope = PairScope::EdgesOnly;
            }
            cfg.cross_check = !no_cross_check;
            cfg.heat_limits = !no_heat_limits;
            let p = Prepared::new(&g)?;
            let r = analyze_prepared(&g, &p, &cfg)?;
            let text = match fmt {
                Format::Json => to_json(&r)?,
                Format::Csv => to_csv(&CERT_HEADER, &cert_rows(&r.certificates, num))?,
                Format::Table => {
                    let mut s = format!(
                        "n {}  arcs {}  Lambda {}  K* {}  K used {}  spectral gap {}\n\n",
                        r.graph.n,
                        r.graph.arcs,
                        r.lambda,
                        short(r.k_star),
                        short(r.k_used),
                        short(r.spectral_gap)
                    );
                    s.push_str(&to_table(&CERT_HEADER, &cert_rows(&r.certificates, short)));
                    s
                }
            };
            Ok(Outcome { text, pass: r.all_pass })
        }
        Command::Curvature { input, cross_check, edges_only, pairs, eps_grid } => {
            let g = load(input)?;
            let (md, d) = (MarkovData::new(&g)?, distances(&g)?);
            let scope = match (pairs, edges_only) {
                (Some(p), _) => PairScope::Selected(input::parse_pairs(p)?),
                (None, true) => PairScope::EdgesOnly,
                (None, false) => PairScope::AllPairs,
            };
            let opts = CurvatureOptions {
                scope,
                cross_check: *cross_check,
                eps_grid: eps_grid.clone().unwrap_or_else(|| DEFAULT_EPS_GRID.to_vec()),
                parallel: true,
            };
            let r = curvature_report(&md, &d, &opts)?;
            Ok(Outcome { text: render_curvature(&r, fmt, *cross_check)?, pass: true })
        }
        Command::Wasserstein { input, nu0, nu1, plan, verify } => {
            let g = load(input)?;
            let (md, d) = (MarkovData::new(&g)?, distances(&g)?);
            let a = input::parse_measure(nu0, &md)?;
            let b = input::parse_measure(nu1, &md)?;
            let mode = if *verify { Mode::Verify } else { Mode::Fast };
            let t = wasserstein_with(&a, &b, &d, mode)?;
            let text = match fmt {
                Format::Json => {
                    let mut doc = json!({
                        "schema_version": SCHEMA_VERSION,
                        "value": t.value,
                        "dual_value": t.dual_value,
                        "gap": t.gap,
                        "marginal_residual": t.marginal_residual,
                        "dual_f": t.dual_f,
                    });
                    if *plan {
                        doc["plan"] = json!(t.pi);
                    }
                    to_json(&doc)?
                }
                Format::Csv if *plan => to_csv(&[], &matrix_rows(&t.pi, num))?,
                Format::Csv => to_csv(
                    &["value", "dual_value", "gap", "marginal_residual"],
                    &[vec![num(t.value), num(t.dual_value), num(t.gap), num(t.marginal_residual)]],
                )?,
                Format::Table => {
                    let mut s = format!("W {}  dual {}  gap {}\n", short(t.value), short(t.dual_value), short(t.gap));
                    if *plan {
                        s.push('\n');
                        s.push_str(&matrix_table(&t.pi));
                    }
                    s
                }
            };
            Ok(Outcome { text, pass: true })
        }
        Command::Heat { input, time, f, vertex } => {
            let g = load(input)?;
            let p = Prepared::new(&g)?;
            let (kind, rows) = match (f, vertex) {
                (Some(f), _) => ("apply", vec![p.heat.apply(*time, f)?]),
                (None, Some(x)) => ("kernel", vec![p.heat.heat_kernel(*x, *time)?]),
                (None, None) => ("matrix", p.heat.heat_kernels(*time)?),
            };
            let text = match fmt {
                Format::Json => {
                    let values = if kind == "matrix" { json!(rows) } else { json!(rows[0]) };
                    to_json(&json!({
                        "schema_version": SCHEMA_VERSION,
                        "t": time,
                        "kind": kind,
                        "vertex": vertex,
                        "values": values,
                    }))?
                }
                Format::Csv => to_csv(&[], &matrix_rows(&rows, num))?,
                Format::Table => matrix_table(&rows),
            };
            Ok(Outcome { text, pass: true })
        }
        Command::Perron { input } => {
            let g = load(input)?;
            let md = MarkovData::new(&g)?;
            let m = md.measure();
            let residual = dricci_core::chain::balance_residual(md.transition(), m);
            let rows: Vec<Vec<String>> = (0..m.len()).map(|x| vec![g.label(x), num(m[x])]).collect();
            let text = match fmt {
                Format::Json => to_json(&json!({
                    "schema_version": SCHEMA_VERSION,
                    "perron": m,
                    "balance_residual": residual,
                }))?,
                Format::Csv => to_csv(&["vertex", "m"], &rows)?,
                Format::Table => {
                    let rows: Vec<Vec<String>> = (0..m.len()).map(|x| vec![g.label(x), short(m[x])]).collect();
                    to_table(&["vertex", "m"], &rows)
                }
            };
            Ok(Outcome { text, pass: true })
        }
        Command::VerifyFunctional { input, k_override, lambda_grid, lipschitz_samples, density_samples, tolerance } => {
            let g = load(input)?;
            let (md, d) = (MarkovData::new(&g)?, distances(&g)?);
            let mut cfg = AnalysisConfig { seed: cli.seed, k_override: *k_override, ..Default::default() };
            set(&mut cfg.lambda_grid, lambda_grid);
            set(&mut cfg.lipschitz_samples, lipschitz_samples);
            set(&mut cfg.density_samples, density_samples);
            set(&mut cfg.tolerances.inequality, tolerance);
            let opts = CurvatureOptions { cross_check: false, ..Default::default() };
            let k_star = curvature_report(&md, &d, &opts)?.k;
            let k = k_override.unwrap_or(k_star);
            let mut certs = functional_certificates(&md, &d, k, &cfg)?;
            for c in &mut certs {
                if c.tolerance == tolerance::INEQUALITY && c.tolerance != cfg.tolerances.inequality {
                    c.retolerate(cfg.tolerances.inequality);
                }
            }
            let pass = certs.iter().all(|c| c.status != Status::Fail);
            let text = match fmt {
                Format::Json => to_json(&json!({
                    "schema_version": SCHEMA_VERSION,
                    "lambda": d.lambda(),
                    "k_star": k_star,
                    "k_used": k,
                    "seed": cli.seed,
                    "certificates": certs,
                    "all_pass": pass,
                }))?,
                Format::Csv => to_csv(&CERT_HEADER, &cert_rows(&certs, num))?,
                Format::Table => {
                    let mut s = format!("Lambda {}  K* {}  K used {}\n\n", d.lambda(), short(k_star), short(k));
                    s.push_str(&to_table(&CERT_HEADER, &cert_rows(&certs, short)));
                    s
                }
            };
            Ok(Outcome { text, pass })
        }
    }
}

fn load(path: &Path) -> anyhow::Result<DirectedGraph> {
    let g = load_graph_file(path)?;
    g.require_strongly_connected()?;
    Ok(g)
}

fn set<T: Clone>(slot: &mut T, value: &Option<T>) {
    if let Some(v) = value {
        *slot = v.clone();
    }
}

const CERT_HEADER: [&str; 8] = ["name", "status", "lhs", "rhs", "margin", "tolerance", "checked", "violations"];

fn cert_rows(certs: &[InequalityCertificate], fmt: fn(f64) -> String) -> Vec<Vec<String>> {
    certs
        .iter()
        .map(|c| {
            let status = match c.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::Skipped => "skipped",
            };
            vec![
                c.name.clone(),
                status.into(),
                fmt(c.lhs),
                fmt(c.rhs),
                fmt(c.margin),
                fmt(c.tolerance),
                c.checked.to_string(),
                c.violations.to_string(),
            ]
        })
        .collect()
}

fn matrix_rows(m: &[Vec<f64>], fmt: fn(f64) -> String) -> Vec<Vec<String>> {
    m.iter().map(|r| r.iter().map(|&v| fmt(v)).collect()).collect()
}

fn matrix_table(m: &[Vec<f64>]) -> String {
    let cols = m.first().map_or(0, |r| r.len());
    let header: Vec<String> = (0..cols).map(|j| j.to_string()).collect();
    let header: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    to_table(&header, &matrix_rows(m, short))
}

fn render_curvature(r: &CurvatureReport, fmt: Format, cross_check: bool) -> anyhow::Result<String> {
    let pair_rows = |f: fn(f64) -> String| -> Vec<Vec<String>> {
        r.pairs
            .iter()
            .map(|p| {
                let mut row = vec![p.x.to_string(), p.y.to_string(), f(p.kappa)];
                if cross_check {
                    row.push(f(p.limit.as_ref().map_or(f64::NAN, |l| l.value)));
                    row.push(f(p.agreement.unwrap_or(f64::NAN)));
                }
                row
            })
            .collect()
    };
    let header: &[&str] = if cross_check { &["x", "y", "kappa", "limit", "agreement"] } else { &["x", "y", "kappa"] };
    Ok(match fmt {
        Format::Json => to_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "n": r.n,
            "k": r.k,
            "argmin": r.argmin,
            "scope": r.scope,
            "heuristic": r.heuristic,
            "kappa": r.kappa,
            "pairs": r.pairs,
            "max_disagreement": r.max_disagreement,
        }))?,
        Format::Csv if cross_check => to_csv(header, &pair_rows(num))?,
        Format::Csv => to_csv(&[], &matrix_rows(&r.kappa, num))?,
        Format::Table => {
            let mut s = format!("K {}  argmin {:?}{}\n\n", short(r.k), r.argmin, if r.heuristic { "  (heuristic)" } else { "" });
            s.push_str(&to_table(header, &pair_rows(short)));
            s
        }
    })
}
