//! Command-line argument parsing that goes beyond clap: measures and pair
//! lists.

use std::path::Path;

use anyhow::{Context, bail};
use dricci_core::chain::MarkovData;
use dricci_core::transport::dirac;

/// Resolves a measure spec: `dirac:<v>`, `uniform`, `perron`, or a path to
/// a file of `n` whitespace-separated weights.
pub fn parse_measure(spec: &str, md: &MarkovData) -> anyhow::Result<Vec<f64>> {
    let n = md.n();
    if let Some(v) = spec.strip_prefix("dirac:") {
        let v: usize = v.trim().parse().with_context(|| format!("invalid vertex in {spec:?}"))?;
        if v >= n {
            bail!(dricci_core::Error::VertexOutOfRange { vertex: v, n });
        }
        return Ok(dirac(n, v));
    }
    match spec {
        "uniform" => Ok(vec![1.0 / n as f64; n]),
        "perron" => Ok(md.measure().to_vec()),
        path => read_weights(Path::new(path), n),
    }
}

fn read_weights(path: &Path, n: usize) -> anyhow::Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read measure {}", path.display()))?;
    let w = text
        .split_whitespace()
        .map(|s| s.parse::<f64>().with_context(|| format!("invalid weight {s:?} in {}", path.display())))
        .collect::<anyhow::Result<Vec<f64>>>()?;
    if w.len() != n {
        bail!(dricci_core::Error::DimensionMismatch { expected: n, got: w.len() });
    }
    Ok(w)
}

/// Parses `"x,y;x,y;..."`.
pub fn parse_pairs(s: &str) -> anyhow::Result<Vec<(usize, usize)>> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (x, y) = p.split_once(',').with_context(|| format!("pair {p:?} is not \"x,y\""))?;
            Ok((x.trim().parse()?, y.trim().parse()?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs() {
        assert_eq!(parse_pairs("0,1").unwrap(), vec![(0, 1)]);
        assert_eq!(parse_pairs("0,1; 2,0;").unwrap(), vec![(0, 1), (2, 0)]);
        assert!(parse_pairs("0-1").is_err());
    }

    #[test]
    fn measures() {
        let md = MarkovData::new(&dricci_core::fixtures::triangle()).unwrap();
        assert_eq!(parse_measure("dirac:2", &md).unwrap(), vec![0.0, 0.0, 1.0]);
        assert!(parse_measure("dirac:3", &md).is_err());
        assert_eq!(parse_measure("uniform", &md).unwrap().len(), 3);
        let p = parse_measure("perron", &md).unwrap();
        assert!((p[2] - 0.2).abs() < 1e-12);
        assert!(parse_measure("/nonexistent/measure", &md).is_err());
    }
}
