//! JSON action configuration, plus the point-list formats accepted by the
//! command line.
//!
//! ```json
//! {
//!   "schema": "orbitspace-tangent/v1",
//!   "dimension": 3,
//!   "group": { "kind": "builtin", "name": "SO3" },
//!   "tolerance": { "rank_eps": 1e-9, "match_eps": 1e-8 },
//!   "haar": { "scheme": "monte_carlo", "samples": 10000, "seed": 0 }
//! }
//! ```
//!
//! Finite groups are given as `{"kind": "finite", "generators": [...]}` with
//! each generator a list of rows.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::group::{BuiltinGroup, FiniteGroup, GroupKind, GroupSpec, HaarSampler, Scheme};
use crate::tangent::AnalysisSettings;

pub const SCHEMA: &str = "orbitspace-tangent/v1";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema: Option<String>,
    dimension: usize,
    group: RawGroup,
    tolerance: Option<RawTolerance>,
    haar: Option<RawHaar>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawGroup {
    Finite { generators: Vec<Vec<Vec<f64>>> },
    Builtin { name: String },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerance {
    rank_eps: Option<f64>,
    match_eps: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHaar {
    scheme: Option<String>,
    samples: Option<usize>,
    nodes: Option<usize>,
    seed: Option<u64>,
}

/// A validated configuration with defaults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionConfig {
    pub dimension: usize,
    pub spec: GroupSpec,
    pub settings: AnalysisSettings,
}

impl ActionConfig {
    /// Sampling scheme used for the whole group, `None` for finite groups.
    pub fn scheme(&self) -> Option<Scheme> {
        HaarSampler::for_spec(&self.spec, &self.settings.haar).map(|s| s.scheme)
    }
}

fn matrix(n: usize, index: usize, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config(format!(
            "group.generators[{index}] must be a {n}x{n} matrix"
        )));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<ActionConfig> {
    let raw: RawConfig = serde_json::from_str(text)
        .map_err(|e| Error::Config(format!("line {} column {}: {e}", e.line(), e.column())))?;
    if let Some(schema) = &raw.schema {
        if schema != SCHEMA {
            return Err(Error::Config(format!(
                "schema: expected \"{SCHEMA}\", found \"{schema}\""
            )));
        }
    }
    let n = raw.dimension;
    if n == 0 {
        return Err(Error::Config("dimension: must be positive".into()));
    }

    let mut settings = AnalysisSettings::default();
    if let Some(t) = raw.tolerance {
        if let Some(r) = t.rank_eps {
            settings.tolerance.rank_eps = r;
        }
        if let Some(m) = t.match_eps {
            settings.tolerance.match_eps = m;
        }
        settings
            .tolerance
            .validate()
            .map_err(|e| Error::Config(format!("tolerance: {e}")))?;
    }

    let spec = match raw.group {
        RawGroup::Finite { generators } => {
            let gens = generators
                .iter()
                .enumerate()
                .map(|(i, g)| matrix(n, i, g))
                .collect::<Result<Vec<_>>>()?;
            let spec = GroupSpec::finite(n, gens.clone())
                .map_err(|e| Error::Config(format!("group: {e}")))?;
            FiniteGroup::close(n, &gens, &settings.tolerance, settings.closure_cap)
                .map_err(|e| Error::Config(format!("group: {e}")))?;
            spec
        }
        RawGroup::Builtin { name } => {
            let group = BuiltinGroup::parse(&name)
                .map_err(|e| Error::Config(format!("group.name: {e}")))?;
            if group.defining_dim() != n {
                return Err(Error::Config(format!(
                    "dimension: {group} acts on dimension {}, config says {n}",
                    group.defining_dim()
                )));
            }
            GroupSpec::builtin(group)
        }
    };

    if let Some(h) = raw.haar {
        if let Some(seed) = h.seed {
            settings.haar.seed = seed;
        }
        if let Some(samples) = h.samples {
            settings.haar.monte_carlo_samples = samples;
        }
        if let Some(nodes) = h.nodes {
            settings.haar.quadrature_nodes = nodes;
        }
        if settings.haar.monte_carlo_samples == 0 || settings.haar.quadrature_nodes == 0 {
            return Err(Error::Config(
                "haar: samples and nodes must be positive".into(),
            ));
        }
        if let Some(scheme) = h.scheme {
            let expected = match spec.kind() {
                GroupKind::Builtin {
                    group: BuiltinGroup::SO3 | BuiltinGroup::O3,
                    ..
                } => "monte_carlo",
                GroupKind::Builtin { .. } => "quadrature",
                GroupKind::Finite { .. } => "enumeration",
            };
            if scheme != expected {
                return Err(Error::Config(format!(
                    "haar.scheme: {} uses \"{expected}\", found \"{scheme}\"",
                    spec.label()
                )));
            }
        }
    }

    Ok(ActionConfig {
        dimension: n,
        spec,
        settings,
    })
}

/// Reads and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ActionConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Parses `"a,b,c"` into a vector of length `n`.
pub fn parse_vector(text: &str, n: usize) -> Result<DVector<f64>> {
    let values = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("not a number: {:?}", s.trim())))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config(format!("non-finite entry in {text:?}")));
    }
    Ok(DVector::from_vec(values))
}

/// One comma-separated vector per line; blank lines and `#` comments are
/// skipped.
pub fn parse_points(text: &str, n: usize) -> Result<Vec<DVector<f64>>> {
    text.lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let line = line.split('#').next().unwrap_or("").trim();
            (!line.is_empty()).then_some((i, line))
        })
        .map(|(i, line)| {
            parse_vector(line, n).map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))
        })
        .collect()
}

/// Uniform grid over `[−r, r]ⁿ` from a spec like `"r=1,stride=0.5"`. Each
/// coordinate takes the values `−r + i·stride` for `i = 0..=round(2r/stride)`;
/// points are listed with the last coordinate varying fastest.
pub fn parse_grid(text: &str, n: usize) -> Result<Vec<DVector<f64>>> {
    let mut r = None;
    let mut stride = None;
    for part in text.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("grid: expected key=value, found {part:?}")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("grid: bad number {value:?}")))?;
        match key.trim() {
            "r" => r = Some(value),
            "stride" => stride = Some(value),
            other => return Err(Error::Config(format!("grid: unknown key {other:?}"))),
        }
    }
    let (r, stride) = match (r, stride) {
        (Some(r), Some(s)) if r >= 0.0 && s > 0.0 && r.is_finite() => (r, s),
        _ => return Err(Error::Config("grid: need r >= 0 and stride > 0".into())),
    };
    let steps = (2.0 * r / stride).round() as usize + 1;
    let total = steps
        .checked_pow(n as u32)
        .filter(|&t| t <= 1 << 20)
        .ok_or_else(|| Error::Config("grid: too many points".into()))?;
    let values: Vec<f64> = (0..steps).map(|i| -r + i as f64 * stride).collect();
    Ok((0..total)
        .map(|mut k| {
            let mut p = DVector::zeros(n);
            for j in (0..n).rev() {
                p[j] = values[k % steps];
                k /= steps;
            }
            p
        })
        .collect())
}
