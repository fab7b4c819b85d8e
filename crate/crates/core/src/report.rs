//! Deterministic JSON reports.
//!
//! Keys are sorted, floats are rounded to 12 significant digits and negative
//! zero is printed as zero, so identical inputs give byte-identical output.
//! Every report carries the schema tag, the resolved tolerances and the
//! sampling settings.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::averaging::AverageOperator;
use crate::config::{ActionConfig, SCHEMA};
use crate::error::{Error, Result};
use crate::group::StabilizerModel;
use crate::numerics::Subspace;
use crate::strata::StratificationReport;
use crate::tangent::{OracleResult, PointAnalysis, RelationCertificate};

/// Rounds to 12 significant digits; maps `-0` to `0`.
pub fn round_float(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    let r: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn canonical(value: Value) -> Value {
    match value {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => {
            let x = round_float(n.as_f64().unwrap_or(f64::NAN));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonical).collect()),
        Value::Object(map) => {
            // serde_json's default map keeps keys sorted.
            Value::Object(map.into_iter().map(|(k, v)| (k, canonical(v))).collect())
        }
        other => other,
    }
}

/// Pretty-printed canonical JSON with a trailing newline.
pub fn to_canonical_string<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Config(e.to_string()))?;
    let mut out =
        serde_json::to_string_pretty(&canonical(v)).map_err(|e| Error::Config(e.to_string()))?;
    out.push('\n');
    Ok(out)
}

pub fn vector(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn basis_vectors(s: &Subspace) -> Vec<Vec<f64>> {
    s.basis_vectors().iter().map(vector).collect()
}

fn header(command: &str, config: &ActionConfig) -> Map<String, Value> {
    let s = &config.settings;
    let scheme = match config.scheme() {
        Some(scheme) => serde_json::to_value(scheme).expect("scheme serializes"),
        None => json!({ "scheme": "enumeration" }),
    };
    let mut map = Map::new();
    map.insert("schema".into(), json!(SCHEMA));
    map.insert("command".into(), json!(command));
    map.insert("group".into(), json!(config.spec.label()));
    map.insert("dimension".into(), json!(config.dimension));
    map.insert("closure_cap".into(), json!(s.closure_cap));
    map.insert("tolerance".into(), json!(s.tolerance));
    map.insert(
        "haar".into(),
        json!({
            "seed": s.haar.seed,
            "monte_carlo_samples": s.haar.monte_carlo_samples,
            "quadrature_nodes": s.haar.quadrature_nodes,
            "group_scheme": scheme,
        }),
    );
    map
}

fn stabilizer_summary(analysis: &PointAnalysis) -> Value {
    let scheme = analysis.context.isotropy.scheme.to_string();
    match &analysis.context.stabilizer {
        StabilizerModel::Finite(g) => json!({
            "kind": "finite",
            "order": g.order(),
            "scheme": scheme,
        }),
        StabilizerModel::Closed(c) => json!({
            "kind": "closed",
            "class": c.class.to_string(),
            "dimension": c.lie_algebra.dim(),
            "components": c.components(),
            "scheme": scheme,
        }),
    }
}

/// Report for `analyze`.
pub fn analysis_report(
    config: &ActionConfig,
    analysis: &PointAnalysis,
    oracle: Option<&OracleResult>,
    certificate: Option<&Value>,
) -> Value {
    let ctx = &analysis.context;
    let mut map = header("analyze", config);
    map.insert("point".into(), json!(vector(&ctx.point)));
    map.insert("stabilizer".into(), stabilizer_summary(analysis));
    map.insert("orbit_tangent_dim".into(), json!(ctx.orbit_tangent.dim()));
    map.insert("slice_dim".into(), json!(ctx.slice.dim()));
    map.insert("internal_dim".into(), json!(analysis.internal_dim()));
    map.insert("slice_basis".into(), json!(basis_vectors(&ctx.slice)));
    map.insert(
        "ambient_fixed_basis".into(),
        json!(basis_vectors(&analysis.ambient_fixed_basis)),
    );
    let mut residuals = Map::new();
    residuals.insert("fixing".into(), json!(analysis.fixing_residual));
    residuals.insert(
        "direct_sum".into(),
        json!(crate::geometry::direct_sum_residual(
            &ctx.orbit_tangent,
            &ctx.slice
        )),
    );
    if let Some(op) = &analysis.average {
        residuals.insert("idempotence".into(), json!(op.idempotence_residual()));
        residuals.insert(
            "idempotence_bound".into(),
            json!(op.scheme().idempotence_bound()),
        );
        residuals.insert(
            "self_adjointness".into(),
            json!(op.self_adjointness_residual()),
        );
        residuals.insert("sampling_deviation".into(), json!(op.sampling_deviation()));
    }
    map.insert("residuals".into(), Value::Object(residuals));
    if let Some(o) = oracle {
        map.insert("oracle_dim".into(), json!(o.dim));
        map.insert(
            "oracle".into(),
            json!({
                "dim": o.dim,
                "relation_dim": o.relation_dim,
                "elements_used": o.elements_used,
                "agrees": o.dim == analysis.internal_dim(),
            }),
        );
    }
    if let Some(c) = certificate {
        map.insert("certificate".into(), c.clone());
    }
    Value::Object(map)
}

/// The certificate body shared by `certify` and `analyze --certify`.
pub fn certificate_body(
    vector_ambient: &DVector<f64>,
    slice_coordinates: &DVector<f64>,
    certificate: &RelationCertificate,
    config: &ActionConfig,
) -> Value {
    json!({
        "vector": vector(vector_ambient),
        "slice_coordinates": vector(slice_coordinates),
        "relation": certificate,
        "coefficient_sum_error": (certificate.coefficient_sum - 1.0).abs(),
        "annihilation_residual": certificate.residual,
        "valid": certificate.is_valid(&config.settings.tolerance),
    })
}

/// Report for `certify`.
pub fn certificate_report(
    config: &ActionConfig,
    point: &DVector<f64>,
    seed: u64,
    body: Value,
) -> Value {
    let mut map = header("certify", config);
    map.insert("point".into(), json!(vector(point)));
    map.insert("certificate_seed".into(), json!(seed));
    map.insert("certificate".into(), body);
    Value::Object(map)
}

/// Report for `stratify`.
pub fn stratify_report(config: &ActionConfig, report: &StratificationReport) -> Value {
    let mut map = header("stratify", config);
    map.insert("point_count".into(), json!(report.point_assignments.len()));
    map.insert("stratum_count".into(), json!(report.strata.len()));
    map.insert("strata".into(), json!(report.strata));
    map.insert("point_assignments".into(), json!(report.point_assignments));
    Value::Object(map)
}

/// Report for `average`.
pub fn average_report(config: &ActionConfig, op: &AverageOperator, fixed: &Subspace) -> Value {
    let mut map = header("average", config);
    map.insert("averaging_scheme".into(), json!(op.scheme().to_string()));
    map.insert("projector".into(), json!(rows(op.matrix())));
    map.insert("invariant_gram".into(), json!(rows(op.gram())));
    map.insert("fixed_dim".into(), json!(fixed.dim()));
    map.insert("fixed_basis".into(), json!(basis_vectors(fixed)));
    map.insert(
        "residuals".into(),
        json!({
            "idempotence": op.idempotence_residual(),
            "idempotence_bound": op.scheme().idempotence_bound(),
            "self_adjointness": op.self_adjointness_residual(),
            "sampling_deviation": op.sampling_deviation(),
        }),
    );
    Value::Object(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(round_float(-0.0).to_bits(), 0.0f64.to_bits());
        assert_eq!(round_float(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_float(2.0 / 3.0 * 1e-20), 6.66666666667e-21);
        assert_eq!(round_float(123456789012345.0), 123456789012000.0);
        assert_eq!(round_float(-1e-300 * 1e-30), 0.0);
    }

    #[test]
    fn canonical_output_is_sorted_and_rounded() {
        let v = json!({ "b": [0.1 + 0.2, -0.0], "a": 3, "c": { "z": 1.0, "y": 1e-17 } });
        let s = to_canonical_string(&v).unwrap();
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        assert!(s.find("\"y\"").unwrap() < s.find("\"z\"").unwrap());
        assert!(s.contains("0.3"));
        assert!(!s.contains("0.30000000000000004"));
        assert!(!s.contains("-0"));
        assert!(s.ends_with("}\n"));
        assert_eq!(s, to_canonical_string(&v).unwrap());
    }
}
