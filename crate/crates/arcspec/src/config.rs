//! JSON experiment configuration with strict validation and defaults.

use std::path::Path;

use arcspec_core::curve::{CurveKind, CurveSpec};
use serde::{Deserialize, Serialize};

use crate::error::AppError;

fn default_j_max() -> usize {
    2
}
fn default_n() -> usize {
    4096
}
fn default_n_q() -> usize {
    4096
}
fn default_tol() -> f64 {
    1e-8
}
fn default_alphas() -> Vec<f64> {
    vec![-0.4, -0.55, -0.7]
}

/// Curve-kind specific parameters. Exactly the fields required by the
/// chosen kind may be present.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// Arc-length abscissae of a curvature profile.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<Vec<f64>>,
    /// Inline 3D point list for sampled curves.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 3]>>,
    /// Path to a 4-column CSV (s, x, y, z) for sampled curves.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points_csv: Option<String>,
}

/// Curve description: {kind, params, L, d0}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "is_default_params")]
    pub params: CurveParams,
    #[serde(rename = "L")]
    pub length: f64,
    /// Extension margin; defaults to L/4.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d0: Option<f64>,
    /// Internal geometry grid size; 0 selects the built-in default.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub samples: usize,
}

fn is_default_params(p: &CurveParams) -> bool {
    *p == CurveParams::default()
}
fn is_zero(n: &usize) -> bool {
    *n == 0
}

/// Full experiment configuration shared by all subcommands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub curve: CurveConfig,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_j_max")]
    pub j_max: usize,
    /// 1D finite-difference grid size.
    #[serde(default = "default_n")]
    pub n: usize,
    /// Birman-Schwinger quadrature size.
    #[serde(default = "default_n_q")]
    pub n_q: usize,
    /// Coarse quadrature for the Richardson budget; defaults to n_q / 4
    /// (n_q / 2 below 2048).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_q_coarse: Option<usize>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Extension length used by the `curve` diagnostics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extension_d: Option<f64>,
    /// Dump the assembled BS matrix of the first solved eigenpair.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub dump_matrix: bool,
}

impl ExperimentConfig {
    pub fn n_q_coarse(&self) -> usize {
        let default = if self.n_q >= 2048 { self.n_q / 4 } else { self.n_q / 2 };
        self.n_q_coarse.unwrap_or(default.clamp(64, self.n_q))
    }
}

/// Parse and validate a JSON configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, AppError> {
    let cfg: ExperimentConfig =
        serde_json::from_str(text).map_err(|e| AppError::Config(e.to_string()))?;
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &ExperimentConfig) -> Result<(), AppError> {
    let bad = |msg: String| Err(AppError::Config(msg));
    if !(cfg.curve.length > 0.0) {
        return bad(format!("curve.L = {} must be positive", cfg.curve.length));
    }
    if let Some(d0) = cfg.curve.d0 {
        if !(d0 > 0.0) {
            return bad(format!("curve.d0 = {d0} must be positive"));
        }
    }
    if cfg.alphas.is_empty() {
        return bad("alphas must be non-empty".into());
    }
    for a in &cfg.alphas {
        if !a.is_finite() {
            return bad(format!("alpha = {a} must be finite"));
        }
    }
    if cfg.j_max == 0 {
        return bad("j_max must be at least 1".into());
    }
    if cfg.n < 8 {
        return bad(format!("n = {} must be at least 8", cfg.n));
    }
    if cfg.n_q < 64 {
        return bad(format!("n_q = {} must be at least 64", cfg.n_q));
    }
    if let Some(c) = cfg.n_q_coarse {
        if c < 64 || c >= cfg.n_q {
            return bad(format!("n_q_coarse = {c} must lie in [64, n_q)"));
        }
    }
    if !(cfg.tol > 0.0 && cfg.tol < 1e-2) {
        return bad(format!("tol = {} must lie in (0, 1e-2)", cfg.tol));
    }
    // Kind-specific parameter checks happen in curve_spec, but run them now
    // so `parse_config` rejects every invalid document up front. File-backed
    // point lists are substituted by a placeholder so that validation never
    // touches the filesystem.
    let mut shape = cfg.curve.clone();
    if shape.params.points_csv.is_some() && shape.params.points.is_none() {
        shape.params.points_csv = None;
        shape.params.points = Some(vec![[0.0; 3]; 5]);
    }
    curve_spec(&shape, None)?;
    Ok(())
}

/// Translate the curve configuration into a core CurveSpec. `base_dir`
/// resolves relative CSV paths for sampled curves.
pub fn curve_spec(cc: &CurveConfig, base_dir: Option<&Path>) -> Result<CurveSpec, AppError> {
    let p = &cc.params;
    let missing = |what: &str| {
        AppError::Config(format!("curve kind {:?} requires params.{what}", cc.kind))
    };
    let stray = |ok: bool| {
        if ok {
            Ok(())
        } else {
            Err(AppError::Config(format!(
                "curve kind {:?} received parameters it does not accept",
                cc.kind
            )))
        }
    };
    let kind = match cc.kind.as_str() {
        "segment" => {
            stray(*p == CurveParams::default())?;
            CurveKind::Segment
        }
        "circular-arc" => {
            let radius = p.radius.ok_or_else(|| missing("radius"))?;
            stray(CurveParams { radius: p.radius, ..Default::default() } == *p)?;
            CurveKind::CircularArc { radius }
        }
        "helix-arc" => {
            let a = p.a.ok_or_else(|| missing("a"))?;
            let b = p.b.ok_or_else(|| missing("b"))?;
            stray(CurveParams { a: p.a, b: p.b, ..Default::default() } == *p)?;
            CurveKind::HelixArc { a, b }
        }
        "curvature-profile" => {
            let s = p.s.clone().ok_or_else(|| missing("s"))?;
            let gamma = p.gamma.clone().ok_or_else(|| missing("gamma"))?;
            let tau = p.tau.clone().ok_or_else(|| missing("tau"))?;
            stray(p.radius.is_none()
                && p.a.is_none()
                && p.b.is_none()
                && p.points.is_none()
                && p.points_csv.is_none())?;
            CurveKind::CurvatureProfile { s, gamma, tau }
        }
        "sampled-points" => {
            stray(p.radius.is_none()
                && p.a.is_none()
                && p.b.is_none()
                && p.s.is_none()
                && p.gamma.is_none()
                && p.tau.is_none())?;
            let points = match (&p.points, &p.points_csv) {
                (Some(pts), None) => pts.clone(),
                (None, Some(path)) => {
                    let full = match base_dir {
                        Some(dir) => dir.join(path),
                        None => path.into(),
                    };
                    read_points_csv(&full)?
                }
                _ => {
                    return Err(AppError::Config(
                        "sampled-points needs exactly one of params.points or params.points_csv"
                            .into(),
                    ))
                }
            };
            CurveKind::SampledPoints { points }
        }
        other => {
            return Err(AppError::Config(format!(
                "unknown curve kind {other:?}; expected segment, circular-arc, helix-arc, \
                 curvature-profile, or sampled-points"
            )))
        }
    };
    Ok(CurveSpec {
        kind,
        length: cc.length,
        d0: cc.d0.unwrap_or(cc.length / 4.0),
        samples: cc.samples,
    })
}

/// Read a 4-column (s, x, y, z) CSV of curve samples; the s column orders
/// the points and is otherwise ignored because the curve is
/// re-parametrized by arc length.
pub fn read_points_csv(path: &Path) -> Result<Vec<[f64; 3]>, AppError> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<(f64, [f64; 3])> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if ln == 0 && line.chars().any(|c| c.is_ascii_alphabetic()) {
            continue; // header
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 4 {
            return Err(AppError::Config(format!(
                "{}:{}: expected 4 columns (s, x, y, z), got {}",
                path.display(),
                ln + 1,
                cols.len()
            )));
        }
        let mut vals = [0.0f64; 4];
        for (k, c) in cols.iter().enumerate() {
            vals[k] = c.parse().map_err(|_| {
                AppError::Config(format!(
                    "{}:{}: column {} is not a number: {c:?}",
                    path.display(),
                    ln + 1,
                    k + 1
                ))
            })?;
        }
        rows.push((vals[0], [vals[1], vals[2], vals[3]]));
    }
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(rows.into_iter().map(|r| r.1).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(r#"{"curve":{"kind":"segment","L":1}}"#).unwrap();
        assert_eq!(cfg.n, 4096);
        assert_eq!(cfg.n_q, 4096);
        assert_eq!(cfg.tol, 1e-8);
        assert_eq!(cfg.j_max, 2);
        assert_eq!(cfg.n_q_coarse(), 1024);
        assert_eq!(cfg.alphas, vec![-0.4, -0.55, -0.7]);
    }

    #[test]
    fn unknown_key_rejected_by_name() {
        let err = parse_config(r#"{"curve":{"kind":"segment","L":1},"alpha_lists":[1]}"#)
            .unwrap_err();
        assert!(err.to_string().contains("alpha_lists"), "{err}");
    }

    #[test]
    fn round_trip_is_identity() {
        let cfg = parse_config(
            r#"{"curve":{"kind":"circular-arc","params":{"radius":1.0},"L":1.5707963267948966},
               "alphas":[-0.6],"j_max":1,"n_q":2048}"#,
        )
        .unwrap();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let cfg2 = parse_config(&text).unwrap();
        assert_eq!(cfg, cfg2);
    }

    #[test]
    fn invariant_violations_rejected() {
        for bad in [
            r#"{"curve":{"kind":"segment","L":-1}}"#,
            r#"{"curve":{"kind":"segment","L":1},"alphas":[]}"#,
            r#"{"curve":{"kind":"segment","L":1},"j_max":0}"#,
            r#"{"curve":{"kind":"segment","L":1},"n_q":8}"#,
            r#"{"curve":{"kind":"segment","L":1},"tol":-1e-8}"#,
            r#"{"curve":{"kind":"circular-arc","L":1}}"#,
            r#"{"curve":{"kind":"segment","params":{"radius":2.0},"L":1}}"#,
            r#"{"curve":{"kind":"banana","L":1}}"#,
            r#"{"curve":{"kind":"segment","L":1},"n_q_coarse":4096}"#,
        ] {
            assert!(parse_config(bad).is_err(), "accepted: {bad}");
        }
    }

    #[test]
    fn kind_specific_specs() {
        let cfg = parse_config(
            r#"{"curve":{"kind":"helix-arc","params":{"a":1.0,"b":0.5},"L":2.0,"d0":0.3}}"#,
        )
        .unwrap();
        let spec = curve_spec(&cfg.curve, None).unwrap();
        assert!(matches!(spec.kind, CurveKind::HelixArc { a, b } if a == 1.0 && b == 0.5));
        assert_eq!(spec.d0, 0.3);

        let cfg = parse_config(
            r#"{"curve":{"kind":"curvature-profile",
                "params":{"s":[0,0.5,1],"gamma":[0,0.25,0],"tau":[0,0,0]},"L":1}}"#,
        )
        .unwrap();
        let spec = curve_spec(&cfg.curve, None).unwrap();
        assert!(matches!(spec.kind, CurveKind::CurvatureProfile { .. }));
        assert_eq!(spec.d0, 0.25);
    }

    #[test]
    fn sampled_points_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pts.csv");
        let mut text = String::from("s,x,y,z\n");
        for k in 0..32 {
            let t = k as f64 / 31.0;
            text.push_str(&format!("{t},{t},{},0\n", 0.05 * t * t));
        }
        std::fs::write(&path, text).unwrap();
        let pts = read_points_csv(&path).unwrap();
        assert_eq!(pts.len(), 32);
        assert_eq!(pts[0], [0.0, 0.0, 0.0]);

        let cfg = parse_config(&format!(
            r#"{{"curve":{{"kind":"sampled-points","params":{{"points_csv":"pts.csv"}},"L":1}}}}"#
        ))
        .unwrap();
        let spec = curve_spec(&cfg.curve, Some(dir.path())).unwrap();
        assert!(matches!(spec.kind, CurveKind::SampledPoints { points } if points.len() == 32));
    }
}
