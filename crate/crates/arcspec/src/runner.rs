//! Subcommand orchestration: build inputs, run the core computations, and
//! emit deterministic artifacts into the output directory.

use std::path::Path;

use arcspec_core::asymptotics::{counting_report, expansion_report, Resolutions};
use arcspec_core::bs::{solve_kappa, BsAssembly, Executor};
use arcspec_core::curve::{build_curve, ArcCurve};
use arcspec_core::operator1d::{spectrum_1d, BoundaryCondition, Grid1D};
use arcspec_core::quadrature::Quadrature;

use crate::config::{curve_spec, ExperimentConfig};
use crate::error::AppError;
use crate::report;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Curve,
    Spectrum1d,
    Spectrum3d,
    Count,
    Asymptotics { strict: bool },
}

/// Execute one subcommand, writing artifacts into `out`.
pub fn run(
    sub: Subcommand,
    cfg: &ExperimentConfig,
    out: &Path,
    base_dir: Option<&Path>,
    exec: &dyn Executor,
) -> Result<(), AppError> {
    std::fs::create_dir_all(out)?;
    let spec = curve_spec(&cfg.curve, base_dir)?;
    let curve = build_curve(&spec)?;
    match sub {
        Subcommand::Curve => run_curve(cfg, &curve, out),
        Subcommand::Spectrum1d => run_spectrum_1d(cfg, &curve, out),
        Subcommand::Spectrum3d => run_spectrum_3d(cfg, &curve, out, exec),
        Subcommand::Count => run_count(cfg, &curve, out, exec),
        Subcommand::Asymptotics { strict } => run_asymptotics(cfg, &curve, out, exec, strict),
    }
}

fn run_curve(cfg: &ExperimentConfig, curve: &ArcCurve, out: &Path) -> Result<(), AppError> {
    let d = cfg.extension_d.unwrap_or(curve.d0 / 2.0);
    let ext = curve.extend(d)?;
    let l = curve.length;
    let ns = 1024usize;
    let mut rows = Vec::with_capacity(ns + 1);
    for k in 0..=ns {
        let s = l * k as f64 / ns as f64;
        // Sample strictly inside the domain at the exact endpoints.
        let sc = s.clamp(1e-12 * l, l * (1.0 - 1e-12));
        let p = curve.position(sc)?;
        let f = curve.frame(sc)?;
        rows.push(vec![
            report::fmt_g17(s),
            report::fmt_g17(p[0]),
            report::fmt_g17(p[1]),
            report::fmt_g17(p[2]),
            report::fmt_g17(curve.gamma(sc)?),
            report::fmt_g17(curve.tau(sc)?),
            report::fmt_g17(f.beta),
        ]);
    }
    report::write_table(
        &out.join("curve.csv"),
        ",",
        &["s", "x", "y", "z", "gamma", "tau", "beta"],
        &rows,
    )?;

    let inj = ext.injectivity_check(d);
    let doc = serde_json::json!({
        "kind": curve.kind_name(),
        "length": curve.length,
        "max_gamma": curve.max_gamma(),
        "extension_d": d,
        "injectivity": {
            "d": inj.d,
            "h_margin": inj.h_margin,
            "min_separation": inj.min_separation,
            "required_separation": inj.required_separation,
            "pass": inj.pass,
        },
    });
    std::fs::write(
        out.join("geometry.json"),
        serde_json::to_string_pretty(&doc)? + "\n",
    )?;
    Ok(())
}

fn run_spectrum_1d(cfg: &ExperimentConfig, curve: &ArcCurve, out: &Path) -> Result<(), AppError> {
    let grid = Grid1D::new(0.0, curve.length, cfg.n)?;
    let k = cfg.j_max.max(10);
    let dirichlet = spectrum_1d(curve, &grid, BoundaryCondition::Dirichlet, k)?;
    let neumann = spectrum_1d(curve, &grid, BoundaryCondition::Neumann, k)?;
    report::write_spectrum_1d(&out.join("spectrum_1d.csv"), &[neumann, dirichlet])
}

fn run_spectrum_3d(
    cfg: &ExperimentConfig,
    curve: &ArcCurve,
    out: &Path,
    exec: &dyn Executor,
) -> Result<(), AppError> {
    let quad = Quadrature::graded(curve.length, cfg.n_q)?;
    let mut pairs = Vec::new();
    for &alpha in &cfg.alphas {
        for j in 1..=cfg.j_max {
            let pair = solve_kappa(curve, &quad, alpha, j, cfg.tol, exec)?;
            pairs.push((alpha, pair));
        }
    }
    if cfg.dump_matrix {
        if let Some((_, first)) = pairs.first() {
            let q = BsAssembly::new(curve, &quad)?.assemble(first.kappa, exec)?;
            report::dump_bsmatrix(&q, &out.join("bsmatrix.bin"))?;
        }
    }
    report::write_eigenpairs(&out.join("eigenpairs.csv"), &pairs)
}

fn run_count(
    cfg: &ExperimentConfig,
    curve: &ArcCurve,
    out: &Path,
    exec: &dyn Executor,
) -> Result<(), AppError> {
    let rows = counting_report(curve, &cfg.alphas, cfg.n_q, exec)?;
    report::write_counting(&rows, &out.join("counting.csv"))
}

fn run_asymptotics(
    cfg: &ExperimentConfig,
    curve: &ArcCurve,
    out: &Path,
    exec: &dyn Executor,
    strict: bool,
) -> Result<(), AppError> {
    for w in cfg.alphas.windows(2) {
        if !(w[1] < w[0]) {
            return Err(AppError::Config(format!(
                "asymptotics requires strictly decreasing alphas, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    let res = Resolutions {
        n_1d: cfg.n,
        n_q: cfg.n_q,
        n_q_coarse: cfg.n_q_coarse(),
        tol: cfg.tol,
    };
    let rep = expansion_report(curve, &cfg.alphas, cfg.j_max, &res, exec)?;
    let counts = counting_report(curve, &cfg.alphas, cfg.n_q, exec)?;
    report::write_expansion(&rep, out)?;
    report::write_counting(&counts, &out.join("counting.csv"))?;
    report::write_summary(&rep, Some(&counts), &out.join("summary.json"))?;

    if strict {
        if let Some(row) = rep.rows.iter().find(|r| r.error.is_some()) {
            return Err(AppError::Strict(format!(
                "row (alpha={}, j={}) failed: {}",
                row.alpha,
                row.j,
                row.error.as_deref().unwrap_or("")
            )));
        }
        if let Some(row) = rep.rows.iter().find(|r| !r.bracket_ok) {
            return Err(AppError::Strict(format!(
                "bracketing violated at (alpha={}, j={})",
                row.alpha, row.j
            )));
        }
        if let Some(b) = rep.decay_exponent {
            let pi = std::f64::consts::PI;
            if !(0.5 * pi..=1.5 * pi).contains(&b) {
                return Err(AppError::Strict(format!(
                    "fitted decay exponent {b} outside [pi/2, 3pi/2]"
                )));
            }
        }
    }
    Ok(())
}
