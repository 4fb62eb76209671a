//! Bit-stable report emission: fixed-format CSV, whitespace tables, JSON
//! summaries, and binary matrix snapshots.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use arcspec_core::asymptotics::{AsymptoticsReport, CountRow};
use arcspec_core::bs::{BSMatrix, HEigenpair};
use arcspec_core::operator1d::{BoundaryCondition, Spectrum1D};

use crate::error::AppError;

/// Fixed 17-significant-digit decimal rendering so doubles round-trip
/// exactly and output is byte-stable.
pub fn fmt_g17(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.16e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponential format");
    let e: i32 = exp.parse().expect("exponent");
    if !(-4..=16).contains(&e) {
        return sci;
    }
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    debug_assert_eq!(digits.len(), 17);
    let mut out = String::from(sign);
    if e >= 0 {
        let split = (e + 1) as usize;
        out.push_str(&digits[..split]);
        if split < digits.len() {
            out.push('.');
            out.push_str(&digits[split..]);
        }
    } else {
        out.push_str("0.");
        for _ in 0..(-e - 1) {
            out.push('0');
        }
        out.push_str(&digits);
    }
    out
}

/// Single funnel for all tabular writes: header plus rows, one record per
/// line, trailing newline.
pub fn write_table(
    path: &Path,
    sep: &str,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(), AppError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", header.join(sep))?;
    for row in rows {
        writeln!(w, "{}", row.join(sep))?;
    }
    w.flush()?;
    Ok(())
}

fn bc_name(bc: BoundaryCondition) -> &'static str {
    match bc {
        BoundaryCondition::Dirichlet => "dirichlet",
        BoundaryCondition::Neumann => "neumann",
    }
}

/// CSV rows (j, lambda, bc, n, L) for one or more 1D spectra.
pub fn write_spectrum_1d(path: &Path, spectra: &[Spectrum1D]) -> Result<(), AppError> {
    let mut rows = Vec::new();
    for sp in spectra {
        let l = sp.grid.b - sp.grid.a;
        for (j, lam) in sp.eigenvalues.iter().enumerate() {
            rows.push(vec![
                (j + 1).to_string(),
                fmt_g17(*lam),
                bc_name(sp.bc).into(),
                sp.grid.n.to_string(),
                fmt_g17(l),
            ]);
        }
    }
    write_table(path, ",", &["j", "lambda", "bc", "n", "L"], &rows)
}

/// CSV rows (j, alpha, kappa, lambda, residual) for solved eigenpairs.
pub fn write_eigenpairs(path: &Path, pairs: &[(f64, HEigenpair)]) -> Result<(), AppError> {
    let rows: Vec<Vec<String>> = pairs
        .iter()
        .map(|(alpha, p)| {
            vec![
                p.j.to_string(),
                fmt_g17(*alpha),
                fmt_g17(p.kappa),
                fmt_g17(p.lambda),
                fmt_g17(p.residual),
            ]
        })
        .collect();
    write_table(path, ",", &["j", "alpha", "kappa", "lambda", "residual"], &rows)
}

const EXPANSION_HEADER: &[&str] = &[
    "alpha",
    "j",
    "kappa",
    "lambda_h",
    "shifted",
    "lambda_neumann",
    "lambda_dirichlet",
    "residual",
    "disc_budget",
    "eps",
    "bracket_ok",
    "disc_limited",
    "iterations",
    "flags",
];

fn expansion_rows(report: &AsymptoticsReport) -> Vec<Vec<String>> {
    report
        .rows
        .iter()
        .map(|r| {
            vec![
                fmt_g17(r.alpha),
                r.j.to_string(),
                fmt_g17(r.kappa),
                fmt_g17(r.lambda_h),
                fmt_g17(r.shifted),
                fmt_g17(r.lambda_neumann),
                fmt_g17(r.lambda_dirichlet),
                fmt_g17(r.residual),
                fmt_g17(r.disc_budget),
                fmt_g17(r.eps),
                r.bracket_ok.to_string(),
                r.disc_limited.to_string(),
                r.solver_iterations.to_string(),
                r.error.clone().unwrap_or_else(|| "ok".into()).replace(',', ";"),
            ]
        })
        .collect()
}

/// Expansion report as CSV plus a gnuplot-ready whitespace table.
pub fn write_expansion(report: &AsymptoticsReport, dir: &Path) -> Result<(), AppError> {
    let rows = expansion_rows(report);
    write_table(&dir.join("expansion.csv"), ",", EXPANSION_HEADER, &rows)?;
    write_table(&dir.join("expansion.dat"), " ", EXPANSION_HEADER, &rows)?;
    Ok(())
}

/// Counting table as CSV.
pub fn write_counting(rows: &[CountRow], path: &Path) -> Result<(), AppError> {
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fmt_g17(r.alpha),
                r.observed.to_string(),
                fmt_g17(r.predicted),
                fmt_g17(r.rel_dev),
                r.error.clone().unwrap_or_else(|| "ok".into()).replace(',', ";"),
            ]
        })
        .collect();
    write_table(
        path,
        ",",
        &["alpha", "n_observed", "predicted", "rel_dev", "flags"],
        &table,
    )
}

/// JSON summary with the fitted exponent and pass/fail flags.
pub fn write_summary(
    report: &AsymptoticsReport,
    counts: Option<&[CountRow]>,
    path: &Path,
) -> Result<(), AppError> {
    let rows: Vec<serde_json::Value> = report
        .rows
        .iter()
        .map(|r| {
            serde_json::json!({
                "alpha": r.alpha,
                "j": r.j,
                "lambda_h": r.lambda_h,
                "shifted": r.shifted,
                "residual": r.residual,
                "bracket_ok": r.bracket_ok,
                "disc_limited": r.disc_limited,
                "error": r.error,
            })
        })
        .collect();
    let all_ok = report.rows.iter().all(|r| r.bracket_ok && r.error.is_none());
    let count_rows: Vec<serde_json::Value> = counts
        .unwrap_or(&[])
        .iter()
        .map(|c| {
            serde_json::json!({
                "alpha": c.alpha,
                "n_observed": c.observed,
                "predicted": c.predicted,
                "rel_dev": c.rel_dev,
                "error": c.error,
            })
        })
        .collect();
    let doc = serde_json::json!({
        "curve": report.curve,
        "decay_exponent": report.decay_exponent,
        "fit_points": report.fit_points,
        "all_brackets_ok": all_ok,
        "rows": rows,
        "counting": count_rows,
    });
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", serde_json::to_string_pretty(&doc)?)?;
    w.flush()?;
    Ok(())
}

impl From<serde_json::Error> for AppError {
    fn from(e: serde_json::Error) -> Self {
        AppError::Io(std::io::Error::other(e))
    }
}

/// FNV-1a 64-bit hash.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Binary snapshot: 32-byte header (n_q: u64, kappa: f64, L: f64,
/// checksum: u64), then the row-major matrix as little-endian f64.
pub fn dump_bsmatrix(q: &BSMatrix, path: &Path) -> Result<(), AppError> {
    let n = q.n();
    let mut payload = Vec::with_capacity(8 * n * n);
    for v in &q.matrix.data {
        payload.extend_from_slice(&v.to_le_bytes());
    }
    let checksum = fnv1a64(&payload);
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&(n as u64).to_le_bytes())?;
    w.write_all(&q.kappa.to_le_bytes())?;
    w.write_all(&q.length.to_le_bytes())?;
    w.write_all(&checksum.to_le_bytes())?;
    w.write_all(&payload)?;
    w.flush()?;
    Ok(())
}

/// Read back a binary snapshot, verifying the checksum.
pub fn load_bsmatrix(path: &Path) -> Result<(usize, f64, f64, Vec<f64>), AppError> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < 32 {
        return Err(AppError::Config(format!(
            "{}: truncated matrix snapshot",
            path.display()
        )));
    }
    let n = u64::from_le_bytes(bytes[0..8].try_into().unwrap()) as usize;
    let kappa = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let length = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let checksum = u64::from_le_bytes(bytes[24..32].try_into().unwrap());
    let payload = &bytes[32..];
    if payload.len() != 8 * n * n || fnv1a64(payload) != checksum {
        return Err(AppError::Config(format!(
            "{}: matrix snapshot corrupt (size or checksum mismatch)",
            path.display()
        )));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((n, kappa, length, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digit_format() {
        // The f64 nearest pi^2 is exactly 9.86960440108935799230...; its
        // correctly rounded 17-significant-digit rendering ends in 80.
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        assert_eq!(fmt_g17(pi2), "9.8696044010893580");
        assert_eq!(fmt_g17(pi2).parse::<f64>().unwrap(), pi2);
        assert_eq!(fmt_g17(0.5), "0.50000000000000000");
        assert_eq!(fmt_g17(-2.0), "-2.0000000000000000");
        assert_eq!(fmt_g17(0.0), "0");
        assert_eq!(fmt_g17(f64::NAN), "nan");
        assert_eq!(fmt_g17(1e-300), "1.0000000000000000e-300");
        assert_eq!(fmt_g17(1e20), "1.0000000000000000e20");
        // Round-trip exactness on awkward values.
        for v in [1.0 / 3.0, -675.226_600_172_897_4, 1e-4, 123456.789] {
            let parsed: f64 = fmt_g17(v).parse().unwrap();
            assert_eq!(parsed, v, "{v} -> {}", fmt_g17(v));
        }
    }

    #[test]
    fn fnv_reference_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn empty_report_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let report = AsymptoticsReport {
            curve: "segment".into(),
            rows: vec![],
            decay_exponent: None,
            fit_points: 0,
        };
        write_expansion(&report, dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("expansion.csv")).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("alpha,j,"));
        assert!(text.contains("flags"));
    }

    #[test]
    fn matrix_snapshot_round_trip() {
        use arcspec_core::bs::assemble_q;
        use arcspec_core::curve::{build_curve, CurveKind, CurveSpec};
        use arcspec_core::quadrature::Quadrature;
        let curve = build_curve(&CurveSpec {
            kind: CurveKind::Segment,
            length: 1.0,
            d0: 0.25,
            samples: 0,
        })
        .unwrap();
        let quad = Quadrature::graded(1.0, 64).unwrap();
        let q = assemble_q(&curve, 3.0, &quad).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.bin");
        dump_bsmatrix(&q, &path).unwrap();
        let (n, kappa, length, data) = load_bsmatrix(&path).unwrap();
        assert_eq!(n, q.n());
        assert_eq!(kappa, 3.0);
        assert_eq!(length, 1.0);
        assert_eq!(data, q.matrix.data);
        // Corruption detected.
        let mut bytes = std::fs::read(&path).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 1;
        std::fs::write(&path, bytes).unwrap();
        assert!(load_bsmatrix(&path).is_err());
    }
}
