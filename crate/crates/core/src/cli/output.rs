//! CSV and JSON artifacts, written atomically.

use std::io::Write;
use std::path::Path;

use crate::baselines::{DriftRecord, PhaseState};
use crate::error::{Error, Result};
use crate::lattice::FourierVector;
use crate::solver::SolverState;

/// 17 significant digits, so every value round-trips.
pub fn fmt_f(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    fmt_f(x.unwrap_or(f64::NAN))
}

/// Writes `contents` to a temporary file beside `path`, then renames it.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn csv(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn numbered(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}{i}"))
}

pub fn history_csv(state: &SolverState) -> String {
    let n = state.zhat.dim();
    let mut header = vec!["r".to_string(), "N_r".to_string()];
    header.extend(numbered("omega_", n));
    header.extend(["residual_l2", "step_l2", "support_size", "log_inverse_norm", "gevrey_sup"].map(String::from));
    let rows = state.history.iter().map(|rec| {
        let mut row = vec![rec.r.to_string(), rec.half_width.to_string()];
        row.extend(rec.omega.iter().map(|w| fmt_f(*w)));
        row.push(fmt_f(rec.residual_l2));
        row.push(fmt_opt(rec.step_l2));
        row.push(rec.support_size.to_string());
        row.push(fmt_opt(rec.log_inverse_norm()));
        row.push(fmt_f(rec.gevrey_sup));
        row
    });
    csv(&header, rows)
}

/// One row per stored coefficient in canonical order; `j` is one-based.
pub fn spectrum_csv(zhat: &FourierVector) -> String {
    let mut header = vec!["j".to_string()];
    header.extend(numbered("k_", zhat.dim()));
    header.push("value".into());
    let rows = zhat.iter().map(|(m, v)| {
        let mut row = vec![(m.j + 1).to_string()];
        row.extend(m.k.entries().iter().map(|k| k.to_string()));
        row.push(fmt_f(v));
        row
    });
    csv(&header, rows)
}

/// Solution samples against reference samples at the same times.
pub fn trajectory_csv(solution: &[PhaseState], reference: &[PhaseState]) -> String {
    let n = solution.first().map_or(0, |s| s.x.len());
    let mut header = vec!["t".to_string()];
    header.extend(numbered("x_", n));
    header.extend(numbered("y_", n));
    header.extend(numbered("ref_x_", n));
    header.extend(numbered("ref_y_", n));
    header.push("pointwise_error".into());
    let rows = solution.iter().zip(reference).map(|(s, r)| {
        let mut row = vec![fmt_f(s.t)];
        for v in s.x.iter().chain(&s.y).chain(&r.x).chain(&r.y) {
            row.push(fmt_f(*v));
        }
        row.push(fmt_f(pointwise_error(s, r)));
        row
    });
    csv(&header, rows)
}

/// Euclidean distance between two phase points.
pub fn pointwise_error(a: &PhaseState, b: &PhaseState) -> f64 {
    a.x.iter()
        .chain(&a.y)
        .zip(b.x.iter().chain(&b.y))
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

pub fn drift_csv(records: &[DriftRecord]) -> String {
    let header = ["h", "theta_h", "delta_theta", "n", "accumulated"].map(String::from);
    let rows = records.iter().map(|d| {
        vec![
            fmt_f(d.h),
            fmt_f(d.theta_h),
            fmt_f(d.delta_theta),
            d.n_steps.to_string(),
            fmt_f(d.accumulated),
        ]
    });
    csv(&header, rows)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScanRow {
    pub tau: f64,
    pub m_box: usize,
    pub samples: usize,
    pub fraction: f64,
    pub seed: u64,
}

pub fn scan_csv(rows: &[ScanRow]) -> String {
    let header = ["tau", "M_box", "samples", "fraction", "seed"].map(String::from);
    let body = rows.iter().map(|r| {
        vec![
            fmt_f(r.tau),
            r.m_box.to_string(),
            r.samples.to_string(),
            fmt_f(r.fraction),
            r.seed.to_string(),
        ]
    });
    csv(&header, body)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_has_seventeen_digits() {
        assert_eq!(fmt_f(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f(f64::NAN), "NaN");
        let x = 0.1 + 0.2;
        assert_eq!(fmt_f(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn spectrum_rows_are_one_based() {
        let z = FourierVector::from_entries(2, [(1, vec![0, 1], 0.5)]);
        assert_eq!(spectrum_csv(&z), "j,k_1,k_2,value\n2,0,1,5.0000000000000000e-1\n");
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_atomic(&p, "one\n").unwrap();
        write_atomic(&p, "two\n").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two\n");
    }
}
