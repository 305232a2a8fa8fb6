//! Byte-stable CSV and JSON serialisation of reports.
//!
//! Floating-point columns are written in scientific notation with 17
//! significant digits so that identical runs produce identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::diagnostics::WeylReport;
use crate::error::{Error, Result};
use crate::moebius::CorrelationReport;

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn correlation_csv(report: &CorrelationReport) -> String {
    let mut out = String::from("N,re,im,modulus\n");
    for c in &report.checkpoints {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            c.n,
            fmt_f64(c.value.re),
            fmt_f64(c.value.im),
            fmt_f64(c.modulus())
        );
    }
    out
}

pub fn weyl_csv(reports: &[WeylReport]) -> String {
    let mut out = String::from("k1,k2,k3,N,re,im,modulus\n");
    for r in reports {
        for (n, v) in &r.checkpoints {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.freq[0],
                r.freq[1],
                r.freq[2],
                n,
                fmt_f64(v.re),
                fmt_f64(v.im),
                fmt_f64(v.norm())
            );
        }
    }
    out
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

/// Writes `<stem>.csv` and the metadata sidecar `<stem>.json` into `dir`,
/// returning the two file names.
pub fn write_correlation(dir: &Path, stem: &str, report: &CorrelationReport) -> Result<[String; 2]> {
    let csv = format!("{stem}.csv");
    let json = format!("{stem}.json");
    write_text(&dir.join(&csv), &correlation_csv(report))?;
    write_text(&dir.join(&json), &to_json(&report.metadata)?)?;
    Ok([csv, json])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moebius::Checkpoint;
    use num_complex::Complex64;

    #[test]
    fn csv_layout() {
        let report = CorrelationReport {
            checkpoints: vec![Checkpoint { n: 10, value: Complex64::new(0.1, -0.25) }],
            metadata: Default::default(),
        };
        let csv = correlation_csv(&report);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("N,re,im,modulus"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "10");
        assert_eq!(row[1], "1.0000000000000001e-1");
        assert_eq!(row[2].parse::<f64>().unwrap(), -0.25);
        assert_eq!(row[3].parse::<f64>().unwrap(), Complex64::new(0.1, -0.25).norm());
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }
}
