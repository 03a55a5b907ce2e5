//! CSV and JSON artifacts. Everything is collected first and written once.

use std::io::Write;
use std::path::Path;

use crate::certificate::BoundCertificate;
use crate::error::{Error, Result};
use crate::mc_verifier::VerificationReport;

pub const BOUNDS_HEADER: [&str; 9] = [
    "x", "regime", "bound", "valid_lo", "valid_hi", "n", "delta", "eps", "lambda",
];

pub const VERIFY_HEADER: [&str; 7] = [
    "x",
    "empirical_tail",
    "ci_lo",
    "ci_hi",
    "bound",
    "margin",
    "pass",
];

/// Shortest round-trip representation; empty for a missing value.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v}")).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub x: f64,
    pub regime: String,
    pub bound: Option<f64>,
    pub valid_lo: Option<f64>,
    pub valid_hi: Option<f64>,
    pub n: Option<f64>,
    pub delta: Option<f64>,
    pub eps: Option<f64>,
    pub lambda: Option<f64>,
}

impl BoundRow {
    /// Row for `cert` at `x`; the bound is left empty outside the range.
    pub fn from_certificate(x: f64, regime: &str, cert: &BoundCertificate) -> Self {
        let q = cert.query(x);
        let v = cert.valid_x;
        let (lo, hi) = if v.is_empty() { (None, None) } else { (Some(v.lo), Some(v.hi)) };
        BoundRow {
            x,
            regime: regime.to_string(),
            bound: q.in_range.then_some(q.value),
            valid_lo: lo,
            valid_hi: hi,
            n: cert.param("n"),
            delta: cert.param("delta"),
            eps: cert.param("eps"),
            lambda: cert.param("lambda"),
        }
    }

    pub fn empty(x: f64, regime: &str) -> Self {
        BoundRow {
            x,
            regime: regime.to_string(),
            bound: None,
            valid_lo: None,
            valid_hi: None,
            n: None,
            delta: None,
            eps: None,
            lambda: None,
        }
    }

    fn record(&self) -> Vec<String> {
        vec![
            format!("{}", self.x),
            self.regime.clone(),
            fmt_opt(self.bound),
            fmt_opt(self.valid_lo),
            fmt_opt(self.valid_hi),
            fmt_opt(self.n),
            fmt_opt(self.delta),
            fmt_opt(self.eps),
            fmt_opt(self.lambda),
        ]
    }
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Config(format!("write failed: {e}"))
}

pub fn csv_bytes<I>(header: &[&str], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(io_err)?;
    for r in rows {
        w.write_record(&r).map_err(io_err)?;
    }
    w.into_inner().map_err(io_err)
}

pub fn bounds_csv(rows: &[BoundRow]) -> Result<Vec<u8>> {
    csv_bytes(&BOUNDS_HEADER, rows.iter().map(BoundRow::record))
}

pub fn report_csv(report: &VerificationReport) -> Result<Vec<u8>> {
    csv_bytes(
        &VERIFY_HEADER,
        report.grid.iter().map(|g| {
            vec![
                format!("{}", g.x),
                format!("{}", g.empirical_tail),
                format!("{}", g.ci_lo),
                format!("{}", g.ci_hi),
                format!("{}", g.bound),
                format!("{}", g.margin),
                g.pass.to_string(),
            ]
        }),
    )
}

pub fn report_json(report: &VerificationReport) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(report).map_err(io_err)?;
    v.push(b'\n');
    Ok(v)
}

/// Writes to `path`, or to stdout when there is none.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(io_err),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).map_err(io_err)?;
            out.flush().map_err(io_err)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_exact() {
        let b = bounds_csv(&[BoundRow::empty(1.0, "envelope")]).unwrap();
        let s = String::from_utf8(b).unwrap();
        assert_eq!(
            s,
            "x,regime,bound,valid_lo,valid_hi,n,delta,eps,lambda\n1,envelope,,,,,,,\n"
        );
    }

    #[test]
    fn floats_round_trip() {
        let v = 0.1 + 0.2;
        assert_eq!(fmt_opt(Some(v)).parse::<f64>().unwrap(), v);
        assert_eq!(fmt_opt(None), "");
    }
}
