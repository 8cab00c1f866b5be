//! Report assembly and emission: JSON Lines for per-record data, CSV for
//! the aggregate summary. Wall time never enters the record stream, so two
//! runs of the same scenario produce byte-identical lines.

use fitzcert::CertificateRecord;
use serde::Serialize;
use std::io::{self, Write};

/// One aggregate cell: a certificate kind at one (p, λ).
#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub kind: String,
    pub t: String,
    pub b: String,
    pub p: f64,
    pub lambda: f64,
    pub count: usize,
    pub min_slack: f64,
    pub passes: usize,
    pub fails: usize,
}

/// One oracle cross-validation line.
#[derive(Debug, Clone, Serialize)]
pub struct OracleLine {
    pub check: String,
    pub cases: usize,
    pub worst_err: f64,
    pub tol: f64,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Default)]
pub struct Report {
    pub records: Vec<CertificateRecord>,
    pub summary: Vec<SummaryRow>,
    pub oracle_lines: Vec<OracleLine>,
    pub solver_failures: usize,
    /// Wall-clock duration of the run; reported on stderr only.
    pub wall_ms: u128,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
            && self.oracle_lines.iter().all(|l| l.pass)
            && self.solver_failures == 0
    }

    /// Groups records into summary rows by (kind, t, b, p, λ) in first-seen
    /// order; the row's min_slack is the minimum over its emitted lines.
    pub fn build_summary(records: &[CertificateRecord]) -> Vec<SummaryRow> {
        let mut rows: Vec<SummaryRow> = Vec::new();
        for r in records {
            let b = r.b_id.clone().unwrap_or_default();
            let found = rows.iter_mut().find(|row| {
                row.kind == r.kind.as_str()
                    && row.t == r.t_id
                    && row.b == b
                    && row.p.to_bits() == r.p.to_bits()
                    && row.lambda.to_bits() == r.lambda.to_bits()
            });
            match found {
                Some(row) => {
                    row.count += 1;
                    if r.slack < row.min_slack {
                        row.min_slack = r.slack;
                    }
                    if r.pass {
                        row.passes += 1;
                    } else {
                        row.fails += 1;
                    }
                }
                None => rows.push(SummaryRow {
                    kind: r.kind.as_str().to_string(),
                    t: r.t_id.clone(),
                    b,
                    p: r.p,
                    lambda: r.lambda,
                    count: 1,
                    min_slack: r.slack,
                    passes: usize::from(r.pass),
                    fails: usize::from(!r.pass),
                }),
            }
        }
        rows
    }

    pub fn write_jsonl(&self, mut w: impl Write) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        for l in &self.oracle_lines {
            serde_json::to_writer(&mut w, l)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn write_csv(&self, w: impl Write) -> csv::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["kind", "t", "b", "p", "lambda", "count", "min_slack", "passes", "fails"])?;
        for row in &self.summary {
            wtr.write_record([
                row.kind.as_str(),
                row.t.as_str(),
                row.b.as_str(),
                &format!("{}", row.p),
                &format!("{}", row.lambda),
                &row.count.to_string(),
                &format!("{:e}", row.min_slack),
                &row.passes.to_string(),
                &row.fails.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Short human-readable digest for stderr.
    pub fn digest(&self) -> String {
        let mut out = String::new();
        for row in &self.summary {
            out.push_str(&format!(
                "{:>15} T={} B={} p={} lambda={}: {}/{} pass, min slack {:.3e}\n",
                row.kind,
                row.t,
                if row.b.is_empty() { "-" } else { &row.b },
                row.p,
                row.lambda,
                row.passes,
                row.count,
                row.min_slack
            ));
        }
        for l in &self.oracle_lines {
            out.push_str(&format!(
                "{:>15}: {} cases, worst err {:.3e} (tol {:.1e}) {}\n",
                l.check,
                l.cases,
                l.worst_err,
                l.tol,
                if l.pass { "ok" } else { "FAIL" }
            ));
        }
        out.push_str(&format!(
            "records: {}, solver failures: {}, wall: {} ms\n",
            self.records.len(),
            self.solver_failures,
            self.wall_ms
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fitzcert::CertKind;

    fn record(kind: CertKind, lambda: f64, slack: f64, pass: bool) -> CertificateRecord {
        CertificateRecord {
            kind,
            t_id: "identity".into(),
            b_id: Some("identity".into()),
            dim: 2,
            p: 2.0,
            x: vec![0.0, 0.0],
            v: vec![0.0, 0.0],
            lambda,
            rhs: 0.0,
            gap_est: slack,
            gap_exact: None,
            slack,
            pass,
            tol: 1e-6,
            resolvent_residual: None,
            comparison_rhs: None,
        }
    }

    #[test]
    fn summary_minimum_matches_lines() {
        let records = vec![
            record(CertKind::CarlierHilbert, 1.0, 0.5, true),
            record(CertKind::CarlierHilbert, 1.0, 0.1, true),
            record(CertKind::CarlierHilbert, 2.0, -0.2, false),
        ];
        let rows = Report::build_summary(&records);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].count, 2);
        assert_eq!(rows[0].min_slack, 0.1);
        assert_eq!(rows[1].fails, 1);
        let min_all = records.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
        let min_rows = rows.iter().map(|r| r.min_slack).fold(f64::INFINITY, f64::min);
        assert_eq!(min_all, min_rows);
    }

    #[test]
    fn jsonl_roundtrip_is_stable() {
        let report = Report {
            records: vec![record(CertKind::Gci, 0.5, 0.25, true)],
            summary: vec![],
            oracle_lines: vec![],
            solver_failures: 0,
            wall_ms: 1234,
        };
        let mut a = Vec::new();
        let mut b = Vec::new();
        report.write_jsonl(&mut a).unwrap();
        report.write_jsonl(&mut b).unwrap();
        assert_eq!(a, b);
        assert!(!String::from_utf8(a).unwrap().contains("wall"));
    }
}
