//! Re-verifies trace invariants from the output files alone.

use std::path::Path;

use crate::error::CliError;
use crate::output::read_trace;

pub const VIOLATION_SLACK: f64 = 1e-8;
pub const UPPER_SLACK: f64 = 1e-8;
pub const LOWER_SLACK: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayFailure {
    /// Zero-based data row index.
    pub row: usize,
    pub t: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReplayOutcome {
    pub rows: usize,
    pub failures: Vec<ReplayFailure>,
}

impl ReplayOutcome {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks every row for coupling feasibility, the sandwich inequality, a
/// strictly increasing round index, and exact agreement of `cost_error`
/// with `|sum_rho − P*|`.
pub fn replay_check(trace_path: &Path, report_path: &Path) -> Result<ReplayOutcome, CliError> {
    let rows = read_trace(trace_path)?;
    let text = std::fs::read_to_string(report_path)?;
    let report: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Malformed { path: report_path.display().to_string(), msg: e.to_string() })?;
    let p_star = report.get("P_star").and_then(serde_json::Value::as_f64);

    let mut out = ReplayOutcome { rows: rows.len(), failures: Vec::new() };
    let mut fail = |row: usize, t: usize, reason: String| out.failures.push(ReplayFailure { row, t, reason });
    let mut prev_t = 0usize;
    for (k, r) in rows.iter().enumerate() {
        if r.t <= prev_t {
            fail(k, r.t, format!("round index {} does not increase", r.t));
        }
        prev_t = r.t;
        if !(r.max_violation <= VIOLATION_SLACK) {
            fail(k, r.t, format!("coupling violation {} exceeds {VIOLATION_SLACK}", r.max_violation));
        }
        if !(r.p_t <= r.sum_rho + UPPER_SLACK) {
            fail(k, r.t, format!("P_t {} exceeds sum_rho {}", r.p_t, r.sum_rho));
        }
        if let Some(p) = p_star {
            if !(r.p_t >= p - LOWER_SLACK) {
                fail(k, r.t, format!("P_t {} below P* {p}", r.p_t));
            }
            match r.cost_error {
                Some(e) if e == (r.sum_rho - p).abs() => {}
                Some(e) => fail(k, r.t, format!("cost_error {e} differs from |sum_rho - P*|")),
                None => fail(k, r.t, "cost_error missing although P* is known".into()),
            }
        }
        if !r.rho.is_empty() {
            let s: f64 = r.rho.iter().sum();
            if (s - r.sum_rho).abs() > 1e-9 * (1.0 + r.sum_rho.abs()) {
                fail(k, r.t, format!("rho columns sum to {s}, sum_rho is {}", r.sum_rho));
            }
        }
    }
    Ok(out)
}
