//! Trace CSV writer and reader. Numbers use the shortest decimal that
//! round-trips, so a reread trace is bit-identical to the in-memory one.

use std::path::Path;

use minmax_core::harness::RunTrace;

use crate::error::CliError;

pub const TRACE_HEADER: [&str; 5] = ["t", "sum_rho", "P_t", "cost_error", "max_violation"];

pub fn write_trace(path: &Path, trace: &RunTrace<f64>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    let n_rho = trace.rows.first().and_then(|r| r.rho.as_ref()).map_or(0, Vec::len);
    let mut header: Vec<String> = TRACE_HEADER.iter().map(|s| s.to_string()).collect();
    header.extend((0..n_rho).map(|i| format!("rho_{i}")));
    w.write_record(&header).map_err(csv_io)?;
    for row in &trace.rows {
        let mut rec = vec![
            row.t.to_string(),
            row.sum_rho.to_string(),
            row.p_t.to_string(),
            row.cost_error.map(|e| e.to_string()).unwrap_or_default(),
            row.max_violation.to_string(),
        ];
        if let Some(rho) = &row.rho {
            rec.extend(rho.iter().map(f64::to_string));
        }
        w.write_record(&rec).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e.to_string()))
}

/// One parsed row of `trace.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub t: usize,
    pub sum_rho: f64,
    pub p_t: f64,
    pub cost_error: Option<f64>,
    pub max_violation: f64,
    pub rho: Vec<f64>,
}

pub fn read_trace(path: &Path) -> Result<Vec<CsvRow>, CliError> {
    let malformed = |msg: String| CliError::Malformed { path: path.display().to_string(), msg };
    let mut r = csv::Reader::from_path(path).map_err(|e| malformed(e.to_string()))?;
    let header = r.headers().map_err(|e| malformed(e.to_string()))?.clone();
    if header.len() < TRACE_HEADER.len() || header.iter().zip(TRACE_HEADER).any(|(a, b)| a != b) {
        return Err(malformed(format!("expected header starting with {}", TRACE_HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for (idx, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| malformed(e.to_string()))?;
        let num = |k: usize| -> Result<f64, CliError> {
            rec.get(k)
                .unwrap_or("")
                .parse::<f64>()
                .map_err(|e| malformed(format!("row {idx}, column {}: {e}", header.get(k).unwrap_or("?"))))
        };
        let t = rec.get(0).unwrap_or("").parse::<usize>().map_err(|e| malformed(format!("row {idx}, column t: {e}")))?;
        let cost_error = match rec.get(3) {
            Some("") | None => None,
            Some(_) => Some(num(3)?),
        };
        let rho = (TRACE_HEADER.len()..rec.len()).map(num).collect::<Result<_, _>>()?;
        rows.push(CsvRow { t, sum_rho: num(1)?, p_t: num(2)?, cost_error, max_violation: num(4)?, rho });
    }
    if rows.is_empty() {
        return Err(malformed("trace has no rows".into()));
    }
    Ok(rows)
}
