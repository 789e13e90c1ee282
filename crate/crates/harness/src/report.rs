//! Summaries and plot-ready series from run traces.

use crate::error::HarnessError;
use crate::run::{RunRecord, CSV_HEADER};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Gaps are clamped here before going on a log axis.
pub const GAP_FLOOR: f64 = 1e-16;

/// Reads a trace, naming the first missing column.
pub fn read_trace(path: &Path) -> Result<Vec<RunRecord>, HarnessError> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let headers = rdr.headers()?.clone();
    let mut idx = [0usize; 7];
    for (slot, col) in idx.iter_mut().zip(CSV_HEADER) {
        *slot = headers.iter().position(|h| h.trim() == col).ok_or_else(|| HarnessError::MissingColumn {
            path: path.display().to_string(),
            column: col.to_string(),
        })?;
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let field = |i: usize| row.get(idx[i]).unwrap_or("").trim();
        let bad = |i: usize| HarnessError::Config {
            line: row.position().map(|p| p.line() as usize),
            msg: format!("{}: bad `{}` value `{}`", path.display(), CSV_HEADER[i], field(i)),
        };
        let int = |i: usize| field(i).parse::<usize>().map_err(|_| bad(i));
        let float = |i: usize| field(i).parse::<f64>().map_err(|_| bad(i));
        out.push(RunRecord {
            method: field(0).to_string(),
            outer_iter: int(1)?,
            total_inner_iters: int(2)?,
            prox_evals: int(3)?,
            oracle_calls: int(4)?,
            elapsed_seconds: float(5)?,
            gap: float(6)?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub method: String,
    pub rows: usize,
    pub outer_iter: usize,
    pub total_inner_iters: usize,
    pub prox_evals: usize,
    pub elapsed_seconds: f64,
    pub final_gap: f64,
    pub best_gap: f64,
}

pub fn summarize(records: &[RunRecord]) -> Option<Summary> {
    let last = records.last()?;
    Some(Summary {
        method: last.method.clone(),
        rows: records.len(),
        outer_iter: last.outer_iter,
        total_inner_iters: last.total_inner_iters,
        prox_evals: last.prox_evals,
        elapsed_seconds: last.elapsed_seconds,
        final_gap: last.gap,
        best_gap: records.iter().map(|r| r.gap).fold(f64::INFINITY, f64::min),
    })
}

pub fn summary_table(summaries: &[Summary]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<22} {:>6} {:>10} {:>12} {:>12} {:>10} {:>12} {:>12}",
        "method", "rows", "outer", "inner", "prox", "seconds", "final gap", "best gap"
    );
    for r in summaries {
        let _ = writeln!(
            s,
            "{:<22} {:>6} {:>10} {:>12} {:>12} {:>10.3} {:>12.4e} {:>12.4e}",
            r.method, r.rows, r.outer_iter, r.total_inner_iters, r.prox_evals, r.elapsed_seconds, r.final_gap, r.best_gap
        );
    }
    s
}

/// Writes `series.csv` (all rows of all traces, unchanged) and three
/// two-column views with floored gaps: against time, prox evaluations and
/// outer iterations. Returns the written paths.
pub fn write_series(traces: &[Vec<RunRecord>], out_dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let all: Vec<RunRecord> = traces.iter().flatten().cloned().collect();
    let series = out_dir.join("series.csv");
    crate::run::write_csv(&series, &all)?;
    let mut paths = vec![series];

    type Axis = fn(&RunRecord) -> String;
    let views: [(&str, &str, Axis); 3] = [
        ("gap_vs_time.csv", "elapsed_seconds", |r| r.elapsed_seconds.to_string()),
        ("gap_vs_prox_evals.csv", "prox_evals", |r| r.prox_evals.to_string()),
        ("gap_vs_iterations.csv", "outer_iter", |r| r.outer_iter.to_string()),
    ];
    for (name, axis, get) in views {
        let path = out_dir.join(name);
        let file = std::fs::File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["method", axis, "gap"])?;
        for r in &all {
            w.write_record([r.method.clone(), get(r), r.gap.max(GAP_FLOOR).to_string()])?;
        }
        w.flush().map_err(|e| HarnessError::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(k: usize, gap: f64) -> RunRecord {
        RunRecord {
            method: "pds".into(),
            outer_iter: k,
            total_inner_iters: k,
            prox_evals: k,
            oracle_calls: k,
            elapsed_seconds: 0.5 * k as f64,
            gap,
        }
    }

    #[test]
    fn summary_tracks_last_and_best() {
        let s = summarize(&[rec(0, 1.0), rec(5, 0.1), rec(10, 0.2)]).unwrap();
        assert_eq!((s.rows, s.outer_iter, s.final_gap, s.best_gap), (3, 10, 0.2, 0.1));
        assert!(summarize(&[]).is_none());
    }

    #[test]
    fn views_floor_gaps_and_series_round_trips() {
        let dir = std::env::temp_dir().join(format!("pdbundle-report-{}", std::process::id()));
        let trace = vec![rec(0, 1.0), rec(1, 0.0), rec(2, -1e-20)];
        write_series(std::slice::from_ref(&trace), &dir).unwrap();
        assert_eq!(read_trace(&dir.join("series.csv")).unwrap(), trace);
        let text = std::fs::read_to_string(dir.join("gap_vs_prox_evals.csv")).unwrap();
        assert_eq!(text, "method,prox_evals,gap\npds,0,1\npds,1,0.0000000000000001\npds,2,0.0000000000000001\n");
        std::fs::remove_dir_all(dir).unwrap();
    }
}
