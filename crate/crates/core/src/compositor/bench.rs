use std::fmt::Write as _;

use crate::compositor::pipeline::StageTimings;
use crate::error::{Error, Result};

pub const BENCH_HEADER: &str = "n_workers,fetch_s,render_s,composite_s,merge_s,total_s";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub n_workers: usize,
    pub timings: StageTimings,
}

/// Runs `run(n)` `repeats` times per worker count and keeps the run with the
/// median total, so each row's stages still add up to its total.
pub fn bench_sweep(
    worker_counts: &[usize],
    repeats: usize,
    mut run: impl FnMut(usize) -> Result<StageTimings>,
) -> Result<Vec<BenchRow>> {
    if repeats == 0 {
        return Err(Error::Parameter("repeats must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(worker_counts.len());
    for &n in worker_counts {
        let mut runs = (0..repeats).map(|_| run(n)).collect::<Result<Vec<_>>>()?;
        runs.sort_by(|a, b| a.total.total_cmp(&b.total));
        rows.push(BenchRow {
            n_workers: n,
            timings: runs[(runs.len() - 1) / 2],
        });
    }
    Ok(rows)
}

pub fn write_bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(BENCH_HEADER);
    out.push('\n');
    for r in rows {
        let t = &r.timings;
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.n_workers, t.fetch, t.render, t.composite, t.merge, t.total
        );
    }
    out
}

pub fn read_bench_csv(text: &str) -> Result<Vec<BenchRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == BENCH_HEADER => {}
        _ => {
            return Err(Error::Document {
                line: 1,
                reason: format!("expected header {BENCH_HEADER}"),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let bad = |reason: String| Error::Document {
                line: i + 1,
                reason,
            };
            let cols: Vec<&str> = l.split(',').map(str::trim).collect();
            if cols.len() != 6 {
                return Err(bad(format!("expected 6 columns, got {}", cols.len())));
            }
            let n = cols[0]
                .parse()
                .map_err(|e| bad(format!("n_workers: {e}")))?;
            let v: Vec<f64> = cols[1..]
                .iter()
                .map(|c| c.parse::<f64>().map_err(|e| bad(format!("{c}: {e}"))))
                .collect::<Result<_>>()?;
            Ok(BenchRow {
                n_workers: n,
                timings: StageTimings {
                    fetch: v[0],
                    render: v[1],
                    composite: v[2],
                    merge: v[3],
                    total: v[4],
                },
            })
        })
        .collect()
}
