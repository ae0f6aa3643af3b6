//! Per-iteration trace files.
//!
//! Column contract (header is exact):
//!
//! | column       | meaning                                                   |
//! |--------------|-----------------------------------------------------------|
//! | `iteration`  | 1-based iteration number `k + 1`                          |
//! | `v_current`  | Bell value at the updated settings after this iteration   |
//! | `v_plus`     | value at the `+β_k Δ_k` probe                             |
//! | `v_minus`    | value at the `−β_k Δ_k` probe                             |
//! | `alpha`      | step gain `α_k`                                           |
//! | `beta`       | probe gain `β_k`                                          |
//! | `g`          | scalar gradient estimate                                  |
//! | `shots_used` | photon pairs spent by the two probes (0 when noiseless)   |

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use mbv_core::RunTrace;

pub const TRACE_HEADER: &str = "iteration,v_current,v_plus,v_minus,alpha,beta,g,shots_used";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub v_current: f64,
    pub v_plus: f64,
    pub v_minus: f64,
    pub alpha: f64,
    pub beta: f64,
    pub g: f64,
    pub shots_used: u64,
}

pub fn rows(trace: &RunTrace) -> Vec<TraceRow> {
    trace
        .records
        .iter()
        .map(|r| TraceRow {
            iteration: r.k + 1,
            v_current: r.v_current,
            v_plus: r.v_plus,
            v_minus: r.v_minus,
            alpha: r.alpha,
            beta: r.beta,
            g: r.g,
            shots_used: r.shots_used,
        })
        .collect()
}

pub fn write_rows<W: Write>(rows: &[TraceRow], out: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record(TRACE_HEADER.split(','))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace(trace: &RunTrace, path: &Path) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_rows(&rows(trace), std::io::BufWriter::new(file))
}

pub fn read_rows<R: Read>(input: R) -> anyhow::Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != TRACE_HEADER {
        bail!("unexpected trace header '{}'", header.join(","));
    }
    r.deserialize()
        .collect::<Result<Vec<TraceRow>, _>>()
        .map_err(Into::into)
}

pub fn read_trace(path: &Path) -> anyhow::Result<Vec<TraceRow>> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_rows(file).with_context(|| format!("reading trace {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(i: usize, v: f64) -> TraceRow {
        TraceRow {
            iteration: i,
            v_current: v,
            v_plus: v + 0.1,
            v_minus: v - 0.1,
            alpha: 0.2,
            beta: 0.2,
            g: 0.5,
            shots_used: 8,
        }
    }

    #[test]
    fn header_is_exact_and_round_trips() {
        let rs = vec![row(1, 2.0), row(2, 2.5)];
        let mut buf = Vec::new();
        write_rows(&rs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), TRACE_HEADER);
        assert_eq!(read_rows(buf.as_slice()).unwrap(), rs);
    }

    #[test]
    fn empty_trace_keeps_header() {
        let mut buf = Vec::new();
        write_rows(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim_end(), TRACE_HEADER);
    }

    #[test]
    fn wrong_header_is_rejected() {
        assert!(read_rows("a,b\n1,2\n".as_bytes()).is_err());
    }
}
