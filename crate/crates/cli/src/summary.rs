use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use crate::trace::read_trace;

/// Aggregate of final values. `std` is the population standard deviation
/// (divides by the number of values).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub final_values: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub total_shots: u64,
}

impl Summary {
    pub fn from_values(final_values: Vec<f64>, total_shots: u64) -> anyhow::Result<Self> {
        if final_values.is_empty() {
            bail!("nothing to summarize");
        }
        if final_values.iter().any(|v| !v.is_finite()) {
            bail!("non-finite final value");
        }
        let n = final_values.len() as f64;
        let mean = final_values.iter().sum::<f64>() / n;
        let var = final_values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let min = final_values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = final_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            final_values,
            mean,
            std: var.sqrt(),
            min,
            max,
            total_shots,
        })
    }
}

/// Summarizes trace files: the final value of each is the `v_current` of its
/// last row, and `total_shots` is the sum of every `shots_used` column.
pub fn summarize<P: AsRef<Path>>(traces: &[P]) -> anyhow::Result<Summary> {
    if traces.is_empty() {
        bail!("summarize needs at least one trace file");
    }
    let mut finals = Vec::with_capacity(traces.len());
    let mut shots = 0u64;
    for path in traces {
        let path = path.as_ref();
        let rows = read_trace(path)?;
        let last = rows
            .last()
            .with_context(|| format!("trace {} has no rows", path.display()))?;
        finals.push(last.v_current);
        shots += rows.iter().map(|r| r.shots_used).sum::<u64>();
    }
    Summary::from_values(finals, shots)
}

/// Writes JSON to `path` through a temporary sibling so readers never see a
/// half-written file.
pub fn write_json_atomic<T: Serialize>(value: &T, path: &Path) -> anyhow::Result<()> {
    let tmp: PathBuf = {
        let mut name = path.file_name().unwrap_or_default().to_os_string();
        name.push(".tmp");
        path.with_file_name(name)
    };
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(&tmp, text + "\n").with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}
