//! Trace persistence: `bin_index,time_s,counts` CSV plus a JSON sidecar.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::drift::{CoincidenceTrace, TraceMetadata, TRACE_SCHEMA_VERSION};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSidecar {
    pub schema: String,
    pub bin_duration_s: f64,
    pub n_bins: usize,
    pub true_visibility: Option<f64>,
    pub generation: Option<TraceMetadata>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    bin_index: usize,
    time_s: f64,
    counts: u64,
}

/// `trace.csv` → `trace.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes the CSV and its sidecar; returns both paths.
pub fn write_trace(csv_path: &Path, trace: &CoincidenceTrace) -> Result<Vec<PathBuf>> {
    let mut writer = csv::Writer::from_path(csv_path)?;
    for (i, &c) in trace.counts.iter().enumerate() {
        writer.serialize(TraceRow { bin_index: i, time_s: i as f64 * trace.bin_duration, counts: c })?;
    }
    writer.flush()?;
    let sidecar = TraceSidecar {
        schema: TRACE_SCHEMA_VERSION.to_string(),
        bin_duration_s: trace.bin_duration,
        n_bins: trace.len(),
        true_visibility: trace.true_visibility,
        generation: trace.metadata.clone(),
    };
    let json_path = sidecar_path(csv_path);
    super::write_json(&json_path, &sidecar)?;
    Ok(vec![csv_path.to_path_buf(), json_path])
}

/// Reads a trace CSV. The bin duration comes from the sidecar when present,
/// otherwise from the spacing of `time_s`.
pub fn read_trace(csv_path: &Path) -> Result<CoincidenceTrace> {
    let mut reader = csv::Reader::from_path(csv_path)?;
    let mut rows = Vec::new();
    for row in reader.deserialize::<TraceRow>() {
        rows.push(row?);
    }
    if rows.is_empty() {
        return Err(Error::InsufficientData(format!("{} holds no bins", csv_path.display())));
    }
    if rows.iter().enumerate().any(|(i, r)| r.bin_index != i) {
        return Err(Error::domain(format!("{}: bin_index must run 0, 1, 2, …", csv_path.display())));
    }
    let json_path = sidecar_path(csv_path);
    let sidecar: Option<TraceSidecar> = if json_path.exists() {
        let s: TraceSidecar = serde_json::from_str(&std::fs::read_to_string(&json_path)?)?;
        if s.schema != TRACE_SCHEMA_VERSION {
            return Err(Error::config(format!("unsupported trace schema {:?}", s.schema)));
        }
        Some(s)
    } else {
        None
    };
    let bin_duration = match (&sidecar, rows.get(1)) {
        (Some(s), _) => s.bin_duration_s,
        (None, Some(second)) => second.time_s - rows[0].time_s,
        (None, None) => {
            return Err(Error::config("single-bin trace without sidecar has no bin duration"));
        }
    };
    let mut trace = CoincidenceTrace::from_counts(bin_duration, rows.into_iter().map(|r| r.counts).collect())?;
    if let Some(s) = sidecar {
        trace.true_visibility = s.true_visibility;
        trace.metadata = s.generation;
    }
    Ok(trace)
}
