//! Trace CSV and summary JSON files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::controller::TraceRecord;
use crate::error::{Error, Result};

use super::metrics::RunSummary;

pub const TRACE_HEADER: &str =
    "cycle,v_code,i_code,p_inst,p_avg,compare,step,direction,clock_request,active_ratio,pwm_out,duty";

fn csv_err(path: &Path, source: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes every `decimate`-th record (starting with the first) with a header row.
pub fn write_trace<W: Write>(
    out: W,
    trace: &[TraceRecord],
    decimate: u64,
) -> std::result::Result<(), csv::Error> {
    let mut writer = csv::Writer::from_writer(out);
    if trace.is_empty() {
        writer.write_record(TRACE_HEADER.split(','))?;
    }
    for rec in trace.iter().step_by(decimate.max(1) as usize) {
        writer.serialize(rec)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_trace_file(path: &Path, trace: &[TraceRecord], decimate: u64) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_trace(BufWriter::new(file), trace, decimate).map_err(|e| csv_err(path, e))
}

pub fn read_trace<R: std::io::Read>(input: R) -> std::result::Result<Vec<TraceRecord>, csv::Error> {
    csv::Reader::from_reader(input).deserialize().collect()
}

pub fn read_trace_file(path: &Path) -> Result<Vec<TraceRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_trace(std::io::BufReader::new(file)).map_err(|e| csv_err(path, e))
}

pub fn summary_to_string(summary: &RunSummary) -> String {
    let mut s = serde_json::to_string_pretty(summary).expect("summary serializes");
    s.push('\n');
    s
}

pub fn write_summary_file(path: &Path, summary: &RunSummary) -> Result<()> {
    std::fs::write(path, summary_to_string(summary)).map_err(|e| Error::io(path, e))
}

pub fn read_summary_file(path: &Path) -> Result<RunSummary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })
}

/// Two-column whitespace-separated `(x, y)` series.
pub fn write_series(
    path: &Path,
    x_label: &str,
    y_label: &str,
    points: &[(f64, f64)],
) -> Result<()> {
    let mut text = format!("# {x_label} {y_label}\n");
    for (x, y) in points {
        text.push_str(&format!("{x} {y}\n"));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
