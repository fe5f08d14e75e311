//! File artifacts: atomic writes and the trace CSV.
//!
//! Trace format: header `step,neuron,vaxon_mV`, then one row per recorded
//! (step, neuron). Voltages are written in shortest round-trip form, so
//! reading a written trace reproduces every value bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::engine::{Trace, TraceMeta, TraceRow, TraceSink};
use crate::error::{Error, Result};

pub const TRACE_HEADER: &str = "step,neuron,vaxon_mV";

fn parent_dir(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

/// File written to a temporary sibling and renamed into place on commit.
pub struct AtomicWriter {
    path: PathBuf,
    inner: BufWriter<NamedTempFile>,
}

impl AtomicWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let tmp = NamedTempFile::new_in(parent_dir(path))?;
        Ok(AtomicWriter {
            path: path.to_path_buf(),
            inner: BufWriter::new(tmp),
        })
    }

    pub fn commit(self) -> Result<()> {
        let tmp = self.inner.into_inner().map_err(|e| e.into_error())?;
        tmp.as_file().sync_all()?;
        tmp.persist(&self.path).map_err(|e| e.error)?;
        Ok(())
    }
}

impl Write for AtomicWriter {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.inner.write(buf)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut w = AtomicWriter::create(path)?;
    w.write_all(bytes)?;
    w.commit()
}

/// Streams trace rows as CSV.
pub struct CsvTraceWriter<W: Write> {
    out: W,
}

impl<W: Write> CsvTraceWriter<W> {
    pub fn new(mut out: W) -> std::io::Result<Self> {
        writeln!(out, "{TRACE_HEADER}")?;
        Ok(CsvTraceWriter { out })
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> TraceSink for CsvTraceWriter<W> {
    fn record(&mut self, row: TraceRow) -> std::io::Result<()> {
        writeln!(self.out, "{},{},{}", row.step, row.neuron, row.vaxon_mv)
    }
}

pub fn write_trace(path: &Path, trace: &Trace) -> Result<()> {
    let mut w = CsvTraceWriter::new(AtomicWriter::create(path)?)?;
    for &row in &trace.rows {
        w.record(row)?;
    }
    w.into_inner().commit()
}

pub fn parse_trace(reader: impl BufRead, path: &Path) -> Result<Vec<TraceRow>> {
    let mut lines = reader.lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h.trim_end() == TRACE_HEADER => {}
        Some((_, Err(e))) => return Err(e.into()),
        _ => return Err(Error::parse(path, 1, 1, format!("expected header {TRACE_HEADER:?}"))),
    }
    let mut rows = Vec::new();
    for (r, line) in lines {
        let line = line?;
        let row = r + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        if fields.len() != 3 {
            return Err(Error::parse(path, row, fields.len().min(3) + 1, format!("expected 3 fields, found {}", fields.len())));
        }
        let err = |col: usize| Error::parse(path, row, col, format!("invalid value {:?}", fields[col - 1]));
        rows.push(TraceRow {
            step: fields[0].parse().map_err(|_| err(1))?,
            neuron: fields[1].parse().map_err(|_| err(2))?,
            vaxon_mv: fields[2].parse().map_err(|_| err(3))?,
        });
    }
    Ok(rows)
}

/// Reads a trace CSV. Metadata comes from the sidecar written by
/// [`write_meta`] when present.
pub fn read_trace(path: &Path) -> Result<Trace> {
    let rows = parse_trace(BufReader::new(File::open(path)?), path)?;
    let meta_path = meta_path(path);
    let meta = if meta_path.exists() {
        read_meta(&meta_path)?
    } else {
        TraceMeta::default()
    };
    Ok(Trace { rows, meta })
}

/// Sidecar location for a trace's metadata: `<trace>.meta.json`.
pub fn meta_path(trace_path: &Path) -> PathBuf {
    let mut s = trace_path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn write_meta(path: &Path, meta: &TraceMeta) -> Result<()> {
    write_atomic(path, serde_json::to_string_pretty(meta)?.as_bytes())
}

pub fn read_meta(path: &Path) -> Result<TraceMeta> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}
