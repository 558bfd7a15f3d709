//! CSV formats for waveforms, scores, forcing and graph dumps.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::detector::DetectionReport;
use crate::s2g::SubsequenceGraph;
use crate::wavesim::{SampleRate, Waveform};

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: {reason}")]
    Malformed { path: String, line: u64, reason: String },
}

/// Times keep 13 significant digits.
pub fn fmt_time(t: f64) -> String {
    format!("{t:.12e}")
}

/// Shortest text that parses back to the same `f64`.
pub fn fmt_value(v: f64) -> String {
    format!("{v:e}")
}

fn create(path: &Path) -> Result<BufWriter<File>, CsvError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CsvError::Io { path: path.display().to_string(), source })
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CsvError + '_ {
    move |source| CsvError::Io { path: path.display().to_string(), source }
}

fn write_rows<I>(path: &Path, header: &str, rows: I) -> Result<(), CsvError>
where
    I: IntoIterator<Item = String>,
{
    let mut out = create(path)?;
    writeln!(out, "{header}").map_err(io_err(path))?;
    for row in rows {
        writeln!(out, "{row}").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

pub fn write_waveform(w: &Waveform, path: &Path) -> Result<(), CsvError> {
    let x = w.primary();
    let labels = w.labels.as_ref();
    let header = if labels.is_some() { "time_s,i_primary,label" } else { "time_s,i_primary" };
    write_rows(
        path,
        header,
        x.iter().enumerate().map(|(i, v)| match labels {
            Some(l) => format!("{},{},{}", fmt_time(w.time(i)), fmt_value(*v), l[i]),
            None => format!("{},{}", fmt_time(w.time(i)), fmt_value(*v)),
        }),
    )
}

/// Parsed waveform plus the sample rate implied by its time column.
pub struct WaveformFile {
    pub waveform: Waveform,
    pub estimated_rate: f64,
}

impl WaveformFile {
    /// Replaces the estimated rate with the exact configured one.
    pub fn with_rate(mut self, rate: SampleRate) -> Waveform {
        self.waveform.sample_rate = rate;
        self.waveform
    }
}

fn reader(path: &Path) -> Result<csv::Reader<File>, CsvError> {
    let file = File::open(path).map_err(io_err(path))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(file))
}

fn malformed(path: &Path, line: u64, reason: impl Into<String>) -> CsvError {
    CsvError::Malformed { path: path.display().to_string(), line, reason: reason.into() }
}

fn parse_field(path: &Path, line: u64, name: &str, text: Option<&str>) -> Result<f64, CsvError> {
    let text = text.ok_or_else(|| malformed(path, line, format!("missing {name}")))?;
    let v: f64 = text.trim().parse().map_err(|_| malformed(path, line, format!("bad {name} value {text:?}")))?;
    if !v.is_finite() {
        return Err(malformed(path, line, format!("non-finite {name}")));
    }
    Ok(v)
}

pub fn read_waveform(path: &Path) -> Result<WaveformFile, CsvError> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| malformed(path, 1, e.to_string()))?.clone();
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    let with_labels = match names.as_slice() {
        ["time_s", "i_primary"] => false,
        ["time_s", "i_primary", "label"] => true,
        _ => return Err(malformed(path, 1, format!("expected header time_s,i_primary[,label], got {:?}", headers.as_slice()))),
    };
    let width = names.len();
    let mut times = Vec::new();
    let mut current = Vec::new();
    let mut labels = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != width {
            return Err(malformed(path, line, format!("expected {width} fields, got {}", rec.len())));
        }
        times.push(parse_field(path, line, "time_s", rec.get(0))?);
        current.push(parse_field(path, line, "i_primary", rec.get(1))?);
        if with_labels {
            match rec.get(2).map(str::trim) {
                Some("0") => labels.push(0),
                Some("1") => labels.push(1),
                other => return Err(malformed(path, line, format!("label must be 0 or 1, got {other:?}"))),
            }
        }
        if times.len() >= 2 && times[times.len() - 1] <= times[times.len() - 2] {
            return Err(malformed(path, line, "time_s must increase"));
        }
    }
    if times.len() < 2 {
        return Err(malformed(path, times.len() as u64 + 2, "need at least two samples"));
    }
    let n = times.len();
    let span = times[n - 1] - times[0];
    let mean_dt = span / (n - 1) as f64;
    for (i, w) in times.windows(2).enumerate() {
        let dt = w[1] - w[0];
        if (dt - mean_dt).abs() > 1e-2 * mean_dt {
            return Err(malformed(path, i as u64 + 3, format!("non-uniform sampling step {dt:e}")));
        }
    }
    let estimated_rate = 1.0 / mean_dt;
    let waveform = Waveform::from_primary(SampleRate(estimated_rate), times[0], current, with_labels.then_some(labels));
    Ok(WaveformFile { waveform, estimated_rate })
}

/// `time_s,anomaly_score,flagged` on the normalized score timeline.
pub fn write_scores(r: &DetectionReport, path: &Path) -> Result<(), CsvError> {
    let s = &r.score_series;
    write_rows(
        path,
        "time_s,anomaly_score,flagged",
        (0..s.len()).map(|i| format!("{},{},{}", fmt_time(s.timestamps[i]), fmt_value(-s.norm_scores[i]), u8::from(r.mask[i]))),
    )
}

/// `time_s,norm_score` of the raw graph scores.
pub fn write_norm_scores(r: &DetectionReport, path: &Path) -> Result<(), CsvError> {
    let s = &r.raw_scores;
    write_rows(
        path,
        "time_s,norm_score",
        (0..s.len()).map(|i| format!("{},{}", fmt_time(s.timestamps[i]), fmt_value(s.norm_scores[i]))),
    )
}

pub fn write_forcing(r: &DetectionReport, path: &Path) -> Result<(), CsvError> {
    let f = &r.forcing;
    write_rows(
        path,
        "time_s,forcing,forcing_magnitude",
        (0..f.forcing.len()).map(|i| format!("{},{},{}", fmt_time(f.timestamps[i]), fmt_value(f.forcing[i]), fmt_value(f.magnitude[i]))),
    )
}

pub fn write_graph(g: &SubsequenceGraph, nodes_path: &Path, edges_path: &Path) -> Result<(), CsvError> {
    let dim = g.nodes.first().map_or(0, |n| n.centroid.len());
    let mut header = String::from("node_id");
    for a in 0..dim {
        header.push_str(&format!(",centroid_{a}"));
    }
    header.push_str(",member_count");
    write_rows(
        nodes_path,
        &header,
        g.nodes.iter().map(|n| {
            let mut row = n.id.to_string();
            for c in &n.centroid {
                row.push(',');
                row.push_str(&fmt_value(*c));
            }
            row.push_str(&format!(",{}", n.member_count));
            row
        }),
    )?;
    write_rows(edges_path, "src,dst,weight", g.edges.iter().map(|(&(a, b), w)| format!("{a},{b},{w}")))
}

/// Header and raw text rows of a CSV file, kept verbatim.
pub struct TextTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl TextTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

pub fn read_text_table(path: &Path) -> Result<TextTable, CsvError> {
    let mut rdr = reader(path)?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| malformed(path, 1, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.iter().all(String::is_empty) {
        return Err(malformed(path, 1, "missing header"));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| malformed(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        if rec.len() != header.len() {
            let line = rec.position().map_or(0, |p| p.line());
            return Err(malformed(path, line, format!("expected {} fields, got {}", header.len(), rec.len())));
        }
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(TextTable { header, rows })
}

pub fn write_text_rows(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> Result<(), CsvError> {
    write_rows(path, header, rows)
}
