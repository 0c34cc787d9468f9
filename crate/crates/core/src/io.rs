//! Signal, matrix and trace persistence.
//!
//! WAV files are 16-bit PCM, normalized by 32768 on read. CSV files hold
//! decimal text with 17 significant digits so every `f64` survives a round
//! trip exactly.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::metrics::{MetricTrace, TraceEntry};
use crate::signals::{MixingMatrix, SignalMatrix};

const PCM_SCALE: f64 = 32768.0;
pub const TRACE_HEADER: &str = "iteration,epoch,pi,grad_norm";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalFormat {
    WavPcm16,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalFile {
    pub path: PathBuf,
    pub format: SignalFormat,
}

impl SignalFile {
    pub fn new(path: impl Into<PathBuf>, format: SignalFormat) -> Self {
        SignalFile {
            path: path.into(),
            format,
        }
    }

    /// Picks the format from the extension: `.wav` is PCM16, anything else CSV.
    pub fn from_path(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        let is_wav = path
            .extension()
            .map(|e| e.eq_ignore_ascii_case("wav"))
            .unwrap_or(false);
        let format = if is_wav {
            SignalFormat::WavPcm16
        } else {
            SignalFormat::Csv
        };
        SignalFile { path, format }
    }
}

/// Formats with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone)]
pub struct ReadSignals {
    pub signals: SignalMatrix,
    /// Non-fatal notes, e.g. truncation to the shortest input.
    pub warnings: Vec<String>,
}

/// Reads and stacks the channels of every file. Inputs of unequal length
/// are an error unless `truncate` is set, in which case all channels are
/// cut to the shortest and a warning is recorded.
pub fn read_signals(files: &[SignalFile], truncate: bool) -> Result<ReadSignals> {
    if files.is_empty() {
        return Err(Error::invalid("no signal files given"));
    }
    let mut channels: Vec<Vec<f64>> = Vec::new();
    let mut rate: Option<f64> = None;
    for file in files {
        let (chs, file_rate) = match file.format {
            SignalFormat::WavPcm16 => read_wav(&file.path)?,
            SignalFormat::Csv => (read_csv_columns(&file.path)?, None),
        };
        if let Some(r) = file_rate {
            match rate {
                Some(prev) if prev != r => {
                    return Err(Error::invalid(format!(
                        "{}: sample rate {r} differs from {prev}",
                        file.path.display()
                    )))
                }
                _ => rate = Some(r),
            }
        }
        channels.extend(chs);
    }
    if channels.is_empty() {
        return Err(Error::invalid("input files contain no channels"));
    }

    let mut warnings = Vec::new();
    let min_len = channels.iter().map(Vec::len).min().unwrap_or(0);
    let max_len = channels.iter().map(Vec::len).max().unwrap_or(0);
    if min_len != max_len {
        if !truncate {
            return Err(Error::invalid(format!(
                "channel lengths differ ({min_len} to {max_len} samples); enable truncation to use the shortest"
            )));
        }
        warnings.push(format!(
            "truncated channels from up to {max_len} to {min_len} samples"
        ));
    }
    if min_len == 0 {
        return Err(Error::invalid("input channels are empty"));
    }
    let n = channels.len();
    let data = Array2::from_shape_fn((n, min_len), |(c, i)| channels[c][i]);
    Ok(ReadSignals {
        signals: SignalMatrix::new(data, rate.unwrap_or(1.0))?,
        warnings,
    })
}

fn read_wav(path: &Path) -> Result<(Vec<Vec<f64>>, Option<f64>)> {
    let wav_err = |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = hound::WavReader::open(path).map_err(wav_err)?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::invalid(format!(
            "{}: expected 16-bit PCM, found {} bits {:?}",
            path.display(),
            spec.bits_per_sample,
            spec.sample_format
        )));
    }
    let n = spec.channels as usize;
    if n == 0 {
        return Err(Error::invalid(format!("{}: zero channels", path.display())));
    }
    let mut channels = vec![Vec::with_capacity(reader.len() as usize / n); n];
    for (i, sample) in reader.samples::<i16>().enumerate() {
        let s = sample.map_err(wav_err)?;
        channels[i % n].push(s as f64 / PCM_SCALE);
    }
    Ok((channels, Some(spec.sample_rate as f64)))
}

fn parse_row(path: &Path, line_no: usize, line: &str) -> Result<Vec<f64>> {
    line.split(',')
        .map(|field| {
            field.trim().parse::<f64>().map_err(|_| {
                Error::parse(path, line_no, format!("not a number: {:?}", field.trim()))
            })
        })
        .collect()
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Column-per-channel CSV; a non-numeric first line is taken as a header.
fn read_csv_columns(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = read_text(path)?;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = match parse_row(path, idx + 1, line) {
            Ok(row) => row,
            Err(_) if idx == 0 => continue,
            Err(e) => return Err(e),
        };
        if columns.is_empty() {
            columns = vec![Vec::new(); row.len()];
        } else if row.len() != columns.len() {
            return Err(Error::parse(
                path,
                idx + 1,
                format!("expected {} columns, found {}", columns.len(), row.len()),
            ));
        }
        for (col, v) in columns.iter_mut().zip(row) {
            col.push(v);
        }
    }
    Ok(columns)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WriteReport {
    /// Samples outside [-1, 1] that were clipped (WAV only).
    pub clipped: usize,
}

pub fn write_signals(x: &SignalMatrix, file: &SignalFile) -> Result<WriteReport> {
    match file.format {
        SignalFormat::WavPcm16 => write_wav(x, &file.path),
        SignalFormat::Csv => {
            write_csv_columns(x.data(), &file.path)?;
            Ok(WriteReport::default())
        }
    }
}

fn write_wav(x: &SignalMatrix, path: &Path) -> Result<WriteReport> {
    let channels = u16::try_from(x.channels())
        .map_err(|_| Error::invalid("too many channels for a WAV file"))?;
    let rate = x.sample_rate_hz().round();
    if !(1.0..=u32::MAX as f64).contains(&rate) {
        return Err(Error::invalid(format!(
            "sample rate {} cannot be stored in a WAV header",
            x.sample_rate_hz()
        )));
    }
    let spec = hound::WavSpec {
        channels,
        sample_rate: rate as u32,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let wav_err = |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(wav_err)?;
    let mut clipped = 0;
    let data = x.data();
    for n in 0..x.samples() {
        for c in 0..x.channels() {
            let v = data[[c, n]];
            if v.abs() > 1.0 {
                clipped += 1;
            }
            let q = (v.clamp(-1.0, 1.0) * PCM_SCALE)
                .round()
                .clamp(i16::MIN as f64, i16::MAX as f64);
            writer.write_sample(q as i16).map_err(wav_err)?;
        }
    }
    writer.finalize().map_err(wav_err)?;
    Ok(WriteReport { clipped })
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_csv_columns(x: ArrayView2<'_, f64>, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    let header: Vec<String> = (1..=x.nrows()).map(|c| format!("channel_{c}")).collect();
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    for col in x.columns() {
        let row: Vec<String> = col.iter().map(|&v| format_f64(v)).collect();
        writeln!(out, "{}", row.join(",")).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Writes a trace as `iteration,epoch,pi,grad_norm`, absent values empty.
pub fn write_trace(trace: &MetricTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    let opt = |v: Option<f64>| v.map(format_f64).unwrap_or_default();
    writeln!(out, "{TRACE_HEADER}").map_err(io)?;
    for e in trace.entries() {
        writeln!(
            out,
            "{},{},{},{}",
            e.iteration,
            e.epoch,
            opt(e.pi),
            opt(e.grad_norm)
        )
        .map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<MetricTrace> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == TRACE_HEADER => {}
        _ => {
            return Err(Error::parse(
                path,
                1,
                format!("expected header {TRACE_HEADER:?}"),
            ))
        }
    }
    let mut trace = MetricTrace::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::parse(path, line_no, "expected 4 fields"));
        }
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(path, line_no, format!("bad integer {s:?}")))
        };
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse::<f64>()
                    .map(Some)
                    .map_err(|_| Error::parse(path, line_no, format!("bad number {s:?}")))
            }
        };
        trace
            .push(TraceEntry {
                iteration: int(fields[0])?,
                epoch: int(fields[1])?,
                pi: opt(fields[2])?,
                grad_norm: opt(fields[3])?,
            })
            .map_err(|e| Error::parse(path, line_no, e.to_string()))?;
    }
    Ok(trace)
}

/// Plain matrix CSV, one row per line, no header.
pub fn write_matrix_csv(a: ArrayView2<'_, f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    for row in a.rows() {
        let cells: Vec<String> = row.iter().map(|&v| format_f64(v)).collect();
        writeln!(out, "{}", cells.join(",")).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = parse_row(path, idx + 1, line)?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::parse(
                    path,
                    idx + 1,
                    format!("ragged row: {} values, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::parse(path, 1, "empty matrix"));
    }
    let cols = rows[0].len();
    Ok(Array2::from_shape_fn((rows.len(), cols), |(i, j)| {
        rows[i][j]
    }))
}

/// [`read_matrix_csv`] plus the square/finite checks of a mixing matrix.
pub fn read_mixing_matrix(path: impl AsRef<Path>) -> Result<MixingMatrix> {
    MixingMatrix::new(read_matrix_csv(path)?)
}
