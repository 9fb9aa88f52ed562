//! LibSVM text rows: `label idx:val idx:val ...` with 1-based, ascending
//! indices. Indices are 0-based everywhere else in the crate.

use std::io::{BufRead, Write};

use bbmh_core::learners::OwnedRow;
use bbmh_core::FeatureSet;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LibsvmOptions {
    /// Reject feature values other than 1.
    pub binary: bool,
    /// Accept `0` as the negative label.
    pub zero_one_labels: bool,
}

impl Default for LibsvmOptions {
    fn default() -> Self {
        LibsvmOptions { binary: true, zero_one_labels: false }
    }
}

fn malformed(line: u64, reason: impl Into<String>) -> Error {
    Error::MalformedLine { line, reason: reason.into() }
}

fn parse_label(token: &str, line: u64, zero_one: bool) -> Result<i8> {
    let v: f64 = token.parse().map_err(|_| malformed(line, format!("label {token:?} is not a number")))?;
    match v {
        1.0 => Ok(1),
        -1.0 => Ok(-1),
        0.0 if zero_one => Ok(-1),
        _ => Err(Error::Core(bbmh_core::Error::NonBinaryLabel(v)).at_record(line)),
    }
}

/// Parses one line into a row keeping feature values. `values` is `None` when
/// every value equals 1. Zero-valued features are dropped.
pub fn parse_libsvm_row(text: &str, line: u64, zero_one_labels: bool) -> Result<OwnedRow> {
    let text = text.split('#').next().unwrap_or("");
    let mut tokens = text.split_ascii_whitespace();
    let label = parse_label(tokens.next().ok_or_else(|| malformed(line, "empty line"))?, line, zero_one_labels)?;
    let mut indices = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut all_ones = true;
    let mut prev: Option<u64> = None;
    for token in tokens {
        let (i, v) =
            token.split_once(':').ok_or_else(|| malformed(line, format!("expected idx:val, got {token:?}")))?;
        let index: u64 = i.parse().map_err(|_| malformed(line, format!("bad index {i:?}")))?;
        if index == 0 || index > 1 << 32 {
            return Err(malformed(line, format!("index {index} outside 1..=2^32")));
        }
        if prev.is_some_and(|p| index <= p) {
            return Err(Error::NonAscendingIndex { line, index });
        }
        prev = Some(index);
        let value: f64 = v.parse().map_err(|_| malformed(line, format!("bad value {v:?}")))?;
        if !value.is_finite() {
            return Err(malformed(line, format!("value {v:?} is not finite")));
        }
        if value == 0.0 {
            continue;
        }
        all_ones &= value == 1.0;
        indices.push((index - 1) as u32);
        values.push(value);
    }
    Ok(OwnedRow { indices, values: (!all_ones).then_some(values), label, flagged: false })
}

/// Parses one line of binary data.
///
/// ```
/// use bbmh::libsvm::{parse_libsvm, LibsvmOptions};
/// let set = parse_libsvm("+1 3:1 7:1", 1, LibsvmOptions::default()).unwrap();
/// assert_eq!(set.indices(), &[2, 6]);
/// assert_eq!(set.label(), 1);
/// ```
pub fn parse_libsvm(text: &str, line: u64, opts: LibsvmOptions) -> Result<FeatureSet> {
    let row = parse_libsvm_row(text, line, opts.zero_one_labels)?;
    if opts.binary {
        if let Some(values) = &row.values {
            if let Some(v) = values.iter().find(|&&v| v != 1.0) {
                return Err(Error::NonBinaryValue { line, value: v.to_string() });
            }
        }
    }
    Ok(FeatureSet::new_unchecked(row.indices, row.label))
}

/// Streams rows from LibSVM text, skipping blank lines. Line numbers are
/// 1-based and count every physical line.
pub struct LibsvmReader<R> {
    input: R,
    buf: String,
    line: u64,
}

impl<R: BufRead> LibsvmReader<R> {
    pub fn new(input: R) -> Self {
        LibsvmReader { input, buf: String::new(), line: 0 }
    }

    /// Next non-blank line, or `None` at end of input.
    fn next_line(&mut self) -> Result<Option<&str>> {
        loop {
            self.buf.clear();
            if self.input.read_line(&mut self.buf)? == 0 {
                return Ok(None);
            }
            self.line += 1;
            if !self.buf.trim().is_empty() {
                return Ok(Some(self.buf.as_str()));
            }
        }
    }

    pub fn next_row(&mut self, zero_one_labels: bool) -> Result<Option<OwnedRow>> {
        if self.next_line()?.is_none() {
            return Ok(None);
        }
        parse_libsvm_row(&self.buf, self.line, zero_one_labels).map(Some)
    }

    pub fn next_set(&mut self, opts: LibsvmOptions) -> Result<Option<FeatureSet>> {
        if self.next_line()?.is_none() {
            return Ok(None);
        }
        parse_libsvm(&self.buf, self.line, opts).map(Some)
    }

    pub fn sets(self, opts: LibsvmOptions) -> LibsvmSets<R> {
        LibsvmSets { reader: self, opts }
    }
}

pub struct LibsvmSets<R> {
    reader: LibsvmReader<R>,
    opts: LibsvmOptions,
}

impl<R: BufRead> Iterator for LibsvmSets<R> {
    type Item = Result<FeatureSet>;

    fn next(&mut self) -> Option<Self::Item> {
        self.reader.next_set(self.opts).transpose()
    }
}

fn write_label<W: Write>(out: &mut W, label: i8) -> std::io::Result<()> {
    match label {
        1 => out.write_all(b"+1"),
        -1 => out.write_all(b"-1"),
        other => write!(out, "{other}"),
    }
}

/// Writes a binary row: every listed feature gets value 1.
pub fn write_binary_row<W: Write>(out: &mut W, indices: &[u32], label: i8) -> std::io::Result<()> {
    write_label(out, label)?;
    for &i in indices {
        write!(out, " {}:1", i as u64 + 1)?;
    }
    out.write_all(b"\n")
}

/// Writes a real-valued row.
pub fn write_row<W: Write>(out: &mut W, indices: &[u32], values: &[f64], label: i8) -> std::io::Result<()> {
    write_label(out, label)?;
    for (&i, &v) in indices.iter().zip(values) {
        write!(out, " {}:{}", i as u64 + 1, v)?;
    }
    out.write_all(b"\n")
}
