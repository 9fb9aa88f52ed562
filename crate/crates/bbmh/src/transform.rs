//! Per-record transforms from one file to another: sketch expansion and VW
//! projection.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use bbmh_core::expansion::{expand_codes_into, expanded_dim};
use bbmh_core::sketch::unpack_code;
use bbmh_core::vw::{vw_project, VwConfig};
use bbmh_core::FeatureSet;

use crate::error::Result;
use crate::formats::{CorpusWriter, RawRecord, SketchReader};
use crate::libsvm::{write_binary_row, write_row};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowFormat {
    /// LibSVM text with 1-based indices.
    Libsvm,
    /// Binary corpus file.
    Corpus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TransformStats {
    pub records: u64,
    /// Empty-set records left out of the output.
    pub skipped: u64,
}

/// Expands every sketch record into its `2^b * k` binary row, in order.
/// Records of empty sets have no expansion and are skipped.
pub fn expand_stream(sketch: &Path, out: &Path, format: RowFormat) -> Result<TransformStats> {
    let mut reader = SketchReader::open(sketch, false)?;
    let header = *reader.header();
    let dim = expanded_dim(header.k(), header.b)?;
    let mut stats = TransformStats::default();
    let mut rec = RawRecord::default();
    let mut ones = Vec::with_capacity(header.k());
    let mut sink = Sink::create(out, format, dim)?;
    while reader.next_raw(&mut rec)? {
        if rec.is_empty_set() {
            stats.skipped += 1;
            continue;
        }
        ones.clear();
        expand_codes_into((0..header.k()).map(|j| unpack_code(&rec.codes, j, header.b)), header.b, &mut ones);
        sink.write(&ones, rec.label)?;
        stats.records += 1;
    }
    sink.finish()?;
    Ok(stats)
}

enum Sink {
    Text(BufWriter<File>),
    Corpus(CorpusWriter<BufWriter<File>>),
}

impl Sink {
    fn create(path: &Path, format: RowFormat, dim: u64) -> Result<Sink> {
        Ok(match format {
            RowFormat::Libsvm => Sink::Text(BufWriter::with_capacity(1 << 20, File::create(path)?)),
            RowFormat::Corpus => Sink::Corpus(CorpusWriter::create(path, dim)?),
        })
    }

    fn write(&mut self, ones: &[u32], label: i8) -> Result<()> {
        match self {
            Sink::Text(w) => write_binary_row(w, ones, label)?,
            Sink::Corpus(w) => w.write(ones, label)?,
        }
        Ok(())
    }

    fn finish(self) -> Result<()> {
        match self {
            Sink::Text(mut w) => w.flush()?,
            Sink::Corpus(w) => {
                w.finish()?;
            }
        }
        Ok(())
    }
}

/// Projects every set into `cfg.bins()` signed bins and writes LibSVM rows
/// with real values.
pub fn vw_project_stream<I>(sets: I, cfg: &VwConfig, out: &Path) -> Result<TransformStats>
where
    I: IntoIterator<Item = Result<FeatureSet>>,
{
    let mut w = BufWriter::with_capacity(1 << 20, File::create(out)?);
    let mut stats = TransformStats::default();
    for (i, set) in sets.into_iter().enumerate() {
        let set = set.map_err(|e| e.at_record(i as u64))?;
        let v = vw_project(cfg, &set);
        write_row(&mut w, &v.indices, &v.values, set.label())?;
        stats.records += 1;
    }
    w.flush()?;
    Ok(stats)
}
