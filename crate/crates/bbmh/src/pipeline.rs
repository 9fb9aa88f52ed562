//! Chunked sketching in three phases per chunk: read `chunk_size` sets, compute
//! their minima on a pool of `workers` threads, write the packed records in
//! input order. Output does not depend on the chunk size or worker count.

use std::io::{Seek, Write};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use rayon::ThreadPool;

use bbmh_core::sketch::{compute_minima, PackedCodes, FLAG_EMPTY};
use bbmh_core::{FeatureSet, HashFamily};

use crate::error::{Error, Result};
use crate::formats::SketchWriter;

pub const DEFAULT_CHUNK_SIZE: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineConfig {
    pub chunk_size: usize,
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { chunk_size: DEFAULT_CHUNK_SIZE, workers: default_workers() }
    }
}

/// Hardware parallelism, or 1 when it cannot be queried.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Wall time of each phase, summed over chunks.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PipelineStats {
    pub chunks: u64,
    pub records: u64,
    pub empty_records: u64,
    pub read: Duration,
    pub compute: Duration,
    pub write: Duration,
}

impl PipelineStats {
    pub fn total(&self) -> Duration {
        self.read + self.compute + self.write
    }
}

/// One computed record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SketchRecord {
    pub label: i8,
    pub flags: u8,
    pub codes: Vec<u8>,
    /// Present only when the sink asked for minima.
    pub minima: Option<Vec<u64>>,
}

pub(crate) fn build_pool(workers: usize) -> Result<ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))
}

fn sketch_record(family: &HashFamily, b: u8, set: &FeatureSet, keep_minima: bool) -> SketchRecord {
    let mut minima = Vec::with_capacity(family.k());
    let nonempty = compute_minima(family, set.indices(), &mut minima);
    let codes = PackedCodes::pack(minima.iter().map(|&m| m as u32), family.k(), b).as_bytes().to_vec();
    SketchRecord {
        label: set.label(),
        flags: if nonempty { 0 } else { FLAG_EMPTY },
        codes,
        minima: keep_minima.then_some(minima),
    }
}

/// Runs the pipeline over `input`, handing every record to `sink` in input
/// order. Each set is validated against the family's `D`; errors carry the
/// 0-based record number.
pub fn sketch_stream_with<I, F>(
    family: &HashFamily,
    b: u8,
    input: I,
    cfg: PipelineConfig,
    keep_minima: bool,
    mut sink: F,
) -> Result<PipelineStats>
where
    I: IntoIterator<Item = Result<FeatureSet>>,
    F: FnMut(&SketchRecord) -> Result<()>,
{
    if cfg.chunk_size == 0 || cfg.workers == 0 {
        return Err(Error::Usage("chunk size and worker count must be at least 1".into()));
    }
    bbmh_core::SketchHeader::new(*family.header(), b)?;
    let pool = build_pool(cfg.workers)?;
    let mut input = input.into_iter();
    let mut stats = PipelineStats::default();
    let mut chunk: Vec<FeatureSet> = Vec::with_capacity(cfg.chunk_size.min(1 << 16));
    loop {
        let t = Instant::now();
        chunk.clear();
        for set in input.by_ref().take(cfg.chunk_size) {
            let record = stats.records + chunk.len() as u64;
            let set = set.map_err(|e| e.at_record(record))?;
            set.validate(family.dim()).map_err(|e| Error::from(e).at_record(record))?;
            chunk.push(set);
        }
        stats.read += t.elapsed();
        if chunk.is_empty() {
            break;
        }

        let t = Instant::now();
        let records: Vec<SketchRecord> = if cfg.workers == 1 {
            chunk.iter().map(|s| sketch_record(family, b, s, keep_minima)).collect()
        } else {
            pool.install(|| chunk.par_iter().map(|s| sketch_record(family, b, s, keep_minima)).collect())
        };
        stats.compute += t.elapsed();

        let t = Instant::now();
        for (i, rec) in records.iter().enumerate() {
            sink(rec).map_err(|e| e.at_record(stats.records + i as u64))?;
            stats.empty_records += (rec.flags & FLAG_EMPTY != 0) as u64;
        }
        stats.write += t.elapsed();
        stats.records += records.len() as u64;
        stats.chunks += 1;
    }
    Ok(stats)
}

/// Sketches `input` into a sketch file writer (and its minima file, if the
/// writer has one). The writer is not finished.
pub fn sketch_stream<I, W>(
    family: &HashFamily,
    input: I,
    out: &mut SketchWriter<W>,
    cfg: PipelineConfig,
) -> Result<PipelineStats>
where
    I: IntoIterator<Item = Result<FeatureSet>>,
    W: Write + Seek,
{
    if out.header().family != *family.header() {
        return Err(bbmh_core::Error::HeaderMismatch.into());
    }
    let b = out.header().b;
    let keep = out.wants_minima();
    sketch_stream_with(family, b, input, cfg, keep, |rec| {
        out.write_raw(rec.label, rec.flags, &rec.codes, rec.minima.as_deref())
    })
}
