//! Timing harnesses: sketching cost by scheme, chunk size and thread count,
//! and per-epoch training cost on raw versus sketched data.

use std::io::{Cursor, Write};
use std::path::Path;
use std::time::Duration;

use bbmh_core::learners::TrainConfig;
use bbmh_core::{FamilyParams, Scheme, SketchHeader};

use crate::error::{Error, Result};
use crate::formats::SketchWriter;
use crate::libsvm::LibsvmOptions;
use crate::pipeline::{sketch_stream, PipelineConfig, PipelineStats};
use crate::source::{open_sets, RowSource};
use crate::train::{train, TrainOptions};

pub const SCHEMA_LINE: &str = "# bbmh-bench v1";

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

#[derive(Debug, Clone)]
pub struct PreprocessBench {
    pub schemes: Vec<Scheme>,
    pub dim: u64,
    pub k: u32,
    pub b: u8,
    pub chunk_sizes: Vec<usize>,
    pub threads: Vec<usize>,
    pub runs: usize,
    pub seed: u64,
}

/// Medians over runs of each phase's wall time, in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessRow {
    pub scheme: Scheme,
    pub chunk_size: usize,
    pub threads: usize,
    pub load_s: f64,
    pub compute_s: f64,
    pub write_s: f64,
}

impl PreprocessRow {
    pub fn total_s(&self) -> f64 {
        self.load_s + self.compute_s + self.write_s
    }
}

/// Sketches the corpus at `path` once per `(scheme, chunk size, threads)` and
/// run. Sketches go to memory so only the serialization cost is timed as
/// writing.
pub fn bench_preprocess(path: &Path, plan: &PreprocessBench) -> Result<Vec<PreprocessRow>> {
    if plan.runs == 0 {
        return Err(Error::Usage("need at least one run".into()));
    }
    let mut rows = Vec::new();
    for &scheme in &plan.schemes {
        let family = FamilyParams::new(scheme, plan.dim, plan.k, plan.seed).build()?;
        let header = SketchHeader::new(*family.header(), plan.b)?;
        for &chunk_size in &plan.chunk_sizes {
            for &threads in &plan.threads {
                let cfg = PipelineConfig { chunk_size, workers: threads };
                let mut runs: Vec<PipelineStats> = Vec::with_capacity(plan.runs);
                for _ in 0..plan.runs {
                    let (_, sets) = open_sets(path, LibsvmOptions::default())?;
                    let mut w = SketchWriter::new(Cursor::new(Vec::new()), header)?;
                    runs.push(sketch_stream(&family, sets, &mut w, cfg)?);
                    w.finish()?;
                }
                let phase =
                    |f: fn(&PipelineStats) -> Duration| median(runs.iter().map(|s| f(s).as_secs_f64()).collect());
                rows.push(PreprocessRow {
                    scheme,
                    chunk_size,
                    threads,
                    load_s: phase(|s| s.read),
                    compute_s: phase(|s| s.compute),
                    write_s: phase(|s| s.write),
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_preprocess_table<W: Write + ?Sized>(out: &mut W, rows: &[PreprocessRow]) -> std::io::Result<()> {
    writeln!(out, "{SCHEMA_LINE}")?;
    writeln!(out, "scheme\tchunk\tthreads\tload_s\tcompute_s\twrite_s")?;
    for r in rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}",
            r.scheme, r.chunk_size, r.threads, r.load_s, r.compute_s, r.write_s
        )?;
    }
    Ok(())
}

/// Mean per-epoch load and update seconds of one training run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochCost {
    pub load_s: f64,
    pub update_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochBench {
    pub raw_bytes: u64,
    pub hashed_bytes: u64,
    pub raw: Vec<EpochCost>,
    pub hashed: Vec<EpochCost>,
}

impl EpochBench {
    pub fn size_ratio(&self) -> f64 {
        self.raw_bytes as f64 / self.hashed_bytes as f64
    }

    /// Raw over hashed cost per run, for loading and for updating.
    pub fn run_ratios(&self) -> Vec<(f64, f64)> {
        self.raw.iter().zip(&self.hashed).map(|(r, h)| (r.load_s / h.load_s, r.update_s / h.update_s)).collect()
    }

    /// Median over runs of the load and update ratios.
    pub fn ratios(&self) -> (f64, f64) {
        let rs = self.run_ratios();
        (median(rs.iter().map(|r| r.0).collect()), median(rs.iter().map(|r| r.1).collect()))
    }
}

fn epoch_cost(source: &RowSource, cfg: TrainConfig) -> Result<EpochCost> {
    let opts = TrainOptions { cfg, evaluate: false, test: None };
    let out = train(source, &opts, |_| Ok(()))?;
    let n = out.epochs.len() as f64;
    Ok(EpochCost {
        load_s: out.epochs.iter().map(|e| e.load.as_secs_f64()).sum::<f64>() / n,
        update_s: out.epochs.iter().map(|e| e.update.as_secs_f64()).sum::<f64>() / n,
    })
}

/// Trains `runs` times on each of two versions of the same data.
pub fn bench_epochs(raw: &RowSource, hashed: &RowSource, cfg: TrainConfig, runs: usize) -> Result<EpochBench> {
    if runs == 0 {
        return Err(Error::Usage("need at least one run".into()));
    }
    let mut bench = EpochBench {
        raw_bytes: std::fs::metadata(raw.path())?.len(),
        hashed_bytes: std::fs::metadata(hashed.path())?.len(),
        raw: Vec::with_capacity(runs),
        hashed: Vec::with_capacity(runs),
    };
    for _ in 0..runs {
        bench.raw.push(epoch_cost(raw, cfg)?);
        bench.hashed.push(epoch_cost(hashed, cfg)?);
    }
    Ok(bench)
}

pub fn write_epoch_table<W: Write + ?Sized>(out: &mut W, bench: &EpochBench) -> std::io::Result<()> {
    writeln!(out, "{SCHEMA_LINE}")?;
    writeln!(out, "run\traw_load_s\traw_update_s\thashed_load_s\thashed_update_s\tload_ratio\tupdate_ratio")?;
    for (i, ((r, h), (lr, ur))) in bench.raw.iter().zip(&bench.hashed).zip(bench.run_ratios()).enumerate() {
        writeln!(
            out,
            "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.3}\t{:.3}",
            i + 1,
            r.load_s,
            r.update_s,
            h.load_s,
            h.update_s,
            lr,
            ur
        )?;
    }
    let (lr, ur) = bench.ratios();
    writeln!(
        out,
        "# raw_bytes={} hashed_bytes={} size_ratio={:.3} median_load_ratio={:.3} median_update_ratio={:.3}",
        bench.raw_bytes,
        bench.hashed_bytes,
        bench.size_ratio(),
        lr,
        ur
    )
}
