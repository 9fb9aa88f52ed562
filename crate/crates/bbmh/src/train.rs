//! Epoch-by-epoch training from files, timing data loading separately from
//! the SGD updates.

use std::io::Write;
use std::time::{Duration, Instant};

use bbmh_core::learners::{accuracy, shuffle_for_epoch, LinearModel, OwnedRow, TrainConfig, Trainer};

use crate::error::Result;
use crate::source::RowSource;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    pub epoch: u32,
    /// Regularized objective on the training data after the epoch.
    pub train_obj: Option<f64>,
    pub test_acc: Option<f64>,
    /// Reading and decoding rows.
    pub load: Duration,
    /// SGD updates only.
    pub update: Duration,
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub cfg: TrainConfig,
    /// Compute the training objective after each epoch (one extra, untimed pass).
    pub evaluate: bool,
    pub test: Option<RowSource>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: LinearModel,
    pub lambda: f64,
    pub eta0: f64,
    pub epochs: Vec<EpochMetrics>,
}

/// Column header of the metrics table.
pub const METRICS_HEADER: &str = "epoch\ttrain_obj\ttest_acc\tload_seconds\tupdate_seconds";

pub fn write_metrics_row<W: Write + ?Sized>(out: &mut W, m: &EpochMetrics) -> std::io::Result<()> {
    let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_owned(), |x| format!("{x:.6}"));
    writeln!(
        out,
        "{}\t{}\t{}\t{:.6}\t{:.6}",
        m.epoch,
        opt(m.train_obj),
        opt(m.test_acc),
        m.load.as_secs_f64(),
        m.update.as_secs_f64()
    )
}

fn objective(source: &RowSource, model: &LinearModel, lambda: f64) -> Result<f64> {
    let mut reader = source.reader()?;
    let mut row = OwnedRow::default();
    let (mut sum, mut n) = (0.0, 0usize);
    while reader.next_into(&mut row)? {
        if row.flagged {
            continue;
        }
        let r = row.as_row();
        let y = if r.label > 0 { 1.0 } else { -1.0 };
        sum += model.loss().value(y * model.dot(&r)?);
        n += 1;
    }
    let mean = if n == 0 { 0.0 } else { sum / n as f64 };
    Ok(0.5 * lambda * model.squared_norm() + mean)
}

fn test_accuracy(source: &RowSource, model: &LinearModel) -> Result<f64> {
    let rows = source.read_all()?;
    Ok(accuracy(model, rows.iter().map(OwnedRow::as_row))?)
}

/// Trains on `source`, one pass per epoch in stored order (or a seeded
/// shuffle, which holds the rows in memory). `lambda` comes from the config,
/// with `n` taken as the number of records in the file. `on_epoch` sees each
/// epoch's metrics as soon as they are known.
pub fn train<F>(source: &RowSource, opts: &TrainOptions, mut on_epoch: F) -> Result<TrainOutcome>
where
    F: FnMut(&EpochMetrics) -> Result<()>,
{
    let cfg = opts.cfg;
    cfg.validate()?;
    let calibration = if cfg.eta0.is_none() { source.head(cfg.calibration_size)? } else { Vec::new() };
    let mut trainer = Trainer::new(source.dim(), source.len() as usize, cfg, &calibration)?;
    drop(calibration);

    let mut memory: Option<(Vec<OwnedRow>, Vec<usize>)> = None;
    let mut epochs = Vec::with_capacity(cfg.epochs as usize);
    for epoch in 1..=cfg.epochs {
        trainer.begin_epoch();
        let (mut load, mut update) = (Duration::ZERO, Duration::ZERO);
        if cfg.shuffle {
            if memory.is_none() {
                let t = Instant::now();
                let rows = source.read_all()?;
                let order = (0..rows.len()).collect();
                memory = Some((rows, order));
                load += t.elapsed();
            }
            let (rows, order) = memory.as_mut().unwrap();
            let t = Instant::now();
            shuffle_for_epoch(order, cfg.seed, epoch);
            for &i in order.iter() {
                trainer.step(&rows[i].as_row())?;
            }
            update += t.elapsed();
        } else {
            let t = Instant::now();
            let mut reader = source.reader()?;
            load += t.elapsed();
            let mut row = OwnedRow::default();
            loop {
                let t = Instant::now();
                let more = reader.next_into(&mut row)?;
                load += t.elapsed();
                if !more {
                    break;
                }
                let t = Instant::now();
                trainer.step(&row.as_row())?;
                update += t.elapsed();
            }
        }
        let train_obj = if opts.evaluate { Some(objective(source, trainer.model(), trainer.lambda())?) } else { None };
        let test_acc = match &opts.test {
            Some(test) => Some(test_accuracy(test, trainer.model())?),
            None => None,
        };
        let m = EpochMetrics { epoch, train_obj, test_acc, load, update };
        on_epoch(&m)?;
        epochs.push(m);
    }
    let (lambda, eta0) = (trainer.lambda(), trainer.eta0());
    Ok(TrainOutcome { model: trainer.into_model(), lambda, eta0, epochs })
}
