//! Online linear learners: SGD for the L2-regularized hinge and logistic
//! objectives, with optional averaging.
//!
//! The objective is `lambda/2 |w|^2 + (1/n) sum_i loss(y_i w.x_i)`. One step
//! on `(x, y)` with rate `eta` is
//!
//! ```text
//! hinge:     w <- w - eta * lambda * w              if y w.x > 1
//!            w <- w - eta * (lambda * w - y x)      otherwise
//! logistic:  w <- w - eta * (lambda * w - y x sigma(-y w.x))
//! ```
//!
//! and `eta_t = eta0 / (1 + lambda * eta0 * t)`. Weights are stored as
//! `scale * v` so the shrink step costs O(1) and each update touches only the
//! nonzeros of `x`.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest number of weights a model may allocate.
pub const MAX_DIM: usize = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Loss {
    Hinge = 0,
    Logistic = 1,
}

impl Loss {
    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Option<Loss> {
        match tag {
            0 => Some(Loss::Hinge),
            1 => Some(Loss::Logistic),
            _ => None,
        }
    }

    /// Loss as a function of the margin `z = y w.x`.
    pub fn value(self, z: f64) -> f64 {
        match self {
            Loss::Hinge => (1.0 - z).max(0.0),
            Loss::Logistic => {
                if z > 0.0 {
                    libm::log1p(libm::exp(-z))
                } else {
                    -z + libm::log1p(libm::exp(z))
                }
            }
        }
    }

    /// `-d loss / dz`: the coefficient of `y x` in the update.
    pub fn neg_derivative(self, z: f64) -> f64 {
        match self {
            Loss::Hinge => {
                if z > 1.0 {
                    0.0
                } else {
                    1.0
                }
            }
            Loss::Logistic => 1.0 / (1.0 + libm::exp(z)),
        }
    }
}

/// Either `lambda` directly or the batch-style `C`, mapped by `lambda = 1/(nC)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularization {
    Lambda(f64),
    C(f64),
}

impl Regularization {
    pub fn lambda(self, n: usize) -> Result<f64> {
        let lambda = match self {
            Regularization::Lambda(l) => l,
            Regularization::C(c) => {
                if n == 0 {
                    return Err(Error::InvalidParameter("C needs a non-empty training set"));
                }
                1.0 / (n as f64 * c)
            }
        };
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter("lambda must be positive and finite"));
        }
        Ok(lambda)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub regularization: Regularization,
    pub epochs: u32,
    /// Initial rate; `None` runs the calibration search.
    pub eta0: Option<f64>,
    pub loss: Loss,
    pub averaging: bool,
    /// First epoch (1-based) whose updates enter the average.
    pub average_start_epoch: u32,
    /// Examples used for calibrating `eta0`.
    pub calibration_size: usize,
    pub seed: u64,
    /// Visit examples in a fresh seeded order each epoch.
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            regularization: Regularization::Lambda(1e-4),
            epochs: 10,
            eta0: None,
            loss: Loss::Hinge,
            averaging: false,
            average_start_epoch: 2,
            calibration_size: 1000,
            seed: 0,
            shuffle: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be at least 1"));
        }
        if let Some(eta) = self.eta0 {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::InvalidParameter("eta0 must be positive"));
            }
        }
        if self.average_start_epoch == 0 {
            return Err(Error::InvalidParameter("averaging start epoch is 1-based"));
        }
        if self.calibration_size == 0 {
            return Err(Error::InvalidParameter("calibration needs at least one example"));
        }
        match self.regularization {
            Regularization::Lambda(l) | Regularization::C(l) if !(l > 0.0 && l.is_finite()) => {
                Err(Error::InvalidParameter("lambda and C must be positive"))
            }
            _ => Ok(()),
        }
    }
}

/// A borrowed sparse example. `values == None` means every listed entry is 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseRow<'a> {
    pub indices: &'a [u32],
    pub values: Option<&'a [f64]>,
    pub label: i8,
    /// Records sketched from empty sets: skipped in training, scored 0.
    pub flagged: bool,
}

impl<'a> SparseRow<'a> {
    pub fn binary(indices: &'a [u32], label: i8) -> SparseRow<'a> {
        SparseRow { indices, values: None, label, flagged: false }
    }

    #[inline]
    pub fn entries(&self) -> impl Iterator<Item = (u32, f64)> + 'a {
        let values = self.values;
        self.indices.iter().enumerate().map(move |(i, &ix)| (ix, values.map_or(1.0, |v| v[i])))
    }

    pub fn max_index(&self) -> Option<u32> {
        self.indices.iter().copied().max()
    }
}

/// Owned counterpart of [`SparseRow`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OwnedRow {
    pub indices: Vec<u32>,
    pub values: Option<Vec<f64>>,
    pub label: i8,
    pub flagged: bool,
}

impl OwnedRow {
    pub fn binary(indices: Vec<u32>, label: i8) -> OwnedRow {
        OwnedRow { indices, values: None, label, flagged: false }
    }

    pub fn as_row(&self) -> SparseRow<'_> {
        SparseRow { indices: &self.indices, values: self.values.as_deref(), label: self.label, flagged: self.flagged }
    }
}

impl From<SparseRow<'_>> for OwnedRow {
    fn from(row: SparseRow<'_>) -> OwnedRow {
        OwnedRow {
            indices: row.indices.to_vec(),
            values: row.values.map(|v| v.to_vec()),
            label: row.label,
            flagged: row.flagged,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub score: f64,
    /// `+1` or `-1`; a zero score predicts `+1`.
    pub class: i8,
}

/// Running sum of weight vectors, `sum = u + beta * v`.
#[derive(Debug, Clone, PartialEq)]
struct Averager {
    u: Vec<f64>,
    beta: f64,
    count: u64,
}

const RESCALE_BELOW: f64 = 1e-9;
// With averaging on, `u` and `beta * v` cancel by a factor of about
// `1 / scale` since the last fold, so fold much earlier.
const RESCALE_BELOW_AVERAGING: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    loss: Loss,
    scale: f64,
    v: Vec<f64>,
    t: u64,
    avg: Option<Averager>,
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::InvalidParameter("model dimension must be in 1..=2^28"));
    }
    Ok(())
}

fn label_sign(label: i8) -> Result<f64> {
    match label {
        1 => Ok(1.0),
        -1 => Ok(-1.0),
        other => Err(Error::NonBinaryLabel(other as f64)),
    }
}

impl LinearModel {
    pub fn new(dim: usize, loss: Loss) -> Result<LinearModel> {
        check_dim(dim)?;
        Ok(LinearModel { loss, scale: 1.0, v: vec![0.0; dim], t: 0, avg: None })
    }

    /// Model with given weights, e.g. read back from a model file.
    pub fn from_weights(w: Vec<f64>, w_avg: Option<Vec<f64>>, loss: Loss) -> Result<LinearModel> {
        check_dim(w.len())?;
        if w_avg.as_ref().is_some_and(|a| a.len() != w.len()) {
            return Err(Error::InvalidParameter("averaged weights must match the model dimension"));
        }
        Ok(LinearModel { loss, scale: 1.0, v: w, t: 0, avg: w_avg.map(|u| Averager { u, beta: 0.0, count: 1 }) })
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn loss(&self) -> Loss {
        self.loss
    }

    /// Examples consumed so far.
    pub fn updates(&self) -> u64 {
        self.t
    }

    pub fn is_averaging(&self) -> bool {
        self.avg.is_some()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.scale * self.v[i]
    }

    pub fn weights(&self) -> Vec<f64> {
        self.v.iter().map(|x| self.scale * x).collect()
    }

    /// The averaged weights, or `None` when averaging never started.
    pub fn averaged_weights(&self) -> Option<Vec<f64>> {
        let avg = self.avg.as_ref()?;
        Some((0..self.dim()).map(|i| self.averaged_weight(avg, i)).collect())
    }

    #[inline]
    fn averaged_weight(&self, avg: &Averager, i: usize) -> f64 {
        if avg.count == 0 {
            self.weight(i)
        } else {
            (avg.u[i] + avg.beta * self.v[i]) / avg.count as f64
        }
    }

    pub fn squared_norm(&self) -> f64 {
        self.scale * self.scale * self.v.iter().map(|x| x * x).sum::<f64>()
    }

    fn check_row(&self, row: &SparseRow<'_>) -> Result<()> {
        if let Some(max) = row.max_index() {
            if max as usize >= self.dim() {
                return Err(Error::DimensionExceeded { index: max as u64, dim: self.dim() as u64 });
            }
        }
        Ok(())
    }

    /// `w . x` with the current (non-averaged) weights.
    pub fn dot(&self, row: &SparseRow<'_>) -> Result<f64> {
        self.check_row(row)?;
        Ok(self.dot_unchecked(row))
    }

    #[inline]
    fn dot_unchecked(&self, row: &SparseRow<'_>) -> f64 {
        let sum: f64 = match row.values {
            None => row.indices.iter().map(|&i| self.v[i as usize]).sum(),
            Some(vals) => row.indices.iter().zip(vals).map(|(&i, x)| self.v[i as usize] * x).sum(),
        };
        self.scale * sum
    }

    /// Starts (or restarts) accumulating the weight average.
    pub fn start_averaging(&mut self) {
        self.avg = Some(Averager { u: vec![0.0; self.dim()], beta: 0.0, count: 0 });
    }

    fn renormalize(&mut self) {
        if let Some(avg) = self.avg.as_mut() {
            for (u, v) in avg.u.iter_mut().zip(&self.v) {
                *u += avg.beta * v;
            }
            avg.beta = 0.0;
        }
        let s = self.scale;
        for v in self.v.iter_mut() {
            *v *= s;
        }
        self.scale = 1.0;
    }

    /// One SGD step on `(x, y)` with rate `eta`.
    pub fn sgd_update(&mut self, row: &SparseRow<'_>, eta: f64, lambda: f64) -> Result<()> {
        self.check_row(row)?;
        let y = label_sign(row.label)?;
        let z = y * self.dot_unchecked(row);
        let coef = self.loss.neg_derivative(z);

        let shrink = 1.0 - eta * lambda;
        if shrink == 0.0 {
            self.renormalize();
            self.v.iter_mut().for_each(|v| *v = 0.0);
        } else {
            self.scale *= shrink;
        }
        if coef != 0.0 {
            let step = eta * y * coef / self.scale;
            let beta = self.avg.as_ref().map_or(0.0, |a| a.beta);
            for (i, x) in row.entries() {
                let delta = step * x;
                self.v[i as usize] += delta;
                if let Some(avg) = self.avg.as_mut() {
                    avg.u[i as usize] -= beta * delta;
                }
            }
        }
        if let Some(avg) = self.avg.as_mut() {
            avg.beta += self.scale;
            avg.count += 1;
        }
        self.t += 1;
        let floor = if self.avg.is_some() { RESCALE_BELOW_AVERAGING } else { RESCALE_BELOW };
        if self.scale.abs() < floor {
            self.renormalize();
        }
        Ok(())
    }

    /// Score with averaged weights when averaging is active. Flagged rows score 0.
    pub fn predict(&self, row: &SparseRow<'_>) -> Result<Prediction> {
        if row.flagged {
            return Ok(Prediction { score: 0.0, class: 1 });
        }
        self.check_row(row)?;
        let score = match &self.avg {
            Some(avg) => row.entries().map(|(i, x)| self.averaged_weight(avg, i as usize) * x).sum(),
            None => self.dot_unchecked(row),
        };
        Ok(Prediction { score, class: if score >= 0.0 { 1 } else { -1 } })
    }

    /// `lambda/2 |w|^2 + mean loss` over the non-flagged rows.
    pub fn objective<'r, I>(&self, rows: I, lambda: f64) -> Result<f64>
    where
        I: IntoIterator<Item = SparseRow<'r>>,
    {
        let (mut total, mut n) = (0.0, 0usize);
        for row in rows.into_iter().filter(|r| !r.flagged) {
            let y = label_sign(row.label)?;
            total += self.loss.value(y * self.dot(&row)?);
            n += 1;
        }
        let mean = if n == 0 { 0.0 } else { total / n as f64 };
        Ok(0.5 * lambda * self.squared_norm() + mean)
    }
}

/// `lambda/2 |w|^2 + loss(y w.x)` for a dense `w`.
pub fn example_objective(w: &[f64], row: &SparseRow<'_>, lambda: f64, loss: Loss) -> Result<f64> {
    let y = label_sign(row.label)?;
    let wx: f64 = row.entries().map(|(i, x)| w[i as usize] * x).sum();
    let norm: f64 = w.iter().map(|x| x * x).sum();
    Ok(0.5 * lambda * norm + loss.value(y * wx))
}

/// Gradient of [`example_objective`]: `lambda w - y x (-loss'(y w.x))`.
/// The SGD step moves along exactly this direction.
pub fn example_gradient(w: &[f64], row: &SparseRow<'_>, lambda: f64, loss: Loss) -> Result<Vec<f64>> {
    let y = label_sign(row.label)?;
    let wx: f64 = row.entries().map(|(i, x)| w[i as usize] * x).sum();
    let coef = loss.neg_derivative(y * wx);
    let mut g: Vec<f64> = w.iter().map(|x| lambda * x).collect();
    for (i, x) in row.entries() {
        g[i as usize] -= y * coef * x;
    }
    Ok(g)
}

/// `eta_t = eta0 / (1 + lambda eta0 t)`.
pub fn learning_rate(eta0: f64, lambda: f64, t: u64) -> f64 {
    eta0 / (1.0 + lambda * eta0 * t as f64)
}

/// Candidate initial rates searched by [`calibrate_eta0`]: powers of two from
/// `2^-14` to `2^6`.
pub fn eta_grid() -> impl Iterator<Item = f64> {
    (-14..=6).map(|e| libm::ldexp(1.0, e))
}

/// Picks `eta0` by running one pass of SGD over `sample` from zero weights for
/// each candidate in [`eta_grid`] and keeping the one with the lowest
/// objective on the same sample. Ties go to the smaller rate.
pub fn calibrate_eta0(sample: &[OwnedRow], dim: usize, loss: Loss, lambda: f64) -> Result<f64> {
    let rows: Vec<SparseRow<'_>> = sample.iter().map(OwnedRow::as_row).filter(|r| !r.flagged).collect();
    if rows.is_empty() {
        return Err(Error::InvalidParameter("calibration sample has no usable examples"));
    }
    let mut best: Option<(f64, f64)> = None;
    for eta0 in eta_grid() {
        let mut model = LinearModel::new(dim, loss)?;
        for row in &rows {
            model.sgd_update(row, learning_rate(eta0, lambda, model.updates()), lambda)?;
        }
        let obj = model.objective(rows.iter().copied(), lambda)?;
        if obj.is_finite() && best.is_none_or(|(_, b)| obj < b) {
            best = Some((eta0, obj));
        }
    }
    best.map(|(eta, _)| eta).ok_or(Error::InvalidParameter("no calibration candidate produced a finite objective"))
}

/// Drives SGD over epochs: schedules the rate, starts averaging on the
/// configured epoch and skips flagged records.
#[derive(Debug, Clone)]
pub struct Trainer {
    cfg: TrainConfig,
    lambda: f64,
    eta0: f64,
    model: LinearModel,
    epoch: u32,
}

impl Trainer {
    /// `n` is the training-set size (for `C`); `calibration` is used only when
    /// `cfg.eta0` is `None`.
    pub fn new(dim: usize, n: usize, cfg: TrainConfig, calibration: &[OwnedRow]) -> Result<Trainer> {
        cfg.validate()?;
        let lambda = cfg.regularization.lambda(n)?;
        let eta0 = match cfg.eta0 {
            Some(eta) => eta,
            None => calibrate_eta0(calibration, dim, cfg.loss, lambda)?,
        };
        Ok(Trainer { cfg, lambda, eta0, model: LinearModel::new(dim, cfg.loss)?, epoch: 0 })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn eta0(&self) -> f64 {
        self.eta0
    }

    pub fn epoch(&self) -> u32 {
        self.epoch
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn begin_epoch(&mut self) {
        self.epoch += 1;
        if self.cfg.averaging && self.epoch == self.cfg.average_start_epoch {
            self.model.start_averaging();
        }
    }

    pub fn step(&mut self, row: &SparseRow<'_>) -> Result<()> {
        if row.flagged {
            return Ok(());
        }
        let eta = learning_rate(self.eta0, self.lambda, self.model.updates());
        self.model.sgd_update(row, eta, self.lambda)
    }

    pub fn model(&self) -> &LinearModel {
        &self.model
    }

    pub fn into_model(self) -> LinearModel {
        self.model
    }
}

/// First `size` examples in stored order, or a seeded random subset when
/// `shuffle` is set.
pub fn calibration_sample(rows: &[OwnedRow], size: usize, seed: u64, shuffle: bool) -> Vec<OwnedRow> {
    if !shuffle || rows.len() <= size {
        return rows.iter().take(size).cloned().collect();
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order.truncate(size);
    order.sort_unstable();
    order.into_iter().map(|i| rows[i].clone()).collect()
}

/// Reorders `order` for the given epoch; the result depends only on
/// `(order, seed, epoch)`.
pub fn shuffle_for_epoch(order: &mut [usize], seed: u64, epoch: u32) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9));
    order.shuffle(&mut rng);
}

/// Objective of the model after each epoch, returned by [`train_in_memory`].
#[derive(Debug, Clone, PartialEq)]
pub struct EpochObjective {
    pub epoch: u32,
    pub objective: f64,
}

/// Trains on rows held in memory. Returns the model and the objective after
/// every epoch.
pub fn train_in_memory(rows: &[OwnedRow], dim: usize, cfg: TrainConfig) -> Result<(LinearModel, Vec<EpochObjective>)> {
    cfg.validate()?;
    let usable = rows.iter().filter(|r| !r.flagged).count();
    let sample = calibration_sample(rows, cfg.calibration_size, cfg.seed, cfg.shuffle);
    let mut trainer = Trainer::new(dim, usable, cfg, &sample)?;
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs as usize);
    for epoch in 1..=cfg.epochs {
        trainer.begin_epoch();
        if cfg.shuffle {
            shuffle_for_epoch(&mut order, cfg.seed, epoch);
        }
        for &i in &order {
            trainer.step(&rows[i].as_row())?;
        }
        let objective = trainer.model().objective(rows.iter().map(OwnedRow::as_row), trainer.lambda())?;
        history.push(EpochObjective { epoch, objective });
    }
    Ok((trainer.into_model(), history))
}

/// Fraction of non-flagged rows whose predicted class equals the label.
pub fn accuracy<'r, I>(model: &LinearModel, rows: I) -> Result<f64>
where
    I: IntoIterator<Item = SparseRow<'r>>,
{
    let (mut right, mut n) = (0usize, 0usize);
    for row in rows {
        if row.flagged {
            continue;
        }
        right += (model.predict(&row)?.class == row.label) as usize;
        n += 1;
    }
    Ok(if n == 0 { 0.0 } else { right as f64 / n as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_update_from_zero_is_eta_y_x() {
        let mut m = LinearModel::new(10, Loss::Hinge).unwrap();
        m.sgd_update(&SparseRow::binary(&[2, 5], -1), 0.1, 0.01).unwrap();
        let w = m.weights();
        assert_eq!(w[2], -0.1);
        assert_eq!(w[5], -0.1);
        assert_eq!(w.iter().filter(|&&x| x != 0.0).count(), 2);
    }

    #[test]
    fn satisfied_margin_only_shrinks() {
        let mut m = LinearModel::from_weights(vec![0.0, 2.0, 0.5], None, Loss::Hinge).unwrap();
        m.sgd_update(&SparseRow::binary(&[1], 1), 0.5, 0.1).unwrap();
        let w = m.weights();
        let shrink = 1.0 - 0.5 * 0.1;
        assert!((w[1] - 2.0 * shrink).abs() < 1e-15);
        assert!((w[2] - 0.5 * shrink).abs() < 1e-15);
    }

    #[test]
    fn predict_tie_and_single_index() {
        let m = LinearModel::new(4, Loss::Hinge).unwrap();
        let p = m.predict(&SparseRow::binary(&[1, 3], -1)).unwrap();
        assert_eq!((p.score, p.class), (0.0, 1));
        let m = LinearModel::from_weights(vec![0.0, 3.0, 0.0, 0.0], None, Loss::Hinge).unwrap();
        assert_eq!(m.predict(&SparseRow::binary(&[1], 1)).unwrap().score, 3.0);
        let flagged = SparseRow { flagged: true, ..SparseRow::binary(&[1], 1) };
        assert_eq!(m.predict(&flagged).unwrap().score, 0.0);
    }

    #[test]
    fn dimension_and_label_errors() {
        let mut m = LinearModel::new(4, Loss::Logistic).unwrap();
        assert!(matches!(
            m.sgd_update(&SparseRow::binary(&[4], 1), 0.1, 0.1),
            Err(Error::DimensionExceeded { index: 4, dim: 4 })
        ));
        assert!(matches!(m.sgd_update(&SparseRow::binary(&[1], 0), 0.1, 0.1), Err(Error::NonBinaryLabel(_))));
        assert!(m.predict(&SparseRow::binary(&[9], 1)).is_err());
        assert!(LinearModel::new(MAX_DIM + 1, Loss::Hinge).is_err());
    }

    #[test]
    fn c_maps_to_lambda() {
        assert_eq!(Regularization::C(0.5).lambda(100).unwrap(), 1.0 / 50.0);
        assert_eq!(Regularization::Lambda(0.02).lambda(100).unwrap(), 0.02);
        assert!(Regularization::C(1.0).lambda(0).is_err());
        assert!(Regularization::Lambda(0.0).lambda(1).is_err());
    }

    #[test]
    fn zero_epochs_rejected() {
        let cfg = TrainConfig { epochs: 0, ..TrainConfig::default() };
        assert!(train_in_memory(&[OwnedRow::binary(vec![0], 1)], 2, cfg).is_err());
    }

    #[test]
    fn logistic_loss_is_stable() {
        assert!((Loss::Logistic.value(0.0) - core::f64::consts::LN_2).abs() < 1e-15);
        assert!(Loss::Logistic.value(1000.0) >= 0.0);
        assert!((Loss::Logistic.value(-1000.0) - 1000.0).abs() < 1e-9);
        assert_eq!(Loss::Logistic.neg_derivative(1000.0), 0.0);
        assert_eq!(Loss::Logistic.neg_derivative(-1000.0), 1.0);
    }

    #[test]
    fn averaging_matches_explicit_mean() {
        let rows = [
            OwnedRow::binary(vec![0, 1], 1),
            OwnedRow::binary(vec![1, 2], -1),
            OwnedRow::binary(vec![0, 3], 1),
            OwnedRow::binary(vec![2, 3], -1),
        ];
        let mut m = LinearModel::new(4, Loss::Logistic).unwrap();
        m.start_averaging();
        let mut sum = [0.0; 4];
        for (t, r) in rows.iter().cycle().take(40).enumerate() {
            m.sgd_update(&r.as_row(), learning_rate(0.5, 0.1, t as u64), 0.1).unwrap();
            for (s, w) in sum.iter_mut().zip(m.weights()) {
                *s += w;
            }
        }
        let avg = m.averaged_weights().unwrap();
        for i in 0..4 {
            assert!((avg[i] - sum[i] / 40.0).abs() < 1e-12, "{i}: {} vs {}", avg[i], sum[i] / 40.0);
        }
    }

    #[test]
    fn renormalization_keeps_weights() {
        let mut m = LinearModel::new(3, Loss::Hinge).unwrap();
        m.start_averaging();
        let mut direct = [0.0f64; 3];
        let mut sum = [0.0f64; 3];
        // large eta * lambda drives the scale below the renormalization threshold
        for t in 0..60 {
            let row = OwnedRow::binary(vec![t % 3], if t % 2 == 0 { 1 } else { -1 });
            let z = row.label as f64 * direct[(t % 3) as usize];
            for w in direct.iter_mut() {
                *w *= 1.0 - 0.9 * 0.8;
            }
            if z <= 1.0 {
                direct[(t % 3) as usize] += 0.9 * row.label as f64;
            }
            m.sgd_update(&row.as_row(), 0.9, 0.8).unwrap();
            for (s, w) in sum.iter_mut().zip(direct) {
                *s += w;
            }
        }
        for i in 0..3 {
            assert!((m.weight(i) - direct[i]).abs() < 1e-12);
            assert!((m.averaged_weights().unwrap()[i] - sum[i] / 60.0).abs() < 1e-12);
        }
    }
}
