//! Seeded synthetic data: set pairs with an exact `(f1, f2, a)` profile and
//! labeled sparse binary corpora.

use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::sketch::FeatureSet;

/// Two sets with `|S1| = f1`, `|S2| = f2` and `|S1 ∩ S2| = a`, drawn uniformly
/// among all such pairs over `{0..dim-1}`.
pub fn synth_pair(f1: u64, f2: u64, a: u64, dim: u64, seed: u64) -> Result<(FeatureSet, FeatureSet)> {
    if a > f1.min(f2) || f1 + f2 - a > dim || dim > 1 << 32 {
        return Err(Error::InfeasibleProfile);
    }
    let union = (f1 + f2 - a) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<u32> = index::sample(&mut rng, dim as usize, union).into_iter().map(|i| i as u32).collect();
    chosen.shuffle(&mut rng);
    let (a, f1) = (a as usize, f1 as usize);
    let only1 = f1 - a;
    let mut s1: Vec<u32> = chosen[..f1].to_vec();
    let mut s2: Vec<u32> = chosen[..a].iter().chain(&chosen[f1..]).copied().collect();
    debug_assert_eq!(s1.len() - a, only1);
    s1.sort_unstable();
    s2.sort_unstable();
    Ok((FeatureSet::new_unchecked(s1, 1), FeatureSet::new_unchecked(s2, 1)))
}

/// How labels relate to features in [`synth_classification`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LabelModel {
    /// Uniformly random features and fair-coin labels.
    Uniform,
    /// Each class owns a disjoint vocabulary of `vocab_fraction * D` features.
    /// A record draws each feature from its class vocabulary with probability
    /// `signal`, otherwise from the features outside both vocabularies, and
    /// always carries at least one vocabulary feature, so the classes are
    /// linearly separable. Labels are then flipped with probability `flip`.
    TwoCluster { signal: f64, vocab_fraction: f64, flip: f64 },
}

impl LabelModel {
    /// Separable two-cluster corpus without label noise.
    pub fn separable() -> LabelModel {
        LabelModel::TwoCluster { signal: 0.1, vocab_fraction: 1.0 / 32.0, flip: 0.0 }
    }
}

fn draw_distinct(rng: &mut ChaCha8Rng, lo: u64, len: u64, count: usize, out: &mut Vec<u32>) {
    let count = count.min(len as usize);
    out.extend(index::sample(rng, len as usize, count).into_iter().map(|i| (lo + i as u64) as u32));
}

/// `n` labeled records over `{0..dim-1}`. Record sizes are Poisson with mean
/// `density * dim`.
pub fn synth_classification(n: usize, dim: u64, density: f64, model: LabelModel, seed: u64) -> Result<Vec<FeatureSet>> {
    if dim == 0 || dim > 1 << 32 {
        return Err(Error::InvalidParameter("dimension must be in 1..=2^32"));
    }
    let mean = density * dim as f64;
    if !(mean >= 1.0 && mean.is_finite()) || density > 1.0 {
        return Err(Error::InvalidParameter("density * dim must be at least 1 and density at most 1"));
    }
    let poisson = Poisson::new(mean).map_err(|_| Error::InvalidParameter("invalid density"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut buf = Vec::new();
    match model {
        LabelModel::Uniform => {
            for _ in 0..n {
                let size = (poisson.sample(&mut rng) as u64).min(dim) as usize;
                buf.clear();
                draw_distinct(&mut rng, 0, dim, size, &mut buf);
                let label = if rng.random::<bool>() { 1 } else { -1 };
                out.push(FeatureSet::from_unsorted(core::mem::take(&mut buf), label));
            }
        }
        LabelModel::TwoCluster { signal, vocab_fraction, flip } => {
            if !(0.0..=1.0).contains(&signal) || !(0.0..=1.0).contains(&flip) {
                return Err(Error::InvalidParameter("signal and flip must be probabilities"));
            }
            let vocab = (vocab_fraction * dim as f64) as u64;
            if vocab == 0 || 2 * vocab >= dim {
                return Err(Error::InvalidParameter("vocabulary fraction must leave room for background features"));
            }
            // vocabularies are [0, vocab) for +1 and [vocab, 2 vocab) for -1
            let background = dim - 2 * vocab;
            for _ in 0..n {
                let label: i8 = if rng.random::<bool>() { 1 } else { -1 };
                let size = (poisson.sample(&mut rng) as u64).max(1);
                let mut topical = (0..size).filter(|_| rng.random_bool(signal)).count().max(1);
                topical = topical.min(vocab as usize);
                let rest = (size as usize).saturating_sub(topical);
                buf.clear();
                let base = if label == 1 { 0 } else { vocab };
                draw_distinct(&mut rng, base, vocab, topical, &mut buf);
                draw_distinct(&mut rng, 2 * vocab, background, rest, &mut buf);
                let label = if flip > 0.0 && rng.random_bool(flip) { -label } else { label };
                out.push(FeatureSet::from_unsorted(core::mem::take(&mut buf), label));
            }
        }
    }
    Ok(out)
}
