//! Signed feature hashing into `m` bins, the baseline that b-bit sketches are
//! compared against.
//!
//! Feature `t` adds `sign(t)` to bin `bin(t)`. Both functions come from
//! independently seeded 2U mappings on 32-bit words: the bin is the high part
//! of `h(t) * m`, the sign is the top bit of a second mapping. With independent
//! seeds the hashed inner product is an unbiased estimate of the original one.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::estimator::repetition_seed;
use crate::hashfamilies::{build_family, hash_2u, Scheme, TwoUCoeffs};
use crate::sketch::FeatureSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VwConfig {
    bins: u32,
    bin_seed: u64,
    sign_seed: u64,
    bin_hash: TwoUCoeffs,
    sign_hash: TwoUCoeffs,
}

fn coeffs(seed: u64) -> TwoUCoeffs {
    build_family(Scheme::TwoU, 1 << 32, 1, seed)
        .ok()
        .and_then(|f| f.two_u_coeffs(0))
        .expect("2U family over 2^32 with k = 1 always builds")
}

impl VwConfig {
    pub fn new(bins: u32, bin_seed: u64, sign_seed: u64) -> Result<VwConfig> {
        if bins == 0 {
            return Err(Error::InvalidParameter("number of bins must be at least 1"));
        }
        if bin_seed == sign_seed {
            return Err(Error::InvalidParameter("bin and sign hashes need different seeds"));
        }
        Ok(VwConfig { bins, bin_seed, sign_seed, bin_hash: coeffs(bin_seed), sign_hash: coeffs(sign_seed) })
    }

    /// Derives the bin and sign seeds from one seed.
    pub fn from_seed(bins: u32, seed: u64) -> Result<VwConfig> {
        VwConfig::new(bins, repetition_seed(seed, 0), repetition_seed(seed, 1))
    }

    pub fn bins(&self) -> u32 {
        self.bins
    }

    pub fn bin_seed(&self) -> u64 {
        self.bin_seed
    }

    pub fn sign_seed(&self) -> u64 {
        self.sign_seed
    }

    #[inline]
    pub fn bin(&self, t: u32) -> u32 {
        ((hash_2u(self.bin_hash, 32, t) as u64 * self.bins as u64) >> 32) as u32
    }

    #[inline]
    pub fn sign(&self, t: u32) -> f64 {
        if hash_2u(self.sign_hash, 1, t) == 1 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Sparse real-valued vector with sorted, unique indices and no zero entries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    pub dim: u32,
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.indices.len() && j < other.indices.len() {
            match self.indices[i].cmp(&other.indices[j]) {
                core::cmp::Ordering::Less => i += 1,
                core::cmp::Ordering::Greater => j += 1,
                core::cmp::Ordering::Equal => {
                    acc += self.values[i] * other.values[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

pub fn vw_project(cfg: &VwConfig, x: &FeatureSet) -> SparseVector {
    let mut pairs: Vec<(u32, f64)> = x.indices().iter().map(|&t| (cfg.bin(t), cfg.sign(t))).collect();
    pairs.sort_unstable_by_key(|p| p.0);
    let mut out = SparseVector { dim: cfg.bins, indices: Vec::new(), values: Vec::new() };
    let mut iter = pairs.into_iter().peekable();
    while let Some((bin, mut value)) = iter.next() {
        while let Some(&(next, v)) = iter.peek() {
            if next != bin {
                break;
            }
            value += v;
            iter.next();
        }
        if value != 0.0 {
            out.indices.push(bin);
            out.values.push(value);
        }
    }
    out
}
