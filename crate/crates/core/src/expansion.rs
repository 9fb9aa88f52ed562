//! Expansion of b-bit sketches into binary vectors of dimension `2^b * k`.
//!
//! Code `j` becomes a single one at index `j * 2^b + code_j`, so the inner
//! product of two expansions is the number of mappings whose codes agree.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::sketch::Sketch;

/// A binary row with exactly `k` ones, one inside each block of width `2^b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpandedVector {
    dim: u64,
    ones: Vec<u32>,
    label: i8,
}

/// `2^b * k`, rejected when it does not fit the 32-bit index space.
pub fn expanded_dim(k: usize, b: u8) -> Result<u64> {
    let dim = (k as u128) << b;
    if dim > 1u128 << 32 {
        return Err(Error::InvalidParameter("2^b * k exceeds the 32-bit index space"));
    }
    Ok(dim as u64)
}

impl ExpandedVector {
    pub fn dim(&self) -> u64 {
        self.dim
    }

    pub fn ones(&self) -> &[u32] {
        &self.ones
    }

    pub fn label(&self) -> i8 {
        self.label
    }

    pub fn into_parts(self) -> (Vec<u32>, i8) {
        (self.ones, self.label)
    }

    /// Number of shared ones, by a sorted merge.
    pub fn dot(&self, other: &ExpandedVector) -> usize {
        let (a, b) = (&self.ones, &other.ones);
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                core::cmp::Ordering::Less => i += 1,
                core::cmp::Ordering::Greater => j += 1,
                core::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }
}

/// Appends the expanded indices of `codes` to `out`.
pub fn expand_codes_into<I: IntoIterator<Item = u32>>(codes: I, b: u8, out: &mut Vec<u32>) {
    for (j, code) in codes.into_iter().enumerate() {
        out.push(((j as u32) << b) + code);
    }
}

pub fn expand(sk: &Sketch) -> Result<ExpandedVector> {
    if sk.is_empty_set() {
        return Err(Error::EmptySketch);
    }
    let header = sk.header();
    let dim = expanded_dim(header.k(), header.b)?;
    let mut ones = Vec::with_capacity(header.k());
    expand_codes_into(sk.codes().iter(), header.b, &mut ones);
    Ok(ExpandedVector { dim, ones, label: sk.label() })
}
