//! Feature sets, b-bit sketches and the per-vector minwise computation.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::hashfamilies::{FamilyHeader, HashFamily};

/// Minimum recorded for every mapping when the input set is empty.
pub const EMPTY_MINIMUM: u64 = u64::MAX;

/// Largest supported code width.
pub const MAX_BITS: u8 = 32;

/// A sparse binary vector: strictly increasing feature indices plus a label.
///
/// The label is `-1` or `+1`, or `0` when the record is unlabeled.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureSet {
    indices: Vec<u32>,
    label: i8,
}

impl FeatureSet {
    /// Validates that `indices` is strictly increasing and below `dim`.
    pub fn new(indices: Vec<u32>, label: i8, dim: u64) -> Result<FeatureSet> {
        let set = FeatureSet { indices, label };
        set.validate(dim)?;
        Ok(set)
    }

    /// Sorts and deduplicates `indices`.
    pub fn from_unsorted(mut indices: Vec<u32>, label: i8) -> FeatureSet {
        indices.sort_unstable();
        indices.dedup();
        FeatureSet { indices, label }
    }

    /// Caller guarantees sorted, unique indices.
    pub fn new_unchecked(indices: Vec<u32>, label: i8) -> FeatureSet {
        FeatureSet { indices, label }
    }

    pub fn validate(&self, dim: u64) -> Result<()> {
        let mut prev: Option<u32> = None;
        for (position, &index) in self.indices.iter().enumerate() {
            if index as u64 >= dim || prev.is_some_and(|p| p >= index) {
                return Err(Error::InvalidFeatureSet { position, index, dim });
            }
            prev = Some(index);
        }
        Ok(())
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn into_indices(self) -> Vec<u32> {
        self.indices
    }

    pub fn label(&self) -> i8 {
        self.label
    }

    pub fn set_label(&mut self, label: i8) {
        self.label = label;
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `|self ∩ other|` by a linear merge.
    pub fn intersection_size(&self, other: &FeatureSet) -> usize {
        let (mut i, mut j, mut n) = (0, 0, 0);
        let (a, b) = (&self.indices, &other.indices);
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

    /// Jaccard resemblance `|S1 ∩ S2| / |S1 ∪ S2|`; `None` when both are empty.
    pub fn resemblance(&self, other: &FeatureSet) -> Option<f64> {
        let a = self.intersection_size(other);
        let union = self.len() + other.len() - a;
        (union > 0).then(|| a as f64 / union as f64)
    }
}

/// Provenance shared by every sketch produced from one family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SketchHeader {
    pub family: FamilyHeader,
    /// Bits kept per minimum.
    pub b: u8,
}

impl SketchHeader {
    pub fn new(family: FamilyHeader, b: u8) -> Result<SketchHeader> {
        check_bits(b)?;
        Ok(SketchHeader { family, b })
    }

    pub fn k(&self) -> usize {
        self.family.k as usize
    }

    /// Bytes of packed codes per record, `ceil(k * b / 8)`.
    pub fn code_bytes(&self) -> usize {
        packed_len(self.k(), self.b)
    }

    /// True when both headers come from the same family, ignoring `b`.
    pub fn same_family(&self, other: &SketchHeader) -> bool {
        self.family == other.family
    }
}

fn check_bits(b: u8) -> Result<()> {
    if b == 0 || b > MAX_BITS {
        return Err(Error::InvalidParameter("b must be in 1..=32"));
    }
    Ok(())
}

pub fn packed_len(k: usize, b: u8) -> usize {
    (k * b as usize).div_ceil(8)
}

/// `k` codes of `b` bits, packed little-endian within bytes with `j` ascending.
///
/// Code `j` occupies bit positions `j*b .. (j+1)*b` of the byte string, where
/// bit `i` lives in byte `i / 8` at position `i % 8`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedCodes {
    bytes: Vec<u8>,
    k: usize,
    b: u8,
}

impl PackedCodes {
    pub fn pack<I: IntoIterator<Item = u32>>(codes: I, k: usize, b: u8) -> PackedCodes {
        let mut bytes = alloc::vec![0u8; packed_len(k, b)];
        let mask = low_mask(b);
        let mut n = 0;
        for (j, code) in codes.into_iter().enumerate().take(k) {
            write_bits(&mut bytes, j * b as usize, b, code as u64 & mask);
            n += 1;
        }
        debug_assert_eq!(n, k);
        PackedCodes { bytes, k, b }
    }

    pub fn from_bytes(bytes: Vec<u8>, k: usize, b: u8) -> Result<PackedCodes> {
        check_bits(b)?;
        if bytes.len() != packed_len(k, b) {
            return Err(Error::InvalidParameter("packed code length does not match ceil(k*b/8)"));
        }
        Ok(PackedCodes { bytes, k, b })
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    pub fn bits(&self) -> u8 {
        self.b
    }

    #[inline]
    pub fn get(&self, j: usize) -> u32 {
        assert!(j < self.k);
        unpack_code(&self.bytes, j, self.b)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = u32> + '_ {
        (0..self.k).map(move |j| self.get(j))
    }

    /// Number of positions among the first `k` where the two code strings agree.
    pub fn count_matches_prefix(&self, other: &PackedCodes, k: usize) -> usize {
        (0..k.min(self.k).min(other.k)).filter(|&j| self.get(j) == other.get(j)).count()
    }
}

#[inline]
fn low_mask(b: u8) -> u64 {
    if b >= 64 {
        u64::MAX
    } else {
        (1u64 << b) - 1
    }
}

fn write_bits(bytes: &mut [u8], start: usize, b: u8, value: u64) {
    let mut value = value;
    let mut pos = start;
    let mut remaining = b as usize;
    while remaining > 0 {
        let offset = pos % 8;
        let take = (8 - offset).min(remaining);
        let chunk = (value & ((1 << take) - 1)) as u8;
        bytes[pos / 8] |= chunk << offset;
        value >>= take;
        pos += take;
        remaining -= take;
    }
}

/// Code `j` of a packed byte string with `b` bits per code.
#[inline]
pub fn unpack_code(bytes: &[u8], j: usize, b: u8) -> u32 {
    if b == 8 {
        return bytes[j] as u32;
    }
    read_bits(bytes, j * b as usize, b) as u32
}

fn read_bits(bytes: &[u8], start: usize, b: u8) -> u64 {
    let mut out = 0u64;
    let mut pos = start;
    let mut got = 0usize;
    while got < b as usize {
        let offset = pos % 8;
        let take = (8 - offset).min(b as usize - got);
        let chunk = (bytes[pos / 8] >> offset) as u64 & ((1 << take) - 1);
        out |= chunk << got;
        pos += take;
        got += take;
    }
    out
}

/// Flags byte bit set for records computed from an empty feature set.
pub const FLAG_EMPTY: u8 = 1;

/// Minima and b-bit codes of one feature vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sketch {
    header: SketchHeader,
    minima: Option<Vec<u64>>,
    codes: PackedCodes,
    label: i8,
    empty: bool,
}

impl Sketch {
    /// Derives codes from full minima. An empty set is signalled by all minima
    /// equal to [`EMPTY_MINIMUM`] and `empty = true`.
    pub fn from_minima(header: SketchHeader, minima: Vec<u64>, label: i8, empty: bool) -> Sketch {
        let codes = PackedCodes::pack(minima.iter().map(|&m| m as u32), header.k(), header.b);
        Sketch { header, minima: Some(minima), codes, label, empty }
    }

    /// A sketch read back without its full minima.
    pub fn from_codes(header: SketchHeader, codes: PackedCodes, label: i8, empty: bool) -> Result<Sketch> {
        if codes.len() != header.k() || codes.bits() != header.b {
            return Err(Error::HeaderMismatch);
        }
        Ok(Sketch { header, minima: None, codes, label, empty })
    }

    /// Attaches full minima (e.g. from a `.min64` file).
    pub fn with_minima(mut self, minima: Vec<u64>) -> Result<Sketch> {
        if minima.len() != self.header.k() {
            return Err(Error::HeaderMismatch);
        }
        self.minima = Some(minima);
        Ok(self)
    }

    pub fn header(&self) -> &SketchHeader {
        &self.header
    }

    pub fn minima(&self) -> Option<&[u64]> {
        self.minima.as_deref()
    }

    pub fn codes(&self) -> &PackedCodes {
        &self.codes
    }

    pub fn label(&self) -> i8 {
        self.label
    }

    /// True when the source feature set was empty.
    pub fn is_empty_set(&self) -> bool {
        self.empty
    }

    pub fn flags(&self) -> u8 {
        if self.empty {
            FLAG_EMPTY
        } else {
            0
        }
    }
}

/// Writes `min_j h_j(S)` for every `j` into `out` (cleared first).
/// Returns false, filling `out` with [`EMPTY_MINIMUM`], when `indices` is empty.
pub fn compute_minima(family: &HashFamily, indices: &[u32], out: &mut Vec<u64>) -> bool {
    out.clear();
    if indices.is_empty() {
        out.resize(family.k(), EMPTY_MINIMUM);
        return false;
    }
    out.extend((0..family.k()).map(|j| family.min_hash(j, indices).unwrap() as u64));
    true
}

/// Sketches one feature set with every mapping of `family`, keeping `b` bits.
///
/// Features colliding under some `h_j` are harmless: the minimum is taken over
/// the multiset of mapped values. An empty set yields a flagged sketch whose
/// minima are all [`EMPTY_MINIMUM`].
pub fn sketch_one(family: &HashFamily, set: &FeatureSet, b: u8) -> Result<Sketch> {
    let header = SketchHeader::new(*family.header(), b)?;
    set.validate(family.dim())?;
    let mut minima = Vec::with_capacity(family.k());
    let nonempty = compute_minima(family, set.indices(), &mut minima);
    Ok(Sketch::from_minima(header, minima, set.label(), !nonempty))
}
