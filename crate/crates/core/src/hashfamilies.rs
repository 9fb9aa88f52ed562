//! Index-mapping families that stand in for the `k` random permutations of
//! minwise hashing.
//!
//! Four schemes are provided:
//!
//! * [`Scheme::Permutation`]: `k` explicit Fisher–Yates tables over `{0..D-1}`.
//! * [`Scheme::TwoU`]: multiply-add-shift on 32-bit words, `D = 2^s`. Uses
//!   wrapping arithmetic and a shift, never a division.
//! * [`Scheme::FourUMod`]: a cubic polynomial over `Z_p` evaluated with the
//!   hardware remainder.
//! * [`Scheme::FourUBit`]: the same polynomial over `p = 2^31 - 1`, reduced by
//!   [`bitmod_p31`] (shifts, masks and compares only).
//!
//! Coefficients are never stored on disk. They are regenerated from
//! `(seed, scheme, j)` by a keyed ChaCha stream, so a [`FamilyHeader`] is
//! enough to rebuild a family bit for bit.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// The Mersenne prime `2^31 - 1`.
pub const MERSENNE_31: u64 = (1 << 31) - 1;

/// Default upper bound on the memory used by permutation tables (1 GiB).
pub const DEFAULT_PERMUTATION_CAP: u64 = 1 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Scheme {
    Permutation = 0,
    TwoU = 1,
    FourUMod = 2,
    FourUBit = 3,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Permutation, Scheme::TwoU, Scheme::FourUMod, Scheme::FourUBit];

    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Option<Scheme> {
        Scheme::ALL.get(tag as usize).copied()
    }

    /// Short lowercase name used in tables and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Permutation => "perm",
            Scheme::TwoU => "2u",
            Scheme::FourUMod => "4u-mod",
            Scheme::FourUBit => "4u-bit",
        }
    }

    pub fn from_name(name: &str) -> Option<Scheme> {
        Scheme::ALL.into_iter().find(|s| s.name() == name)
    }
}

impl core::fmt::Display for Scheme {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// The serializable description of a family. Coefficients are derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FamilyHeader {
    pub scheme: Scheme,
    /// Universe size `D`.
    pub dim: u64,
    /// `s` with `D = 2^s` when `D` is a power of two, otherwise 0.
    pub log2_dim: u8,
    /// Prime modulus of the 4U schemes, 0 for the others.
    pub prime: u64,
    pub k: u32,
    pub seed: u64,
}

impl FamilyHeader {
    /// Header with the derived fields filled in: `log2_dim` from `dim` and the
    /// default prime for the 4U schemes. Nothing is validated.
    pub fn new(scheme: Scheme, dim: u64, k: u32, seed: u64) -> FamilyHeader {
        let log2_dim = if dim.is_power_of_two() { dim.trailing_zeros() as u8 } else { 0 };
        let prime = match scheme {
            Scheme::FourUMod | Scheme::FourUBit => MERSENNE_31,
            _ => 0,
        };
        FamilyHeader { scheme, dim, log2_dim, prime, k, seed }
    }
}

/// Coefficients of one multiply-add-shift function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoUCoeffs {
    pub a1: u32,
    /// Always odd.
    pub a2: u32,
}

/// `(a1, a2, a3, a4)`, the constant term first.
pub type FourUCoeffs = [u64; 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DimReduce {
    Mask(u64),
    Rem(u64),
}

impl DimReduce {
    fn new(dim: u64) -> Self {
        if dim.is_power_of_two() {
            DimReduce::Mask(dim - 1)
        } else {
            DimReduce::Rem(dim)
        }
    }

    #[inline(always)]
    fn apply(self, v: u64) -> u64 {
        match self {
            DimReduce::Mask(m) => v & m,
            DimReduce::Rem(d) => v % d,
        }
    }
}

#[derive(Clone)]
enum Coefficients {
    Permutation(Vec<u32>),
    TwoU(Vec<TwoUCoeffs>),
    FourU(Vec<FourUCoeffs>),
}

/// Builder-style parameters for [`HashFamily`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FamilyParams {
    pub scheme: Scheme,
    pub dim: u64,
    pub k: u32,
    pub seed: u64,
    /// Prime for [`Scheme::FourUMod`]; defaults to `2^31 - 1`.
    pub prime: Option<u64>,
    /// Memory cap in bytes for [`Scheme::Permutation`] tables.
    pub permutation_cap: u64,
}

impl FamilyParams {
    pub fn new(scheme: Scheme, dim: u64, k: u32, seed: u64) -> Self {
        FamilyParams { scheme, dim, k, seed, prime: None, permutation_cap: DEFAULT_PERMUTATION_CAP }
    }

    pub fn with_prime(mut self, prime: u64) -> Self {
        self.prime = Some(prime);
        self
    }

    pub fn with_permutation_cap(mut self, bytes: u64) -> Self {
        self.permutation_cap = bytes;
        self
    }

    pub fn build(self) -> Result<HashFamily> {
        HashFamily::from_params(self)
    }
}

/// `k` independent mappings `h_j : {0..D-1} -> {0..D-1}`.
///
/// Immutable once built; share it freely between worker threads.
#[derive(Clone)]
pub struct HashFamily {
    header: FamilyHeader,
    reduce: DimReduce,
    coeffs: Coefficients,
}

impl core::fmt::Debug for HashFamily {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("HashFamily").field("header", &self.header).finish_non_exhaustive()
    }
}

/// Builds a family with the default permutation memory cap.
pub fn build_family(scheme: Scheme, dim: u64, k: u32, seed: u64) -> Result<HashFamily> {
    FamilyParams::new(scheme, dim, k, seed).build()
}

/// ChaCha stream keyed by `(seed, scheme, j)`; the counter is the draw index.
/// Both 4U variants share a stream, so one seed gives them the same polynomials.
fn keyed_rng(seed: u64, scheme: Scheme, j: u32) -> ChaCha8Rng {
    let scheme = if scheme == Scheme::FourUBit { Scheme::FourUMod } else { scheme };
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8] = scheme.tag();
    key[16..20].copy_from_slice(&j.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

fn is_prime_u32_range(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    if p.is_multiple_of(2) {
        return p == 2;
    }
    let mut d = 3u64;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

impl HashFamily {
    pub fn from_params(params: FamilyParams) -> Result<HashFamily> {
        let FamilyParams { scheme, dim, k, seed, .. } = params;
        if dim == 0 {
            return Err(Error::InvalidParameter("universe size D must be at least 1"));
        }
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1"));
        }
        let unsupported = |reason| Error::UnsupportedUniverse { scheme, dim, reason };
        if dim > 1 << 32 {
            return Err(unsupported("feature indices are 32-bit, D must not exceed 2^32"));
        }
        let log2_dim = if dim.is_power_of_two() { dim.trailing_zeros() as u8 } else { 0 };

        let (prime, coeffs) = match scheme {
            Scheme::TwoU => {
                if !dim.is_power_of_two() {
                    return Err(unsupported("2U requires D to be a power of two"));
                }
                let coeffs = (0..k)
                    .map(|j| {
                        let mut rng = keyed_rng(seed, scheme, j);
                        let a1: u32 = rng.random();
                        let a2: u32 = rng.random::<u32>() | 1;
                        TwoUCoeffs { a1, a2 }
                    })
                    .collect();
                (0, Coefficients::TwoU(coeffs))
            }
            Scheme::FourUMod | Scheme::FourUBit => {
                let p = match (scheme, params.prime) {
                    (Scheme::FourUBit, Some(p)) if p != MERSENNE_31 => {
                        return Err(Error::InvalidParameter("4U-bit is defined for p = 2^31 - 1 only"))
                    }
                    (_, Some(p)) => p,
                    (_, None) => MERSENNE_31,
                };
                if p > u32::MAX as u64 || !is_prime_u32_range(p) {
                    return Err(Error::InvalidParameter("4U modulus must be a prime below 2^32"));
                }
                if dim >= p {
                    return Err(unsupported("4U requires D < p"));
                }
                let coeffs = (0..k)
                    .map(|j| {
                        let mut rng = keyed_rng(seed, scheme, j);
                        let mut a = [0u64; 4];
                        for c in a.iter_mut() {
                            *c = rng.random_range(0..p);
                        }
                        a
                    })
                    .collect();
                (p, Coefficients::FourU(coeffs))
            }
            Scheme::Permutation => {
                let bytes = dim as u128 * k as u128 * 4;
                if bytes > params.permutation_cap as u128 {
                    return Err(Error::PermutationTooLarge { bytes, cap: params.permutation_cap });
                }
                let d = dim as usize;
                let mut tables = Vec::with_capacity(d * k as usize);
                for j in 0..k {
                    let start = tables.len();
                    tables.extend((0..dim).map(|t| t as u32));
                    tables[start..].shuffle(&mut keyed_rng(seed, scheme, j));
                }
                (0, Coefficients::Permutation(tables))
            }
        };

        Ok(HashFamily {
            header: FamilyHeader { scheme, dim, log2_dim, prime, k, seed },
            reduce: DimReduce::new(dim),
            coeffs,
        })
    }

    /// A permutation family from explicit tables, one bijection on
    /// `{0..D-1}` per mapping. `seed` is recorded in the header only.
    pub fn from_permutations(tables: &[Vec<u32>], seed: u64) -> Result<HashFamily> {
        let dim = tables.first().map_or(0, Vec::len) as u64;
        if dim == 0 || tables.len() > u32::MAX as usize {
            return Err(Error::InvalidParameter("need at least one non-empty table"));
        }
        if dim > u32::MAX as u64 + 1 {
            return Err(Error::UnsupportedUniverse {
                scheme: Scheme::Permutation,
                dim,
                reason: "D must not exceed 2^32",
            });
        }
        let mut flat = Vec::with_capacity(tables.len() * dim as usize);
        let mut seen = vec![false; dim as usize];
        for table in tables {
            if table.len() as u64 != dim {
                return Err(Error::InvalidParameter("permutation tables differ in length"));
            }
            seen.iter_mut().for_each(|s| *s = false);
            for &v in table {
                if v as u64 >= dim || core::mem::replace(&mut seen[v as usize], true) {
                    return Err(Error::InvalidParameter("table is not a permutation of {0..D-1}"));
                }
            }
            flat.extend_from_slice(table);
        }
        Ok(HashFamily {
            header: FamilyHeader::new(Scheme::Permutation, dim, tables.len() as u32, seed),
            reduce: DimReduce::new(dim),
            coeffs: Coefficients::Permutation(flat),
        })
    }

    /// Rebuilds the family described by `header` with the default memory cap.
    pub fn from_header(header: &FamilyHeader) -> Result<HashFamily> {
        let mut params = FamilyParams::new(header.scheme, header.dim, header.k, header.seed);
        if header.scheme == Scheme::FourUMod {
            params = params.with_prime(header.prime);
        }
        let family = params.build()?;
        if family.header != *header {
            return Err(Error::HeaderMismatch);
        }
        Ok(family)
    }

    pub fn header(&self) -> &FamilyHeader {
        &self.header
    }

    pub fn scheme(&self) -> Scheme {
        self.header.scheme
    }

    pub fn dim(&self) -> u64 {
        self.header.dim
    }

    pub fn k(&self) -> usize {
        self.header.k as usize
    }

    pub fn seed(&self) -> u64 {
        self.header.seed
    }

    /// Coefficients of mapping `j` of a 2U family.
    pub fn two_u_coeffs(&self, j: usize) -> Option<TwoUCoeffs> {
        match &self.coeffs {
            Coefficients::TwoU(c) => c.get(j).copied(),
            _ => None,
        }
    }

    /// Coefficients of mapping `j` of a 4U family.
    pub fn four_u_coeffs(&self, j: usize) -> Option<FourUCoeffs> {
        match &self.coeffs {
            Coefficients::FourU(c) => c.get(j).copied(),
            _ => None,
        }
    }

    /// Permutation table `j`, if this is a permutation family.
    pub fn permutation_table(&self, j: usize) -> Option<&[u32]> {
        match &self.coeffs {
            Coefficients::Permutation(tables) => {
                let d = self.header.dim as usize;
                tables.get(j * d..(j + 1) * d)
            }
            _ => None,
        }
    }

    /// `h_j(t)` for `j` in `0..k` and `t` in `0..D`.
    #[inline]
    pub fn map(&self, j: usize, t: u32) -> u32 {
        debug_assert!((t as u64) < self.header.dim);
        match &self.coeffs {
            Coefficients::TwoU(c) => hash_2u(c[j], self.header.log2_dim as u32, t),
            Coefficients::FourU(c) => {
                let v = match self.header.scheme {
                    Scheme::FourUBit => poly_bitmod(&c[j], t as u64),
                    _ => poly_mod(&c[j], self.header.prime, t as u64),
                };
                self.reduce.apply(v) as u32
            }
            Coefficients::Permutation(tables) => tables[j * self.header.dim as usize + t as usize],
        }
    }

    /// 2U mapping `j` applied to `t`. Panics if the family is not 2U.
    pub fn hash_2u(&self, j: usize, t: u32) -> u32 {
        match &self.coeffs {
            Coefficients::TwoU(c) => hash_2u(c[j], self.header.log2_dim as u32, t),
            _ => panic!("hash_2u called on a {:?} family", self.header.scheme),
        }
    }

    /// 4U mapping `j` applied to `t`. Panics if the family is not 4U.
    pub fn hash_4u(&self, j: usize, t: u32) -> u32 {
        match self.header.scheme {
            Scheme::FourUMod | Scheme::FourUBit => self.map(j, t),
            other => panic!("hash_4u called on a {other:?} family"),
        }
    }

    /// Table lookup `pi_j(t)`. Panics if the family is not a permutation family.
    pub fn permute(&self, j: usize, t: u32) -> u32 {
        match &self.coeffs {
            Coefficients::Permutation(_) => self.map(j, t),
            _ => panic!("permute called on a {:?} family", self.header.scheme),
        }
    }

    /// `min_{t in indices} h_j(t)`, or `None` for an empty slice.
    ///
    /// Dispatches on the scheme once, outside the loop over features.
    #[inline]
    pub fn min_hash(&self, j: usize, indices: &[u32]) -> Option<u32> {
        if indices.is_empty() {
            return None;
        }
        let min = match &self.coeffs {
            Coefficients::TwoU(c) => {
                let c = c[j];
                let s = self.header.log2_dim as u32;
                indices.iter().fold(u32::MAX, |m, &t| m.min(hash_2u(c, s, t)))
            }
            Coefficients::FourU(c) => {
                let c = &c[j];
                let reduce = self.reduce;
                if self.header.scheme == Scheme::FourUBit {
                    indices.iter().fold(u64::MAX, |m, &t| m.min(reduce.apply(poly_bitmod(c, t as u64)))) as u32
                } else {
                    let p = self.header.prime;
                    indices.iter().fold(u64::MAX, |m, &t| m.min(reduce.apply(poly_mod(c, p, t as u64)))) as u32
                }
            }
            Coefficients::Permutation(tables) => {
                let d = self.header.dim as usize;
                let table = &tables[j * d..(j + 1) * d];
                indices.iter().fold(u32::MAX, |m, &t| m.min(table[t as usize]))
            }
        };
        Some(min)
    }
}

/// Multiply-add-shift: the top `s` bits of `(a1 + a2 * t) mod 2^32`.
///
/// The `mod 2^32` comes from wrapping 32-bit arithmetic and the reduction to
/// `{0..2^s-1}` is a right shift, so no division is involved.
#[inline(always)]
pub fn hash_2u(c: TwoUCoeffs, s: u32, t: u32) -> u32 {
    let v = c.a1.wrapping_add(c.a2.wrapping_mul(t));
    if s == 0 {
        0
    } else {
        v >> (32 - s)
    }
}

/// `v mod (2^31 - 1)` using shifts, masks, adds and compares only.
///
/// Valid for every 64-bit `v`: the first fold leaves at most `2^33 + 2^31`,
/// and a second fold (taken only when the value is still `>= 2p`) leaves at
/// most `p + 5`, which one conditional subtraction finishes.
#[inline(always)]
pub fn bitmod_p31(v: u64) -> u64 {
    const P: u64 = MERSENNE_31;
    let mut v = (v >> 31) + (v & P);
    if v >= 2 * P {
        v = (v >> 31) + (v & P);
    }
    if v >= P {
        v - P
    } else {
        v
    }
}

/// Horner evaluation of `a1 + a2 t + a3 t^2 + a4 t^3 mod p` with a
/// division-based remainder after every step.
#[inline(always)]
pub fn poly_mod(a: &FourUCoeffs, p: u64, t: u64) -> u64 {
    let mut acc = a[3];
    acc = (acc * t + a[2]) % p;
    acc = (acc * t + a[1]) % p;
    (acc * t + a[0]) % p
}

/// Same polynomial over `p = 2^31 - 1`, reduced with [`bitmod_p31`].
///
/// Every operand is below `2^31`, so `acc * t + a` stays below `2^62`.
#[inline(always)]
pub fn poly_bitmod(a: &FourUCoeffs, t: u64) -> u64 {
    let mut acc = a[3];
    acc = bitmod_p31(acc * t + a[2]);
    acc = bitmod_p31(acc * t + a[1]);
    bitmod_p31(acc * t + a[0])
}
