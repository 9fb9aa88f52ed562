//! Resemblance estimation from sketches.
//!
//! Two estimators are provided. [`estimate_full`] counts equal full minima and
//! is unbiased under random permutations. [`estimate_bbit`] counts equal b-bit
//! codes and removes the chance agreement of truncated minima:
//!
//! ```text
//! P_b = C1 + (1 - C2) R        R_hat = (P_hat - C1) / (1 - C2)
//! ```
//!
//! where, with `r1 = f1/D`, `r2 = f2/D`,
//!
//! ```text
//! A_i = r_i (1 - r_i)^(2^b - 1) / (1 - (1 - r_i)^(2^b))
//! C1  = A1 r2/(r1+r2) + A2 r1/(r1+r2)
//! C2  = A1 r1/(r1+r2) + A2 r2/(r1+r2)
//! Var(R_hat) = P_b (1 - P_b) / (k (1 - C2)^2)
//! ```
//!
//! The simulation harness ([`MseExperiment`]) measures the empirical mean
//! square error of `R_hat` for a fixed pair of sets over independently seeded
//! hash families and compares it with `Var(R_hat)`.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hashfamilies::{FamilyParams, Scheme};
use crate::sketch::{FeatureSet, Sketch};

/// Sizes describing a pair of sets: `|S1|`, `|S2|`, `|S1 ∩ S2|` and `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairProfile {
    pub f1: u64,
    pub f2: u64,
    pub a: u64,
    pub dim: u64,
}

impl PairProfile {
    pub fn new(f1: u64, f2: u64, a: u64, dim: u64) -> Result<PairProfile> {
        if a > f1.min(f2) || f1 > dim || f2 > dim || f1 + f2 - a > dim {
            return Err(Error::InfeasibleProfile);
        }
        Ok(PairProfile { f1, f2, a, dim })
    }

    /// Profile with the intersection closest to resemblance `r`:
    /// `a = round(r (f1 + f2) / (1 + r))`.
    pub fn from_resemblance(f1: u64, f2: u64, r: f64, dim: u64) -> Result<PairProfile> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::InfeasibleProfile);
        }
        let a = libm::round(r * (f1 + f2) as f64 / (1.0 + r)) as u64;
        PairProfile::new(f1, f2, a.min(f1.min(f2)), dim)
    }

    /// The profile of two concrete sets over a universe of size `dim`.
    pub fn of_sets(s1: &FeatureSet, s2: &FeatureSet, dim: u64) -> Result<PairProfile> {
        PairProfile::new(s1.len() as u64, s2.len() as u64, s1.intersection_size(s2) as u64, dim)
    }

    pub fn r1(&self) -> f64 {
        self.f1 as f64 / self.dim as f64
    }

    pub fn r2(&self) -> f64 {
        self.f2 as f64 / self.dim as f64
    }

    pub fn union(&self) -> u64 {
        self.f1 + self.f2 - self.a
    }

    /// `a / (f1 + f2 - a)`; 0 for two empty sets.
    pub fn resemblance(&self) -> f64 {
        match self.union() {
            0 => 0.0,
            u => self.a as f64 / u as f64,
        }
    }

    fn check_nondegenerate(&self) -> Result<()> {
        if self.f1 == 0 || self.f2 == 0 || self.dim == 0 {
            return Err(Error::DegenerateProfile);
        }
        Ok(())
    }
}

/// The bias-correction pair `(C1, C2)` for one `(profile, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionTerms {
    pub c1: f64,
    pub c2: f64,
}

/// `A_{i,b} = r (1-r)^(2^b-1) / (1 - (1-r)^(2^b))`, computed through
/// `log1p`/`expm1` so that tiny densities do not cancel.
fn a_term(r: f64, b: u8) -> f64 {
    let n = libm::ldexp(1.0, b as i32);
    let ln1m = libm::log1p(-r);
    let numer = r * libm::exp((n - 1.0) * ln1m);
    let denom = -libm::expm1(n * ln1m);
    numer / denom
}

pub fn correction_terms(profile: &PairProfile, b: u8) -> Result<CorrectionTerms> {
    profile.check_nondegenerate()?;
    if b == 0 {
        return Err(Error::InvalidParameter("b must be at least 1"));
    }
    let (r1, r2) = (profile.r1(), profile.r2());
    let (a1, a2) = (a_term(r1, b), a_term(r2, b));
    let s = r1 + r2;
    Ok(CorrectionTerms { c1: a1 * r2 / s + a2 * r1 / s, c2: a1 * r1 / s + a2 * r2 / s })
}

/// `P_b = C1 + (1 - C2) R`, the probability that two b-bit codes agree.
pub fn collision_probability(profile: &PairProfile, b: u8) -> Result<f64> {
    let c = correction_terms(profile, b)?;
    Ok(c.c1 + (1.0 - c.c2) * profile.resemblance())
}

/// `Var(R_hat_b) = P_b (1 - P_b) / (k (1 - C2)^2)`.
pub fn theoretical_variance(profile: &PairProfile, b: u8, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1"));
    }
    let c = correction_terms(profile, b)?;
    let p = c.c1 + (1.0 - c.c2) * profile.resemblance();
    Ok(p * (1.0 - p) / (k as f64 * (1.0 - c.c2) * (1.0 - c.c2)))
}

/// Result of [`estimate_bbit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResemblanceEstimate {
    /// Corrected estimate clamped to `[0, 1]`.
    pub r_hat: f64,
    /// Corrected estimate before clamping.
    pub r_raw: f64,
    /// Fraction of matching codes.
    pub p_hat: f64,
    pub c1: f64,
    pub c2: f64,
    pub var_theory: f64,
    pub k: usize,
    pub b: u8,
}

/// `(P_hat - C1) / (1 - C2)` without clamping.
pub fn correct(p_hat: f64, terms: &CorrectionTerms) -> f64 {
    (p_hat - terms.c1) / (1.0 - terms.c2)
}

fn check_pair(sk1: &Sketch, sk2: &Sketch) -> Result<()> {
    if !sk1.header().same_family(sk2.header()) {
        return Err(Error::HeaderMismatch);
    }
    if sk1.is_empty_set() || sk2.is_empty_set() {
        return Err(Error::DegenerateProfile);
    }
    Ok(())
}

/// Fraction of mappings whose full minima agree.
pub fn estimate_full(sk1: &Sketch, sk2: &Sketch) -> Result<f64> {
    check_pair(sk1, sk2)?;
    let (m1, m2) = match (sk1.minima(), sk2.minima()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::MissingMinima),
    };
    let equal = m1.iter().zip(m2).filter(|(x, y)| x == y).count();
    Ok(equal as f64 / m1.len() as f64)
}

/// Fraction of mappings whose b-bit codes agree.
pub fn match_fraction(sk1: &Sketch, sk2: &Sketch) -> Result<f64> {
    if sk1.header() != sk2.header() {
        return Err(Error::HeaderMismatch);
    }
    let k = sk1.header().k();
    Ok(sk1.codes().count_matches_prefix(sk2.codes(), k) as f64 / k as f64)
}

/// Bias-corrected b-bit estimate; `profile` supplies `f1`, `f2`, `a` and `D`.
pub fn estimate_bbit(sk1: &Sketch, sk2: &Sketch, profile: &PairProfile) -> Result<ResemblanceEstimate> {
    check_pair(sk1, sk2)?;
    let p_hat = match_fraction(sk1, sk2)?;
    let b = sk1.header().b;
    let k = sk1.header().k();
    let terms = correction_terms(profile, b)?;
    let r_raw = correct(p_hat, &terms);
    Ok(ResemblanceEstimate {
        r_hat: r_raw.clamp(0.0, 1.0),
        r_raw,
        p_hat,
        c1: terms.c1,
        c2: terms.c2,
        var_theory: theoretical_variance(profile, b, k)?,
        k,
        b,
    })
}

/// One line of the MSE table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseRow {
    pub b: u8,
    pub k: usize,
    pub reps: u32,
    /// Mean of `(R_raw - R)^2` over repetitions.
    pub mse: f64,
    /// Mean of `R_raw - R`.
    pub bias: f64,
    pub var_theory: f64,
    pub scheme: Scheme,
    pub dim: u64,
}

impl MseRow {
    pub fn ratio(&self) -> f64 {
        self.mse / self.var_theory
    }
}

/// Simulation of the b-bit estimator on one fixed pair of sets.
///
/// Each repetition draws a fresh family (seed derived from `seed` and the
/// repetition number), sketches both sets with `max(ks)` mappings, and for
/// every `(b, k)` evaluates the estimator on the first `k` codes.
#[derive(Debug, Clone)]
pub struct MseExperiment {
    s1: FeatureSet,
    s2: FeatureSet,
    profile: PairProfile,
    scheme: Scheme,
    bs: Vec<u8>,
    ks: Vec<usize>,
    seed: u64,
    terms: Vec<CorrectionTerms>,
}

/// Per-repetition seed; repetitions are independent of how they are scheduled.
pub fn repetition_seed(seed: u64, rep: u64) -> u64 {
    let mut z = seed ^ rep.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl MseExperiment {
    pub fn new(
        s1: FeatureSet,
        s2: FeatureSet,
        dim: u64,
        scheme: Scheme,
        bs: Vec<u8>,
        ks: Vec<usize>,
        seed: u64,
    ) -> Result<MseExperiment> {
        s1.validate(dim)?;
        s2.validate(dim)?;
        let profile = PairProfile::of_sets(&s1, &s2, dim)?;
        if bs.is_empty() || ks.is_empty() || ks.contains(&0) {
            return Err(Error::InvalidParameter("b and k lists must be non-empty with k >= 1"));
        }
        if ks.iter().any(|&k| k > u32::MAX as usize) {
            return Err(Error::InvalidParameter("k too large"));
        }
        let terms = bs.iter().map(|&b| correction_terms(&profile, b)).collect::<Result<Vec<_>>>()?;
        // surface unsupported universes before any repetition runs
        if scheme != Scheme::Permutation {
            FamilyParams::new(scheme, dim, 1, seed).build()?;
        }
        Ok(MseExperiment { s1, s2, profile, scheme, bs, ks, seed, terms })
    }

    pub fn profile(&self) -> &PairProfile {
        &self.profile
    }

    fn k_max(&self) -> usize {
        *self.ks.iter().max().unwrap()
    }

    /// Number of `(b, k)` cells, ordered `b`-major.
    pub fn cells(&self) -> usize {
        self.bs.len() * self.ks.len()
    }

    /// Raw estimation errors `R_raw - R` of one repetition, one per cell.
    pub fn repetition_errors(&self, rep: u64, scratch: &mut Scratch) -> Result<Vec<f64>> {
        let seed = repetition_seed(self.seed, rep);
        let k = self.k_max();
        match self.scheme {
            Scheme::Permutation => {
                // A uniformly random permutation restricted to S1 ∪ S2 is a
                // uniformly random injection of the union into {0..D-1}.
                scratch.sample_injections(&self.s1, &self.s2, self.profile.dim, k, seed);
            }
            scheme => {
                let family = FamilyParams::new(scheme, self.profile.dim, k as u32, seed).build()?;
                scratch.m1.clear();
                scratch.m2.clear();
                for j in 0..k {
                    scratch.m1.push(family.min_hash(j, self.s1.indices()).unwrap() as u64);
                    scratch.m2.push(family.min_hash(j, self.s2.indices()).unwrap() as u64);
                }
            }
        }
        let (m1, m2) = (&scratch.m1, &scratch.m2);
        let r = self.profile.resemblance();
        let mut errors = Vec::with_capacity(self.cells());
        for (bi, &b) in self.bs.iter().enumerate() {
            let mask = if b >= 64 { u64::MAX } else { (1u64 << b) - 1 };
            // prefix counts of matching codes
            let mut matches = Vec::with_capacity(k + 1);
            matches.push(0usize);
            for j in 0..k {
                let eq = (m1[j] ^ m2[j]) & mask == 0;
                matches.push(matches[j] + eq as usize);
            }
            for &kk in &self.ks {
                let p_hat = matches[kk] as f64 / kk as f64;
                errors.push(correct(p_hat, &self.terms[bi]) - r);
            }
        }
        Ok(errors)
    }

    /// Runs repetitions `reps` and returns their error vectors in order.
    pub fn run_range(&self, reps: core::ops::Range<u64>) -> Result<Vec<Vec<f64>>> {
        let mut scratch = Scratch::new(self.profile.dim);
        reps.map(|rep| self.repetition_errors(rep, &mut scratch)).collect()
    }

    /// Folds per-repetition errors (in repetition order) into the table.
    pub fn summarize(&self, errors: &[Vec<f64>]) -> Result<Vec<MseRow>> {
        let reps = errors.len();
        let mut rows = Vec::with_capacity(self.cells());
        let mut cell = 0;
        for &b in &self.bs {
            for &k in &self.ks {
                let (mut sum, mut sumsq) = (0.0, 0.0);
                for e in errors {
                    sum += e[cell];
                    sumsq += e[cell] * e[cell];
                }
                rows.push(MseRow {
                    b,
                    k,
                    reps: reps as u32,
                    mse: sumsq / reps as f64,
                    bias: sum / reps as f64,
                    var_theory: theoretical_variance(&self.profile, b, k)?,
                    scheme: self.scheme,
                    dim: self.profile.dim,
                });
                cell += 1;
            }
        }
        Ok(rows)
    }

    /// Runs `reps` repetitions sequentially.
    pub fn run(&self, reps: u32) -> Result<Vec<MseRow>> {
        check_reps(reps)?;
        let errors = self.run_range(0..reps as u64)?;
        self.summarize(&errors)
    }
}

pub const MIN_REPS: u32 = 100;

pub fn check_reps(reps: u32) -> Result<()> {
    if reps < MIN_REPS {
        return Err(Error::InvalidParameter("mse experiments need at least 100 repetitions"));
    }
    Ok(())
}

/// Reusable buffers for [`MseExperiment::repetition_errors`].
#[derive(Debug, Clone)]
pub struct Scratch {
    m1: Vec<u64>,
    m2: Vec<u64>,
    taken: Vec<u64>,
    touched: Vec<u32>,
    union: Vec<(u32, u8)>,
}

impl Scratch {
    pub fn new(dim: u64) -> Scratch {
        Scratch {
            m1: Vec::new(),
            m2: Vec::new(),
            taken: vec![0; (dim as usize).div_ceil(64)],
            touched: Vec::new(),
            union: Vec::new(),
        }
    }

    fn sample_injections(&mut self, s1: &FeatureSet, s2: &FeatureSet, dim: u64, k: usize, seed: u64) {
        self.union.clear();
        let (a, b) = (s1.indices(), s2.indices());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i] < b[j]) {
                self.union.push((a[i], 1));
                i += 1;
            } else if i == a.len() || b[j] < a[i] {
                self.union.push((b[j], 2));
                j += 1;
            } else {
                self.union.push((a[i], 3));
                i += 1;
                j += 1;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.m1.clear();
        self.m2.clear();
        for _ in 0..k {
            let (mut min1, mut min2) = (u64::MAX, u64::MAX);
            for &(_, member) in &self.union {
                let v = loop {
                    let v = rng.random_range(0..dim);
                    let (w, bit) = ((v / 64) as usize, 1u64 << (v % 64));
                    if self.taken[w] & bit == 0 {
                        self.taken[w] |= bit;
                        self.touched.push(w as u32);
                        break v;
                    }
                };
                if member & 1 != 0 {
                    min1 = min1.min(v);
                }
                if member & 2 != 0 {
                    min2 = min2.min(v);
                }
            }
            for &w in &self.touched {
                self.taken[w as usize] = 0;
            }
            self.touched.clear();
            self.m1.push(min1);
            self.m2.push(min2);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashfamilies::build_family;
    use crate::sketch::sketch_one;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn sparse_limit_gives_two_to_minus_b() {
        let p = PairProfile::new(1, 1, 0, 1_000_000).unwrap();
        let c = correction_terms(&p, 1).unwrap();
        assert!(approx(c.c1, 0.5, 1e-5) && approx(c.c2, 0.5, 1e-5), "{c:?}");
        for b in [2u8, 4, 8] {
            let c = correction_terms(&p, b).unwrap();
            let target = libm::ldexp(1.0, -(b as i32));
            assert!(approx(c.c1, target, 1e-4), "{b} {c:?}");
        }
    }

    #[test]
    fn equal_densities_give_equal_terms() {
        for b in 1..=16u8 {
            let p = PairProfile::new(300, 300, 17, 1000).unwrap();
            let c = correction_terms(&p, b).unwrap();
            assert!(approx(c.c1, c.c2, 1e-15));
            // (1 - r)^(2^b) underflows for large b
            assert!(c.c1 >= 0.0 && c.c1 < 1.0);
            if b <= 8 {
                assert!(c.c1 > 0.0);
            }
        }
    }

    #[test]
    fn degenerate_profiles_error() {
        let p = PairProfile::new(0, 5, 0, 100).unwrap();
        assert_eq!(correction_terms(&p, 2), Err(Error::DegenerateProfile));
        assert_eq!(theoretical_variance(&p, 2, 10), Err(Error::DegenerateProfile));
        assert_eq!(PairProfile::new(5, 5, 6, 100), Err(Error::InfeasibleProfile));
        assert_eq!(PairProfile::new(60, 60, 10, 100), Err(Error::InfeasibleProfile));
    }

    #[test]
    fn variance_scales_as_one_over_k() {
        let p = PairProfile::from_resemblance(3194, 1651, 0.476, 1 << 16).unwrap();
        let v1 = theoretical_variance(&p, 2, 100).unwrap();
        let v2 = theoretical_variance(&p, 2, 200).unwrap();
        assert_eq!(v1, 2.0 * v2);
        assert!(v1 > 0.0);
    }

    #[test]
    fn identical_sets_have_zero_variance() {
        let p = PairProfile::new(500, 500, 500, 1 << 16).unwrap();
        assert_eq!(p.resemblance(), 1.0);
        assert!(theoretical_variance(&p, 4, 10).unwrap().abs() < 1e-15);
    }

    #[test]
    fn from_resemblance_rounds_intersection() {
        let p = PairProfile::from_resemblance(948, 940, 0.925, 1 << 16).unwrap();
        assert_eq!(p.a, 907);
        assert!((p.resemblance() - 0.925).abs() < 1e-3);
    }

    #[test]
    fn identical_sketches() {
        let family = build_family(Scheme::TwoU, 1 << 16, 64, 1).unwrap();
        let set = FeatureSet::new(vec![5, 9, 4000, 60000], 1, 1 << 16).unwrap();
        let s1 = sketch_one(&family, &set, 2).unwrap();
        let s2 = sketch_one(&family, &set, 2).unwrap();
        assert_eq!(estimate_full(&s1, &s2).unwrap(), 1.0);
        let p = PairProfile::of_sets(&set, &set, 1 << 16).unwrap();
        let est = estimate_bbit(&s1, &s2, &p).unwrap();
        assert_eq!(est.p_hat, 1.0);
        assert!(approx(est.r_hat, 1.0, 1e-12));
    }

    #[test]
    fn sparse_b1_half_match_estimates_zero() {
        let p = PairProfile::new(1, 1, 0, 1_000_000_000).unwrap();
        let c = correction_terms(&p, 1).unwrap();
        assert!(correct(0.5, &c).abs() < 1e-6);
    }

    #[test]
    fn disjoint_sets_never_share_minima_under_permutations() {
        let family = build_family(Scheme::Permutation, 4096, 200, 3).unwrap();
        let a = FeatureSet::new((0..100).collect(), 1, 4096).unwrap();
        let b = FeatureSet::new((100..250).collect(), 1, 4096).unwrap();
        let (s1, s2) = (sketch_one(&family, &a, 8).unwrap(), sketch_one(&family, &b, 8).unwrap());
        assert_eq!(estimate_full(&s1, &s2).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_and_incomplete_sketches() {
        let f1 = build_family(Scheme::TwoU, 1 << 10, 8, 1).unwrap();
        let f2 = build_family(Scheme::TwoU, 1 << 10, 8, 2).unwrap();
        let set = FeatureSet::new(vec![1, 2, 3], 1, 1 << 10).unwrap();
        let a = sketch_one(&f1, &set, 4).unwrap();
        let b = sketch_one(&f2, &set, 4).unwrap();
        assert_eq!(estimate_full(&a, &b), Err(Error::HeaderMismatch));
        let p = PairProfile::of_sets(&set, &set, 1 << 10).unwrap();
        assert_eq!(estimate_bbit(&a, &b, &p).unwrap_err(), Error::HeaderMismatch);
        let c = sketch_one(&f1, &set, 2).unwrap();
        assert_eq!(estimate_bbit(&a, &c, &p).unwrap_err(), Error::HeaderMismatch);
        let no_min = Sketch::from_codes(*a.header(), a.codes().clone(), 1, false).unwrap();
        assert_eq!(estimate_full(&a, &no_min), Err(Error::MissingMinima));
        let empty = sketch_one(&f1, &FeatureSet::default(), 4).unwrap();
        assert_eq!(estimate_full(&a, &empty), Err(Error::DegenerateProfile));
    }

    #[test]
    fn repetition_order_does_not_matter() {
        let a = FeatureSet::new((0..200).step_by(2).collect(), 1, 4096).unwrap();
        let b = FeatureSet::new((0..300).step_by(3).collect(), 1, 4096).unwrap();
        let exp = MseExperiment::new(a, b, 4096, Scheme::TwoU, vec![1, 4], vec![10, 50], 9).unwrap();
        let all = exp.run_range(0..20).unwrap();
        let mut split = exp.run_range(10..20).unwrap();
        split.splice(0..0, exp.run_range(0..10).unwrap());
        assert_eq!(all, split);
        assert!(exp.run(10).is_err());
    }
}
