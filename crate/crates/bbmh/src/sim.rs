//! Resemblance-estimation simulations on synthetic set pairs with the
//! profiles of nine word pairs from a web crawl.

use std::io::Write;

use rayon::prelude::*;

use bbmh_core::estimator::{check_reps, MseExperiment, MseRow, PairProfile};
use bbmh_core::synth::synth_pair;
use bbmh_core::Scheme;

use crate::error::{Error, Result};
use crate::pipeline::build_pool;

/// Set sizes and resemblance of a word pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WordPair {
    pub name: &'static str,
    pub f1: u64,
    pub f2: u64,
    pub r: f64,
}

pub const WORD_PAIRS: [WordPair; 9] = [
    WordPair { name: "kong-hong", f1: 948, f2: 940, r: 0.925 },
    WordPair { name: "rights-reserved", f1: 12234, f2: 11272, r: 0.877 },
    WordPair { name: "of-and", f1: 37339, f2: 36289, r: 0.771 },
    WordPair { name: "gambia-kiribati", f1: 206, f2: 186, r: 0.712 },
    WordPair { name: "san-francisco", f1: 3194, f2: 1651, r: 0.476 },
    WordPair { name: "credit-card", f1: 2999, f2: 2697, r: 0.285 },
    WordPair { name: "time-job", f1: 37339, f2: 36289, r: 0.128 },
    WordPair { name: "low-pay", f1: 2936, f2: 2828, r: 0.112 },
    WordPair { name: "a-test", f1: 39063, f2: 2278, r: 0.052 },
];

pub fn word_pair(name: &str) -> Option<WordPair> {
    let name = name.to_ascii_lowercase().replace(['/', '_', ' '], "-");
    WORD_PAIRS.iter().copied().find(|p| p.name == name)
}

impl WordPair {
    /// The pair's profile at universe size `dim`, with the intersection
    /// rounded to the nearest integer.
    pub fn profile(&self, dim: u64) -> Result<PairProfile> {
        Ok(PairProfile::from_resemblance(self.f1, self.f2, self.r, dim)?)
    }
}

/// Parses `"1,2,4"` into a list.
pub fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|t| t.trim().parse().map_err(|_| Error::Usage(format!("cannot parse {t:?} in list {text:?}"))))
        .collect()
}

/// Number of points in an `a..b` sweep.
pub const SWEEP_POINTS: usize = 11;

/// Expands `"a..b"` into 11 roughly log-spaced integers from `a` to `b`
/// (fewer when the range is too narrow to keep them distinct); a plain list
/// is parsed as such.
pub fn parse_sweep(text: &str) -> Result<Vec<usize>> {
    let Some((a, b)) = text.split_once("..") else {
        return parse_list(text);
    };
    let (a, b): (usize, usize) = match (a.trim().parse(), b.trim().parse()) {
        (Ok(a), Ok(b)) if 1 <= a && a <= b => (a, b),
        _ => return Err(Error::Usage(format!("bad sweep {text:?}, expected a..b with 1 <= a <= b"))),
    };
    let ratio = (b as f64 / a as f64).ln();
    let mut out: Vec<usize> = (0..SWEEP_POINTS)
        .map(|i| (a as f64 * (ratio * i as f64 / (SWEEP_POINTS - 1) as f64).exp()).round() as usize)
        .map(|v| v.clamp(a, b))
        .collect();
    out.dedup();
    Ok(out)
}

/// Synthesizes a pair with `profile` and runs the MSE experiment on
/// `threads` workers. Repetitions use derived seeds, so the table does not
/// depend on the thread count.
pub fn mse_experiment(
    profile: &PairProfile,
    scheme: Scheme,
    bs: &[u8],
    ks: &[usize],
    reps: u32,
    seed: u64,
    threads: usize,
) -> Result<Vec<MseRow>> {
    check_reps(reps)?;
    let (s1, s2) = synth_pair(profile.f1, profile.f2, profile.a, profile.dim, seed)?;
    let exp = MseExperiment::new(s1, s2, profile.dim, scheme, bs.to_vec(), ks.to_vec(), seed)?;
    const BATCH: u64 = 8;
    let batches: Vec<u64> = (0..(reps as u64).div_ceil(BATCH)).collect();
    let pool = build_pool(threads)?;
    let parts: Vec<Vec<Vec<f64>>> = pool.install(|| {
        batches
            .par_iter()
            .map(|&i| exp.run_range(i * BATCH..((i + 1) * BATCH).min(reps as u64)))
            .collect::<std::result::Result<_, _>>()
    })?;
    let errors: Vec<Vec<f64>> = parts.into_iter().flatten().collect();
    Ok(exp.summarize(&errors)?)
}

pub const MSE_HEADER: &str = "b\tk\treps\tmse\tbias\tvar_theory\tscheme\tD";

pub fn write_mse_table<W: Write + ?Sized>(out: &mut W, rows: &[MseRow]) -> std::io::Result<()> {
    writeln!(out, "{MSE_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{:.6e}\t{:.6e}\t{:.6e}\t{}\t{}",
            r.b, r.k, r.reps, r.mse, r.bias, r.var_theory, r.scheme, r.dim
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_has_eleven_points_with_endpoints() {
        let ks = parse_sweep("10..500").unwrap();
        assert_eq!(ks.len(), 11);
        assert_eq!((ks[0], ks[10]), (10, 500));
        assert!(ks.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(parse_sweep("3..4").unwrap(), vec![3, 4]);
        assert_eq!(parse_sweep("50,100").unwrap(), vec![50, 100]);
        assert!(parse_sweep("5..2").is_err());
    }

    #[test]
    fn word_pair_lookup() {
        let p = word_pair("KONG/HONG").unwrap();
        assert_eq!((p.f1, p.f2), (948, 940));
        let profile = p.profile(1 << 16).unwrap();
        assert!((profile.resemblance() - 0.925).abs() < 1e-3);
        assert!(word_pair("nope").is_none());
    }

    #[test]
    fn table_independent_of_threads() {
        let profile = word_pair("gambia-kiribati").unwrap().profile(1 << 16).unwrap();
        let a = mse_experiment(&profile, Scheme::TwoU, &[1, 4], &[10, 50], 100, 5, 1).unwrap();
        let b = mse_experiment(&profile, Scheme::TwoU, &[1, 4], &[10, 50], 100, 5, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
    }
}
