//! Acceptance report: one PASS/FAIL line per criterion, with measurements
//! indented below it.
//!
//! Runs every criterion by default; pass criterion numbers as arguments to run
//! a subset (`cargo test --test acceptance -- 3 7`). The process exits with
//! status 0 after reporting unless `BBMH_ACCEPTANCE_STRICT` is set, in which
//! case any FAIL makes it exit with status 1.

use std::fs;
use std::io::Cursor;
use std::path::Path;
use std::time::{Duration, Instant};

use bbmh::bbmh_core::estimator::{collision_probability, estimate_full, PairProfile};
use bbmh::bbmh_core::expansion::expand;
use bbmh::bbmh_core::hashfamilies::{poly_bitmod, poly_mod, MERSENNE_31};
use bbmh::bbmh_core::learners::{
    accuracy, example_gradient, example_objective, Loss, OwnedRow, Regularization, SparseRow, TrainConfig, Trainer,
};
use bbmh::bbmh_core::synth::{synth_classification, synth_pair, LabelModel};
use bbmh::bbmh_core::vw::{vw_project, VwConfig};
use bbmh::bbmh_core::{bitmod_p31, build_family, sketch_one, FeatureSet, Scheme, SketchHeader};
use bbmh::bench::{bench_preprocess, PreprocessBench};
use bbmh::formats::{minima_path, write_corpus, SketchWriter, SKETCH_HEADER_LEN};
use bbmh::libsvm::LibsvmOptions;
use bbmh::pipeline::{default_workers, sketch_stream, PipelineConfig};
use bbmh::sim::{mse_experiment, word_pair, WORD_PAIRS};
use bbmh::source::open_sets;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, Vec<String>), String>;

struct Criterion {
    id: u8,
    name: &'static str,
    run: fn() -> Outcome,
}

const CRITERIA: [Criterion; 12] = [
    Criterion { id: 1, name: "Mersenne modulo oracle", run: modulo_oracle },
    Criterion { id: 2, name: "4U-bit equals 4U-mod", run: four_u_equivalence },
    Criterion { id: 3, name: "collision probability oracle", run: collision_oracle },
    Criterion { id: 4, name: "full-minima estimator unbiased", run: unbiasedness },
    Criterion { id: 5, name: "2U MSE matches theoretical variance", run: mse_reproduction },
    Criterion { id: 6, name: "expansion inner product identity", run: expansion_identity },
    Criterion { id: 7, name: "learning parity", run: learning_parity },
    Criterion { id: 8, name: "logistic gradient check", run: gradient_check },
    Criterion { id: 9, name: "storage ratio", run: storage_ratio },
    Criterion { id: 10, name: "pipeline determinism", run: pipeline_determinism },
    Criterion { id: 11, name: "thread scaling", run: thread_scaling },
    Criterion { id: 12, name: "VW inner products unbiased", run: vw_unbiased },
];

fn main() {
    let wanted: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for c in CRITERIA.iter().filter(|c| wanted.is_empty() || wanted.contains(&c.id)) {
        let start = Instant::now();
        let outcome = (c.run)();
        let secs = start.elapsed().as_secs_f64();
        ran += 1;
        let (pass, lines) = match outcome {
            Ok(r) => r,
            Err(e) => (false, vec![format!("error: {e}")]),
        };
        failed += !pass as usize;
        println!("{} criterion {:>2}: {} ({secs:.1} s)", if pass { "PASS" } else { "FAIL" }, c.id, c.name);
        for line in lines {
            println!("    {line}");
        }
    }
    println!("acceptance: {}/{ran} criteria passed", ran - failed);
    if failed > 0 && std::env::var_os("BBMH_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn modulo_oracle() -> Outcome {
    let start = Instant::now();
    let p = MERSENNE_31;
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut failures = 0u64;
    for _ in 0..1_000_000 {
        let v = rng.random_range(0..1u64 << 62);
        failures += (bitmod_p31(v) != v % p) as u64;
    }
    for v in [0, p - 1, p, p + 1, 2 * p - 1, 2 * p, (1 << 62) - 1] {
        failures += (bitmod_p31(v) != v % p) as u64;
    }
    let elapsed = start.elapsed();
    Ok((
        failures == 0 && elapsed < Duration::from_secs(5),
        vec![format!("{failures} mismatches in 10^6 random values and 7 boundaries, {:.3} s", elapsed.as_secs_f64())],
    ))
}

fn four_u_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut failures = 0u64;
    for _ in 0..100_000 {
        let a = [0; 4].map(|_: u64| rng.random_range(0..MERSENNE_31));
        let t = rng.random_range(0..MERSENNE_31);
        failures += (poly_bitmod(&a, t) != poly_mod(&a, MERSENNE_31, t)) as u64;
    }
    let dim = 1u64 << 24;
    let (m, b) = (
        build_family(Scheme::FourUMod, dim, 16, 7).map_err(err)?,
        build_family(Scheme::FourUBit, dim, 16, 7).map_err(err)?,
    );
    let mut family_failures = 0u64;
    for _ in 0..100_000 {
        let (j, t) = (rng.random_range(0..16), rng.random_range(0..dim as u32));
        family_failures += (m.map(j, t) != b.map(j, t)) as u64;
    }
    Ok((
        failures == 0 && family_failures == 0,
        vec![
            format!("{failures} mismatches over 10^5 random (coefficients, t)"),
            format!("{family_failures} mismatches over 10^5 family evaluations at D = 2^24"),
        ],
    ))
}

/// Exact Monte Carlo of one random permutation of `{0..dim-1}` restricted to
/// `S1 ∪ S2`: the images of the union are a uniform random subset visited in
/// increasing order (sequential selection with skips), and each visited value
/// belongs to a uniformly chosen remaining union element. Stops once both
/// minima are known and reports whether their low `b` bits agree.
fn permutation_collision_rate(profile: &PairProfile, b: u8, trials: u64, rng: &mut ChaCha8Rng) -> f64 {
    let mask = (1u64 << b) - 1;
    let mut hits = 0u64;
    for _ in 0..trials {
        let (mut both, mut only1) = (profile.a, profile.f1 - profile.a);
        let mut left = profile.union();
        let mut pool = profile.dim;
        let mut next = 0u64;
        let (mut min1, mut min2) = (None, None);
        loop {
            let v: f64 = rng.random();
            let mut skip = 0u64;
            let (mut top, mut bottom) = ((pool - left) as f64, pool as f64);
            let mut quot = top / bottom;
            while quot > v {
                skip += 1;
                top -= 1.0;
                bottom -= 1.0;
                quot *= top / bottom;
            }
            let value = next + skip;
            next = value + 1;
            pool -= skip + 1;
            let pick = rng.random_range(0..left);
            left -= 1;
            if pick < both {
                both -= 1;
                min1.get_or_insert(value);
                min2.get_or_insert(value);
            } else if pick < both + only1 {
                only1 -= 1;
                min1.get_or_insert(value);
            } else {
                min2.get_or_insert(value);
            }
            if let (Some(x), Some(y)) = (min1, min2) {
                hits += ((x ^ y) & mask == 0) as u64;
                break;
            }
        }
    }
    hits as f64 / trials as f64
}

fn collision_oracle() -> Outcome {
    let dim = 1u64 << 20;
    let trials = 100_000u64;
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let log_uniform = |rng: &mut ChaCha8Rng| (rng.random_range((1e-4f64).ln()..(0.3f64).ln())).exp();
    let mut lines = Vec::new();
    let mut within = 0;
    for case in 0..20 {
        let (r1, r2) = (log_uniform(&mut rng), log_uniform(&mut rng));
        let (f1, f2) = (((r1 * dim as f64).round() as u64).max(1), ((r2 * dim as f64).round() as u64).max(1));
        let a = rng.random_range(0..=f1.min(f2));
        let b: u8 = rng.random_range(1..=8);
        let profile = PairProfile::new(f1, f2, a, dim).map_err(err)?;
        let p = collision_probability(&profile, b).map_err(err)?;
        let mc = permutation_collision_rate(&profile, b, trials, &mut rng);
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        let z = (mc - p) / se;
        within += (z.abs() <= 3.0) as usize;
        lines.push(format!(
            "case {case:>2}: f1={f1} f2={f2} a={a} b={b} R={:.4} theory={p:.5} mc={mc:.5} z={z:+.2}",
            profile.resemblance()
        ));
    }
    lines.push(format!("{within}/20 cases within 3 standard errors"));
    Ok((within >= 19, lines))
}

fn unbiasedness() -> Outcome {
    let start = Instant::now();
    let (dim, k, seeds) = (1u64 << 12, 100u32, 1000u64);
    let (s1, s2) = synth_pair(300, 300, 200, dim, 104).map_err(err)?;
    let r = s1.resemblance(&s2).unwrap();
    let mut sum = 0.0;
    for seed in 0..seeds {
        let family = build_family(Scheme::Permutation, dim, k, seed).map_err(err)?;
        let (a, b) = (sketch_one(&family, &s1, 32).map_err(err)?, sketch_one(&family, &s2, 32).map_err(err)?);
        sum += estimate_full(&a, &b).map_err(err)?;
    }
    let mean = sum / seeds as f64;
    let bound = 3.0 * (r * (1.0 - r) / (k as f64 * seeds as f64)).sqrt();
    let elapsed = start.elapsed();
    Ok((
        (mean - r).abs() <= bound && elapsed < Duration::from_secs(120),
        vec![format!(
            "R={r} D=2^12 k={k} over {seeds} permutation families: mean={mean:.5}, |mean-R|={:.5}, bound={bound:.5}, {:.1} s",
            (mean - r).abs(),
            elapsed.as_secs_f64()
        )],
    ))
}

/// Runs the MSE experiment and returns (all ratios in band, lines).
fn mse_band(name: &str, dim_log2: u32, band: bool) -> Result<(bool, bool, Vec<String>), String> {
    let dim = 1u64 << dim_log2;
    let profile = word_pair(name).ok_or("unknown pair")?.profile(dim).map_err(err)?;
    let rows =
        mse_experiment(&profile, Scheme::TwoU, &[1, 2, 4], &[50, 100, 500], 1000, 7, default_workers()).map_err(err)?;
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio()).collect();
    let inside = ratios.iter().all(|x| (0.85..=1.15).contains(x));
    let outside_any = ratios.iter().any(|x| !(0.85..=1.15).contains(x));
    let cells: Vec<String> = rows.iter().map(|r| format!("b{}k{}={:.3}", r.b, r.k, r.ratio())).collect();
    let verdict = if band {
        if inside {
            "in band"
        } else {
            "OUT of band"
        }
    } else if outside_any {
        "deviation detected"
    } else {
        "no deviation"
    };
    Ok((inside, outside_any, vec![format!("{name} D=2^{dim_log2} MSE/theory: {} ({verdict})", cells.join(" "))]))
}

fn mse_reproduction() -> Outcome {
    let mut pass = true;
    let mut lines = Vec::new();
    for name in ["kong-hong", "gambia-kiribati", "san-francisco"] {
        let (inside, _, l) = mse_band(name, 16, true)?;
        pass &= inside;
        lines.extend(l);
    }
    let (_, detected, l) = mse_band("of-and", 16, false)?;
    pass &= detected;
    lines.extend(l);
    for pair in WORD_PAIRS {
        let (inside, _, l) = mse_band(pair.name, 20, true)?;
        pass &= inside;
        lines.extend(l);
    }
    Ok((pass, lines))
}

fn expansion_identity() -> Outcome {
    let dim = 1u64 << 16;
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut failures = 0u64;
    for pair in 0..10_000u64 {
        let k = rng.random_range(1..=256u32);
        let b = rng.random_range(1..=8u8);
        let family = build_family(Scheme::TwoU, dim, k, pair).map_err(err)?;
        let draw = |rng: &mut ChaCha8Rng| {
            let n = rng.random_range(1..200);
            FeatureSet::from_unsorted((0..n).map(|_| rng.random_range(0..dim as u32)).collect(), 1)
        };
        let (x, y) = (draw(&mut rng), draw(&mut rng));
        let (s1, s2) = (sketch_one(&family, &x, b).map_err(err)?, sketch_one(&family, &y, b).map_err(err)?);
        let (e1, e2) = (expand(&s1).map_err(err)?, expand(&s2).map_err(err)?);
        let matches = s1.codes().iter().zip(s2.codes().iter()).filter(|(a, b)| a == b).count();
        failures += (e1.dot(&e2) != matches || e1.ones().len() != k as usize || e2.ones().len() != k as usize) as u64;
    }
    Ok((failures == 0, vec![format!("{failures} failures over 10^4 random sketch pairs")]))
}

fn fit_accuracy(train: &[OwnedRow], test: &[OwnedRow], dim: usize, lambda: f64, epochs: u32) -> Result<f64, String> {
    let cfg = TrainConfig { regularization: Regularization::Lambda(lambda), epochs, ..TrainConfig::default() };
    let mut trainer =
        Trainer::new(dim, train.len(), cfg, &train[..cfg.calibration_size.min(train.len())]).map_err(err)?;
    for _ in 0..epochs {
        trainer.begin_epoch();
        for row in train {
            trainer.step(&row.as_row()).map_err(err)?;
        }
    }
    accuracy(trainer.model(), test.iter().map(OwnedRow::as_row)).map_err(err)
}

fn best_accuracy(
    train: &[OwnedRow],
    test: &[OwnedRow],
    dim: usize,
    lines: &mut Vec<String>,
    label: &str,
) -> Result<f64, String> {
    let mut best = 0.0f64;
    let mut cells = Vec::new();
    for lambda in [1e-6, 1e-5, 1e-4, 1e-3, 1e-2] {
        let acc = fit_accuracy(train, test, dim, lambda, 50)?;
        cells.push(format!("{lambda:e}:{:.2}", 100.0 * acc));
        best = best.max(acc);
    }
    lines.push(format!("{label}: test accuracy by lambda {}; best {:.2}%", cells.join(" "), 100.0 * best));
    Ok(best)
}

fn hashed_rows(sets: &[FeatureSet], scheme: Scheme, dim: u64, k: u32, b: u8) -> Result<Vec<OwnedRow>, String> {
    let family = build_family(scheme, dim, k, 707).map_err(err)?;
    sets.iter()
        .map(|s| {
            let e = expand(&sketch_one(&family, s, b).map_err(err)?).map_err(err)?;
            let (ones, label) = e.into_parts();
            Ok(OwnedRow::binary(ones, label))
        })
        .collect()
}

fn learning_parity() -> Outcome {
    let start = Instant::now();
    let dim = 1u64 << 16;
    let model = LabelModel::TwoCluster { signal: 0.1, vocab_fraction: 1.0 / 32.0, flip: 0.05 };
    let sets = synth_classification(30_000, dim, 0.01, model, 107).map_err(err)?;
    let (train, test) = sets.split_at(20_000);
    let mut lines =
        vec!["n=20000 train, 10000 test, D=2^16, density 0.01, label flips 5%, hinge SGD, 50 epochs".to_owned()];
    let raw =
        |s: &[FeatureSet]| s.iter().map(|x| OwnedRow::binary(x.indices().to_vec(), x.label())).collect::<Vec<_>>();
    let acc_raw = best_accuracy(&raw(train), &raw(test), dim as usize, &mut lines, "raw")?;
    let (k, b) = (200u32, 8u8);
    let hdim = (k as usize) << b;
    let mut hashed = Vec::new();
    for scheme in [Scheme::Permutation, Scheme::TwoU] {
        let (tr, te) = (hashed_rows(train, scheme, dim, k, b)?, hashed_rows(test, scheme, dim, k, b)?);
        hashed.push(best_accuracy(&tr, &te, hdim, &mut lines, &format!("{scheme} b=8 k=200"))?);
    }
    let (perm, two_u) = (hashed[0], hashed[1]);
    let gap_raw = 100.0 * (acc_raw - perm).abs();
    let gap_schemes = 100.0 * (two_u - perm).abs();
    let elapsed = start.elapsed();
    lines.push(format!(
        "|raw - perm| = {gap_raw:.2} points (limit 1.5), |2u - perm| = {gap_schemes:.2} points (limit 0.5), {:.0} s",
        elapsed.as_secs_f64()
    ));
    Ok((gap_raw <= 1.5 && gap_schemes <= 0.5 && elapsed < Duration::from_secs(900), lines))
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let (dim, lambda, h) = (40usize, 0.05, 1e-5);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let mut indices: Vec<u32> = (0..10).map(|_| rng.random_range(0..dim as u32)).collect();
        indices.sort_unstable();
        indices.dedup();
        let values: Vec<f64> = indices.iter().map(|_| rng.random_range(-1.5..1.5)).collect();
        let label = if rng.random::<bool>() { 1 } else { -1 };
        let row = SparseRow { indices: &indices, values: Some(&values), label, flagged: false };
        let w: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = example_gradient(&w, &row, lambda, Loss::Logistic).map_err(err)?;
        let f = |w: &[f64]| example_objective(w, &row, lambda, Loss::Logistic);
        let mut num = vec![0.0; dim];
        for i in 0..dim {
            let (mut up, mut down) = (w.clone(), w.clone());
            up[i] += h;
            down[i] -= h;
            num[i] = (f(&up).map_err(err)? - f(&down).map_err(err)?) / (2.0 * h);
        }
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = g.iter().zip(&num).map(|(a, b)| a - b).collect();
        worst = worst.max(norm(&diff) / norm(&g).max(norm(&num)));
    }
    Ok((worst <= 1e-5, vec![format!("largest relative error over 100 instances: {worst:.2e}")]))
}

fn storage_ratio() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let dim = 1u64 << 16;
    let sets = synth_classification(500, dim, 0.002, LabelModel::Uniform, 109).map_err(err)?;
    let mut pass = true;
    let mut lines = Vec::new();
    for (k, b) in [(200u32, 8u8), (500, 1), (37, 3), (100, 2), (64, 12)] {
        let path = dir.path().join(format!("s{k}_{b}.bbmh"));
        let family = build_family(Scheme::TwoU, dim, k, 9).map_err(err)?;
        let header = SketchHeader::new(*family.header(), b).map_err(err)?;
        let mut w = SketchWriter::create(&path, header, true).map_err(err)?;
        for s in &sets {
            w.write(&sketch_one(&family, s, b).map_err(err)?).map_err(err)?;
        }
        w.finish().map_err(err)?;
        let size = |p: &Path| fs::metadata(p).map(|m| m.len()).map_err(err);
        let n = sets.len() as u64;
        let record = (size(&path)? - SKETCH_HEADER_LEN) / n;
        let payload = record - 2;
        let expected = (k as u64 * b as u64).div_ceil(8);
        let ratio = size(&minima_path(&path))? as f64 / (payload * n) as f64;
        pass &= payload == expected && (size(&path)? - SKETCH_HEADER_LEN).is_multiple_of(n);
        if b == 8 {
            pass &= ratio == 8.0;
        }
        lines.push(format!(
            "k={k} b={b}: payload {payload} bytes/record (expected {expected}), minima/payload = {ratio:.4}"
        ));
    }
    Ok((pass, lines))
}

fn corpus_file(dir: &Path, n: usize, density: f64, seed: u64) -> Result<std::path::PathBuf, String> {
    let path = dir.join(format!("corpus_{n}_{seed}.bbcv"));
    let sets = synth_classification(n, 1 << 16, density, LabelModel::Uniform, seed).map_err(err)?;
    write_corpus(&path, 1 << 16, &sets).map_err(err)?;
    Ok(path)
}

fn pipeline_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let corpus = corpus_file(dir.path(), 10_000, 0.002, 110)?;
    let family = build_family(Scheme::TwoU, 1 << 16, 100, 10).map_err(err)?;
    let header = SketchHeader::new(*family.header(), 8).map_err(err)?;
    let mut outputs = Vec::new();
    for workers in [1, 2, 8] {
        for chunk_size in [1, 100, 10_000] {
            let (_, sets) = open_sets(&corpus, LibsvmOptions::default()).map_err(err)?;
            let mut w = SketchWriter::new(Cursor::new(Vec::new()), header).map_err(err)?;
            sketch_stream(&family, sets, &mut w, PipelineConfig { chunk_size, workers }).map_err(err)?;
            outputs.push(((workers, chunk_size), w.finish().map_err(err)?.into_inner()));
        }
    }
    let reference = &outputs[0].1;
    let differing: Vec<String> =
        outputs.iter().filter(|(_, o)| o != reference).map(|(c, _)| format!("{c:?}")).collect();
    Ok((
        differing.is_empty(),
        vec![format!(
            "9 configurations over 10^4 records, {} bytes each; differing: {}",
            reference.len(),
            if differing.is_empty() { "none".to_owned() } else { differing.join(", ") }
        )],
    ))
}

fn thread_scaling() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let corpus = corpus_file(dir.path(), 10_000, 0.003, 111)?;
    let plan = PreprocessBench {
        schemes: vec![Scheme::TwoU],
        dim: 1 << 16,
        k: 500,
        b: 8,
        chunk_sizes: vec![100, 1000, 10_000],
        threads: vec![1, 4],
        runs: 3,
        seed: 11,
    };
    let rows = bench_preprocess(&corpus, &plan).map_err(err)?;
    let compute = |chunk: usize, threads: usize| {
        rows.iter().find(|r| r.chunk_size == chunk && r.threads == threads).map(|r| r.compute_s).unwrap()
    };
    let speedup = compute(10_000, 1) / compute(10_000, 4);
    let mut lines = vec![format!(
        "available parallelism: {}; compute speedup at 4 threads (chunk 10000): {speedup:.2}x (need >= 3)",
        default_workers()
    )];
    let mut flat = true;
    for threads in [1, 4] {
        let totals: Vec<f64> = rows.iter().filter(|r| r.threads == threads).map(|r| r.total_s()).collect();
        let (lo, hi) = totals.iter().fold((f64::MAX, 0.0f64), |(lo, hi), &t| (lo.min(t), hi.max(t)));
        flat &= hi / lo <= 1.25;
        lines.push(format!(
            "{threads} thread(s): total seconds at chunk 100/1000/10000 = {} (max/min {:.3}, need <= 1.25)",
            totals.iter().map(|t| format!("{t:.3}")).collect::<Vec<_>>().join("/"),
            hi / lo
        ));
    }
    Ok((speedup >= 3.0 && flat, lines))
}

fn vw_unbiased() -> Outcome {
    let x = FeatureSet::new((0..50).collect(), 1, 1000).map_err(err)?;
    let y = FeatureSet::new((30..80).collect(), 1, 1000).map_err(err)?;
    let seeds = 10_000u64;
    let est: Vec<f64> = (0..seeds)
        .map(|s| {
            let cfg = VwConfig::from_seed(256, s).unwrap();
            vw_project(&cfg, &x).dot(&vw_project(&cfg, &y))
        })
        .collect();
    let mean = est.iter().sum::<f64>() / seeds as f64;
    let var = est.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (seeds - 1) as f64;
    let se = (var / seeds as f64).sqrt();
    Ok((
        (mean - 20.0).abs() <= 3.0 * se,
        vec![format!(
            "m=256, 10^4 seeds: mean {mean:.4}, standard error {se:.4}, |mean-20| = {:.4}",
            (mean - 20.0).abs()
        )],
    ))
}
