//! Command-line front end. Exit status: 0 success, 1 runtime error, 2 usage
//! error. Every random choice derives from `--seed`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use bbmh_core::estimator::{estimate_bbit, estimate_full, PairProfile, MIN_REPS};
use bbmh_core::learners::{accuracy, Loss, OwnedRow, Regularization, TrainConfig};
use bbmh_core::synth::{synth_classification, synth_pair, LabelModel};
use bbmh_core::vw::VwConfig;
use bbmh_core::{FamilyParams, Scheme, SketchHeader};

use crate::bench::{bench_epochs, bench_preprocess, write_epoch_table, write_preprocess_table, PreprocessBench};
use crate::error::{Error, Result};
use crate::formats::{load_model, minima_path, save_model, write_corpus, SketchReader, SketchWriter};
use crate::libsvm::{write_binary_row, LibsvmOptions};
use crate::pipeline::{default_workers, sketch_stream, PipelineConfig, DEFAULT_CHUNK_SIZE};
use crate::sim::{mse_experiment, parse_list, parse_sweep, word_pair, write_mse_table};
use crate::source::{open_sets, read_sets, RowSource};
use crate::train::{train, write_metrics_row, TrainOptions, METRICS_HEADER};
use crate::transform::{expand_stream, vw_project_stream, RowFormat};

#[derive(Debug, Parser)]
#[command(name = "bbmh", version, about = "b-bit minwise hashing: sketching, estimation and hashed linear learning")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: hardware parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Records per pipeline chunk.
    #[arg(long, global = true, default_value_t = DEFAULT_CHUNK_SIZE)]
    chunk_size: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute b-bit sketches of a LibSVM or corpus file.
    Sketch(SketchArgs),
    /// Estimate the resemblance of two sketched records.
    Estimate(EstimateArgs),
    /// Simulate estimator MSE against theoretical variance.
    MseSim(MseArgs),
    /// Expand sketches into 2^b*k-dimensional binary rows.
    Expand(ExpandArgs),
    /// Project feature vectors into signed hash bins.
    VwProject(VwArgs),
    /// Train a linear model with SGD.
    Train(TrainArgs),
    /// Score rows with a trained model.
    Predict(PredictArgs),
    /// Timing benchmarks.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Generate synthetic data.
    #[command(subcommand)]
    Synth(SynthCommand),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Perm,
    #[value(name = "2u")]
    TwoU,
    #[value(name = "4u-mod")]
    FourUMod,
    #[value(name = "4u-bit")]
    FourUBit,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Scheme {
        match s {
            SchemeArg::Perm => Scheme::Permutation,
            SchemeArg::TwoU => Scheme::TwoU,
            SchemeArg::FourUMod => Scheme::FourUMod,
            SchemeArg::FourUBit => Scheme::FourUBit,
        }
    }
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
struct DimArg {
    /// Universe size as a power of two.
    #[arg(long, value_parser = clap::value_parser!(u32).range(0..=32))]
    dim_log2: Option<u32>,
    /// Universe size.
    #[arg(long)]
    dim: Option<u64>,
}

impl DimArg {
    fn get(&self) -> u64 {
        self.dim.unwrap_or_else(|| 1u64 << self.dim_log2.unwrap_or(0))
    }
}

#[derive(Debug, Clone, Copy, Args)]
struct InputArgs {
    /// Read 0/1 labels, mapping 0 to -1.
    #[arg(long)]
    zero_one_labels: bool,
    /// Keep features with values other than 1 (treated as present).
    #[arg(long)]
    binarize: bool,
}

impl InputArgs {
    fn options(&self) -> LibsvmOptions {
        LibsvmOptions { binary: !self.binarize, zero_one_labels: self.zero_one_labels }
    }
}

#[derive(Debug, Args)]
struct SketchArgs {
    #[arg(long, value_enum)]
    scheme: SchemeArg,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    k: u32,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=32))]
    b: u8,
    #[command(flatten)]
    dim: DimArg,
    /// Also write full minima to OUTPUT.min64.
    #[arg(long)]
    min64: bool,
    #[command(flatten)]
    input_args: InputArgs,
    input: PathBuf,
    output: PathBuf,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    sketches: PathBuf,
    /// Record numbers (0-based) of the two sketches, e.g. "0,1".
    #[arg(long)]
    pair: String,
    /// Source vectors, used to take f1, f2 and a from the two records.
    #[arg(long, conflicts_with_all = ["f1", "f2", "a"])]
    corpus: Option<PathBuf>,
    #[arg(long, requires_all = ["f2", "a"])]
    f1: Option<u64>,
    #[arg(long, requires_all = ["f1", "a"])]
    f2: Option<u64>,
    /// Intersection size.
    #[arg(long, requires_all = ["f1", "f2"])]
    a: Option<u64>,
    #[command(flatten)]
    input_args: InputArgs,
}

#[derive(Debug, Args)]
struct MseArgs {
    /// Word-pair profile, e.g. kong-hong or of-and.
    #[arg(long, conflicts_with_all = ["f1", "f2", "r"], required_unless_present_all = ["f1", "f2", "r"])]
    profile: Option<String>,
    #[arg(long)]
    f1: Option<u64>,
    #[arg(long)]
    f2: Option<u64>,
    /// Resemblance.
    #[arg(long)]
    r: Option<f64>,
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u32).range(1..=32))]
    dim_log2: u32,
    #[arg(long, value_enum, default_value = "2u")]
    scheme: SchemeArg,
    /// Comma-separated b values.
    #[arg(long, default_value = "1,2,4")]
    b: String,
    /// k values: a list, or "a..b" for 11 log-spaced points.
    #[arg(long, default_value = "10..500")]
    k: String,
    #[arg(long, value_parser = clap::value_parser!(u32).range(MIN_REPS as i64..))]
    reps: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Libsvm,
    Corpus,
}

impl From<FormatArg> for RowFormat {
    fn from(f: FormatArg) -> RowFormat {
        match f {
            FormatArg::Libsvm => RowFormat::Libsvm,
            FormatArg::Corpus => RowFormat::Corpus,
        }
    }
}

#[derive(Debug, Args)]
struct ExpandArgs {
    #[arg(long, value_enum, default_value = "libsvm")]
    format: FormatArg,
    input: PathBuf,
    output: PathBuf,
}

#[derive(Debug, Args)]
struct VwArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    bins: u32,
    #[command(flatten)]
    input_args: InputArgs,
    input: PathBuf,
    output: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LossArg {
    Hinge,
    Logistic,
}

#[derive(Debug, Clone, Args)]
struct LearnArgs {
    #[arg(long, value_enum, default_value = "hinge")]
    loss: LossArg,
    /// Regularization strength.
    #[arg(long, conflicts_with = "c")]
    lambda: Option<f64>,
    /// Batch-style cost; lambda = 1/(n C).
    #[arg(long = "C", id = "c")]
    c: Option<f64>,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    epochs: u32,
    /// Initial learning rate (default: calibrated).
    #[arg(long)]
    eta0: Option<f64>,
    /// Average the weights.
    #[arg(long)]
    avg: bool,
    /// First averaged epoch.
    #[arg(long, default_value_t = 2)]
    avg_start: u32,
    /// Visit examples in a fresh seeded order every epoch (loads the data into memory).
    #[arg(long)]
    shuffle: bool,
    /// Dimension of LibSVM input (default: largest index seen).
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    zero_one_labels: bool,
}

impl LearnArgs {
    fn config(&self, seed: u64) -> TrainConfig {
        let regularization = match (self.lambda, self.c) {
            (_, Some(c)) => Regularization::C(c),
            (Some(l), None) => Regularization::Lambda(l),
            (None, None) => TrainConfig::default().regularization,
        };
        TrainConfig {
            regularization,
            epochs: self.epochs,
            eta0: self.eta0,
            loss: match self.loss {
                LossArg::Hinge => Loss::Hinge,
                LossArg::Logistic => Loss::Logistic,
            },
            averaging: self.avg,
            average_start_epoch: self.avg_start,
            seed,
            shuffle: self.shuffle,
            ..TrainConfig::default()
        }
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    learn: LearnArgs,
    /// Held-out rows scored after every epoch.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Per-epoch metrics table (default: stdout).
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Skip the per-epoch training objective pass.
    #[arg(long)]
    no_eval: bool,
    input: PathBuf,
    model: PathBuf,
}

#[derive(Debug, Args)]
struct PredictArgs {
    model: PathBuf,
    input: PathBuf,
    /// Write "score class" per row here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    zero_one_labels: bool,
}

#[derive(Debug, Subcommand)]
enum BenchCommand {
    /// Sketching cost by scheme, chunk size and thread count.
    Preprocess(BenchPreprocessArgs),
    /// Per-epoch training cost on raw versus sketched data.
    Epochs(BenchEpochsArgs),
}

#[derive(Debug, Args)]
struct BenchPreprocessArgs {
    corpus: PathBuf,
    #[arg(long, default_value = "2u,4u-mod,4u-bit")]
    schemes: String,
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u32).range(1..))]
    k: u32,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u8).range(1..=32))]
    b: u8,
    #[command(flatten)]
    dim: DimArg,
    #[arg(long, default_value = "1,100,10000")]
    chunk_sizes: String,
    /// Thread counts to compare (default: 1 and the --threads value).
    #[arg(long)]
    thread_counts: Option<String>,
    #[arg(long, default_value_t = 3)]
    runs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchEpochsArgs {
    raw: PathBuf,
    hashed: PathBuf,
    #[command(flatten)]
    learn: LearnArgs,
    #[arg(long, default_value_t = 3)]
    runs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum SynthCommand {
    /// Labeled sparse binary corpus.
    Classification(SynthClassArgs),
    /// Two sets with a given size and overlap profile.
    Pair(SynthPairArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    Uniform,
    TwoCluster,
}

#[derive(Debug, Args)]
struct SynthClassArgs {
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    dim: DimArg,
    /// Expected fraction of features present per record.
    #[arg(long)]
    density: f64,
    #[arg(long, value_enum, default_value = "two-cluster")]
    model: ModelArg,
    /// Probability that a feature comes from the class vocabulary.
    #[arg(long, default_value_t = 0.1)]
    signal: f64,
    /// Size of each class vocabulary as a fraction of D.
    #[arg(long, default_value_t = 1.0 / 32.0)]
    vocab_fraction: f64,
    /// Label flip probability.
    #[arg(long, default_value_t = 0.0)]
    flip: f64,
    #[arg(long, value_enum, default_value = "libsvm")]
    format: FormatArg,
    output: PathBuf,
}

#[derive(Debug, Args)]
struct SynthPairArgs {
    #[arg(long)]
    f1: u64,
    #[arg(long)]
    f2: u64,
    /// Intersection size.
    #[arg(long, conflicts_with = "r", required_unless_present = "r")]
    a: Option<u64>,
    /// Resemblance; the intersection is rounded to the nearest integer.
    #[arg(long)]
    r: Option<f64>,
    #[command(flatten)]
    dim: DimArg,
    output: PathBuf,
}

struct Ctx<'a> {
    seed: u64,
    threads: usize,
    chunk_size: usize,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

/// Runs the CLI with the process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the CLI writing normal output to `out` and diagnostics to `err`.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let threads = cli.threads.unwrap_or_else(default_workers);
    if threads == 0 || cli.chunk_size == 0 {
        let _ = writeln!(err, "error: --threads and --chunk-size must be at least 1");
        return 2;
    }
    let mut ctx = Ctx { seed: cli.seed, threads, chunk_size: cli.chunk_size, out, err };
    match dispatch(cli.command, &mut ctx) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(ctx.err, "error: {e}");
            if matches!(e, Error::Usage(_)) {
                2
            } else {
                1
            }
        }
    }
}

fn dispatch(command: Command, ctx: &mut Ctx<'_>) -> Result<()> {
    match command {
        Command::Sketch(a) => cmd_sketch(a, ctx),
        Command::Estimate(a) => cmd_estimate(a, ctx),
        Command::MseSim(a) => cmd_mse(a, ctx),
        Command::Expand(a) => {
            let stats = expand_stream(&a.input, &a.output, a.format.into())?;
            writeln!(ctx.err, "records={} skipped_empty={}", stats.records, stats.skipped)?;
            Ok(())
        }
        Command::VwProject(a) => {
            let cfg = VwConfig::from_seed(a.bins, ctx.seed)?;
            let (_, sets) = open_sets(&a.input, a.input_args.options())?;
            let stats = vw_project_stream(sets, &cfg, &a.output)?;
            writeln!(ctx.err, "records={}", stats.records)?;
            Ok(())
        }
        Command::Train(a) => cmd_train(a, ctx),
        Command::Predict(a) => cmd_predict(a, ctx),
        Command::Bench(BenchCommand::Preprocess(a)) => cmd_bench_preprocess(a, ctx),
        Command::Bench(BenchCommand::Epochs(a)) => cmd_bench_epochs(a, ctx),
        Command::Synth(SynthCommand::Classification(a)) => cmd_synth_class(a, ctx),
        Command::Synth(SynthCommand::Pair(a)) => cmd_synth_pair(a, ctx),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes through `f` to `path`, or to the context's output.
fn with_output<F>(path: Option<&Path>, ctx: &mut Ctx<'_>, f: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    match path {
        Some(p) => {
            let mut w = create(p)?;
            f(&mut w)?;
            w.flush()?;
        }
        None => f(ctx.out)?,
    }
    Ok(())
}

fn cmd_sketch(a: SketchArgs, ctx: &mut Ctx<'_>) -> Result<()> {
    let dim = a.dim.get();
    let family = FamilyParams::new(a.scheme.into(), dim, a.k, ctx.seed).build()?;
    let header = SketchHeader::new(*family.header(), a.b)?;
    let (corpus_dim, sets) = open_sets(&a.input, a.input_args.options())?;
    if let Some(d) = corpus_dim {
        if d > dim {
            return Err(Error::Usage(format!("input has D = {d}, larger than the family's {dim}")));
        }
    }
    let mut w = SketchWriter::create(&a.output, header, a.min64)?;
    let cfg = PipelineConfig { chunk_size: ctx.chunk_size, workers: ctx.threads };
    let stats = sketch_stream(&family, sets, &mut w, cfg)?;
    w.finish()?;
    writeln!(
        ctx.err,
        "records={} empty={} chunks={} read_s={:.3} compute_s={:.3} write_s={:.3}",
        stats.records,
        stats.empty_records,
        stats.chunks,
        stats.read.as_secs_f64(),
        stats.compute.as_secs_f64(),
        stats.write.as_secs_f64()
    )?;
    Ok(())
}

fn cmd_estimate(a: EstimateArgs, ctx: &mut Ctx<'_>) -> Result<()> {
    let pair: Vec<usize> = parse_list(&a.pair)?;
    let &[i, j] = pair.as_slice() else {
        return Err(Error::Usage("--pair takes two record numbers".into()));
    };
    let with_minima = minima_path(&a.sketches).exists();
    let sketches: Vec<_> = SketchReader::open(&a.sketches, with_minima)?.collect::<Result<_>>()?;
    let get = |r: usize| {
        sketches.get(r).ok_or_else(|| Error::Usage(format!("record {r} not in a file of {} records", sketches.len())))
    };
    let (s1, s2) = (get(i)?, get(j)?);
    let dim = s1.header().family.dim;
    let profile = match (&a.corpus, a.f1, a.f2, a.a) {
        (Some(path), ..) => {
            let (_, sets) = read_sets(path, a.input_args.options())?;
            if sets.len() != sketches.len() {
                return Err(Error::Usage("corpus and sketch file differ in record count".into()));
            }
            PairProfile::of_sets(&sets[i], &sets[j], dim)?
        }
        (None, Some(f1), Some(f2), Some(x)) => PairProfile::new(f1, f2, x, dim)?,
        _ => return Err(Error::Usage("give --corpus or all of --f1, --f2, --a".into())),
    };
    let est = estimate_bbit(s1, s2, &profile)?;
    writeln!(ctx.out, "r_hat\t{:.6}", est.r_hat)?;
    writeln!(ctx.out, "r_raw\t{:.6}", est.r_raw)?;
    writeln!(ctx.out, "p_hat\t{:.6}", est.p_hat)?;
    writeln!(ctx.out, "c1\t{:.6}", est.c1)?;
    writeln!(ctx.out, "c2\t{:.6}", est.c2)?;
    writeln!(ctx.out, "var_theory\t{:.6e}", est.var_theory)?;
    writeln!(ctx.out, "r_true\t{:.6}", profile.resemblance())?;
    if with_minima {
        writeln!(ctx.out, "r_full\t{:.6}", estimate_full(s1, s2)?)?;
    }
    Ok(())
}

fn cmd_mse(a: MseArgs, ctx: &mut Ctx<'_>) -> Result<()> {
    let dim = 1u64 << a.dim_log2;
    let profile = match (&a.profile, a.f1, a.f2, a.r) {
        (Some(name), ..) => {
            word_pair(name).ok_or_else(|| Error::Usage(format!("unknown profile {name:?}")))?.profile(dim)?
        }
        (None, Some(f1), Some(f2), Some(r)) => PairProfile::from_resemblance(f1, f2, r, dim)?,
        _ => return Err(Error::Usage("give --profile or all of --f1, --f2, --r".into())),
    };
    let bs: Vec<u8> = parse_list(&a.b)?;
    if bs.iter().any(|&b| b == 0 || b > 32) {
        return Err(Error::Usage("b values must be in 1..=32".into()));
    }
    let ks = parse_sweep(&a.k)?;
    let rows = mse_experiment(&profile, a.scheme.into(), &bs, &ks, a.reps, ctx.seed, ctx.threads)?;
    with_output(a.out.as_deref(), ctx, |w| write_mse_table(w, &rows))
}

fn cmd_train(a: TrainArgs, ctx: &mut Ctx<'_>) -> Result<()> {
    let cfg = a.learn.config(ctx.seed);
    cfg.validate()?;
    let source = RowSource::open(&a.input, a.learn.dim, a.learn.zero_one_labels)?;
    let test = match &a.test {
        Some(p) => Some(RowSource::open(p, Some(source.dim()), a.learn.zero_one_labels)?),
        None => None,
    };
    let opts = TrainOptions { cfg, evaluate: !a.no_eval, test };
    let mut metrics: Box<dyn Write + '_> = match &a.metrics {
        Some(p) => Box::new(create(p)?),
        None => Box::new(&mut *ctx.out),
    };
    writeln!(metrics, "{METRICS_HEADER}")?;
    let outcome = train(&source, &opts, |m| Ok(write_metrics_row(&mut metrics, m)?))?;
    metrics.flush()?;
    drop(metrics);
    save_model(&a.model, &outcome.model)?;
    writeln!(ctx.err, "n={} dim={} lambda={:e} eta0={:e}", source.len(), source.dim(), outcome.lambda, outcome.eta0)?;
    Ok(())
}

fn cmd_predict(a: PredictArgs, ctx: &mut Ctx<'_>) -> Result<()> {
    let model = load_model(&a.model)?;
    let source = RowSource::open(&a.input, Some(model.dim()), a.zero_one_labels)?;
    let rows = source.read_all()?;
    if let Some(path) = &a.out {
        let mut w = create(path)?;
        for row in &rows {
            let (score, class) = if row.flagged {
                (0.0, 0)
            } else {
                let p = model.predict(&row.as_row())?;
                (p.score, p.class)
            };
            writeln!(w, "{score}\t{class}")?;
        }
        w.flush()?;
    }
    let acc = accuracy(&model, rows.iter().map(OwnedRow::as_row))?;
    writeln!(ctx.out, "accuracy\t{acc:.6}")?;
    Ok(())
}

fn parse_schemes(text: &str) -> Result<Vec<Scheme>> {
    text.split(',')
        .map(|s| Scheme::from_name(s.trim()).ok_or_else(|| Error::Usage(format!("unknown scheme {s:?}"))))
        .collect()
}

fn cmd_bench_preprocess(a: BenchPreprocessArgs, ctx: &mut Ctx<'_>) -> Result<()> {
    let threads = match &a.thread_counts {
        Some(t) => parse_list(t)?,
        None => {
            let mut t = vec![1, ctx.threads];
            t.dedup();
            t
        }
    };
    let plan = PreprocessBench {
        schemes: parse_schemes(&a.schemes)?,
        dim: a.dim.get(),
        k: a.k,
        b: a.b,
        chunk_sizes: parse_list(&a.chunk_sizes)?,
        threads,
        runs: a.runs,
        seed: ctx.seed,
    };
    let rows = bench_preprocess(&a.corpus, &plan)?;
    with_output(a.out.as_deref(), ctx, |w| write_preprocess_table(w, &rows))
}

fn cmd_bench_epochs(a: BenchEpochsArgs, ctx: &mut Ctx<'_>) -> Result<()> {
    let cfg = a.learn.config(ctx.seed);
    cfg.validate()?;
    let raw = RowSource::open(&a.raw, a.learn.dim, a.learn.zero_one_labels)?;
    let hashed = RowSource::open(&a.hashed, None, a.learn.zero_one_labels)?;
    let bench = bench_epochs(&raw, &hashed, cfg, a.runs)?;
    with_output(a.out.as_deref(), ctx, |w| write_epoch_table(w, &bench))
}

fn write_sets(path: &Path, format: FormatArg, dim: u64, sets: &[bbmh_core::FeatureSet]) -> Result<()> {
    match format {
        FormatArg::Corpus => write_corpus(path, dim, sets),
        FormatArg::Libsvm => {
            let mut w = create(path)?;
            for s in sets {
                write_binary_row(&mut w, s.indices(), s.label())?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

fn cmd_synth_class(a: SynthClassArgs, ctx: &mut Ctx<'_>) -> Result<()> {
    let dim = a.dim.get();
    let model = match a.model {
        ModelArg::Uniform => LabelModel::Uniform,
        ModelArg::TwoCluster => {
            LabelModel::TwoCluster { signal: a.signal, vocab_fraction: a.vocab_fraction, flip: a.flip }
        }
    };
    let sets = synth_classification(a.n, dim, a.density, model, ctx.seed)?;
    write_sets(&a.output, a.format, dim, &sets)?;
    writeln!(ctx.err, "records={}", sets.len())?;
    Ok(())
}

fn cmd_synth_pair(a: SynthPairArgs, ctx: &mut Ctx<'_>) -> Result<()> {
    let dim = a.dim.get();
    let profile = match (a.a, a.r) {
        (Some(x), _) => PairProfile::new(a.f1, a.f2, x, dim)?,
        (None, Some(r)) => PairProfile::from_resemblance(a.f1, a.f2, r, dim)?,
        (None, None) => return Err(Error::Usage("give --a or --r".into())),
    };
    let (s1, s2) = synth_pair(profile.f1, profile.f2, profile.a, dim, ctx.seed)?;
    let mut w = create(&a.output)?;
    write_binary_row(&mut w, s1.indices(), 1)?;
    write_binary_row(&mut w, s2.indices(), 1)?;
    w.flush()?;
    writeln!(ctx.err, "f1={} f2={} a={} r={:.6}", profile.f1, profile.f2, profile.a, profile.resemblance())?;
    Ok(())
}
