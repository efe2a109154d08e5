//! Single binary wiring the pipeline: vocab → cooccur → train →
//! {eval-sim, eval-analogy, eval-hypernymy, delta-hyp, export-gaussian,
//! export-text}. Metrics go to standard output, logs to standard error,
//! and every subcommand writes a run manifest.

mod manifest;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use poincare_glove::analogy::{
    cross_validate_t, default_t_grid, eval_analogy, AnalogyDataset, AnalogyMethod, NeighborMetric,
    VectorSource, WordVectors,
};
use poincare_glove::corpus::{count_cooccurrences, CoocMatrix, Vocab, WindowWeighting};
use poincare_glove::evaluation::{
    eval_hyperlex, eval_similarity, eval_wbless, EntailmentDataset, SimilarityDataset,
};
use poincare_glove::hyperbolicity::{estimate_delta, InducedCoocMetric, InducedH, Smoothing};
use poincare_glove::hypernymy::{
    fit_isometry, select_sets_from_files, select_sets_unsupervised, to_gaussian,
    GenericSpecificSets, IsometryTransform,
};
use poincare_glove::trainer::{
    init_trick, train_logged, EmbeddingTable, HFunction, OptimizerKind, TrainConfig, TrainMode,
};

use manifest::{sig6, RunManifest};

#[derive(Parser)]
#[command(
    name = "poincare-glove",
    version,
    about = "GloVe-style word embeddings in products of Poincaré balls"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a frequency-ordered vocabulary from tokenized text.
    Vocab(VocabArgs),
    /// Count windowed co-occurrences into a binary matrix.
    Cooccur(CooccurArgs),
    /// Train product-of-balls embeddings on a co-occurrence matrix.
    Train(TrainArgs),
    /// Rank word pairs by model similarity and report Spearman correlation.
    EvalSim(EvalSimArgs),
    /// Solve analogy queries and report per-split accuracy.
    EvalAnalogy(EvalAnalogyArgs),
    /// Score lexical entailment (HyperLex-style Spearman or WBLESS-style
    /// accuracy).
    EvalHypernymy(EvalHypernymyArgs),
    /// Estimate δ-hyperbolicity of the co-occurrence-induced metric.
    DeltaHyp(DeltaHypArgs),
    /// Export per-word Gaussian parameters (μ_i, σ_i) as TSV.
    ExportGaussian(ExportGaussianArgs),
    /// Export the model as text (target file plus context sibling).
    ExportText(ExportTextArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightingArg {
    Harmonic,
    Flat,
}

#[derive(Clone, Copy, ValueEnum)]
enum OptimizerArg {
    Radagrad,
    Rsgd,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    /// Product Poincaré distance.
    Poincare,
    /// Cosine on the concatenated factor coordinates.
    Cosine,
}

impl From<MetricArg> for NeighborMetric {
    fn from(m: MetricArg) -> NeighborMetric {
        match m {
            MetricArg::Poincare => NeighborMetric::PoincareDistance,
            MetricArg::Cosine => NeighborMetric::CosineFullVector,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceArg {
    /// Target vectors w.
    Target,
    /// Per-factor gyro-midpoint of w and the context vector.
    Midpoint,
}

impl From<SourceArg> for VectorSource {
    fn from(s: SourceArg) -> VectorSource {
        match s {
            SourceArg::Target => VectorSource::Target,
            SourceArg::Midpoint => VectorSource::TargetContextMidpoint,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    /// m^t between the two gyro-parallelogram solutions.
    Geodesic,
    /// 3COSADD on the concatenated coordinates.
    #[value(name = "3cosadd")]
    ThreeCosAdd,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Hyperlex,
    Wbless,
}

#[derive(Clone, Copy, ValueEnum)]
enum SmoothingArg {
    None,
    PlusOne,
}

#[derive(Args)]
struct VocabArgs {
    /// Tokenized UTF-8 corpus, whitespace-separated, one document per line.
    #[arg(long)]
    input: PathBuf,
    /// Words appearing fewer times are discarded.
    #[arg(long, default_value_t = 100)]
    min_count: u64,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct CooccurArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    /// Symmetric window size in tokens.
    #[arg(long, default_value_t = 10)]
    window: usize,
    #[arg(long, value_enum, default_value_t = WeightingArg::Harmonic)]
    weighting: WeightingArg,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    cooc: PathBuf,
    /// Vocabulary file; required with --init-model, otherwise used for
    /// size validation when given.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Number of ball factors p.
    #[arg(long, default_value_t = 50)]
    factors: usize,
    /// Dimension k of each factor.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// h function: square, cosh, cosh2, cosh<K>.
    #[arg(long, default_value = "cosh2")]
    h: String,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, value_enum, default_value_t = OptimizerArg::Radagrad)]
    optimizer: OptimizerArg,
    #[arg(long, default_value_t = 100.0)]
    x_max: f64,
    #[arg(long, default_value_t = 0.75)]
    alpha: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Hogwild worker count; ignored with --deterministic.
    #[arg(long, default_value_t = num_threads_default())]
    threads: usize,
    /// Single-threaded, bitwise-reproducible mode.
    #[arg(long)]
    deterministic: bool,
    /// Warm-start model trained on a restricted vocabulary.
    #[arg(long)]
    init_model: Option<PathBuf>,
    /// Vocabulary of the warm-start model.
    #[arg(long)]
    init_vocab: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

fn num_threads_default() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

#[derive(Args)]
struct EvalSimArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    /// TSV rows "word1<TAB>word2<TAB>score".
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value_t = MetricArg::Poincare)]
    metric: MetricArg,
    #[arg(long, value_enum, default_value_t = SourceArg::Target)]
    source: SourceArg,
    /// JSON-lines per-row detail log.
    #[arg(long)]
    details: Option<PathBuf>,
    /// Also write the summary TSV line here.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct EvalAnalogyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    /// Google-format analogy file (": section" headers, "a b c gold" rows).
    #[arg(long)]
    dataset: PathBuf,
    /// Geodesic interpolation parameter between the two solutions.
    #[arg(long, default_value_t = 0.3)]
    t: f64,
    #[arg(long, value_enum, default_value_t = MetricArg::Poincare)]
    metric: MetricArg,
    #[arg(long, value_enum, default_value_t = MethodArg::Geodesic)]
    method: MethodArg,
    #[arg(long, value_enum, default_value_t = SourceArg::Target)]
    source: SourceArg,
    /// 2-fold cross-validation of t over {0, 0.1, ..., 1} instead of a
    /// fixed-t evaluation.
    #[arg(long)]
    cross_validate: bool,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    details: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct EvalHypernymyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    /// TSV rows "word1<TAB>word2<TAB>score-or-label".
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum)]
    task: TaskArg,
    /// Generic word list (one word per line), with --specific.
    #[arg(long)]
    generic: Option<PathBuf>,
    #[arg(long)]
    specific: Option<PathBuf>,
    /// Unsupervised selection: size of each set.
    #[arg(long)]
    unsupervised_n: Option<usize>,
    /// Unsupervised selection: frequency pool (defaults to the whole
    /// vocabulary).
    #[arg(long)]
    pool: Option<usize>,
    /// WBLESS holdout fraction.
    #[arg(long, default_value_t = 0.02)]
    holdout: f64,
    /// WBLESS threshold-selection repeats.
    #[arg(long, default_value_t = 1000)]
    repeats: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    details: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct DeltaHypArgs {
    #[arg(long)]
    cooc: PathBuf,
    /// h function: square, cosh, cosh<K>, or log.
    #[arg(long, default_value = "square")]
    h: String,
    #[arg(long, default_value_t = 100_000)]
    tuples: usize,
    #[arg(long, default_value_t = 100_000)]
    pairs: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Zero-count handling: resample (none) or log(1+x) (plus-one).
    #[arg(long, value_enum, default_value_t = SmoothingArg::None)]
    smoothing: SmoothingArg,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ExportGaussianArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    generic: Option<PathBuf>,
    #[arg(long)]
    specific: Option<PathBuf>,
    #[arg(long)]
    unsupervised_n: Option<usize>,
    #[arg(long)]
    pool: Option<usize>,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct ExportTextArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    /// Target-vector text file; the context file lands next to it unless
    /// --context-output is given.
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    context_output: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

/// Usage errors exit 1, data/format errors exit 2.
enum CliError {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> CliError {
        CliError::Data(e)
    }
}

impl From<poincare_glove::Error> for CliError {
    fn from(e: poincare_glove::Error) -> CliError {
        CliError::Data(e.into())
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Vocab(args) => cmd_vocab(args),
        Command::Cooccur(args) => cmd_cooccur(args),
        Command::Train(args) => cmd_train(args),
        Command::EvalSim(args) => cmd_eval_sim(args),
        Command::EvalAnalogy(args) => cmd_eval_analogy(args),
        Command::EvalHypernymy(args) => cmd_eval_hypernymy(args),
        Command::DeltaHyp(args) => cmd_delta_hyp(args),
        Command::ExportGaussian(args) => cmd_export_gaussian(args),
        Command::ExportText(args) => cmd_export_text(args),
    };
    match result {
        Ok(()) => {}
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            std::process::exit(1);
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}

fn read_lines(path: &Path) -> anyhow::Result<Vec<String>> {
    let reader = BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    );
    let mut lines = Vec::new();
    for line in reader.lines() {
        lines.push(line?);
    }
    Ok(lines)
}

fn set_threads(threads: &Option<usize>) {
    if let Some(n) = threads {
        poincare_glove::par::set_threads((*n).max(1));
    }
}

fn write_details<T: serde::Serialize>(path: &Path, rows: &[T]) -> anyhow::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for row in rows {
        serde_json::to_writer(&mut w, row)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Prints a metrics line to stdout and mirrors it to --output when given.
fn emit(line: &str, output: &Option<PathBuf>) -> anyhow::Result<()> {
    println!("{line}");
    if let Some(path) = output {
        std::fs::write(path, format!("{line}\n"))?;
    }
    Ok(())
}

fn cmd_vocab(args: VocabArgs) -> Result<(), CliError> {
    let reader = BufReader::new(
        File::open(&args.input)
            .with_context(|| format!("opening {}", args.input.display()))
            .map_err(CliError::Data)?,
    );
    let vocab = Vocab::build_from_reader(reader, args.min_count)?;
    vocab.save(&args.output)?;
    eprintln!("vocab: {} words (min count {})", vocab.len(), args.min_count);

    let mut m = RunManifest::new("vocab");
    m.flag("input", args.input.display())
        .flag("min-count", args.min_count)
        .flag("output", args.output.display());
    m.input(&args.input)?;
    m.output(&args.output);
    m.write(&args.manifest, Some(&args.output))?;
    Ok(())
}

fn cmd_cooccur(args: CooccurArgs) -> Result<(), CliError> {
    set_threads(&args.threads);
    let vocab = Vocab::load(&args.vocab)?;
    let lines = read_lines(&args.input)?;
    let weighting = match args.weighting {
        WeightingArg::Harmonic => WindowWeighting::Harmonic,
        WeightingArg::Flat => WindowWeighting::Flat,
    };
    let matrix = count_cooccurrences(&lines, &vocab, args.window, weighting)?;
    matrix.save(&args.output)?;
    eprintln!(
        "cooccur: {} entries over {} words",
        matrix.num_entries(),
        matrix.vocab_size()
    );

    let mut m = RunManifest::new("cooccur");
    m.flag("input", args.input.display())
        .flag("vocab", args.vocab.display())
        .flag("window", args.window)
        .flag(
            "weighting",
            match args.weighting {
                WeightingArg::Harmonic => "harmonic",
                WeightingArg::Flat => "flat",
            },
        )
        .flag("output", args.output.display());
    m.input(&args.input)?;
    m.input(&args.vocab)?;
    m.output(&args.output);
    m.write(&args.manifest, Some(&args.output))?;
    Ok(())
}

fn parse_h(s: &str) -> Result<HFunction, CliError> {
    HFunction::parse(s).map_err(|e| CliError::Usage(e.to_string()))
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let h = parse_h(&args.h)?;
    if args.lr <= 0.0 {
        return Err(CliError::Usage(format!("--lr must be > 0, got {}", args.lr)));
    }
    if args.epochs == 0 {
        return Err(CliError::Usage("--epochs must be >= 1".into()));
    }
    let cooc = CoocMatrix::load(&args.cooc)?;
    let vocab = match &args.vocab {
        Some(path) => {
            let v = Vocab::load(path)?;
            if v.len() != cooc.vocab_size() as usize {
                return Err(CliError::Data(anyhow!(
                    "vocabulary has {} words but the matrix was counted over {}",
                    v.len(),
                    cooc.vocab_size()
                )));
            }
            Some(v)
        }
        None => None,
    };

    let init = match (&args.init_model, &args.init_vocab) {
        (Some(model_path), Some(init_vocab_path)) => {
            let vocab = vocab.as_ref().ok_or_else(|| {
                CliError::Usage("--init-model requires --vocab for word matching".into())
            })?;
            let restricted = EmbeddingTable::load(model_path)?;
            restricted.require(args.factors, args.dim, h)?;
            let restricted_vocab = Vocab::load(init_vocab_path)?;
            Some(init_trick(&restricted, &restricted_vocab, vocab, args.seed)?)
        }
        (None, None) => None,
        _ => {
            return Err(CliError::Usage(
                "--init-model and --init-vocab must be given together".into(),
            ))
        }
    };

    let cfg = TrainConfig {
        factors: args.factors,
        dim: args.dim,
        h,
        lr: args.lr,
        epochs: args.epochs,
        optimizer: match args.optimizer {
            OptimizerArg::Radagrad => OptimizerKind::Radagrad,
            OptimizerArg::Rsgd => OptimizerKind::Rsgd,
        },
        x_max: args.x_max,
        alpha: args.alpha,
        seed: args.seed,
        mode: if args.deterministic {
            TrainMode::Deterministic
        } else {
            TrainMode::Hogwild
        },
        threads: args.threads,
        adagrad_eps: 1e-8,
    };
    let result = train_logged(&cooc, &cfg, init, |epoch, loss| {
        eprintln!("epoch {:>3}: loss {}", epoch + 1, sig6(loss));
    })?;
    result.table.save(&args.output)?;

    let mut m = RunManifest::new("train");
    m.seed(args.seed);
    m.flag("cooc", args.cooc.display())
        .flag("factors", args.factors)
        .flag("dim", args.dim)
        .flag("h", h.name())
        .flag("lr", args.lr)
        .flag("epochs", args.epochs)
        .flag(
            "optimizer",
            match args.optimizer {
                OptimizerArg::Radagrad => "radagrad",
                OptimizerArg::Rsgd => "rsgd",
            },
        )
        .flag("x-max", args.x_max)
        .flag("alpha", args.alpha)
        .flag("threads", cfg.threads)
        .flag("deterministic", args.deterministic)
        .flag("output", args.output.display());
    m.flag_opt("vocab", &args.vocab.as_ref().map(|p| p.display().to_string()));
    m.flag_opt(
        "init-model",
        &args.init_model.as_ref().map(|p| p.display().to_string()),
    );
    m.input(&args.cooc)?;
    if let Some(p) = &args.vocab {
        m.input(p)?;
    }
    if let Some(p) = &args.init_model {
        m.input(p)?;
    }
    if let Some(p) = &args.init_vocab {
        m.input(p)?;
    }
    m.output(&args.output);
    m.write(&args.manifest, Some(&args.output))?;
    Ok(())
}

fn load_model_and_vocab(
    model: &Path,
    vocab: &Path,
) -> Result<(EmbeddingTable, Vocab), CliError> {
    let table = EmbeddingTable::load(model)?;
    let v = Vocab::load(vocab)?;
    if v.len() != table.vocab_size() {
        return Err(CliError::Data(anyhow!(
            "vocabulary has {} words but the model holds {}",
            v.len(),
            table.vocab_size()
        )));
    }
    Ok((table, v))
}

fn cmd_eval_sim(args: EvalSimArgs) -> Result<(), CliError> {
    set_threads(&args.threads);
    let (table, vocab) = load_model_and_vocab(&args.model, &args.vocab)?;
    let vectors = WordVectors::from_table(&table, args.source.into())?;
    let dataset = SimilarityDataset::load(&args.dataset)?;
    let report = eval_similarity(&dataset, &vectors, &vocab, args.metric.into())?;

    let spearman = report
        .spearman
        .map(sig6)
        .unwrap_or_else(|| "undefined".into());
    emit(
        &format!("spearman\t{}\tused\t{}\tdropped\t{}", spearman, report.n_used, report.n_dropped),
        &args.output,
    )?;
    if let Some(path) = &args.details {
        write_details(path, &report.details)?;
    }

    let mut m = RunManifest::new("eval-sim");
    m.flag("model", args.model.display())
        .flag("vocab", args.vocab.display())
        .flag("dataset", args.dataset.display())
        .flag(
            "metric",
            match args.metric {
                MetricArg::Poincare => "poincare",
                MetricArg::Cosine => "cosine",
            },
        );
    m.input(&args.model)?;
    m.input(&args.vocab)?;
    m.input(&args.dataset)?;
    if let Some(p) = &args.details {
        m.output(p);
    }
    if let Some(p) = &args.output {
        m.output(p);
    }
    m.write(&args.manifest, args.output.as_deref())?;
    Ok(())
}

fn cmd_eval_analogy(args: EvalAnalogyArgs) -> Result<(), CliError> {
    set_threads(&args.threads);
    if !(0.0..=1.0).contains(&args.t) {
        return Err(CliError::Usage(format!("--t must be in [0, 1], got {}", args.t)));
    }
    let (table, vocab) = load_model_and_vocab(&args.model, &args.vocab)?;
    let vectors = WordVectors::from_table(&table, args.source.into())?;
    let dataset = AnalogyDataset::load(&args.dataset)?;

    if args.cross_validate {
        let grid = default_t_grid();
        let cv = cross_validate_t(&dataset, &vectors, &vocab, args.metric.into(), &grid, args.seed)?;
        for (i, fold) in cv.folds.iter().enumerate() {
            emit(
                &format!(
                    "fold\t{}\tbest_t\t{}\tvalidation\t{}\ttest\t{}",
                    i + 1,
                    sig6(fold.best_t),
                    sig6(fold.validation_accuracy),
                    sig6(fold.test_accuracy)
                ),
                &args.output,
            )?;
        }
    } else {
        let method = match args.method {
            MethodArg::Geodesic => AnalogyMethod::Geodesic {
                t: args.t,
                metric: args.metric.into(),
            },
            MethodArg::ThreeCosAdd => AnalogyMethod::ThreeCosAdd,
        };
        let report = eval_analogy(&dataset, &vectors, &vocab, method)?;
        emit(
            &format!(
                "semantic\t{}\tsyntactic\t{}\ttotal\t{}\tevaluated\t{}\tdropped\t{}",
                sig6(report.semantic.accuracy()),
                sig6(report.syntactic.accuracy()),
                sig6(report.total.accuracy()),
                report.total.evaluated,
                report.dropped
            ),
            &args.output,
        )?;
        if let Some(path) = &args.details {
            write_details(path, &report.details)?;
        }
    }

    let mut m = RunManifest::new("eval-analogy");
    m.seed(args.seed);
    m.flag("model", args.model.display())
        .flag("vocab", args.vocab.display())
        .flag("dataset", args.dataset.display())
        .flag("t", args.t)
        .flag("cross-validate", args.cross_validate)
        .flag(
            "metric",
            match args.metric {
                MetricArg::Poincare => "poincare",
                MetricArg::Cosine => "cosine",
            },
        )
        .flag(
            "method",
            match args.method {
                MethodArg::Geodesic => "geodesic",
                MethodArg::ThreeCosAdd => "3cosadd",
            },
        );
    m.input(&args.model)?;
    m.input(&args.vocab)?;
    m.input(&args.dataset)?;
    if let Some(p) = &args.output {
        m.output(p);
    }
    m.write(&args.manifest, args.output.as_deref())?;
    Ok(())
}

fn resolve_sets(
    generic: &Option<PathBuf>,
    specific: &Option<PathBuf>,
    unsupervised_n: &Option<usize>,
    pool: &Option<usize>,
    vocab: &Vocab,
) -> Result<GenericSpecificSets, CliError> {
    match (generic, specific, unsupervised_n) {
        (Some(g), Some(s), None) => {
            let (sets, report) = select_sets_from_files(g, s, vocab)?;
            if report.generic_oov + report.specific_oov + report.overlap_removed > 0 {
                eprintln!(
                    "word lists: {} generic OOV, {} specific OOV, {} overlapping removed",
                    report.generic_oov, report.specific_oov, report.overlap_removed
                );
            }
            Ok(sets)
        }
        (None, None, Some(n)) => {
            let pool = pool.unwrap_or(vocab.len());
            Ok(select_sets_unsupervised(vocab, *n, pool)?)
        }
        _ => Err(CliError::Usage(
            "give either --generic with --specific, or --unsupervised-n (with optional --pool)"
                .into(),
        )),
    }
}

fn fit_transform(
    table: &EmbeddingTable,
    sets: &GenericSpecificSets,
) -> Result<IsometryTransform, CliError> {
    let (transform, report) = fit_isometry(table, sets)?;
    for f in &report.degenerate_factors {
        eprintln!("warning: factor {f} had a degenerate rotation, defaulted to (0, 1)");
    }
    Ok(transform)
}

fn cmd_eval_hypernymy(args: EvalHypernymyArgs) -> Result<(), CliError> {
    set_threads(&args.threads);
    let (table, vocab) = load_model_and_vocab(&args.model, &args.vocab)?;
    let sets = resolve_sets(
        &args.generic,
        &args.specific,
        &args.unsupervised_n,
        &args.pool,
        &vocab,
    )?;
    let transform = fit_transform(&table, &sets)?;
    let dataset = EntailmentDataset::load(&args.dataset)?;

    match args.task {
        TaskArg::Hyperlex => {
            let report = eval_hyperlex(&dataset, &table, &vocab, &transform)?;
            let spearman = report
                .spearman
                .map(sig6)
                .unwrap_or_else(|| "undefined".into());
            emit(
                &format!(
                    "spearman\t{}\tused\t{}\tdropped\t{}",
                    spearman, report.n_used, report.n_dropped
                ),
                &args.output,
            )?;
            if let Some(path) = &args.details {
                write_details(path, &report.details)?;
            }
        }
        TaskArg::Wbless => {
            let report = eval_wbless(
                &dataset,
                &table,
                &vocab,
                &transform,
                args.holdout,
                args.repeats,
                args.seed,
            )?;
            emit(
                &format!(
                    "accuracy\t{}\trepeats\t{}\tused\t{}\tdropped\t{}",
                    sig6(report.mean_accuracy),
                    report.repeats,
                    report.n_used,
                    report.n_dropped
                ),
                &args.output,
            )?;
            if let Some(path) = &args.details {
                write_details(path, &report.details)?;
            }
        }
    }

    let mut m = RunManifest::new("eval-hypernymy");
    m.seed(args.seed);
    m.flag("model", args.model.display())
        .flag("vocab", args.vocab.display())
        .flag("dataset", args.dataset.display())
        .flag(
            "task",
            match args.task {
                TaskArg::Hyperlex => "hyperlex",
                TaskArg::Wbless => "wbless",
            },
        )
        .flag("holdout", args.holdout)
        .flag("repeats", args.repeats);
    m.flag_opt("generic", &args.generic.as_ref().map(|p| p.display().to_string()));
    m.flag_opt("specific", &args.specific.as_ref().map(|p| p.display().to_string()));
    m.flag_opt("unsupervised-n", &args.unsupervised_n);
    m.flag_opt("pool", &args.pool);
    m.input(&args.model)?;
    m.input(&args.vocab)?;
    m.input(&args.dataset)?;
    for p in [&args.generic, &args.specific].into_iter().flatten() {
        m.input(p)?;
    }
    if let Some(p) = &args.output {
        m.output(p);
    }
    m.write(&args.manifest, args.output.as_deref())?;
    Ok(())
}

fn cmd_delta_hyp(args: DeltaHypArgs) -> Result<(), CliError> {
    set_threads(&args.threads);
    let h = InducedH::parse(&args.h).map_err(|e| CliError::Usage(e.to_string()))?;
    let cooc = CoocMatrix::load(&args.cooc)?;
    let smoothing = match args.smoothing {
        SmoothingArg::None => Smoothing::None,
        SmoothingArg::PlusOne => Smoothing::PlusOne,
    };
    let metric = InducedCoocMetric::new(&cooc, h, smoothing);
    let est = estimate_delta(&metric, args.tuples, args.pairs, args.seed)?;
    emit(
        &format!(
            "{}\t{}\t{}\t{}\t{}",
            h.name(),
            sig6(est.d_avg),
            sig6(est.delta_avg),
            sig6(est.ratio),
            est.clamp_count
        ),
        &args.output,
    )?;

    let mut m = RunManifest::new("delta-hyp");
    m.seed(args.seed);
    m.flag("cooc", args.cooc.display())
        .flag("h", h.name())
        .flag("tuples", args.tuples)
        .flag("pairs", args.pairs)
        .flag(
            "smoothing",
            match args.smoothing {
                SmoothingArg::None => "none",
                SmoothingArg::PlusOne => "plus-one",
            },
        );
    m.input(&args.cooc)?;
    if let Some(p) = &args.output {
        m.output(p);
    }
    m.write(&args.manifest, args.output.as_deref())?;
    Ok(())
}

fn cmd_export_gaussian(args: ExportGaussianArgs) -> Result<(), CliError> {
    let (table, vocab) = load_model_and_vocab(&args.model, &args.vocab)?;
    let sets = resolve_sets(
        &args.generic,
        &args.specific,
        &args.unsupervised_n,
        &args.pool,
        &vocab,
    )?;
    let transform = fit_transform(&table, &sets)?;

    let mut clamped_total = 0usize;
    let mut w = BufWriter::new(File::create(&args.output).map_err(anyhow::Error::from)?);
    for id in 0..vocab.len() as u32 {
        let (g, clamped) = to_gaussian(&table.target_point(id), &transform)?;
        clamped_total += clamped;
        write!(w, "{}", vocab.word(id)).map_err(anyhow::Error::from)?;
        for (mu, sigma) in g.mu.iter().zip(&g.sigma) {
            write!(w, "\t{mu:.16e}\t{sigma:.16e}").map_err(anyhow::Error::from)?;
        }
        writeln!(w).map_err(anyhow::Error::from)?;
    }
    w.flush().map_err(anyhow::Error::from)?;
    if clamped_total > 0 {
        eprintln!("warning: {clamped_total} sigma values clamped at the overflow guard");
    }

    let mut m = RunManifest::new("export-gaussian");
    m.flag("model", args.model.display())
        .flag("vocab", args.vocab.display())
        .flag("output", args.output.display());
    m.flag_opt("generic", &args.generic.as_ref().map(|p| p.display().to_string()));
    m.flag_opt("specific", &args.specific.as_ref().map(|p| p.display().to_string()));
    m.flag_opt("unsupervised-n", &args.unsupervised_n);
    m.flag_opt("pool", &args.pool);
    m.input(&args.model)?;
    m.input(&args.vocab)?;
    m.output(&args.output);
    m.write(&args.manifest, Some(&args.output))?;
    Ok(())
}

fn cmd_export_text(args: ExportTextArgs) -> Result<(), CliError> {
    let (table, vocab) = load_model_and_vocab(&args.model, &args.vocab)?;
    let context_path = args.context_output.clone().unwrap_or_else(|| {
        let mut name = args
            .output
            .file_stem()
            .unwrap_or_default()
            .to_os_string();
        name.push(".context");
        if let Some(ext) = args.output.extension() {
            name.push(".");
            name.push(ext);
        }
        args.output.with_file_name(name)
    });
    table.export_text(&vocab, &args.output, &context_path)?;
    eprintln!(
        "export-text: wrote {} and {}",
        args.output.display(),
        context_path.display()
    );

    let mut m = RunManifest::new("export-text");
    m.flag("model", args.model.display())
        .flag("vocab", args.vocab.display())
        .flag("output", args.output.display())
        .flag("context-output", context_path.display());
    m.input(&args.model)?;
    m.input(&args.vocab)?;
    m.output(&args.output);
    m.output(&context_path);
    m.write(&args.manifest, Some(&args.output))?;
    Ok(())
}
