//! `relata` — mine pair–pattern co-occurrences, train LRA/NLRA models, and
//! evaluate relational similarity.
//!
//! Every command is deterministic given identical inputs, flags, and seed.
//! Settings may come from a `key=value` config file (`--config`); flags
//! take precedence and unknown keys are rejected. The resolved settings
//! are echoed into every output artifact, except execution-only keys
//! (`shards`, output paths) so artifact bytes do not depend on how or
//! where they were produced. Logs go to standard error; summaries and
//! machine-readable output go to standard output or files.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use relata::corpus::{ExtractConfig, LemmaDict, TargetPairSet, TripleStore};
use relata::embeddings::{load_table, load_text_vectors, EmbeddingTable};
use relata::eval::{
    evaluate, load_dataset, write_tsv, CombinedScorer, EvalReport, LraScorer, NlraScorer, Scorer,
    VecOffScorer,
};
use relata::lra::LraModel;
use relata::nlra::{NlraModel, TrainingConfig};
use relata::{Error, Result};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "relata", version, about = "Relational word-pair embeddings: pattern mining, LRA, NLRA, and evaluation")]
struct Cli {
    /// Config file of key=value lines; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine pair–pattern co-occurrence triples from corpus files.
    Extract(ExtractArgs),
    /// Train the LRA baseline from a triple store.
    TrainLra(TrainLraArgs),
    /// Train an NLRA model from a triple store and pretrained vectors.
    TrainNlra(TrainNlraArgs),
    /// Evaluate models on a relational-similarity dataset.
    Eval(EvalArgs),
}

#[derive(Args)]
struct ExtractArgs {
    /// Corpus files, one pre-tokenized sentence per line.
    corpus: Vec<PathBuf>,
    /// Target pair file: one `a:b` per line.
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Lemma dictionary TSV (`surface<TAB>lemma`).
    #[arg(long)]
    lemmas: Option<PathBuf>,
    /// Output triple-store TSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker shards for extraction (affects speed only, never output).
    #[arg(long)]
    shards: Option<usize>,
    /// Minimum pattern length in tokens.
    #[arg(long)]
    min_len: Option<usize>,
    /// Maximum pattern length in tokens.
    #[arg(long)]
    max_len: Option<usize>,
}

#[derive(Args)]
struct TrainLraArgs {
    /// Triple-store TSV produced by `extract`.
    #[arg(long)]
    triples: Option<PathBuf>,
    /// Target pair file: one `a:b` per line.
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Lemma dictionary TSV.
    #[arg(long)]
    lemmas: Option<PathBuf>,
    /// SVD dimension of the pair vectors.
    #[arg(long)]
    dim: Option<usize>,
    /// Feature cap multiplier: keep the top cap-mult·|W| patterns.
    #[arg(long)]
    cap_mult: Option<usize>,
    /// Output model path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainNlraArgs {
    /// Triple-store TSV produced by `extract`.
    #[arg(long)]
    triples: Option<PathBuf>,
    /// Pretrained word vectors (text format or a saved binary table).
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    /// AdaGrad learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// Negative patterns sampled per positive.
    #[arg(long)]
    negatives: Option<usize>,
    /// Minibatch size.
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Width of the pair and pattern encoders.
    #[arg(long)]
    hidden: Option<usize>,
    /// Exponent on pattern frequency in the negative distribution.
    #[arg(long)]
    neg_smoothing: Option<f64>,
    /// Per-epoch replication cap for high-count triples.
    #[arg(long)]
    replicate_cap: Option<u64>,
    /// Output model path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Dataset directory (manifest.tsv plus per-relation files).
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Model to evaluate, as kind=path (kinds: vecoff, lra, nlra). Repeatable.
    #[arg(long = "model")]
    models: Vec<String>,
    /// Combined scorer over two declared kinds, e.g. nlra+vecoff. Repeatable.
    #[arg(long = "combine")]
    combine: Vec<String>,
    /// Lemma dictionary TSV applied to dataset words.
    #[arg(long)]
    lemmas: Option<PathBuf>,
    /// Output TSV report path.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Key=value settings from `--config`, consumed key by key so leftovers
/// can be rejected as unknown.
struct FileConfig {
    map: BTreeMap<String, String>,
    path: String,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut pstr = String::from("<none>");
        if let Some(path) = path {
            pstr = path.display().to_string();
            let text =
                fs::read_to_string(path).map_err(|e| Error::io(pstr.clone(), e))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    Error::format(pstr.clone(), lineno + 1, "expected key=value")
                })?;
                let k = k.trim().to_string();
                if map.insert(k.clone(), v.trim().to_string()).is_some() {
                    return Err(Error::format(
                        pstr.clone(),
                        lineno + 1,
                        format!("duplicate key {k:?}"),
                    ));
                }
            }
        }
        Ok(FileConfig { map, path: pstr })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn parse_take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::Config(format!("config key {key:?}: cannot parse value {raw:?}"))
            }),
        }
    }

    /// Reject any keys this command did not consume.
    fn finish(self) -> Result<()> {
        if let Some(key) = self.map.keys().next() {
            return Err(Error::Config(format!(
                "unknown config key {key:?} in {}",
                self.path
            )));
        }
        Ok(())
    }
}

fn resolve<T: FromStr>(flag: Option<T>, cfg: &mut FileConfig, key: &str, default: T) -> Result<T> {
    match flag {
        Some(v) => {
            cfg.take(key);
            Ok(v)
        }
        None => Ok(cfg.parse_take(key)?.unwrap_or(default)),
    }
}

fn resolve_required<T: FromStr>(flag: Option<T>, cfg: &mut FileConfig, key: &str) -> Result<T> {
    match flag {
        Some(v) => {
            cfg.take(key);
            Ok(v)
        }
        None => cfg
            .parse_take(key)?
            .ok_or_else(|| Error::Config(format!("missing required setting --{key}"))),
    }
}

/// Resolved settings echoed into output artifacts for provenance.
struct Provenance {
    lines: Vec<String>,
}

impl Provenance {
    fn new() -> Self {
        Provenance {
            lines: vec![format!("tool_version={VERSION}")],
        }
    }

    fn push(&mut self, key: &str, value: impl Display) {
        self.lines.push(format!("{key}={value}"));
    }

    fn lines(&self) -> &[String] {
        &self.lines
    }

    fn joined(&self) -> String {
        self.lines.join("\n")
    }
}

fn load_lemmas(path: &Option<PathBuf>) -> Result<LemmaDict> {
    match path {
        Some(p) => LemmaDict::from_tsv(p),
        None => Ok(LemmaDict::identity()),
    }
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn cmd_extract(args: ExtractArgs, mut cfg: FileConfig) -> Result<()> {
    let pairs_path: PathBuf = resolve_required(args.pairs, &mut cfg, "pairs")?;
    let out: PathBuf = resolve_required(args.out, &mut cfg, "out")?;
    let lemmas = match args.lemmas {
        Some(p) => {
            cfg.take("lemmas");
            Some(p)
        }
        None => cfg.parse_take::<PathBuf>("lemmas")?,
    };
    let shards = resolve(args.shards, &mut cfg, "shards", 1)?;
    let min_len = resolve(args.min_len, &mut cfg, "min-len", 1)?;
    let max_len = resolve(args.max_len, &mut cfg, "max-len", 3)?;
    let mut corpus = args.corpus;
    if corpus.is_empty() {
        if let Some(list) = cfg.take("corpus") {
            corpus = list.split(',').map(|s| PathBuf::from(s.trim())).collect();
        }
    } else {
        cfg.take("corpus");
    }
    cfg.finish()?;
    if corpus.is_empty() {
        return Err(Error::Config("no corpus files given".into()));
    }
    if min_len == 0 || max_len < min_len {
        return Err(Error::Argument(format!(
            "invalid pattern length bounds [{min_len}, {max_len}]"
        )));
    }

    let dict = load_lemmas(&lemmas)?;
    let targets = TargetPairSet::from_file(&pairs_path, &dict)?;
    let config = ExtractConfig { min_len, max_len };
    let (store, summary) = relata::corpus::build_triple_store(&corpus, &targets, &dict, &config, shards)?;

    let mut meta = Provenance::new();
    meta.push("command", "extract");
    meta.push(
        "corpus",
        corpus.iter().map(|p| path_str(p)).collect::<Vec<_>>().join(","),
    );
    meta.push("pairs", path_str(&pairs_path));
    if let Some(l) = &lemmas {
        meta.push("lemmas", path_str(l));
    }
    meta.push("min-len", min_len);
    meta.push("max-len", max_len);
    store.save_tsv(&out, meta.lines())?;

    println!(
        "sentences={} window_matches={} distinct_triples={} distinct_patterns={}",
        summary.sentences, summary.window_matches, summary.distinct_triples, summary.distinct_patterns
    );
    Ok(())
}

fn cmd_train_lra(args: TrainLraArgs, mut cfg: FileConfig) -> Result<()> {
    let triples: PathBuf = resolve_required(args.triples, &mut cfg, "triples")?;
    let pairs_path: PathBuf = resolve_required(args.pairs, &mut cfg, "pairs")?;
    let out: PathBuf = resolve_required(args.out, &mut cfg, "out")?;
    let lemmas = match args.lemmas {
        Some(p) => {
            cfg.take("lemmas");
            Some(p)
        }
        None => cfg.parse_take::<PathBuf>("lemmas")?,
    };
    let dim = resolve(args.dim, &mut cfg, "dim", relata::lra::DEFAULT_DIM)?;
    let cap_mult = resolve(
        args.cap_mult,
        &mut cfg,
        "cap-mult",
        relata::lra::DEFAULT_CAP_MULTIPLIER,
    )?;
    cfg.finish()?;
    if dim == 0 || cap_mult == 0 {
        return Err(Error::Argument("dim and cap-mult must be positive".into()));
    }

    let dict = load_lemmas(&lemmas)?;
    let targets = TargetPairSet::from_file(&pairs_path, &dict)?;
    let store = TripleStore::load_tsv(&triples)?;
    let cap = cap_mult * targets.len();
    let (model, summary) = relata::lra::train(&store, &targets, dim, Some(cap))?;

    let mut meta = Provenance::new();
    meta.push("command", "train-lra");
    meta.push("triples", path_str(&triples));
    meta.push("pairs", path_str(&pairs_path));
    if let Some(l) = &lemmas {
        meta.push("lemmas", path_str(l));
    }
    meta.push("dim", dim);
    meta.push("cap-mult", cap_mult);
    model.save(&out, &meta.joined())?;

    println!(
        "pairs={} features={} feature_cap={} dim={} clamped={} no_pattern_pairs={}",
        summary.n_pairs,
        summary.n_features,
        summary.feature_cap,
        summary.dim,
        summary.clamped,
        summary.no_pattern_pairs
    );
    Ok(())
}

/// Load a vector table, accepting either the binary store or text format.
fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let mut magic = [0u8; 10];
    let readable = fs::File::open(path)
        .and_then(|mut f| std::io::Read::read_exact(&mut f, &mut magic))
        .is_ok();
    if readable && &magic == b"RELATA-EMB" {
        Ok(load_table(path)?.0)
    } else {
        Ok(load_text_vectors(path, None)?.0)
    }
}

fn cmd_train_nlra(args: TrainNlraArgs, mut cfg: FileConfig) -> Result<()> {
    let triples: PathBuf = resolve_required(args.triples, &mut cfg, "triples")?;
    let embeddings: PathBuf = resolve_required(args.embeddings, &mut cfg, "embeddings")?;
    let out: PathBuf = resolve_required(args.out, &mut cfg, "out")?;
    let defaults = TrainingConfig::default();
    let config = TrainingConfig {
        epochs: resolve(args.epochs, &mut cfg, "epochs", defaults.epochs)?,
        learning_rate: resolve(args.lr, &mut cfg, "lr", defaults.learning_rate)?,
        negatives: resolve(args.negatives, &mut cfg, "negatives", defaults.negatives)?,
        batch_size: resolve(args.batch, &mut cfg, "batch", defaults.batch_size)?,
        seed: resolve(args.seed, &mut cfg, "seed", defaults.seed)?,
        hidden: resolve(args.hidden, &mut cfg, "hidden", defaults.hidden)?,
        neg_smoothing: resolve(args.neg_smoothing, &mut cfg, "neg-smoothing", defaults.neg_smoothing)?,
        replicate_cap: resolve(args.replicate_cap, &mut cfg, "replicate-cap", defaults.replicate_cap)?,
    };
    cfg.finish()?;
    config.validate()?;

    let store = TripleStore::load_tsv(&triples)?;
    let table = load_embeddings(&embeddings)?;
    let outcome = relata::nlra::train_full(&store, &table, &config)?;

    let mut meta = Provenance::new();
    meta.push("command", "train-nlra");
    meta.push("triples", path_str(&triples));
    meta.push("embeddings", path_str(&embeddings));
    meta.push("epochs", config.epochs);
    meta.push("lr", config.learning_rate);
    meta.push("negatives", config.negatives);
    meta.push("batch", config.batch_size);
    meta.push("seed", config.seed);
    meta.push("hidden", config.hidden);
    meta.push("neg-smoothing", config.neg_smoothing);
    meta.push("replicate-cap", config.replicate_cap);
    outcome.model.save(&out, &meta.joined())?;

    println!(
        "epochs={} positives_per_epoch={} filtered_triples={} final_loss={}",
        config.epochs,
        outcome.positives_per_epoch,
        outcome.filtered_triples,
        outcome.epoch_losses.last().expect("at least one epoch")
    );
    Ok(())
}

enum LoadedModel {
    VecOff(Box<EmbeddingTable>),
    Lra(Box<LraModel>),
    Nlra(Box<NlraModel>),
}

fn cmd_eval(args: EvalArgs, mut cfg: FileConfig) -> Result<()> {
    let dataset_dir: PathBuf = resolve_required(args.dataset, &mut cfg, "dataset")?;
    let out: PathBuf = resolve_required(args.out, &mut cfg, "out")?;
    let lemmas = match args.lemmas {
        Some(p) => {
            cfg.take("lemmas");
            Some(p)
        }
        None => cfg.parse_take::<PathBuf>("lemmas")?,
    };
    let mut model_specs = args.models;
    if model_specs.is_empty() {
        if let Some(list) = cfg.take("model") {
            model_specs = list.split(',').map(|s| s.trim().to_string()).collect();
        }
    } else {
        cfg.take("model");
    }
    let mut combos = args.combine;
    if combos.is_empty() {
        if let Some(list) = cfg.take("combine") {
            combos = list.split(',').map(|s| s.trim().to_string()).collect();
        }
    } else {
        cfg.take("combine");
    }
    cfg.finish()?;
    if model_specs.is_empty() {
        return Err(Error::Config("no models given (use --model kind=path)".into()));
    }

    let dict = load_lemmas(&lemmas)?;
    let dataset = load_dataset(&dataset_dir, &dict)?;

    let mut models: Vec<(String, LoadedModel)> = Vec::new();
    for spec in &model_specs {
        let (kind, path) = spec.split_once('=').ok_or_else(|| {
            Error::Config(format!("bad --model {spec:?}: expected kind=path"))
        })?;
        if models.iter().any(|(k, _)| k == kind) {
            return Err(Error::Config(format!("model kind {kind:?} given twice")));
        }
        let path = Path::new(path);
        let loaded = match kind {
            "vecoff" => LoadedModel::VecOff(Box::new(load_embeddings(path)?)),
            "lra" => LoadedModel::Lra(Box::new(LraModel::load(path)?.0)),
            "nlra" => LoadedModel::Nlra(Box::new(NlraModel::load(path)?.0)),
            other => {
                return Err(Error::Config(format!(
                    "unknown model kind {other:?} (expected vecoff, lra, or nlra)"
                )))
            }
        };
        models.push((kind.to_string(), loaded));
    }

    let scorers: Vec<(String, Box<dyn Scorer + '_>)> = models
        .iter()
        .map(|(kind, model)| {
            let scorer: Box<dyn Scorer> = match model {
                LoadedModel::VecOff(t) => Box::new(VecOffScorer::new(t, &dataset)),
                LoadedModel::Lra(m) => Box::new(LraScorer::new(m, &dataset)),
                LoadedModel::Nlra(m) => Box::new(NlraScorer::new(m, &dataset)),
            };
            (kind.clone(), scorer)
        })
        .collect();

    let mut reports: Vec<EvalReport> = Vec::new();
    for (_, scorer) in &scorers {
        reports.push(evaluate(scorer.as_ref(), &dataset)?);
    }
    for combo in &combos {
        let (a, b) = combo.split_once('+').ok_or_else(|| {
            Error::Config(format!("bad --combine {combo:?}: expected kindA+kindB"))
        })?;
        let find = |kind: &str| -> Result<&dyn Scorer> {
            scorers
                .iter()
                .find(|(k, _)| k == kind)
                .map(|(_, s)| s.as_ref())
                .ok_or_else(|| {
                    Error::Config(format!("--combine references undeclared model {kind:?}"))
                })
        };
        let combined = CombinedScorer::new(find(a.trim())?, find(b.trim())?);
        reports.push(evaluate(&combined, &dataset)?);
    }

    for report in &reports {
        print!("{}", report.to_text());
        println!();
    }
    let mut meta = Provenance::new();
    meta.push("command", "eval");
    meta.push("dataset", path_str(&dataset_dir));
    let mut tsv = String::new();
    for line in meta.lines() {
        tsv.push_str(&format!("# {line}\n"));
    }
    tsv.push_str(&write_tsv(&reports));
    fs::write(&out, tsv).map_err(|e| Error::io(path_str(&out), e))?;
    Ok(())
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let cfg = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Extract(args) => cmd_extract(args, cfg),
        Command::TrainLra(args) => cmd_train_lra(args, cfg),
        Command::TrainNlra(args) => cmd_train_nlra(args, cfg),
        Command::Eval(args) => cmd_eval(args, cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
