//! The `mve` command line: `index`, `search`, `sweep` and `eval`.
//!
//! Exit codes: 0 on success, 1 on invalid input or configuration, 2 when an
//! index file is corrupt.

use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{ConfigLayer, EngineConfig, SEED_ENV};
use crate::corpus::{read_corpus, read_queries};
use crate::embed::Embedder;
use crate::error::{Error, Result};
use crate::eval::{average_precision, ndcg_at, read_run, rr_at, sweep, write_run, Qrels, SweepSettings};
use crate::index::{load_index, read_embedding_dump, save_index};
use crate::lexicon::Lexicon;
use crate::retrieval::{Engine, Strategy};

pub const INDEX_FILE: &str = "index.mvix";
pub const LEXICON_FILE: &str = "lexicon.tsv";
pub const CONFIG_FILE: &str = "config.toml";

#[derive(Debug, Parser)]
#[command(
    name = "mve",
    version,
    about = "Multi-vector dense retrieval with query-embedding pruning"
)]
struct Cli {
    /// Worker threads; output does not depend on this value.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// TOML config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build lexicon, embedding store and IVF index from a corpus.
    Index {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// MVED file with precomputed document embeddings.
        #[arg(long)]
        embeddings_dump: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run one query and print a TREC run.
    Search {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        query: String,
        /// Query id used in the printed run.
        #[arg(long, default_value = "q0")]
        qid: String,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Evaluate every (strategy, p) pair over a query set and write CSV.
    Sweep {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        qrels: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated strategies.
        #[arg(long, value_delimiter = ',', default_value = "first,icf")]
        strategies: Vec<String>,
        /// Comma-separated p values; defaults to 1..=q_len.
        #[arg(long, value_delimiter = ',')]
        p_values: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Score a TREC run against TREC qrels.
    Eval {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        qrels: PathBuf,
        /// Also print one line per query and measure.
        #[arg(long)]
        per_query: bool,
    },
}

#[derive(Debug, Args, Default)]
struct Overrides {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    q_len: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    k_prime: Option<usize>,
    #[arg(long)]
    n_list: Option<usize>,
    #[arg(long)]
    n_probe: Option<usize>,
    #[arg(long)]
    sample_fraction: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    p: Option<usize>,
}

impl Overrides {
    fn layer(&self) -> Result<ConfigLayer> {
        Ok(ConfigLayer {
            dim: self.dim,
            q_len: self.q_len,
            k: self.k,
            k_prime: self.k_prime,
            n_list: self.n_list,
            n_probe: self.n_probe,
            sample_fraction: self.sample_fraction,
            iterations: self.iterations,
            seed: self.seed,
            strategy: self.strategy.as_deref().map(str::parse).transpose()?,
            p: self.p,
        })
    }
}

/// Entry point used by the binary.
pub fn run(args: &[String]) -> i32 {
    let env_seed = std::env::var(SEED_ENV).ok();
    run_with(args, env_seed.as_deref(), &mut io::stdout(), &mut io::stderr())
}

/// Runs the CLI against explicit output streams. `env_seed` is the value of
/// `MVE_SEED`, if any.
pub fn run_with(
    args: &[String],
    env_seed: Option<&str>,
    out: &mut (dyn Write + Send),
    err: &mut (dyn Write + Send),
) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let _ = write!(err, "{}", e.render());
            return 1;
        }
    };
    match execute(cli, env_seed, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::CorruptIndex { .. } => 2,
                _ => 1,
            }
        }
    }
}

fn execute(cli: Cli, env_seed: Option<&str>, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<()> {
    let threads = cli.threads;
    if threads == Some(0) {
        return Err(Error::config("--threads must be >= 1"));
    }
    let job = move || -> Result<()> {
        match cli.command {
            Command::Index {
                corpus,
                out: dir,
                embeddings_dump,
                overrides,
            } => {
                let cfg = resolve(None, cli.config.as_deref(), env_seed, &overrides, err)?;
                cmd_index(&corpus, &dir, embeddings_dump.as_deref(), cfg, err)
            }
            Command::Search {
                index,
                query,
                qid,
                overrides,
            } => {
                let cfg = resolve(Some(&index), cli.config.as_deref(), env_seed, &overrides, err)?;
                cmd_search(&index, &query, &qid, &cfg, out, err)
            }
            Command::Sweep {
                index,
                queries,
                qrels,
                out: csv,
                strategies,
                p_values,
                alpha,
                overrides,
            } => {
                let cfg = resolve(Some(&index), cli.config.as_deref(), env_seed, &overrides, err)?;
                let strategies = strategies
                    .iter()
                    .map(|s| s.parse())
                    .collect::<Result<Vec<Strategy>>>()?;
                let p_values = p_values.unwrap_or_else(|| (1..=cfg.q_len).collect());
                cmd_sweep(&index, &queries, &qrels, &csv, &strategies, &p_values, alpha, &cfg, err)
            }
            Command::Eval { run, qrels, per_query } => cmd_eval(&run, &qrels, per_query, out),
        }
    };
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config(format!("thread pool: {e}")))?
            .install(job),
        None => job(),
    }
}

/// defaults < index config < --config file < MVE_SEED < flags
fn resolve(
    index_dir: Option<&Path>,
    config_file: Option<&Path>,
    env_seed: Option<&str>,
    overrides: &Overrides,
    err: &mut dyn Write,
) -> Result<EngineConfig> {
    let mut layers = Vec::new();
    if let Some(dir) = index_dir {
        let path = dir.join(CONFIG_FILE);
        if path.exists() {
            layers.push(ConfigLayer::from_file(&path)?);
        }
    }
    if let Some(path) = config_file {
        layers.push(ConfigLayer::from_file(path)?);
    }
    layers.push(ConfigLayer::from_seed_env(env_seed)?);
    layers.push(overrides.layer()?);
    let cfg = EngineConfig::resolve(&layers)?;
    writeln!(err, "# effective config")?;
    write!(err, "{}", cfg.to_toml())?;
    Ok(cfg)
}

fn read_file(path: &Path) -> Result<BufReader<fs::File>> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::input(format!("{}: {e}", path.display())))
}

/// Writes index, lexicon and config into `dir`.
pub fn save_engine(engine: &Engine, cfg: &EngineConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    save_index(engine.index(), &dir.join(INDEX_FILE))?;
    let mut lex = io::BufWriter::new(fs::File::create(dir.join(LEXICON_FILE))?);
    engine.lexicon().write_tsv(&mut lex)?;
    lex.flush()?;
    let mut saved = cfg.clone();
    saved.dim = engine.index().dim();
    saved.n_list = Some(engine.index().n_list());
    // n_probe is only checked against the real n_list at search time; keep
    // the saved default usable on small indexes
    saved.n_probe = saved.n_probe.min(engine.index().n_list());
    fs::write(dir.join(CONFIG_FILE), saved.to_toml())?;
    Ok(())
}

pub fn load_engine(dir: &Path, cfg: &EngineConfig) -> Result<Engine> {
    let path = dir.join(INDEX_FILE);
    if !path.exists() {
        return Err(Error::input(format!("{} does not exist", path.display())));
    }
    let index = load_index(&path)?;
    let lexicon = Lexicon::read_tsv(read_file(&dir.join(LEXICON_FILE))?, index.store().num_docs() as u64)?;
    let embedder = Embedder::new(cfg.dim, cfg.seed)?;
    Engine::new(index, lexicon, embedder)
}

fn cmd_index(corpus: &Path, dir: &Path, dump: Option<&Path>, mut cfg: EngineConfig, err: &mut dyn Write) -> Result<()> {
    let docs = read_corpus(read_file(corpus)?)?;
    let engine = match dump {
        Some(path) => {
            let (dim, dumped) = read_embedding_dump(path)?;
            cfg.dim = dim;
            let embedder = Embedder::new(dim, cfg.seed)?;
            Engine::from_dump(&docs, dim, dumped, embedder, &cfg.index_params())?
        }
        None => {
            let embedder = Embedder::new(cfg.dim, cfg.seed)?;
            Engine::from_corpus(&docs, embedder, &cfg.index_params())?
        }
    };
    save_engine(&engine, &cfg, dir)?;
    writeln!(
        err,
        "indexed {} documents, {} embeddings, {} lists into {}",
        engine.store().num_docs(),
        engine.store().num_embeddings(),
        engine.index().n_list(),
        dir.display()
    )?;
    Ok(())
}

fn cmd_search(
    dir: &Path,
    query: &str,
    qid: &str,
    cfg: &EngineConfig,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<()> {
    let engine = load_engine(dir, cfg)?;
    let outcome = engine.search(query, cfg.q_len, &cfg.pruning(), cfg.k)?;
    write_run(&mut *out, qid, &outcome.ranking, "mve")?;
    writeln!(err, "candidates: {}", outcome.candidates.len())?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    dir: &Path,
    queries: &Path,
    qrels: &Path,
    csv: &Path,
    strategies: &[Strategy],
    p_values: &[usize],
    alpha: f64,
    cfg: &EngineConfig,
    err: &mut dyn Write,
) -> Result<()> {
    let engine = load_engine(dir, cfg)?;
    let queries = read_queries(read_file(queries)?)?;
    let qrels = Qrels::read(read_file(qrels)?)?;
    let settings = SweepSettings {
        q_len: cfg.q_len,
        k_prime: cfg.k_prime,
        n_probe: cfg.n_probe,
        k: cfg.k,
        alpha,
    };
    let table = sweep(&queries, &qrels, &engine, strategies, p_values, &settings)?;
    fs::write(csv, table.to_csv())?;
    writeln!(
        err,
        "swept {} rows over {} queries; baseline mrr10={:.4} mean_docs={:.1}",
        table.rows.len(),
        table.num_queries,
        table.baseline.mrr10,
        table.baseline.mean_docs
    )?;
    Ok(())
}

fn cmd_eval(run: &Path, qrels: &Path, per_query: bool, out: &mut dyn Write) -> Result<()> {
    let runs = read_run(read_file(run)?)?;
    let qrels = Qrels::read(read_file(qrels)?)?;
    let mut qids: Vec<&str> = runs.keys().map(String::as_str).chain(qrels.query_ids()).collect();
    qids.sort_unstable();
    qids.dedup();
    if qids.is_empty() {
        return Err(Error::input("run and qrels are both empty"));
    }
    let empty = Default::default();
    let mut totals = [0.0f64; 3];
    for qid in &qids {
        let ranking = runs.get(*qid).unwrap_or(&empty);
        let j = qrels.judgments(qid);
        let values = [
            ndcg_at(ranking, j, 10),
            average_precision(ranking, j),
            rr_at(ranking, j, 10),
        ];
        for (t, v) in totals.iter_mut().zip(values) {
            *t += v;
        }
        if per_query {
            for (name, v) in MEASURES.iter().zip(values) {
                writeln!(out, "{name}\t{qid}\t{v:.4}")?;
            }
        }
    }
    for (name, t) in MEASURES.iter().zip(totals) {
        writeln!(out, "{name}\tall\t{:.4}", t / qids.len() as f64)?;
    }
    writeln!(out, "num_q\tall\t{}", qids.len())?;
    Ok(())
}

const MEASURES: [&str; 3] = ["ndcg_cut_10", "map", "recip_rank_10"];
