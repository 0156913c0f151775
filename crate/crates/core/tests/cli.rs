use std::fs;
use std::io::BufReader;
use std::path::Path;
use std::process::{Command, Output};

use mve::cli::load_engine;
use mve::config::EngineConfig;
use mve::corpus::read_queries;
use mve::eval::{sweep, Qrels, SweepSettings};
use mve::retrieval::Strategy;
use mve::synthetic::{planted_corpus, PlantedParams};

fn mve(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mve"))
        .args(args)
        .env_remove("MVE_SEED")
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn three_doc_index(dir: &Path) -> std::path::PathBuf {
    let corpus = dir.join("corpus.tsv");
    fs::write(
        &corpus,
        "doc1\tthe quick brown fox\ndoc2\tzebras have black and white stripes\ndoc3\ta lazy dog sleeps\n",
    )
    .unwrap();
    let index = dir.join("idx");
    let out = mve(&[
        "index",
        "--corpus",
        path(&corpus),
        "--out",
        path(&index),
        "--n-list",
        "2",
        "--sample-fraction",
        "1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    index
}

#[test]
fn index_then_search_finds_matching_doc() {
    let dir = tempfile::tempdir().unwrap();
    let index = three_doc_index(dir.path());
    for f in ["index.mvix", "lexicon.tsv", "config.toml"] {
        assert!(index.join(f).exists(), "{f}");
    }
    let out = mve(&[
        "search",
        "--index",
        path(&index),
        "--query",
        "zebra stripes",
        "--n-probe",
        "2",
        "--qid",
        "7",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let first: Vec<&str> = stdout.lines().next().unwrap().split(' ').collect();
    assert_eq!(&first[..4], ["7", "Q0", "doc2", "1"]);
    assert_eq!(first[5], "mve");
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("candidates: "), "{stderr}");
    assert!(stderr.contains("n_probe = 2"), "{stderr}");
}

#[test]
fn p_zero_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let index = three_doc_index(dir.path());
    let out = mve(&["search", "--index", path(&index), "--query", "zebra", "--p", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("p >= 1"), "{stderr}");
}

#[test]
fn corrupt_index_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let index = three_doc_index(dir.path());
    let file = index.join("index.mvix");
    let mut bytes = fs::read(&file).unwrap();
    bytes.truncate(bytes.len() / 2);
    fs::write(&file, bytes).unwrap();
    let out = mve(&["search", "--index", path(&index), "--query", "zebra"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("corrupt index"));
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(mve(&["search"]).status.code(), Some(1));
    assert_eq!(mve(&["frobnicate"]).status.code(), Some(1));
    let help = mve(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("sweep"));
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.tsv");
    let out = mve(&["index", "--corpus", path(&missing), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let index = three_doc_index(dir.path());
    let cfg = dir.path().join("extra.toml");
    fs::write(&cfg, "k = 2\nseed = 5\n").unwrap();
    let run = |extra: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_mve"));
        cmd.args([
            "--config",
            path(&cfg),
            "search",
            "--index",
            path(&index),
            "--query",
            "fox",
        ]);
        cmd.args(extra);
        match env {
            Some(v) => cmd.env("MVE_SEED", v),
            None => cmd.env_remove("MVE_SEED"),
        };
        let out = cmd.output().unwrap();
        assert!(out.status.success());
        (
            String::from_utf8(out.stdout).unwrap(),
            String::from_utf8(out.stderr).unwrap(),
        )
    };
    let (stdout, stderr) = run(&[], None);
    assert_eq!(stdout.lines().count(), 2);
    assert!(stderr.contains("seed = 5"));
    assert!(run(&[], Some("9")).1.contains("seed = 9"));
    assert!(run(&["--seed", "11"], Some("9")).1.contains("seed = 11"));
    assert_eq!(run(&["--k", "3"], None).0.lines().count(), 3);
}

#[test]
fn sweep_csv_matches_library_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = planted_corpus(&PlantedParams {
        num_docs: 300,
        num_queries: 8,
        vocab_size: 600,
        query_rank_band: (10, 150),
        ..PlantedParams::default()
    })
    .unwrap();
    corpus.write_files(dir.path()).unwrap();
    let index = dir.path().join("idx");
    let common = ["--dim", "16", "--q-len", "10", "--k-prime", "20", "--n-probe", "4"];
    let corpus_path = dir.path().join("corpus.tsv");
    let mut args = vec!["index", "--corpus", path(&corpus_path), "--out", path(&index)];
    args.extend(common);
    let out = mve(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = dir.path().join("sweep.csv");
    let out = mve(&[
        "sweep",
        "--index",
        path(&index),
        "--queries",
        path(&dir.path().join("queries.tsv")),
        "--qrels",
        path(&dir.path().join("qrels.txt")),
        "--out",
        path(&csv),
        "--strategies",
        "first,icf,idf",
        "--p-values",
        "1,2,3,10",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let cfg = EngineConfig::from_toml(&fs::read_to_string(index.join("config.toml")).unwrap()).unwrap();
    let engine = load_engine(&index, &cfg).unwrap();
    let queries = read_queries(BufReader::new(fs::File::open(dir.path().join("queries.tsv")).unwrap())).unwrap();
    let qrels = Qrels::read(BufReader::new(fs::File::open(dir.path().join("qrels.txt")).unwrap())).unwrap();
    let table = sweep(
        &queries,
        &qrels,
        &engine,
        &[Strategy::First, Strategy::Icf, Strategy::Idf],
        &[1, 2, 3, 10],
        &SweepSettings {
            q_len: 10,
            k_prime: 20,
            n_probe: 4,
            k: cfg.k,
            alpha: 0.05,
        },
    )
    .unwrap();
    assert_eq!(fs::read_to_string(&csv).unwrap(), table.to_csv());
    assert_eq!(table.to_csv().lines().count(), 13);
}

#[test]
fn eval_prints_means_over_queries() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run.txt");
    let qrels = dir.path().join("qrels.txt");
    fs::write(&run, "q1 Q0 a 1 2.0 x\nq1 Q0 b 2 1.0 x\nq2 Q0 c 1 1.0 x\n").unwrap();
    fs::write(&qrels, "q1 0 b 1\nq2 0 c 2\nq3 0 z 1\n").unwrap();
    let a = mve(&["eval", "--run", path(&run), "--qrels", path(&qrels)]);
    let b = mve(&["--threads", "3", "eval", "--run", path(&run), "--qrels", path(&qrels)]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    // q1 rr 0.5, q2 rr 1, q3 rr 0
    assert!(text.contains("recip_rank_10\tall\t0.5000"), "{text}");
    assert!(text.contains("num_q\tall\t3"), "{text}");
}

#[test]
fn index_from_embedding_dump() {
    use mve::index::{load_index, write_embedding_dump, DumpedDocument};
    use mve::Embedding;

    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.tsv");
    fs::write(&corpus, "a\tred apple\nb\tgreen leaf tree\n").unwrap();
    let docs: Vec<DumpedDocument> = [("a", 2), ("b", 3)]
        .iter()
        .enumerate()
        .map(|(i, &(name, n))| DumpedDocument {
            doc_id: name.to_string(),
            embeddings: (0..n)
                .map(|j| {
                    let mut v = vec![0.0f32; 5];
                    v[(i + j) % 5] = 1.0;
                    Embedding::new(v).unwrap()
                })
                .collect(),
        })
        .collect();
    let dump = dir.path().join("emb.mved");
    write_embedding_dump(&dump, 5, &docs).unwrap();
    let index = dir.path().join("idx");
    let out = mve(&[
        "index",
        "--corpus",
        path(&corpus),
        "--out",
        path(&index),
        "--embeddings-dump",
        path(&dump),
        "--n-list",
        "1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let loaded = load_index(&index.join("index.mvix")).unwrap();
    assert_eq!(loaded.dim(), 5);
    assert_eq!(loaded.store().embedding(3), docs[1].embeddings[1].as_slice());
    let cfg = fs::read_to_string(index.join("config.toml")).unwrap();
    assert!(cfg.contains("dim = 5"), "{cfg}");
    let out = mve(&["search", "--index", path(&index), "--query", "apple"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
