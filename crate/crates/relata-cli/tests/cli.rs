//! End-to-end checks of the command-line interface: exit codes, fixture
//! outputs, determinism, and config-file handling.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use relata::lra::LraModel;

fn relata(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relata"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, content: &str) {
    fs::write(dir.join(name), content).unwrap();
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[test]
fn extract_matches_hand_traced_fixture() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "corpus.txt",
        "a dog is an animal .\nthe animal likes the dog\n",
    );
    write(dir.path(), "pairs.txt", "dog:animal\n");
    let out = relata(
        dir.path(),
        &[
            "extract",
            "corpus.txt",
            "--pairs",
            "pairs.txt",
            "--out",
            "triples.tsv",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("sentences=2"), "{stdout}");
    assert!(stdout.contains("window_matches=2"), "{stdout}");
    assert_eq!(
        data_lines(&dir.path().join("triples.tsv")),
        vec![
            "animal\tdog\tlikes the\t1".to_string(),
            "dog\tanimal\tis an\t1".to_string(),
        ]
    );
}

#[test]
fn artifacts_embed_tool_version_and_resolved_settings() {
    let dir = tempfile::tempdir().unwrap();
    toy_nlra_inputs(dir.path());
    relata(
        dir.path(),
        &["extract", "corpus.txt", "--pairs", "pairs.txt", "--out", "t.tsv"],
    );
    let tsv = fs::read_to_string(dir.path().join("t.tsv")).unwrap();
    assert!(tsv.contains("# tool_version="), "{tsv}");
    assert!(tsv.contains("# max-len=3"), "{tsv}");

    let out = relata(
        dir.path(),
        &[
            "train-nlra",
            "--triples",
            "t.tsv",
            "--embeddings",
            "vecs.txt",
            "--epochs",
            "2",
            "--hidden",
            "4",
            "--batch",
            "4",
            "--out",
            "m.nlra",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, meta) = relata::nlra::NlraModel::load(dir.path().join("m.nlra")).unwrap();
    assert!(meta.contains("tool_version="), "{meta}");
    assert!(meta.contains("epochs=2"), "{meta}");
    assert!(meta.contains("seed=42"), "{meta}"); // default echoed too
}

#[test]
fn extract_rejects_empty_pair_file_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "corpus.txt", "a dog is an animal\n");
    write(dir.path(), "pairs.txt", "# nothing here\n");
    let out = relata(
        dir.path(),
        &[
            "extract",
            "corpus.txt",
            "--pairs",
            "pairs.txt",
            "--out",
            "t.tsv",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("empty target pair set"), "{stderr}");
}

#[test]
fn extract_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "corpus.txt",
        "a dog is an animal\nthe wheel of the car\nanimal such as a dog\n",
    );
    write(dir.path(), "pairs.txt", "dog:animal\nwheel:car\n");
    for out_name in ["a.tsv", "b.tsv"] {
        let out = relata(
            dir.path(),
            &[
                "extract",
                "corpus.txt",
                "--pairs",
                "pairs.txt",
                "--out",
                out_name,
            ],
        );
        assert!(out.status.success());
    }
    assert_eq!(
        fs::read(dir.path().join("a.tsv")).unwrap(),
        fs::read(dir.path().join("b.tsv")).unwrap()
    );
}

/// Two pairs sharing the wildcard feature but with distinct literal
/// patterns: the PPMI rows are (ln 2, ln 4) on overlapping/disjoint
/// columns, so cosine(pair0, pair1) = ln²2 / (5 ln²2) = 0.2 exactly.
#[test]
fn train_lra_reproduces_hand_checked_cosines() {
    let dir = tempfile::tempdir().unwrap();
    let mut corpus = String::new();
    for _ in 0..4 {
        corpus.push_str("the dog is animal\n");
        corpus.push_str("the cat of beast\n");
    }
    write(dir.path(), "corpus.txt", &corpus);
    write(dir.path(), "pairs.txt", "dog:animal\ncat:beast\n");
    let out = relata(
        dir.path(),
        &[
            "extract",
            "corpus.txt",
            "--pairs",
            "pairs.txt",
            "--out",
            "triples.tsv",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for model_out in ["model.lra", "model2.lra"] {
        let out = relata(
            dir.path(),
            &[
                "train-lra",
                "--triples",
                "triples.tsv",
                "--pairs",
                "pairs.txt",
                "--dim",
                "4",
                "--out",
                model_out,
            ],
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    // The seeded SVD makes reruns byte-identical.
    assert_eq!(
        fs::read(dir.path().join("model.lra")).unwrap(),
        fs::read(dir.path().join("model2.lra")).unwrap()
    );
    let (model, _) = LraModel::load(dir.path().join("model.lra")).unwrap();
    let self_cos = model.score(("dog", "animal"), ("dog", "animal"));
    let cross = model.score(("dog", "animal"), ("cat", "beast"));
    assert!((self_cos - 1.0).abs() < 1e-5, "{self_cos}");
    assert!((cross - 0.2).abs() < 1e-4, "{cross}");
}

#[test]
fn train_lra_clamps_excessive_dimension() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "corpus.txt", "a dog is an animal\n");
    write(dir.path(), "pairs.txt", "dog:animal\n");
    relata(
        dir.path(),
        &["extract", "corpus.txt", "--pairs", "pairs.txt", "--out", "t.tsv"],
    );
    let out = relata(
        dir.path(),
        &[
            "train-lra",
            "--triples",
            "t.tsv",
            "--pairs",
            "pairs.txt",
            "--dim",
            "300",
            "--out",
            "m.lra",
        ],
    );
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("clamped=true"), "{stdout}");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("clamped"), "{stderr}");
}

#[test]
fn train_nlra_missing_embeddings_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "corpus.txt", "a dog is an animal\n");
    write(dir.path(), "pairs.txt", "dog:animal\n");
    relata(
        dir.path(),
        &["extract", "corpus.txt", "--pairs", "pairs.txt", "--out", "t.tsv"],
    );
    let out = relata(
        dir.path(),
        &[
            "train-nlra",
            "--triples",
            "t.tsv",
            "--embeddings",
            "missing.txt",
            "--out",
            "m.nlra",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

fn toy_nlra_inputs(dir: &Path) {
    write(
        dir,
        "corpus.txt",
        "a dog is an animal\nanimal such as a dog\nthe wheel of the car\n",
    );
    write(dir, "pairs.txt", "dog:animal\nwheel:car\n");
    write(
        dir,
        "vecs.txt",
        "dog 0.1 0.6 -0.2 0.4\nanimal 0.2 0.5 -0.1 0.3\nwheel -0.5 0.1 0.7 0.0\n\
         car -0.4 0.2 0.8 0.1\nis 0.0 0.1 0.0 0.2\nan 0.1 0.0 0.1 0.0\nof 0.2 0.2 0.0 0.1\n\
         the 0.0 0.0 0.1 0.1\nsuch 0.3 0.1 0.2 0.0\nas 0.1 0.3 0.0 0.2\na 0.0 0.2 0.1 0.0\n",
    );
}

#[test]
fn train_nlra_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    toy_nlra_inputs(dir.path());
    relata(
        dir.path(),
        &["extract", "corpus.txt", "--pairs", "pairs.txt", "--out", "t.tsv"],
    );
    let mut lines = Vec::new();
    for out_name in ["m1.nlra", "m2.nlra"] {
        let out = relata(
            dir.path(),
            &[
                "train-nlra",
                "--triples",
                "t.tsv",
                "--embeddings",
                "vecs.txt",
                "--epochs",
                "4",
                "--hidden",
                "4",
                "--batch",
                "4",
                "--seed",
                "9",
                "--out",
                out_name,
            ],
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        lines.push(String::from_utf8_lossy(&out.stdout).to_string());
    }
    assert_eq!(lines[0], lines[1]);
    assert!(lines[0].contains("final_loss="), "{}", lines[0]);
    assert_eq!(
        fs::read(dir.path().join("m1.nlra")).unwrap(),
        fs::read(dir.path().join("m2.nlra")).unwrap()
    );
}

#[test]
fn eval_runs_models_and_combination_on_a_fixture() {
    let dir = tempfile::tempdir().unwrap();
    toy_nlra_inputs(dir.path());
    relata(
        dir.path(),
        &["extract", "corpus.txt", "--pairs", "pairs.txt", "--out", "t.tsv"],
    );
    relata(
        dir.path(),
        &[
            "train-nlra",
            "--triples",
            "t.tsv",
            "--embeddings",
            "vecs.txt",
            "--epochs",
            "3",
            "--hidden",
            "4",
            "--batch",
            "4",
            "--seed",
            "9",
            "--out",
            "m.nlra",
        ],
    );
    fs::create_dir_all(dir.path().join("ds/rel-1")).unwrap();
    write(dir.path(), "ds/manifest.tsv", "rel-1\tPart-Whole\n");
    write(dir.path(), "ds/rel-1/prototypes.txt", "wheel:car\n");
    write(
        dir.path(),
        "ds/rel-1/targets.txt",
        "wheel:car\t50\ndog:animal\t10\nanimal:dog\t5\nghost:story\t-20\n",
    );
    write(
        dir.path(),
        "ds/rel-1/maxdiff.txt",
        "wheel:car|dog:animal|animal:dog|ghost:story\twheel:car\tghost:story\n",
    );
    let out = relata(
        dir.path(),
        &[
            "eval",
            "--dataset",
            "ds",
            "--model",
            "vecoff=vecs.txt",
            "--model",
            "nlra=m.nlra",
            "--combine",
            "nlra+vecoff",
            "--out",
            "report.tsv",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    for name in ["scorer: vecoff", "scorer: nlra", "scorer: nlra+vecoff"] {
        assert!(stdout.contains(name), "{stdout}");
    }
    // ghost:story is out of vocabulary for every scorer.
    assert!(stdout.contains("oov_pairs: 1"), "{stdout}");
    let reports = relata::eval::parse_tsv(&fs::read_to_string(dir.path().join("report.tsv")).unwrap()).unwrap();
    assert_eq!(reports.len(), 3);
    assert_eq!(reports[2].scorer, "nlra+vecoff");
}

#[test]
fn config_file_supplies_defaults_and_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "corpus.txt", "a dog is an animal\n");
    write(dir.path(), "pairs.txt", "dog:animal\n");
    write(
        dir.path(),
        "good.conf",
        "pairs=pairs.txt\nout=t.tsv\nmax-len=2\n",
    );
    let out = relata(
        dir.path(),
        &["--config", "good.conf", "extract", "corpus.txt"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // max-len=2 excludes the 3-token window, so only "is an" survives; a
    // flag then overrides the file value.
    assert_eq!(data_lines(&dir.path().join("t.tsv")).len(), 1);

    write(dir.path(), "bad.conf", "pairs=pairs.txt\nout=t.tsv\nzingers=4\n");
    let out = relata(
        dir.path(),
        &["--config", "bad.conf", "extract", "corpus.txt"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("zingers"),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn flags_override_config_file_values() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "corpus.txt", "a dog is an animal\n");
    write(dir.path(), "pairs.txt", "dog:animal\n");
    write(dir.path(), "c.conf", "pairs=pairs.txt\nout=t.tsv\nmax-len=1\n");
    let out = relata(
        dir.path(),
        &[
            "--config",
            "c.conf",
            "extract",
            "corpus.txt",
            "--max-len",
            "3",
        ],
    );
    assert!(out.status.success());
    assert_eq!(data_lines(&dir.path().join("t.tsv")).len(), 1); // "is an" window
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("window_matches=1"), "{stdout}");
}
