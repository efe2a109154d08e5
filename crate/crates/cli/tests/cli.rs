//! End-to-end tests of the binary: pipeline wiring, artifact formats,
//! manifests, exit codes, and reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_poincare-glove"))
}

fn run_ok(args: &[&str], dir: &Path) -> Output {
    let out = bin().args(args).current_dir(dir).output().unwrap();
    assert!(
        out.status.success(),
        "command {:?} failed:\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write_corpus(path: &Path) {
    // A tiny clustered corpus: words within a group co-occur heavily.
    let mut lines = Vec::new();
    for i in 0..120 {
        let g = i % 3;
        let words: Vec<String> = (0..6)
            .map(|j| format!("g{g}w{}", (i * 7 + j * 11) % 5))
            .collect();
        lines.push(words.join(" "));
    }
    // A handful of shared function words.
    for i in 0..60 {
        lines.push(format!("the of g{}w0 the g{}w1 of", i % 3, (i + 1) % 3));
    }
    std::fs::write(path, lines.join("\n")).unwrap();
}

struct Pipeline {
    dir: tempfile::TempDir,
}

impl Pipeline {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn p(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }
}

fn build_pipeline() -> Pipeline {
    let p = Pipeline {
        dir: tempfile::tempdir().unwrap(),
    };
    write_corpus(&p.path("corpus.txt"));
    run_ok(
        &[
            "vocab",
            "--input",
            &p.p("corpus.txt"),
            "--min-count",
            "2",
            "--output",
            &p.p("vocab.tsv"),
        ],
        p.dir.path(),
    );
    run_ok(
        &[
            "cooccur",
            "--input",
            &p.p("corpus.txt"),
            "--vocab",
            &p.p("vocab.tsv"),
            "--window",
            "8",
            "--output",
            &p.p("x.hgco"),
        ],
        p.dir.path(),
    );
    run_ok(
        &[
            "train",
            "--cooc",
            &p.p("x.hgco"),
            "--vocab",
            &p.p("vocab.tsv"),
            "--factors",
            "3",
            "--dim",
            "2",
            "--h",
            "square",
            "--lr",
            "0.05",
            "--epochs",
            "10",
            "--optimizer",
            "radagrad",
            "--seed",
            "5",
            "--deterministic",
            "--output",
            &p.p("model.hgmd"),
        ],
        p.dir.path(),
    );
    p
}

#[test]
fn pipeline_vocab_cooccur_train_eval() {
    let p = build_pipeline();

    // Vocab file: word<TAB>count, descending counts.
    let vocab = std::fs::read_to_string(p.path("vocab.tsv")).unwrap();
    let counts: Vec<u64> = vocab
        .lines()
        .map(|l| l.split('\t').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(counts.windows(2).all(|w| w[0] >= w[1]));

    // Binary co-occurrence format: magic + version + V header.
    let cooc = std::fs::read(p.path("x.hgco")).unwrap();
    assert_eq!(&cooc[0..4], b"HGCO");
    assert_eq!((cooc.len() - 12) % 16, 0);

    // Similarity evaluation emits the summary on stdout.
    std::fs::write(
        p.path("sim.tsv"),
        "g0w0\tg0w1\t9.0\ng0w0\tg1w1\t2.0\ng2w0\tg2w1\t8.0\nzzz\tg0w0\t5.0\n",
    )
    .unwrap();
    let out = run_ok(
        &[
            "eval-sim",
            "--model",
            &p.p("model.hgmd"),
            "--vocab",
            &p.p("vocab.tsv"),
            "--dataset",
            &p.p("sim.tsv"),
            "--details",
            &p.p("sim.jsonl"),
            "--output",
            &p.p("sim.out.tsv"),
        ],
        p.dir.path(),
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("spearman\t"), "stdout: {stdout}");
    assert!(stdout.contains("dropped\t1"), "stdout: {stdout}");
    assert_eq!(std::fs::read_to_string(p.path("sim.out.tsv")).unwrap(), stdout);

    // The JSONL detail log has one record per dataset row.
    let details = std::fs::read_to_string(p.path("sim.jsonl")).unwrap();
    let rows: Vec<serde_json::Value> = details
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[3]["used"], serde_json::Value::Bool(false));

    // Manifests parse and carry input digests.
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(p.path("model.hgmd.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["subcommand"], "train");
    assert_eq!(manifest["seed"], 5);
    let inputs = manifest["inputs"].as_array().unwrap();
    assert!(inputs.len() >= 2);
    assert_eq!(inputs[0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn analogy_and_cross_validation() {
    let p = build_pipeline();
    std::fs::write(
        p.path("analogy.txt"),
        ": group-sem\ng0w0 g0w1 g1w0 g1w1\ng1w0 g1w1 g2w0 g2w1\n: gram1-syn\ng0w0 g1w0 g0w1 g1w1\ng0w2 g0w3 g2w2 g2w3\nmissing g0w0 g0w1 g0w2\n",
    )
    .unwrap();
    let out = run_ok(
        &[
            "eval-analogy",
            "--model",
            &p.p("model.hgmd"),
            "--vocab",
            &p.p("vocab.tsv"),
            "--dataset",
            &p.p("analogy.txt"),
            "--t",
            "0.3",
            "--metric",
            "poincare",
        ],
        p.dir.path(),
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("semantic\t"), "stdout: {stdout}");
    assert!(stdout.contains("dropped\t1"), "stdout: {stdout}");

    let out = run_ok(
        &[
            "eval-analogy",
            "--model",
            &p.p("model.hgmd"),
            "--vocab",
            &p.p("vocab.tsv"),
            "--dataset",
            &p.p("analogy.txt"),
            "--cross-validate",
            "--seed",
            "11",
        ],
        p.dir.path(),
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 2, "stdout: {stdout}");
    assert!(stdout.lines().all(|l| l.starts_with("fold\t")));

    // 3COSADD path.
    let out = run_ok(
        &[
            "eval-analogy",
            "--model",
            &p.p("model.hgmd"),
            "--vocab",
            &p.p("vocab.tsv"),
            "--dataset",
            &p.p("analogy.txt"),
            "--method",
            "3cosadd",
        ],
        p.dir.path(),
    );
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("semantic\t"));
}

#[test]
fn hypernymy_export_and_wordlists() {
    let p = build_pipeline();
    std::fs::write(p.path("generic.txt"), "the\nof\n").unwrap();
    std::fs::write(p.path("specific.txt"), "g0w3\ng1w4\ng2w3\nnotinvocab\n").unwrap();
    std::fs::write(
        p.path("hyperlex.tsv"),
        "g0w0\tthe\t8.5\ng1w1\tof\t7.0\ng2w2\tthe\t6.0\ng0w1\tg1w2\t1.5\n",
    )
    .unwrap();
    let out = run_ok(
        &[
            "eval-hypernymy",
            "--model",
            &p.p("model.hgmd"),
            "--vocab",
            &p.p("vocab.tsv"),
            "--dataset",
            &p.p("hyperlex.tsv"),
            "--task",
            "hyperlex",
            "--generic",
            &p.p("generic.txt"),
            "--specific",
            &p.p("specific.txt"),
        ],
        p.dir.path(),
    );
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("spearman\t"));

    std::fs::write(
        p.path("wbless.tsv"),
        (0..40)
            .map(|i| {
                let g = i % 3;
                if i % 2 == 0 {
                    format!("g{g}w{}\tthe\t1", i % 5)
                } else {
                    format!("the\tg{g}w{}\t0", i % 5)
                }
            })
            .collect::<Vec<_>>()
            .join("\n"),
    )
    .unwrap();
    let out = run_ok(
        &[
            "eval-hypernymy",
            "--model",
            &p.p("model.hgmd"),
            "--vocab",
            &p.p("vocab.tsv"),
            "--dataset",
            &p.p("wbless.tsv"),
            "--task",
            "wbless",
            "--unsupervised-n",
            "3",
            "--holdout",
            "0.1",
            "--repeats",
            "50",
            "--seed",
            "3",
        ],
        p.dir.path(),
    );
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("accuracy\t"));

    // Gaussian export: one row per vocab word, 1 + 2p tab-separated fields.
    run_ok(
        &[
            "export-gaussian",
            "--model",
            &p.p("model.hgmd"),
            "--vocab",
            &p.p("vocab.tsv"),
            "--unsupervised-n",
            "3",
            "--output",
            &p.p("gauss.tsv"),
        ],
        p.dir.path(),
    );
    let gauss = std::fs::read_to_string(p.path("gauss.tsv")).unwrap();
    let vocab_len = std::fs::read_to_string(p.path("vocab.tsv")).unwrap().lines().count();
    assert_eq!(gauss.lines().count(), vocab_len);
    for line in gauss.lines() {
        assert_eq!(line.split('\t').count(), 1 + 2 * 3);
        for sigma in line.split('\t').skip(2).step_by(2) {
            assert!(sigma.parse::<f64>().unwrap() > 0.0);
        }
    }
}

#[test]
fn export_text_round_trip_and_headers() {
    let p = build_pipeline();
    run_ok(
        &[
            "export-text",
            "--model",
            &p.p("model.hgmd"),
            "--vocab",
            &p.p("vocab.tsv"),
            "--output",
            &p.p("model.txt"),
        ],
        p.dir.path(),
    );
    let text = std::fs::read_to_string(p.path("model.txt")).unwrap();
    assert!(text.starts_with("poincare-glove p=3 k=2 h=square\n"), "{text}");
    assert!(p.path("model.context.txt").exists());

    let vocab_len = std::fs::read_to_string(p.path("vocab.tsv")).unwrap().lines().count();
    assert_eq!(text.lines().count(), 1 + vocab_len);
    // word + p·k coordinates + bias per row.
    let row = text.lines().nth(1).unwrap();
    assert_eq!(row.split(' ').count(), 1 + 6 + 1);
}

#[test]
fn init_trick_through_cli() {
    let p = build_pipeline();
    // Restricted vocabulary: most frequent 6 words.
    let full = std::fs::read_to_string(p.path("vocab.tsv")).unwrap();
    let restricted: String = full.lines().take(6).collect::<Vec<_>>().join("\n");
    std::fs::write(p.path("vocab6.tsv"), format!("{restricted}\n")).unwrap();
    run_ok(
        &[
            "cooccur",
            "--input",
            &p.p("corpus.txt"),
            "--vocab",
            &p.p("vocab6.tsv"),
            "--window",
            "8",
            "--output",
            &p.p("x6.hgco"),
        ],
        p.dir.path(),
    );
    run_ok(
        &[
            "train",
            "--cooc",
            &p.p("x6.hgco"),
            "--vocab",
            &p.p("vocab6.tsv"),
            "--factors",
            "3",
            "--dim",
            "2",
            "--h",
            "square",
            "--epochs",
            "5",
            "--seed",
            "9",
            "--deterministic",
            "--output",
            &p.p("model6.hgmd"),
        ],
        p.dir.path(),
    );
    run_ok(
        &[
            "train",
            "--cooc",
            &p.p("x.hgco"),
            "--vocab",
            &p.p("vocab.tsv"),
            "--factors",
            "3",
            "--dim",
            "2",
            "--h",
            "square",
            "--epochs",
            "5",
            "--seed",
            "9",
            "--deterministic",
            "--init-model",
            &p.p("model6.hgmd"),
            "--init-vocab",
            &p.p("vocab6.tsv"),
            "--output",
            &p.p("model_init.hgmd"),
        ],
        p.dir.path(),
    );
    assert!(p.path("model_init.hgmd").exists());

    // Mismatched h in the warm-start model is rejected as a data error.
    let out = bin()
        .args([
            "train",
            "--cooc",
            &p.p("x.hgco"),
            "--vocab",
            &p.p("vocab.tsv"),
            "--factors",
            "3",
            "--dim",
            "2",
            "--h",
            "cosh2",
            "--epochs",
            "2",
            "--init-model",
            &p.p("model6.hgmd"),
            "--init-vocab",
            &p.p("vocab6.tsv"),
            "--output",
            &p.p("bad.hgmd"),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("header mismatch"));
}

#[test]
fn deterministic_reruns_are_bitwise_identical() {
    let p = build_pipeline();
    run_ok(
        &[
            "train",
            "--cooc",
            &p.p("x.hgco"),
            "--vocab",
            &p.p("vocab.tsv"),
            "--factors",
            "3",
            "--dim",
            "2",
            "--h",
            "square",
            "--lr",
            "0.05",
            "--epochs",
            "10",
            "--seed",
            "5",
            "--deterministic",
            "--output",
            &p.p("model2.hgmd"),
        ],
        p.dir.path(),
    );
    assert_eq!(
        std::fs::read(p.path("model.hgmd")).unwrap(),
        std::fs::read(p.path("model2.hgmd")).unwrap()
    );

    let run_delta = || {
        let out = run_ok(
            &[
                "delta-hyp",
                "--cooc",
                &p.p("x.hgco"),
                "--h",
                "cosh2",
                "--tuples",
                "5000",
                "--pairs",
                "5000",
                "--seed",
                "17",
                "--smoothing",
                "plus-one",
            ],
            p.dir.path(),
        );
        String::from_utf8(out.stdout).unwrap()
    };
    let d1 = run_delta();
    assert_eq!(d1, run_delta());
    assert_eq!(d1.split('\t').count(), 5, "row: {d1}");
    assert!(d1.starts_with("cosh2\t"));
}

#[test]
fn exit_codes() {
    let p = build_pipeline();

    // Unknown flag: usage error, exit 1.
    let out = bin().args(["vocab", "--nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());

    // Bad flag value (unknown h): usage error, exit 1.
    let out = bin()
        .args([
            "train",
            "--cooc",
            &p.p("x.hgco"),
            "--h",
            "tanh",
            "--output",
            &p.p("m.hgmd"),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Missing input file: data error, exit 2.
    let out = bin()
        .args([
            "cooccur",
            "--input",
            &p.p("nope.txt"),
            "--vocab",
            &p.p("vocab.tsv"),
            "--output",
            &p.p("y.hgco"),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Corrupt binary matrix: data error with an offset, exit 2.
    let mut bytes = std::fs::read(p.path("x.hgco")).unwrap();
    bytes.truncate(bytes.len() - 3);
    std::fs::write(p.path("bad.hgco"), &bytes).unwrap();
    let out = bin()
        .args([
            "delta-hyp",
            "--cooc",
            &p.p("bad.hgco"),
            "--tuples",
            "10",
            "--pairs",
            "10",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("truncated record"));

    // --help exits 0.
    let out = bin().args(["--help"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}
