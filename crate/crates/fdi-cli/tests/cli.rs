//! Black-box tests of the `fdi` binary: exit codes, output files, and the
//! determinism contract, all driven through real process invocations.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fdi"))
}

fn run(cmd: &mut Command) -> Output {
    cmd.env_remove("FDI_CONFIG")
        .output()
        .expect("spawning the fdi binary")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process exited normally")
}

/// Writes a deterministic synthetic corpus and returns its path.
fn corpus_file(dir: &Path, n_docs: usize, sentences: usize, seed: u64) -> PathBuf {
    let docs = fdi_core::synth::corpus(n_docs, sentences, seed);
    let path = dir.join("corpus.jsonl");
    let mut buf = Vec::new();
    fdi_core::corpus::write_corpus(&mut buf, &docs).unwrap();
    fs::write(&path, buf).unwrap();
    path
}

fn jsonl(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn help_and_version_exit_zero() {
    for args in [vec!["--help"], vec!["--version"], vec!["generate", "--help"]] {
        let out = run(bin().args(&args));
        assert_eq!(exit_code(&out), 0, "{args:?}");
    }
}

#[test]
fn usage_problems_exit_one() {
    let tmp = TempDir::new().unwrap();
    let corpus = corpus_file(tmp.path(), 2, 6, 1);

    // Unknown subcommand and unknown flag are both usage errors.
    assert_eq!(exit_code(&run(bin().arg("frobnicate"))), 1);
    assert_eq!(
        exit_code(&run(bin().args(["extract", "--corpus"]).arg(&corpus).arg("--bogus"))),
        1
    );

    // Missing corpus file.
    let out = run(bin().args(["extract", "--corpus", "/no/such/file.jsonl"]));
    assert_eq!(exit_code(&out), 1);
    assert!(stderr_of(&out).contains("error:"), "{}", stderr_of(&out));

    // Out-of-range parameter.
    let out = run(bin()
        .args(["mask", "--corpus"])
        .arg(&corpus)
        .args(["--gamma", "1.5"]));
    assert_eq!(exit_code(&out), 1);
    assert!(stderr_of(&out).contains("gamma"), "{}", stderr_of(&out));

    // Bad value in an environment variable is still a configuration error.
    let out = run(bin()
        .args(["mask", "--corpus"])
        .arg(&corpus)
        .env("FDI_MASKING_GAMMA", "snail"));
    assert_eq!(exit_code(&out), 1);
    assert!(
        stderr_of(&out).contains("FDI_MASKING_GAMMA"),
        "{}",
        stderr_of(&out)
    );
}

#[test]
fn extract_reports_every_document() {
    let tmp = TempDir::new().unwrap();
    let corpus = corpus_file(tmp.path(), 5, 8, 3);
    let out_path = tmp.path().join("concepts.jsonl");

    let out = run(bin()
        .args(["extract", "--corpus"])
        .arg(&corpus)
        .arg("--out")
        .arg(&out_path));
    assert_eq!(exit_code(&out), 0, "{}", stderr_of(&out));

    let lines = jsonl(&out_path);
    assert_eq!(lines.len(), 5);
    for line in &lines {
        assert!(line["doc_id"].as_str().is_some());
        assert!(!line["concepts"].as_array().unwrap().is_empty());
        for c in line["concepts"].as_array().unwrap() {
            assert!(c["score"].as_f64().unwrap() >= 0.0);
        }
    }
}

#[test]
fn generate_writes_a_complete_run_directory() {
    let tmp = TempDir::new().unwrap();
    let corpus = corpus_file(tmp.path(), 8, 9, 42);
    let run_dir = tmp.path().join("run");

    let out = run(bin()
        .args(["generate", "--corpus"])
        .arg(&corpus)
        .args(["--seed", "7", "--fakes", "2", "--run-dir"])
        .arg(&run_dir));
    assert_eq!(exit_code(&out), 0, "{}", stderr_of(&out));

    for name in ["manifest.json", "timings.json", "fakes.jsonl", "answer_key.jsonl", "masked.jsonl"] {
        assert!(run_dir.join(name).exists(), "missing {name}");
    }

    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(run_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "generate");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["counts"]["documents"], 8);
    assert_eq!(manifest["counts"]["fakes"], 16);
    // Every listed output digest matches the bytes on disk.
    for (name, info) in manifest["outputs"].as_object().unwrap() {
        let bytes = fs::read(run_dir.join(name)).unwrap();
        assert_eq!(bytes.len() as u64, info["bytes"].as_u64().unwrap(), "{name}");
        let digest = {
            use sha2::{Digest, Sha256};
            let mut h = Sha256::new();
            h.update(&bytes);
            h.finalize().iter().map(|b| format!("{b:02x}")).collect::<String>()
        };
        assert_eq!(digest, info["sha256"].as_str().unwrap(), "{name}");
    }

    // Fakes and answer key pair up one-to-one, and the deployable file leaks
    // nothing beyond ids and text.
    let fakes = jsonl(&run_dir.join("fakes.jsonl"));
    let keys = jsonl(&run_dir.join("answer_key.jsonl"));
    assert_eq!(fakes.len(), 16);
    assert_eq!(keys.len(), 16);
    for (f, k) in fakes.iter().zip(&keys) {
        assert_eq!(f["fake_id"], k["fake_id"]);
        let extra: Vec<&String> = f
            .as_object()
            .unwrap()
            .keys()
            .filter(|k| !matches!(k.as_str(), "doc_id" | "fake_id" | "text"))
            .collect();
        assert!(extra.is_empty(), "unexpected fields {extra:?}");
        assert!(!k["replacements"].as_array().unwrap().is_empty());
    }
}

#[test]
fn run_directories_are_append_only() {
    let tmp = TempDir::new().unwrap();
    let corpus = corpus_file(tmp.path(), 3, 8, 4);
    let run_dir = tmp.path().join("run");

    let first = run(bin()
        .args(["generate", "--corpus"])
        .arg(&corpus)
        .args(["--seed", "1", "--fakes", "1", "--run-dir"])
        .arg(&run_dir));
    assert_eq!(exit_code(&first), 0, "{}", stderr_of(&first));

    let second = run(bin()
        .args(["generate", "--corpus"])
        .arg(&corpus)
        .args(["--seed", "1", "--fakes", "1", "--run-dir"])
        .arg(&run_dir));
    assert_eq!(exit_code(&second), 1);
    assert!(
        stderr_of(&second).contains("append-only"),
        "{}",
        stderr_of(&second)
    );
}

#[test]
fn per_document_failures_exit_two_and_land_in_the_manifest() {
    let tmp = TempDir::new().unwrap();
    let docs = fdi_core::synth::corpus(4, 8, 9);
    let corpus = tmp.path().join("corpus.jsonl");
    let mut buf = Vec::new();
    fdi_core::corpus::write_corpus(&mut buf, &docs).unwrap();
    buf.extend_from_slice(b"{\"id\":\"zz-tiny\",\"title\":\"\",\"body\":\"Too small.\"}\n");
    fs::write(&corpus, buf).unwrap();
    let run_dir = tmp.path().join("run");

    let out = run(bin()
        .args(["generate", "--corpus"])
        .arg(&corpus)
        .args(["--seed", "3", "--fakes", "1", "--run-dir"])
        .arg(&run_dir));
    assert_eq!(exit_code(&out), 2, "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("zz-tiny"));

    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(run_dir.join("manifest.json")).unwrap()).unwrap();
    let failures = manifest["failures"].as_array().unwrap();
    assert_eq!(failures.len(), 1);
    assert_eq!(failures[0]["doc_id"], "zz-tiny");
    assert_eq!(manifest["counts"]["failed_documents"], 1);
    // The healthy documents still produced fakes.
    assert_eq!(manifest["counts"]["fakes"], 4);
}

#[test]
fn unreachable_scoring_service_exits_three() {
    let tmp = TempDir::new().unwrap();
    let corpus = corpus_file(tmp.path(), 2, 8, 5);

    let out = run(bin()
        .args(["generate", "--corpus"])
        .arg(&corpus)
        .args([
            "--backend",
            "remote",
            "--endpoint",
            // Reserved discard port: connection refused immediately.
            "http://127.0.0.1:9",
            "--run-dir",
        ])
        .arg(tmp.path().join("run")));
    assert_eq!(exit_code(&out), 3, "{}", stderr_of(&out));
    assert!(
        stderr_of(&out).contains("unreachable"),
        "{}",
        stderr_of(&out)
    );
}

#[test]
fn same_seed_same_bytes_regardless_of_workers() {
    let tmp = TempDir::new().unwrap();
    let corpus = corpus_file(tmp.path(), 6, 9, 77);

    let mut dirs = Vec::new();
    for (label, workers) in [("a", "1"), ("b", "4")] {
        let run_dir = tmp.path().join(label);
        let out = run(bin()
            .args(["generate", "--corpus"])
            .arg(&corpus)
            .args(["--seed", "99", "--fakes", "2", "--workers", workers, "--run-dir"])
            .arg(&run_dir));
        assert_eq!(exit_code(&out), 0, "{}", stderr_of(&out));
        dirs.push(run_dir);
    }
    for name in ["manifest.json", "fakes.jsonl", "answer_key.jsonl", "masked.jsonl"] {
        let a = fs::read(dirs[0].join(name)).unwrap();
        let b = fs::read(dirs[1].join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between worker counts");
    }
}

/// Builds fakes with four seeds (standing in for four models), assembles both
/// quiz designs, fabricates review sheets, and aggregates them: the whole
/// evaluation path through the real binary.
#[test]
fn quiz_and_metrics_round_trip() {
    let tmp = TempDir::new().unwrap();
    let corpus = corpus_file(tmp.path(), 6, 9, 21);

    let mut fake_args: Vec<String> = Vec::new();
    for (model, seed) in [("alpha", "11"), ("beta", "12"), ("gamma", "13"), ("delta", "14")] {
        let run_dir = tmp.path().join(format!("gen-{model}"));
        let out = run(bin()
            .args(["generate", "--corpus"])
            .arg(&corpus)
            .args(["--seed", seed, "--fakes", "3", "--run-dir"])
            .arg(&run_dir));
        assert_eq!(exit_code(&out), 0, "{model}: {}", stderr_of(&out));
        fake_args.push(format!("{model}={}", run_dir.join("fakes.jsonl").display()));
    }

    // Detection design over two of the models.
    let det_dir = tmp.path().join("quiz-det");
    let out = run(bin()
        .args(["quiz", "--corpus"])
        .arg(&corpus)
        .args(["--mode", "detection", "--seed", "5", "--fakes", &fake_args[0]])
        .args(["--fakes", &fake_args[1]])
        .arg("--out-dir")
        .arg(&det_dir));
    assert_eq!(exit_code(&out), 0, "{}", stderr_of(&out));

    // Rating design needs all four models.
    let rate_dir = tmp.path().join("quiz-rate");
    let mut cmd = bin();
    cmd.args(["quiz", "--corpus"]).arg(&corpus).args(["--mode", "rating", "--seed", "5"]);
    for arg in &fake_args {
        cmd.args(["--fakes", arg]);
    }
    let out = run(cmd.arg("--out-dir").arg(&rate_dir));
    assert_eq!(exit_code(&out), 0, "{}", stderr_of(&out));

    let det_keys = jsonl(&det_dir.join("key.jsonl"));
    let rate_keys = jsonl(&rate_dir.join("key.jsonl"));
    assert_eq!(det_keys.len(), 12); // 6 docs x 2 models
    assert_eq!(rate_keys.len(), 6);
    for k in &rate_keys {
        // Original pinned to slot 0 in the rating design.
        assert_eq!(k["truth_slot"], 0);
    }

    // Review sheets: reviewer one always finds the original; reviewer two
    // always picks the slot after it. Ratings cycle deterministically.
    let mut quiz1 = String::from("set_id,reviewer_id,top1_slot,top2_slot,time_minutes\n");
    for k in &det_keys {
        let truth = k["truth_slot"].as_u64().unwrap() as usize;
        quiz1.push_str(&format!("{},r1,{},{},2.5\n", k["set_id"].as_str().unwrap(), truth, (truth + 1) % 4));
        quiz1.push_str(&format!("{},r2,{},{},4.0\n", k["set_id"].as_str().unwrap(), (truth + 1) % 4, truth));
    }
    let quiz1_path = tmp.path().join("quiz1.csv");
    fs::write(&quiz1_path, quiz1).unwrap();

    let mut quiz2 = String::from("set_id,reviewer_id,slot,fluency,coherency,expertise,fakeness,preference_rank\n");
    for k in &rate_keys {
        let set = k["set_id"].as_str().unwrap();
        for (i, slot) in k["slots"].as_array().unwrap().iter().enumerate() {
            let s = slot["slot"].as_u64().unwrap();
            quiz2.push_str(&format!(
                "{set},r1,{s},{},{},{},{},{}\n",
                i % 4 + 1,
                (i + 1) % 4 + 1,
                (i + 2) % 4 + 1,
                (i + 3) % 4 + 1,
                i + 1
            ));
        }
    }
    let quiz2_path = tmp.path().join("quiz2.csv");
    fs::write(&quiz2_path, quiz2).unwrap();

    let all_keys = tmp.path().join("keys.jsonl");
    let mut joined = fs::read_to_string(det_dir.join("key.jsonl")).unwrap();
    joined.push_str(&fs::read_to_string(rate_dir.join("key.jsonl")).unwrap());
    fs::write(&all_keys, joined).unwrap();

    let report_path = tmp.path().join("report.json");
    let tables_path = tmp.path().join("report.txt");
    let svg_dir = tmp.path().join("svg");
    let out = run(bin()
        .args(["metrics", "--key"])
        .arg(&all_keys)
        .arg("--quiz1")
        .arg(&quiz1_path)
        .arg("--quiz2")
        .arg(&quiz2_path)
        .arg("--out")
        .arg(&report_path)
        .arg("--tables")
        .arg(&tables_path)
        .arg("--svg-dir")
        .arg(&svg_dir));
    assert_eq!(exit_code(&out), 0, "{}", stderr_of(&out));

    let report: Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    // Reviewer one is always right, reviewer two never: pooled accuracy 0.5.
    let per_model = report["quiz1"]["per_model"].as_object().unwrap();
    assert_eq!(per_model.len(), 2);
    for stats in per_model.values() {
        assert!((stats["top1_accuracy"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    }
    assert!(report["quiz2"]["per_model"].as_object().unwrap().len() == 4);

    let tables = fs::read_to_string(&tables_path).unwrap();
    assert!(tables.contains("Detection accuracy"));
    assert!(tables.contains("Rank correlation"));
    for name in ["fakeness.svg", "spearman.svg"] {
        let svg = fs::read_to_string(svg_dir.join(name)).unwrap();
        assert!(svg.starts_with("<svg"), "{name}");
    }
}

#[test]
fn rating_quiz_requires_exactly_four_models() {
    let tmp = TempDir::new().unwrap();
    let corpus = corpus_file(tmp.path(), 3, 8, 31);
    let run_dir = tmp.path().join("gen");
    let out = run(bin()
        .args(["generate", "--corpus"])
        .arg(&corpus)
        .args(["--seed", "1", "--fakes", "4", "--run-dir"])
        .arg(&run_dir));
    assert_eq!(exit_code(&out), 0, "{}", stderr_of(&out));

    let out = run(bin()
        .args(["quiz", "--corpus"])
        .arg(&corpus)
        .args([
            "--mode",
            "rating",
            "--fakes",
            &format!("only={}", run_dir.join("fakes.jsonl").display()),
            "--out-dir",
        ])
        .arg(tmp.path().join("quiz")));
    assert_eq!(exit_code(&out), 1);
    assert!(stderr_of(&out).contains("4"), "{}", stderr_of(&out));
}

#[test]
fn metrics_rejects_reviews_for_unknown_sets() {
    let tmp = TempDir::new().unwrap();
    let keys = tmp.path().join("keys.jsonl");
    fs::write(
        &keys,
        "{\"set_id\":\"det-a-m\",\"mode\":\"detection\",\"doc_id\":\"a\",\"truth_slot\":1,\"slots\":[]}\n",
    )
    .unwrap();
    let sheet = tmp.path().join("quiz1.csv");
    fs::write(
        &sheet,
        "set_id,reviewer_id,top1_slot,top2_slot,time_minutes\nno-such-set,r1,0,1,2.0\n",
    )
    .unwrap();

    let out = run(bin()
        .args(["metrics", "--key"])
        .arg(&keys)
        .arg("--quiz1")
        .arg(&sheet)
        .arg("--out")
        .arg(tmp.path().join("report.json")));
    assert_eq!(exit_code(&out), 1);
    assert!(
        stderr_of(&out).contains("no-such-set"),
        "{}",
        stderr_of(&out)
    );
}
