use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn clcp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clcp"))
        .args(args)
        .env("CLCP_WORKERS", "1")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = clcp(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn manifest(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const TINY: [&str; 10] = [
    "--set",
    "img_len=64",
    "--set",
    "channel_base=4",
    "--set",
    "max_epochs=1",
    "--set",
    "embed_dim=16",
    "--set",
    "text_embed_dim=16",
];

#[test]
fn synth_writes_pairs_and_a_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s.jsonl");
    ok(&["synth", "--out", p(&out), "--n", "25", "--seed", "3"]);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 25);
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["code"].is_string() && v["docstring"].is_string());
    }
    let m = manifest(&tmp.path().join("s.jsonl.manifest.json"));
    assert_eq!(m["seed"], 3);
    assert_eq!(m["artifacts"][0], "s.jsonl");
}

#[test]
fn build_vocab_is_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("d.jsonl");
    ok(&["synth", "--out", p(&data), "--n", "80"]);
    let (a, b) = (tmp.path().join("a.tsv"), tmp.path().join("b.tsv"));
    ok(&["build-vocab", "--in", p(&data), "--out", p(&a)]);
    ok(&["build-vocab", "--in", p(&data), "--out", p(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let m = manifest(&tmp.path().join("a.tsv.manifest.json"));
    assert_eq!(m["data_hashes"].as_object().unwrap().len(), 1);
    assert!(m["vocab_hash"].is_string());
}

#[test]
fn inspect_describes_ids() {
    assert!(ok(&["inspect", "--id", "1"]).starts_with("1: Keyword (range 1-35)"));
    assert!(ok(&["inspect", "--id", "0"]).contains("PAD"));
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("d.jsonl");
    let vocab = tmp.path().join("v.tsv");
    ok(&["synth", "--out", p(&data), "--n", "40"]);
    ok(&["build-vocab", "--in", p(&data), "--out", p(&vocab)]);
    let s = ok(&["inspect", "--vocab", p(&vocab), "--id", "7961"]);
    assert!(s.contains("Variable") && s.contains("namespace-scoped"), "{s}");
    let s = ok(&["inspect", "--vocab", p(&vocab), "--id", "1"]);
    assert!(s.contains("Keyword") && s.contains('"'), "{s}");
}

#[test]
fn encode_then_inspect_an_image() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("d.jsonl");
    let vocab = tmp.path().join("v.tsv");
    let img = tmp.path().join("i.bin");
    ok(&["synth", "--out", p(&data), "--n", "10"]);
    ok(&["build-vocab", "--in", p(&data), "--out", p(&vocab)]);
    ok(&["encode", "--in", p(&data), "--vocab", p(&vocab), "--out", p(&img), "--img-len", "64", "--dump"]);
    assert!(tmp.path().join("i.bin.txt").exists());
    assert!(tmp.path().join("i.bin.manifest.json").exists());
    let s = ok(&["inspect", "--vocab", p(&vocab), "--img", p(&img), "--index", "0"]);
    assert!(s.contains("10 images, img_len 64"), "{s}");
    assert!(s.contains("image 0: true_len"), "{s}");
    let out = clcp(&["inspect", "--img", p(&img), "--index", "10"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn clean_text_rewrites_descriptions() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("d.jsonl");
    let doc = "Add two numbers together. See https://example.com/add for details.";
    fs::write(&data, serde_json::json!({"code": "def add(a, b):\n    return a + b\n", "docstring": doc}).to_string() + "\n").unwrap();
    let out = tmp.path().join("c.jsonl");
    ok(&["clean-text", "--in", p(&data), "--out", p(&out)]);
    let v: serde_json::Value = serde_json::from_str(fs::read_to_string(&out).unwrap().trim()).unwrap();
    let cleaned = v["docstring"].as_str().unwrap();
    assert!(cleaned.starts_with("Add two numbers together.") && !cleaned.contains("https"), "{cleaned}");
}

#[test]
fn train_runs_are_append_only_and_evaluable() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("d.jsonl");
    let test = tmp.path().join("t.jsonl");
    let runs = tmp.path().join("runs");
    ok(&["synth", "--out", p(&data), "--n", "40"]);
    ok(&["synth", "--out", p(&test), "--n", "12", "--split", "test", "--seed", "1"]);
    let mut args = vec!["train", "--data", p(&data), "--out-dir", p(&runs), "--family", "gp"];
    args.extend(TINY);
    ok(&args);
    ok(&args);
    let run0 = runs.join("run-000");
    let run1 = runs.join("run-001");
    for f in ["config.cfg", "vocab.tsv", "text_vocab.txt", "model.ckpt", "metrics.jsonl", "summary.json", "manifest.json"] {
        assert!(run0.join(f).exists(), "{f}");
    }
    assert_eq!(fs::read(run0.join("model.ckpt")).unwrap(), fs::read(run1.join("model.ckpt")).unwrap());
    let m = manifest(&run0.join("manifest.json"));
    assert!(m["config_hash"].is_string() && m["vocab_hash"].is_string());

    let csv = tmp.path().join("eval.csv");
    ok(&["eval", "--run", p(&run0), "--test", p(&test), "--out", p(&csv)]);
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 2, "{text}");
    assert!(text.contains("gp3"));
    assert!(tmp.path().join("eval.csv.manifest.json").exists());
}

#[test]
fn config_errors_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("d.jsonl");
    ok(&["synth", "--out", p(&data), "--n", "10"]);
    let out = clcp(&["train", "--data", p(&data), "--out-dir", p(tmp.path()), "--set", "lr=-1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lr"));
    assert!(!tmp.path().join("run-000").exists());
}

#[test]
fn exit_codes() {
    assert_eq!(clcp(&["--bogus"]).status.code(), Some(2));
    assert_eq!(clcp(&["inspect"]).status.code(), Some(1));
    let out = clcp(&["build-vocab", "--in", "/nonexistent/x.jsonl", "--out", "/tmp/never.tsv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn inspect_config_prints_the_shape_plan() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.cfg");
    fs::write(&cfg, "arch = residual\nblocks = 4\nimg_len = 256\n").unwrap();
    let s = ok(&["inspect", "--config", p(&cfg)]);
    assert!(s.starts_with("rn4"), "{s}");
    assert!(s.contains("flatten"), "{s}");
}

#[test]
fn ladder_writes_tables_and_logs() {
    let tmp = tempfile::tempdir().unwrap();
    let plan = tmp.path().join("plan.json");
    fs::write(&plan, r#"{"train_sizes": [12, 16], "test_sizes": [6, 8], "seed": 1}"#).unwrap();
    let out = tmp.path().join("lad");
    let mut args = vec!["ladder", "--plan", p(&plan), "--out", p(&out), "--family", "lp,rn", "--seeds", "0,1"];
    args.extend(TINY);
    ok(&args);
    let dir = out.join("run-000");
    let csv = fs::read_to_string(dir.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 2 * 3);
    assert!(dir.join("table.txt").exists() && dir.join("split.jsonl").exists());
    assert_eq!(fs::read_dir(dir.join("logs")).unwrap().count(), 8);
    let m = manifest(&dir.join("manifest.json"));
    assert_eq!(m["notes"]["failed_rows"], 0);
}
