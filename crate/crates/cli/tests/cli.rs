use std::path::Path;
use std::process::{Command, Output};

fn lhsynth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lhsynth")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = lhsynth(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn toy(dir: &Path) {
    ok(&["toy-model", "--out", s(dir), "--poses", "64"]);
}

fn synth(dir: &Path, out: &Path, count: &str, extra: &[&str]) -> Output {
    let body = dir.join("body.lbm");
    let poses = dir.join("poses.bin");
    let mut args = vec!["synth", "--body-model", s(&body), "--pose-db", s(&poses), "--count", count, "--seed", "7"];
    args.extend_from_slice(&["--out", s(out)]);
    args.extend_from_slice(extra);
    lhsynth(&args)
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn synth_eval_heatmap_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    toy(root);
    let data = root.join("data");
    let out = synth(root, &data, "40", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    assert_eq!(manifest(&data)["count"], 40);

    let report = root.join("report.json");
    let preds = root.join("baseline.lhp");
    let sweep = root.join("jitter.csv");
    ok(&[
        "eval", "--data", s(&data), "--baseline", "--out", s(&report), "--save-predictions", s(&preds),
        "--jitter-sweep-csv", s(&sweep), "--clips", "0.01,0.05",
    ]);
    let r: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(r["metrics"]["n_instances"], 40);
    let csv = std::fs::read_to_string(&sweep).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("clip_m,mpjpe_mm,"));

    let again = root.join("again.json");
    ok(&["eval", "--data", s(&data), "--predictions", s(&preds), "--out", s(&again)]);
    let a: serde_json::Value = serde_json::from_slice(&std::fs::read(&again).unwrap()).unwrap();
    assert_eq!(a["metrics"], r["metrics"]);

    let dump = root.join("gt.lhm");
    let decoded = root.join("decoded.lhp");
    ok(&["heatmap", "encode", "--data", s(&data), "--out", s(&dump)]);
    ok(&["heatmap", "decode", "--dump", s(&dump), "--out", s(&decoded)]);
    let hm = root.join("hm.json");
    ok(&["eval", "--data", s(&data), "--predictions", s(&decoded), "--out", s(&hm)]);
    let h: serde_json::Value = serde_json::from_slice(&std::fs::read(&hm).unwrap()).unwrap();
    assert!(h["metrics"]["mpjpe_mm"].as_f64().unwrap() < 20.0);
}

#[test]
fn config_file_overrides_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    toy(root);
    let cfg = root.join("cfg.json");
    std::fs::write(&cfg, r#"{"count": 12, "r_keep": 1.0, "scene": {"ground_enabled": false}}"#).unwrap();
    let data = root.join("data");
    let out = synth(root, &data, "30", &["--config", s(&cfg), "--r-keep", "0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&data);
    assert_eq!(m["count"], 12);
    assert_eq!(m["config"]["r_keep"], 1.0);
    assert_eq!(m["config"]["scene"]["ground_enabled"], false);
    assert_eq!(m["config"]["scene"]["r_range"], serde_json::json!([4.0, 20.0]));
}

#[test]
fn worker_count_is_not_hashed() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    toy(root);
    let (a, b) = (root.join("a"), root.join("b"));
    assert!(synth(root, &a, "20", &["--workers", "1"]).status.success());
    assert!(synth(root, &b, "20", &["--workers", "3"]).status.success());
    assert_eq!(std::fs::read(a.join("manifest.json")).unwrap(), std::fs::read(b.join("manifest.json")).unwrap());
}

#[test]
fn augment_and_inspect() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    toy(root);
    let data = root.join("data");
    assert!(synth(root, &data, "10", &[]).status.success());
    let copy = root.join("copy");
    ok(&["augment", "--data", s(&data), "--out", s(&copy)]);
    let shard = "shard-00000.lhs";
    assert_eq!(std::fs::read(data.join(shard)).unwrap(), std::fs::read(copy.join(shard)).unwrap());
    let noisy = root.join("noisy");
    ok(&["augment", "--data", s(&copy), "--out", s(&noisy), "--sigma", "0.02", "--clip", "0.05"]);
    let m = manifest(&noisy);
    assert_eq!(m["provenance"].as_array().unwrap().len(), 3);

    let ply = root.join("ply");
    let stats = ok(&["inspect", "--data", s(&noisy), "--ply-dir", s(&ply), "--ids", "0,3"]);
    assert!(!stats.stdout.is_empty());
    assert!(ply.join("sample-00000003.ply").exists());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let missing = lhsynth(&["inspect", "--data", s(&root.join("nope"))]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(!missing.stderr.is_empty());

    toy(root);
    let bad = root.join("bad");
    std::fs::create_dir(&bad).unwrap();
    std::fs::write(bad.join("manifest.json"), "{not json").unwrap();
    assert_eq!(lhsynth(&["inspect", "--data", s(&bad)]).status.code(), Some(3));

    let garbage = root.join("garbage.lbm");
    std::fs::write(&garbage, b"XXXXXXXXXXXXXXXX").unwrap();
    let out = lhsynth(&[
        "synth", "--body-model", s(&garbage), "--pose-db", s(&root.join("poses.bin")), "--count", "5", "--out",
        s(&root.join("x")),
    ]);
    assert_eq!(out.status.code(), Some(3));

    let far = synth(root, &root.join("far"), "20", &["--min-points", "100000", "--max-redraws", "0"]);
    assert_eq!(far.status.code(), Some(4));

    assert_eq!(synth(root, &root.join("z"), "0", &[]).status.code(), Some(2));
    assert_eq!(lhsynth(&["synth"]).status.code(), Some(2));
}
