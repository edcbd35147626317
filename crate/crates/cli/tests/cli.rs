use std::path::Path;
use std::process::{Command, Output};

fn cupid(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cupid")).args(args).current_dir(cwd).output().unwrap()
}

fn ok(args: &[&str], cwd: &Path) -> serde_json::Value {
    let out = cupid(args, cwd);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    assert_eq!(text.trim_end().lines().count(), 1, "{text}");
    serde_json::from_str(text.trim_end()).unwrap()
}

fn lines(path: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn default_capacity_curation_on_large_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        &["synth", "--out", "syn", "--source-count", "200000", "--target-count", "10", "--max-clips", "2", "--dim", "16"],
        d,
    );
    // No --capacity: the default is 200000.
    let summary = ok(
        &[
            "curate",
            "--strategy",
            "avg-sim",
            "--source-manifest",
            "syn/source.manifest.jsonl",
            "--target-manifest",
            "syn/target.manifest.jsonl",
            "--out",
            "curated.jsonl",
        ],
        d,
    );
    assert_eq!(summary["count"], 200_000);
    let rows = lines(&d.join("curated.jsonl"));
    assert_eq!(rows.len(), 200_000);
    assert_eq!(rows[0]["rank"], 1);
    assert_eq!(rows[0]["strategy"], "avg_sim");
    let scores: Vec<f64> = rows.iter().map(|r| r["score"].as_f64().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
    let sidecar: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d.join("curated.jsonl.meta.json")).unwrap()).unwrap();
    assert_eq!(sidecar["config"]["capacity_c"], 200_000);
}

#[test]
fn three_stage_plan() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["schedule", "--sizes", "200000,100000,15000", "--steps", "100000", "--out", "plan.jsonl"], dir.path());
    let rows = lines(&dir.path().join("plan.jsonl"));
    let steps: Vec<u64> = rows.iter().map(|r| r["steps"].as_u64().unwrap()).collect();
    assert_eq!(steps, [33_334, 33_333, 33_333]);
    assert!(rows.iter().all(|r| r["manifest_path"].is_null()));
    assert_eq!(rows[2]["stage"], 3);
}

#[test]
fn gradient_self_check() {
    let dir = tempfile::tempdir().unwrap();
    let report = ok(&["nce-check", "--batch", "4", "--seed", "1", "--out", "nce.json"], dir.path());
    assert!(report["max_rel_error"].as_f64().unwrap() < 1e-4);
    assert_eq!(report["checks"].as_array().unwrap().len(), 2);
}

#[test]
fn usage_errors_exit_two_and_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = cupid(&["curate", "--strategy", "avg-sim", "--column-means", "missing.jsonl", "--out", "x.jsonl"], d);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "usage");
    assert!(!d.join("x.jsonl").exists());
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("x.jsonl.report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "error");

    let out = cupid(&["curate", "--capacity", "ten", "--out", "y.jsonl"], d);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "usage");

    let out = cupid(&["schedule", "--sizes", "10,20", "--steps", "5", "--out", "s.jsonl"], d);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "argument");
    assert!(!d.join("s.jsonl").exists());
}

#[test]
fn data_errors_leave_previous_output_intact() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--out", "syn", "--source-count", "50", "--target-count", "3"], d);
    let args = |c: &'static str| {
        vec![
            "curate",
            "--strategy",
            "avg-sim",
            "--capacity",
            c,
            "--source-manifest",
            "syn/source.manifest.jsonl",
            "--target-manifest",
            "syn/target.manifest.jsonl",
            "--out",
            "m.jsonl",
        ]
    };
    ok(&args("10"), d);
    let before = std::fs::read(d.join("m.jsonl")).unwrap();
    let out = cupid(&args("51"), d);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "capacity");
    assert_eq!(std::fs::read(d.join("m.jsonl")).unwrap(), before);
    // No stray temp files next to the output.
    let names: Vec<String> = std::fs::read_dir(d)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.iter().all(|n| !n.starts_with(".tmp")), "{names:?}");
}

#[test]
fn corrupted_shard_names_the_video() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--out", "syn", "--source-count", "5", "--target-count", "2", "--dim", "4"], d);
    let mut bytes = std::fs::read(d.join("syn/source.cpde")).unwrap();
    // First value of the first video: header 14, id_len 2, "s0000000" 8, clip_count 4.
    let at = 14 + 2 + 8 + 4;
    bytes[at..at + 4].copy_from_slice(&f32::NAN.to_le_bytes());
    std::fs::write(d.join("bad.cpde"), bytes).unwrap();
    let out = cupid(&["ingest", "--shards", "bad.cpde", "--dim", "4", "--out", "m.jsonl"], d);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "data");
    assert!(err["message"].as_str().unwrap().contains("s0000000"));
}

#[test]
fn config_file_fills_missing_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("cfg.json"), r#"{"sizes":[30,20,10],"steps":10,"out":"from-config.jsonl"}"#).unwrap();
    ok(&["schedule", "--config", "cfg.json", "--steps", "7"], d);
    let rows = lines(&d.join("from-config.jsonl"));
    let steps: Vec<u64> = rows.iter().map(|r| r["steps"].as_u64().unwrap()).collect();
    assert_eq!(steps, [3, 2, 2]);

    std::fs::write(d.join("bad.json"), r#"{"not_a_flag":1}"#).unwrap();
    let out = cupid(&["schedule", "--config", "bad.json"], d);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn probe_report_shape() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("q.jsonl"),
        "{\"query_id\":\"a\",\"embedding\":[1,0],\"ground_truth\":\"x\"}\n{\"query_id\":\"b\",\"embedding\":[0,1],\"ground_truth\":\"x\"}\n",
    )
    .unwrap();
    std::fs::write(
        d.join("c.jsonl"),
        "{\"candidate_id\":\"x\",\"embedding\":[1,0]}\n{\"candidate_id\":\"y\",\"embedding\":[0,1]}\n",
    )
    .unwrap();
    let r = ok(&["probe", "--queries", "q.jsonl", "--candidates", "c.jsonl", "--out", "p.json"], d);
    assert_eq!(r["recall"]["1"], 0.5);
    assert_eq!(r["recall"]["5"], 1.0);
    assert_eq!(r["median_rank"], 1);
    assert_eq!(r["query_count"], 2);
    assert_eq!(r["candidate_count"], 2);
}

#[test]
fn report_hashes_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--out", "syn", "--source-count", "20", "--target-count", "2"], d);
    ok(&["stats", "--source-manifest", "syn/source.manifest.jsonl", "--out", "st.json"], d);
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("st.json.report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "ok");
    let inputs = report["inputs"].as_array().unwrap();
    assert_eq!(inputs.len(), 2);
    assert!(inputs.iter().all(|i| i["sha256"].as_str().unwrap().len() == 64));
    assert!(report["timings"]["total_ms"].as_f64().is_some());
}
