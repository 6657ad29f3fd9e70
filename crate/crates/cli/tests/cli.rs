mod common;

use std::fs;

use common::{code, hairstyle, repo_data, stderr, toy_task};
use hairstyle_core::synth::AnnotationBuilder;
use hairstyle_core::taxonomy::Taxonomy;
use serde_json::Value;

fn read_json(path: &std::path::Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn validate_reports_the_library_size() {
    let dir = tempfile::tempdir().unwrap();
    let lib = repo_data("library.synthetic.jsonl");
    let schema = repo_data("taxonomy.v1.json");
    let out = hairstyle(
        &["validate", "--taxonomy", schema.to_str().unwrap(), "--annotations", lib.to_str().unwrap(), "--out", "v.json"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stderr(&out).contains("480 styles valid"));
    let doc = read_json(&dir.path().join("v.json"));
    assert_eq!(doc["valid"], 480);
    assert_eq!(doc["_meta"]["command"], "validate");
}

#[test]
fn validate_rejects_inconsistent_annotations() {
    let dir = tempfile::tempdir().unwrap();
    let tax = Taxonomy::canonical();
    let good = AnnotationBuilder::new(&tax, "good").build();
    let bad = AnnotationBuilder::new(&tax, "bad")
        .global("Bangs Length", "To eyebrows (~10cm)")
        .build();
    let text = format!("{}\n{}\n", serde_json::to_string(&good).unwrap(), serde_json::to_string(&bad).unwrap());
    fs::write(dir.path().join("a.jsonl"), text).unwrap();
    let out = hairstyle(&["validate", "--annotations", "a.jsonl", "--out", "v.json"], dir.path());
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("bad: BANGS-LEN"));
    let doc = read_json(&dir.path().join("v.json"));
    assert_eq!(doc["invalid"][0]["style_id"], "bad");
    assert_eq!(doc["invalid"][0]["violations"][0]["rule_id"], "BANGS-LEN");
}

#[test]
fn schema_location_follows_the_data_dir_variable() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("taxonomy.v1.json"), "{not json").unwrap();
    let lib = repo_data("library.synthetic.jsonl");
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_hairstyle"))
        .args(["validate", "--annotations", lib.to_str().unwrap()])
        .env("HAIRMONY_DATA_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("taxonomy.v1.json"));
}

#[test]
fn usage_and_io_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&hairstyle(&["frobnicate"], dir.path())), 2);
    assert_eq!(code(&hairstyle(&["validate", "--bogus"], dir.path())), 2);
    assert_eq!(code(&hairstyle(&["validate", "--annotations", "missing.jsonl"], dir.path())), 2);
    fs::write(dir.path().join("broken.jsonl"), "{\"style_id\": 3}\n").unwrap();
    assert_eq!(code(&hairstyle(&["validate", "--annotations", "broken.jsonl"], dir.path())), 2);
}

#[test]
fn balance_names_an_unreachable_value() {
    let dir = tempfile::tempdir().unwrap();
    let tax = Taxonomy::canonical();
    let styles = [
        AnnotationBuilder::new(&tax, "straight").build(),
        AnnotationBuilder::new(&tax, "wavy").all_regions("Hair Type", "Wavy").build(),
    ];
    let text: String = styles.iter().map(|s| serde_json::to_string(s).unwrap() + "\n").collect();
    fs::write(dir.path().join("lib.jsonl"), text).unwrap();
    fs::write(dir.path().join("t.json"), r#"{"Hair Type": {"Straight": 0.5, "Wavy": 0.3, "Coily": 0.2}}"#).unwrap();
    let out = hairstyle(
        &["balance", "--library", "lib.jsonl", "--targets", "t.json", "--tol", "0.01", "--max-iters", "1000", "--out", "w.json"],
        dir.path(),
    );
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("\"Coily\""), "{}", stderr(&out));
    assert!(!dir.path().join("w.json").exists());
}

#[test]
fn balanced_library_meets_the_canonical_targets() {
    let dir = tempfile::tempdir().unwrap();
    let lib = repo_data("library.synthetic.jsonl");
    let targets = repo_data("targets.canonical.json");
    let (lib, targets) = (lib.to_str().unwrap(), targets.to_str().unwrap());
    let out = hairstyle(&["balance", "--library", lib, "--targets", targets, "--tol", "0.01", "--out", "w.json"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let w = read_json(&dir.path().join("w.json"));
    assert_eq!(w["_meta"]["converged"], true);
    assert_eq!(w["_meta"]["config"]["balance"]["tol"], 0.01);

    let out = hairstyle(&["marginals", "--library", lib, "--targets", targets, "--out", "before.json"], dir.path());
    assert_eq!(code(&out), 0);
    let out = hairstyle(
        &["marginals", "--library", lib, "--weights", "w.json", "--targets", targets, "--out", "after.json"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let before = read_json(&dir.path().join("before.json"));
    let after = read_json(&dir.path().join("after.json"));
    for (attr, gap) in after["l1_gap"].as_object().unwrap() {
        assert!(gap.as_f64().unwrap() <= 0.01, "{attr}");
        assert!(before["l1_gap"][attr].as_f64().unwrap() > 0.05, "{attr} was already balanced");
    }
}

#[test]
fn sample_draws_are_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let lib = repo_data("library.synthetic.jsonl");
    let out = hairstyle(&["balance", "--library", lib.to_str().unwrap(), "--tol", "0.01", "--out", "w.json"], dir.path());
    assert_eq!(code(&out), 0);
    for (name, seed) in [("a.json", "1"), ("b.json", "1"), ("c.json", "2")] {
        let out = hairstyle(&["sample", "--weights", "w.json", "--n", "200", "--seed", seed, "--out", name], dir.path());
        assert_eq!(code(&out), 0);
    }
    let read = |n: &str| fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("a.json"), read("b.json"));
    let a = read_json(&dir.path().join("a.json"));
    let c = read_json(&dir.path().join("c.json"));
    assert_eq!(a["style_ids"].as_array().unwrap().len(), 200);
    assert_ne!(a["style_ids"], c["style_ids"]);
}

#[test]
fn train_eval_and_report_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    toy_task(dir.path(), 500, 100, 4);
    let train = [
        "train", "--features", "train.hmft", "--samples", "train.samples.jsonl", "--library", "library.jsonl",
        "--hidden-dim", "16", "--epochs", "100", "--batch-size", "64", "--lr-max", "1e-3", "--seed", "2",
    ];
    let out = hairstyle(&[&train[..], &["--out", "m.json"]].concat(), dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = hairstyle(&[&train[..], &["--sequential", "--out", "m_seq.json"]].concat(), dir.path());
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read(dir.path().join("m.json")).unwrap(), fs::read(dir.path().join("m_seq.json")).unwrap());

    let out = hairstyle(
        &[
            "eval", "--model", "m.json", "--features", "test.hmft", "--samples", "test.samples.jsonl",
            "--out", "r.json", "--text", "r.txt", "--csv", "r.csv", "--predictions", "p.jsonl",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = read_json(&dir.path().join("r.json"));
    let metrics: Vec<&str> = report["metrics"].as_array().unwrap().iter().map(|m| m.as_str().unwrap()).collect();
    assert_eq!(metrics.len(), 6);
    for m in &metrics {
        assert!(report["accuracy"][m].as_f64().unwrap() >= 0.95, "{m}");
    }
    assert_eq!(report["collation"], "collation v1");
    assert_eq!(report["_meta"]["command"], "eval");
    assert!(fs::read_to_string(dir.path().join("r.txt")).unwrap().contains("Mean Fairness"));

    let out = hairstyle(
        &[
            "report", "--library", "library.jsonl", "--samples", "test.samples.jsonl", "--predictions", "p.jsonl",
            "--out", "r2.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let mut again = read_json(&dir.path().join("r2.json"));
    let mut first = report.clone();
    first.as_object_mut().unwrap().remove("_meta");
    again.as_object_mut().unwrap().remove("_meta");
    assert_eq!(first, again);
}

#[test]
fn eval_requires_demographics() {
    let dir = tempfile::tempdir().unwrap();
    toy_task(dir.path(), 50, 10, 1);
    let out = hairstyle(
        &[
            "train", "--features", "train.hmft", "--samples", "train.samples.jsonl", "--library", "library.jsonl",
            "--hidden-dim", "8", "--epochs", "1", "--out", "m.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(dir.path().join("test.samples.jsonl")).unwrap();
    let stripped: String = text
        .lines()
        .map(|l| {
            let mut v: Value = serde_json::from_str(l).unwrap();
            if v["sample_id"] == "test-0003" {
                v["demographics"].as_object_mut().unwrap().remove("age");
            }
            v.to_string() + "\n"
        })
        .collect();
    fs::write(dir.path().join("test.samples.jsonl"), stripped).unwrap();
    let out = hairstyle(
        &["eval", "--model", "m.json", "--features", "test.hmft", "--samples", "test.samples.jsonl", "--out", "r.json"],
        dir.path(),
    );
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("test-0003 lacks age"), "{}", stderr(&out));
}

#[test]
fn export_warns_about_corrupt_lines_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let tax = Taxonomy::canonical();
    let record = |id: &str| {
        serde_json::json!({
            "image_id": id,
            "annotator_id": "a",
            "submitted_at": "2026-01-01T00:00:00Z",
            "annotation": AnnotationBuilder::new(&tax, id).build(),
        })
        .to_string()
    };
    fs::write(dir.path().join("store.jsonl"), format!("{}\n{{oops\n{}\n", record("x.png"), record("y.png"))).unwrap();
    let out = hairstyle(&["export", "--store", "store.jsonl", "--out", "lib.jsonl"], dir.path());
    assert_eq!(code(&out), 0);
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
    assert_eq!(fs::read_to_string(dir.path().join("lib.jsonl")).unwrap().lines().count(), 2);
    let out = hairstyle(&["validate", "--annotations", "lib.jsonl"], dir.path());
    assert_eq!(code(&out), 0);

    fs::write(dir.path().join("empty.jsonl"), "").unwrap();
    let out = hairstyle(&["export", "--store", "empty.jsonl", "--out", "none.jsonl"], dir.path());
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read_to_string(dir.path().join("none.jsonl")).unwrap(), "");
}
