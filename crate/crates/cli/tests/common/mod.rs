#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hairstyle_core::datastore::{write_jsonl, FeatureStore};
use hairstyle_core::model::TrainingSet;
use hairstyle_core::synth::cluster_task;
use hairstyle_core::taxonomy::Taxonomy;
use serde_json::json;

pub fn hairstyle(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hairstyle"))
        .args(args)
        .current_dir(cwd)
        .env_remove("HAIRMONY_DATA_DIR")
        .output()
        .expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn repo_data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

const GENDERS: [&str; 2] = ["Female", "Male"];
const AGES: [&str; 3] = ["20-29", "30-39", "40-49"];
const ANCESTRIES: [&str; 3] = ["Black", "East Asian", "White"];

fn write_split(dir: &Path, name: &str, set: &TrainingSet, style_ids: &[String]) {
    let ids: Vec<String> = (0..set.len()).map(|i| format!("{name}-{i:04}")).collect();
    FeatureStore::new(set.dim, ids.clone(), set.features.clone())
        .unwrap()
        .write(&dir.join(format!("{name}.hmft")))
        .unwrap();
    let samples: Vec<_> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| {
            json!({
                "sample_id": id,
                "style_id": style_ids[set.styles[i]],
                "demographics": {
                    "gender": GENDERS[i % 2],
                    "age": AGES[(i / 2) % 3],
                    "ancestry": ANCESTRIES[(i / 3) % 3],
                },
            })
        })
        .collect();
    write_jsonl(&dir.join(format!("{name}.samples.jsonl")), &samples).unwrap();
}

/// Separable five-style task in `dir`: library.jsonl, train/test feature
/// stores and sample files.
pub fn toy_task(dir: &Path, train_n: usize, test_n: usize, seed: u64) {
    let tax = Taxonomy::canonical();
    let task = cluster_task(&tax, 32, train_n, test_n, 5.0, 0.5, seed);
    let ids: Vec<String> = task.library.ids().map(str::to_string).collect();
    write_jsonl(&dir.join("library.jsonl"), &task.library.annotations()).unwrap();
    write_split(dir, "train", &task.train, &ids);
    write_split(dir, "test", &task.test, &ids);
}
