//! Writes a small separable train/test task for trying the CLI end to end:
//! a five-style library, feature stores and sample files with demographics.
//!
//! `cargo run -p hairstyle-core --example make_toy -- [DIR] [SEED]`

use std::path::{Path, PathBuf};

use hairstyle_core::datastore::{write_jsonl, DemographicSchema, FeatureStore, SampleRecord};
use hairstyle_core::model::TrainingSet;
use hairstyle_core::synth::cluster_task;
use hairstyle_core::taxonomy::Taxonomy;
use indexmap::IndexMap;

const DIM: usize = 32;

fn write_split(dir: &Path, name: &str, set: &TrainingSet, style_ids: &[String], schema: &DemographicSchema) {
    let ids: Vec<String> = (0..set.len()).map(|i| format!("{name}-{i:04}")).collect();
    let store = FeatureStore::new(set.dim, ids.clone(), set.features.clone()).expect("consistent shapes");
    store.write(&dir.join(format!("{name}.hmft"))).expect("write features");
    let samples: Vec<SampleRecord> = ids
        .into_iter()
        .enumerate()
        .map(|(i, sample_id)| {
            let demographics: IndexMap<String, String> = schema
                .categories
                .iter()
                .enumerate()
                .map(|(c, (cat, groups))| (cat.clone(), groups[(i / (c + 1)) % groups.len()].clone()))
                .collect();
            SampleRecord {
                sample_id,
                style_id: style_ids[set.styles[i]].clone(),
                demographics: Some(demographics),
            }
        })
        .collect();
    write_jsonl(&dir.join(format!("{name}.samples.jsonl")), &samples).expect("write samples");
}

fn main() {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "toy".into()));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed must be an integer"));

    let tax = Taxonomy::canonical();
    let task = cluster_task(&tax, DIM, 500, 100, 5.0, 0.5, seed);
    let style_ids: Vec<String> = task.library.ids().map(str::to_string).collect();
    let schema = DemographicSchema::canonical();

    std::fs::create_dir_all(&dir).expect("create output directory");
    write_jsonl(&dir.join("library.jsonl"), &task.library.annotations()).expect("write library");
    write_split(&dir, "train", &task.train, &style_ids, &schema);
    write_split(&dir, "test", &task.test, &style_ids, &schema);
    eprintln!("wrote toy task ({} styles, {DIM}-d) to {}", style_ids.len(), dir.display());
}
