//! Writes a seeded, deliberately imbalanced 480-style library and the
//! canonical balancing targets into a directory (default `data/`).
//!
//! `cargo run -p hairstyle-core --example make_library -- [DIR] [SEED]`

use std::path::PathBuf;

use hairstyle_core::balancer::TargetMarginals;
use hairstyle_core::datastore::write_jsonl;
use hairstyle_core::synth::{AnnotationGenerator, GeneratorConfig};
use hairstyle_core::taxonomy::Taxonomy;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const STYLES: usize = 480;

fn main() {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "data".into()));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed must be an integer"));

    let tax = Taxonomy::canonical();
    let gen = AnnotationGenerator::new(&tax, GeneratorConfig::imbalanced_library()).expect("canonical taxonomy");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let styles: Vec<_> = (0..STYLES)
        .map(|i| gen.generate(&mut rng, &format!("style-{i:03}")))
        .collect();

    std::fs::create_dir_all(&dir).expect("create output directory");
    write_jsonl(&dir.join("library.synthetic.jsonl"), &styles).expect("write library");
    let targets = serde_json::to_string_pretty(&TargetMarginals::canonical()).expect("serialize targets");
    std::fs::write(dir.join("targets.canonical.json"), targets + "\n").expect("write targets");
    eprintln!("wrote {STYLES} styles and canonical targets to {}", dir.display());
}
