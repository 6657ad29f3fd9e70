use std::collections::HashSet;
use std::path::PathBuf;

use clap::Args;
use hairstyle_core::balancer::{SamplingWeights, TargetMarginals};
use hairstyle_core::datastore::{attribute_marginals, MarginalTable};
use hairstyle_core::taxonomy::HairstyleAnnotation;
use serde_json::{json, Map, Value};

use crate::error::{Failure, Outcome};
use crate::io::{self, display};

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Schema document (defaults to $HAIRMONY_DATA_DIR/taxonomy.v1.json, then the built-in schema)
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    /// Annotations, one JSON object per line
    #[arg(long)]
    pub annotations: PathBuf,
    /// Machine-readable result
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn validate(args: &ValidateArgs) -> Outcome {
    let (tax, source) = io::load_taxonomy(args.taxonomy.as_deref())?;
    let styles: Vec<HairstyleAnnotation> = io::read_lines(&args.annotations)?;
    let mut seen = HashSet::new();
    let mut invalid = Vec::new();
    for ann in &styles {
        let mut entry = Map::new();
        if !seen.insert(ann.style_id.as_str()) {
            entry.insert("duplicate".into(), json!(true));
        }
        match tax.validate_annotation(ann) {
            Ok(v) if v.is_empty() => {}
            Ok(v) => {
                for x in &v {
                    eprintln!("{}: {} {}", ann.style_id, x.rule_id, x.message);
                }
                entry.insert("violations".into(), json!(v));
            }
            Err(e) => {
                for p in &e.problems {
                    eprintln!("{}: {p}", ann.style_id);
                }
                entry.insert("problems".into(), json!(e.problems));
            }
        }
        if entry.contains_key("duplicate") {
            eprintln!("{}: duplicate style id", ann.style_id);
        }
        if !entry.is_empty() {
            let mut obj = Map::new();
            obj.insert("style_id".into(), json!(ann.style_id));
            obj.extend(entry);
            invalid.push(Value::Object(obj));
        }
    }
    let valid = styles.len() - invalid.len();
    if let Some(out) = &args.out {
        let doc = json!({ "styles": styles.len(), "valid": valid, "invalid": invalid });
        let cfg = json!({ "annotations": display(&args.annotations) });
        io::write_json(out, &io::with_meta(doc, io::meta("validate", &tax, &source, cfg)))?;
    }
    if invalid.is_empty() {
        eprintln!("{} styles valid", styles.len());
        Ok(())
    } else {
        Err(Failure::rejected(format!("{valid} of {} styles valid", styles.len())))
    }
}

#[derive(Debug, Args)]
pub struct MarginalsArgs {
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    /// Style library, one annotation per line
    #[arg(long)]
    pub library: PathBuf,
    /// Sampling weights from `balance` (uniform when absent)
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Targets to measure the L1 gap against
    #[arg(long)]
    pub targets: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Per-style weights in library order, looked up by style id.
pub fn aligned_weights(weights: &SamplingWeights, ids: impl Iterator<Item = String>) -> Outcome<Vec<f64>> {
    let ids: Vec<String> = ids.collect();
    if ids.len() != weights.weights.len() {
        return Err(Failure::rejected(format!(
            "weights cover {} styles, library has {}",
            weights.weights.len(),
            ids.len()
        )));
    }
    ids.iter()
        .map(|id| {
            weights
                .weights
                .get(id)
                .copied()
                .ok_or_else(|| Failure::rejected(format!("no weight for style {id:?}")))
        })
        .collect()
}

fn l1_gaps(table: &MarginalTable, targets: &TargetMarginals) -> Outcome<Map<String, Value>> {
    let mut gaps = Map::new();
    for (attr, dist) in &targets.entries {
        let have = table
            .0
            .get(attr)
            .ok_or_else(|| Failure::rejected(format!("unknown target attribute {attr:?}")))?;
        let mut gap: f64 = dist.iter().map(|(v, t)| (have.get(v).copied().unwrap_or(0.0) - t).abs()).sum();
        gap += have
            .iter()
            .filter(|(v, _)| !dist.contains_key(*v))
            .map(|(_, p)| p.abs())
            .sum::<f64>();
        gaps.insert(attr.clone(), json!(gap));
    }
    Ok(gaps)
}

pub fn marginals(args: &MarginalsArgs) -> Outcome {
    let (tax, source) = io::load_taxonomy(args.taxonomy.as_deref())?;
    let library = io::read_library(&args.library, &tax)?;
    let weights = match &args.weights {
        Some(p) => {
            let doc: Value = io::read_json(p)?;
            let w = SamplingWeights::from_json(&doc).map_err(|e| Failure::file(p, e))?;
            Some(aligned_weights(&w, library.ids().map(str::to_string))?)
        }
        None => None,
    };
    let table = attribute_marginals(&tax, &library, weights.as_deref()).map_err(Failure::rejected)?;
    let mut doc = json!({ "marginals": table });
    if let Some(p) = &args.targets {
        let targets: TargetMarginals = io::read_json(p)?;
        let gaps = l1_gaps(&table, &targets)?;
        for (attr, gap) in &gaps {
            eprintln!("{attr}: L1 gap {:.4}", gap.as_f64().unwrap_or(f64::NAN));
        }
        doc["l1_gap"] = Value::Object(gaps);
    }
    let cfg = json!({
        "library": display(&args.library),
        "weights": args.weights.as_deref().map(display),
        "targets": args.targets.as_deref().map(display),
    });
    io::write_json(&args.out, &io::with_meta(doc, io::meta("marginals", &tax, &source, cfg)))?;
    eprintln!("marginals of {} styles written to {}", library.len(), args.out.display());
    Ok(())
}
