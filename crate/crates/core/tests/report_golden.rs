//! Constant-predictor report on a hand-evaluated eight-sample fixture.
//!
//! Fixture: styles A (straight, shoulder length), B (coily braided bun,
//! short) and C (bald); samples a1-a4 are A, b1-b2 are B, c1-c2 are C.
//! Every prediction is A. Per sample, A is right on every metric; B is
//! right on Bald and Bang Styling only; C is right on Bang Styling and
//! Gathered only.

use std::fs;
use std::path::{Path, PathBuf};

use hairstyle_core::datastore::{read_jsonl, DemographicSchema, SampleRecord, StyleLibrary};
use hairstyle_core::evaluation::{collate_predictions, report, Collator, FairnessReport, Metric, PredictionRecord};
use hairstyle_core::taxonomy::{HairstyleAnnotation, Taxonomy};

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/report")
}

fn build() -> FairnessReport {
    let dir = fixture_dir();
    let tax = Taxonomy::canonical();
    let styles: Vec<HairstyleAnnotation> = read_jsonl(&dir.join("styles.jsonl")).unwrap();
    let library = StyleLibrary::new(styles).unwrap();
    let samples: Vec<SampleRecord> = read_jsonl(&dir.join("samples.jsonl")).unwrap();
    let preds: Vec<PredictionRecord> = read_jsonl(&dir.join("predictions.jsonl")).unwrap();
    let collator = Collator::new(&tax).unwrap();
    let evals = collate_predictions(&collator, &library, &samples, &preds).unwrap();
    report(&evals, &DemographicSchema::canonical()).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

#[test]
fn hand_evaluated_numbers() {
    let r = build();
    use Metric::*;
    // 4 A right everywhere; B right on Bald/Bang; C right on Bang/Gathered.
    let overall = [(Bald, 6.0 / 8.0), (BangStyling, 1.0), (Gathered, 6.0 / 8.0), (Length, 0.5), (HairType, 0.5), (Strands, 0.5)];
    for (m, v) in overall {
        assert!(close(r.accuracy[&m], v), "{m}");
    }
    assert!(close(r.mean_accuracy, 4.0 / 6.0));

    // gender: Female = a1 a2 a3 b1, Male = a4 b2 c1 c2
    let male = &r.categories["gender"].groups["Male"].accuracy;
    assert!(close(male[&Bald], 0.5) && close(male[&Length], 0.25) && close(male[&Gathered], 0.75));
    let g = &r.categories["gender"].fairness;
    assert!(close(g[&Bald].unwrap(), 75.0));
    assert!(close(g[&Length].unwrap(), 200.0 / 3.0));
    assert_eq!(g[&BangStyling], Some(100.0));

    // age: both groups hold 2 A, 1 B, 1 C
    assert!(r.categories["age"].fairness.values().all(|f| *f == Some(100.0)));

    // ancestry: Black = b1 b2, East Asian = a4 c1 c2, White = a1 a2 a3
    let anc = &r.categories["ancestry"];
    assert_eq!(anc.groups.keys().collect::<Vec<_>>(), ["Black", "East Asian", "White"]);
    assert!(close(anc.fairness[&Bald].unwrap(), 700.0 / 9.0));
    assert!(close(anc.fairness[&Gathered].unwrap(), 200.0 / 3.0));
    assert!(close(anc.fairness[&HairType].unwrap(), 400.0 / 9.0));

    // (475 + 600 + 3400/9) / 18
    assert_eq!(r.fairness_cells.len(), 18);
    assert!(close(r.mean_fairness, 13075.0 / 162.0));
}

fn golden(name: &str, actual: &str) {
    let path = fixture_dir().join(name);
    if std::env::var_os("BLESS").is_some() {
        fs::write(&path, actual).unwrap();
    }
    let expected = fs::read_to_string(&path).unwrap();
    assert!(expected == actual, "{name} differs from golden file");
}

#[test]
fn json_report_matches_golden() {
    golden("report.golden.json", &build().to_json_pretty());
}

#[test]
fn text_report_matches_golden() {
    golden("report.golden.txt", &build().render_text("constant"));
}

#[test]
fn csv_report_matches_golden() {
    golden("report.golden.csv", &build().to_csv());
}

#[test]
fn json_report_round_trips() {
    let r = build();
    let back: FairnessReport = serde_json::from_str(&r.to_json_pretty()).unwrap();
    assert_eq!(back, r);
}
