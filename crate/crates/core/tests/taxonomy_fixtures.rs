use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use hairstyle_core::datastore::read_jsonl;
use hairstyle_core::taxonomy::{AttributeDef, HairstyleAnnotation, Taxonomy};
use serde::Deserialize;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Sections of the reference listing: `[regions]`, `[global] Name` and
/// `[regional] Name` headers, each followed by one value per line.
#[derive(Debug, Default)]
struct Listing {
    regions: Vec<String>,
    global: Vec<(String, Vec<String>)>,
    regional: Vec<(String, Vec<String>)>,
}

fn parse_listing(text: &str) -> Listing {
    let mut out = Listing::default();
    let mut current: Option<&mut Vec<String>> = None;
    for line in text.lines() {
        if line == "[regions]" {
            current = Some(&mut out.regions);
        } else if let Some(name) = line.strip_prefix("[global] ") {
            out.global.push((name.to_string(), vec![]));
            current = Some(&mut out.global.last_mut().unwrap().1);
        } else if let Some(name) = line.strip_prefix("[regional] ") {
            out.regional.push((name.to_string(), vec![]));
            current = Some(&mut out.regional.last_mut().unwrap().1);
        } else if !line.is_empty() {
            current.as_mut().expect("value before any header").push(line.to_string());
        }
    }
    out
}

/// Hair Type entries in the listing carry a parenthesised Walker-type
/// descriptor; the schema stores the name only.
fn schema_value(attr: &str, listed: &str) -> String {
    if attr.eq_ignore_ascii_case("hair type") {
        listed.split(" (").next().unwrap().to_string()
    } else {
        listed.to_string()
    }
}

fn diff_attributes(kind: &str, listed: &[(String, Vec<String>)], schema: &[AttributeDef]) -> Vec<String> {
    let mut diffs = Vec::new();
    if listed.len() != schema.len() {
        diffs.push(format!("{kind}: {} listed attributes, {} in schema", listed.len(), schema.len()));
    }
    for ((name, values), def) in listed.iter().zip(schema) {
        if !name.eq_ignore_ascii_case(&def.name) {
            diffs.push(format!("{kind}: listed {name:?}, schema {:?}", def.name));
        }
        let want: Vec<String> = values.iter().map(|v| schema_value(name, v)).collect();
        let got: Vec<String> = def.declared_values().to_vec();
        if want != got {
            diffs.push(format!("{kind} {name}: listed {want:?}, schema {got:?}"));
        }
    }
    diffs
}

#[test]
fn canonical_schema_matches_reference_listing() {
    let start = Instant::now();
    let tax = Taxonomy::canonical();
    assert_eq!(tax.global_attributes().len(), 10);
    assert_eq!(tax.regional_attributes().len(), 8);
    assert_eq!(tax.regions().len(), 8);
    assert_eq!(tax.slot_count(), 74);

    let listing = parse_listing(&std::fs::read_to_string(fixture("taxonomy/value_lists.txt")).unwrap());
    let mut diffs = Vec::new();
    if listing.regions != tax.regions() {
        diffs.push(format!("regions: listed {:?}, schema {:?}", listing.regions, tax.regions()));
    }
    diffs.extend(diff_attributes("global", &listing.global, tax.global_attributes()));
    diffs.extend(diff_attributes("regional", &listing.regional, tax.regional_attributes()));
    assert!(diffs.is_empty(), "schema differs from listing:\n{}", diffs.join("\n"));
    assert!(start.elapsed() < Duration::from_secs(1));
}

#[derive(Deserialize)]
struct GoldenCase {
    case: String,
    annotation: HairstyleAnnotation,
    expected: Vec<String>,
}

#[test]
fn golden_annotations_yield_expected_violations() {
    let start = Instant::now();
    let tax = Taxonomy::canonical();
    let cases: Vec<GoldenCase> = read_jsonl(&fixture("validation/golden.jsonl")).unwrap();
    assert!(cases.len() >= 20);
    assert!(cases.iter().any(|c| c.expected.is_empty()));
    for c in &cases {
        let mut got: Vec<String> = tax
            .validate_annotation(&c.annotation)
            .unwrap_or_else(|e| panic!("{}: {e}", c.case))
            .into_iter()
            .map(|v| v.rule_id)
            .collect();
        got.sort();
        let mut want = c.expected.clone();
        want.sort();
        assert_eq!(got, want, "case {:?}", c.case);
        let distinct: std::collections::BTreeSet<&String> = want.iter().collect();
        assert!(distinct.len() <= 1, "case {:?} should break at most one rule", c.case);
    }
    assert!(start.elapsed() < Duration::from_secs(1));
}
