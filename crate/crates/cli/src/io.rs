use std::path::{Path, PathBuf};

use hairstyle_core::datastore::{read_jsonl, FeatureStore, SampleRecord, StyleLibrary};
use hairstyle_core::taxonomy::{HairstyleAnnotation, Taxonomy};
use serde::de::DeserializeOwned;
use serde_json::{json, Map, Value};

use crate::error::{Failure, Outcome};

pub const DATA_DIR_VAR: &str = "HAIRMONY_DATA_DIR";
pub const SCHEMA_FILE: &str = "taxonomy.v1.json";

/// Explicit path, else `$HAIRMONY_DATA_DIR/taxonomy.v1.json`, else the
/// schema compiled into the binary. Returns the taxonomy and its source.
pub fn load_taxonomy(path: Option<&Path>) -> Outcome<(Taxonomy, String)> {
    let path: Option<PathBuf> = path
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(DATA_DIR_VAR).map(|d| PathBuf::from(d).join(SCHEMA_FILE)));
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(&p).map_err(|e| Failure::file(&p, e))?;
            let tax = Taxonomy::from_json(&text).map_err(|e| Failure::file(&p, e))?;
            Ok((tax, p.display().to_string()))
        }
        None => Ok((Taxonomy::canonical(), "built-in".to_string())),
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Outcome<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::file(path, e))?;
    serde_json::from_str(&text).map_err(|e| Failure::file(path, e))
}

pub fn read_lines<T: DeserializeOwned>(path: &Path) -> Outcome<Vec<T>> {
    read_jsonl(path).map_err(|e| Failure::file(path, e))
}

pub fn read_samples(path: &Path) -> Outcome<Vec<SampleRecord>> {
    read_lines(path)
}

pub fn read_features(path: &Path) -> Outcome<FeatureStore> {
    FeatureStore::read(path).map_err(|e| Failure::file(path, e))
}

/// A library whose every annotation fits the taxonomy and its rules.
pub fn read_library(path: &Path, tax: &Taxonomy) -> Outcome<StyleLibrary> {
    let styles: Vec<HairstyleAnnotation> = read_lines(path)?;
    let library = StyleLibrary::new(styles).map_err(|e| Failure::rejected(format!("{}: {e}", path.display())))?;
    library
        .labels(tax)
        .map_err(|e| Failure::rejected(format!("{}: {e}", path.display())))?;
    Ok(library)
}

pub fn write_text(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text).map_err(|e| Failure::file(path, e))
}

pub fn write_json(path: &Path, value: &Value) -> Outcome {
    let mut text = serde_json::to_string_pretty(value).expect("values serialize");
    text.push('\n');
    write_text(path, &text)
}

/// `_meta` block shared by every output: command, tool version, schema
/// version and source, plus the effective configuration.
pub fn meta(command: &str, tax: &Taxonomy, tax_source: &str, config: Value) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), json!(command));
    m.insert("tool_version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("taxonomy".into(), json!({ "version": tax.version(), "source": tax_source }));
    m.insert("config".into(), config);
    m
}

/// Put `_meta` last in a JSON object.
pub fn with_meta(mut value: Value, meta: Map<String, Value>) -> Value {
    if let Value::Object(obj) = &mut value {
        obj.insert("_meta".into(), Value::Object(meta));
    }
    value
}

pub fn display(path: &Path) -> Value {
    json!(path.display().to_string())
}
