use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use indexmap::IndexMap;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taxonomy::{FlattenError, HairstyleAnnotation, LabelVector, Taxonomy};

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
}

/// Read one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, JsonlError> {
    parse_jsonl(BufReader::new(File::open(path)?))
}

pub fn parse_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>, JsonlError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|source| JsonlError::Parse {
                line: i + 1,
                source,
            })?,
        );
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// One evaluated or training sample: a feature row joined to a style.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: String,
    pub style_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demographics: Option<IndexMap<String, String>>,
}

/// Demographic categories and their group names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemographicSchema {
    pub categories: IndexMap<String, Vec<String>>,
}

pub const GENDER: &str = "gender";
pub const AGE: &str = "age";
pub const ANCESTRY: &str = "ancestry";

impl DemographicSchema {
    /// Groups of the labelled FairFace evaluation subset.
    pub fn canonical() -> Self {
        let own = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let mut categories = IndexMap::new();
        categories.insert(GENDER.to_string(), own(&["Female", "Male"]));
        categories.insert(
            AGE.to_string(),
            own(&["10-19", "20-29", "30-39", "40-49", "50-59", "60-69", "70+"]),
        );
        categories.insert(
            ANCESTRY.to_string(),
            own(&[
                "Black",
                "East Asian",
                "Indian",
                "Latino",
                "Middle Eastern",
                "Southeast Asian",
                "White",
            ]),
        );
        Self { categories }
    }

    /// Problems with one sample's demographics, as `(category, group)` pairs
    /// that are unknown. Missing categories are not reported here.
    pub fn unknown_groups<'a>(
        &self,
        demographics: &'a IndexMap<String, String>,
    ) -> Vec<(&'a str, &'a str)> {
        demographics
            .iter()
            .filter(|(cat, group)| {
                self.categories
                    .get(cat.as_str())
                    .is_none_or(|groups| !groups.contains(group))
            })
            .map(|(c, g)| (c.as_str(), g.as_str()))
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum LibraryError {
    #[error("duplicate style id {0:?}")]
    DuplicateStyle(String),
}

/// Annotated styles in class-index order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StyleLibrary {
    styles: IndexMap<String, HairstyleAnnotation>,
}

impl StyleLibrary {
    pub fn new(annotations: Vec<HairstyleAnnotation>) -> Result<Self, LibraryError> {
        let mut styles = IndexMap::with_capacity(annotations.len());
        for ann in annotations {
            let id = ann.style_id.clone();
            if styles.insert(id.clone(), ann).is_some() {
                return Err(LibraryError::DuplicateStyle(id));
            }
        }
        Ok(Self { styles })
    }

    pub fn len(&self) -> usize {
        self.styles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.styles.is_empty()
    }

    pub fn get(&self, style_id: &str) -> Option<&HairstyleAnnotation> {
        self.styles.get(style_id)
    }

    pub fn index_of(&self, style_id: &str) -> Option<usize> {
        self.styles.get_index_of(style_id)
    }

    pub fn by_index(&self, i: usize) -> &HairstyleAnnotation {
        &self.styles[i]
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.styles.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &HairstyleAnnotation> {
        self.styles.values()
    }

    pub fn annotations(&self) -> Vec<HairstyleAnnotation> {
        self.styles.values().cloned().collect()
    }

    /// Flatten every style; fails on the first invalid annotation.
    pub fn labels(&self, tax: &Taxonomy) -> Result<Vec<LabelVector>, FlattenError> {
        self.styles.values().map(|a| tax.flatten(a)).collect()
    }
}
