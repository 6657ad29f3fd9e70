//! Append-only JSON Lines record store.
//!
//! Every accepted record is one line, written and synced before the append
//! returns. Opening a store replays it; lines that do not parse or no longer
//! validate are skipped with a warning and never rewritten.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use hairstyle_core::taxonomy::{HairstyleAnnotation, Taxonomy};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub image_id: String,
    pub annotator_id: String,
    pub submitted_at: DateTime<Utc>,
    pub annotation: HairstyleAnnotation,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("image {0:?} already has an annotation")]
    Duplicate(String),
}

/// A store line that was skipped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineWarning {
    pub line: usize,
    pub reason: String,
}

impl std::fmt::Display for LineWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

/// Parse store lines, keeping the first valid record per image.
pub fn replay<R: BufRead>(reader: R, tax: &Taxonomy) -> io::Result<(Vec<AnnotationRecord>, Vec<LineWarning>)> {
    let mut records: Vec<AnnotationRecord> = Vec::new();
    let mut seen = HashMap::new();
    let mut warnings = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut warn = |reason: String| warnings.push(LineWarning { line: i + 1, reason });
        let record: AnnotationRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                warn(format!("unparseable record: {e}"));
                continue;
            }
        };
        if let Err(e) = tax.flatten(&record.annotation) {
            warn(format!("invalid annotation: {e}"));
            continue;
        }
        if seen.insert(record.image_id.clone(), records.len()).is_some() {
            warn(format!("second record for image {:?}", record.image_id));
            continue;
        }
        records.push(record);
    }
    Ok((records, warnings))
}

#[derive(Debug)]
pub struct Store {
    path: PathBuf,
    file: File,
    records: Vec<AnnotationRecord>,
    by_image: HashMap<String, usize>,
}

impl Store {
    /// Open (creating if absent) and replay the store at `path`.
    pub fn open(path: &Path, tax: &Taxonomy) -> Result<(Self, Vec<LineWarning>), StoreError> {
        let io_err = |source| StoreError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .read(true)
            .open(path)
            .map_err(io_err)?;
        let (records, warnings) = replay(BufReader::new(File::open(path).map_err(io_err)?), tax).map_err(io_err)?;
        let by_image = records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.image_id.clone(), i))
            .collect();
        let mut store = Self {
            path: path.to_path_buf(),
            file,
            records,
            by_image,
        };
        store.terminate_last_line().map_err(io_err)?;
        Ok((store, warnings))
    }

    /// A crash mid-append can leave a partial last line; start the next
    /// record on a fresh line so it is not glued onto it.
    fn terminate_last_line(&mut self) -> io::Result<()> {
        let bytes = std::fs::read(&self.path)?;
        if bytes.last().is_some_and(|&b| b != b'\n') {
            self.file.write_all(b"\n")?;
            self.file.sync_data()?;
        }
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn records(&self) -> &[AnnotationRecord] {
        &self.records
    }

    pub fn get(&self, image_id: &str) -> Option<&AnnotationRecord> {
        self.by_image.get(image_id).map(|&i| &self.records[i])
    }

    pub fn contains(&self, image_id: &str) -> bool {
        self.by_image.contains_key(image_id)
    }

    /// Durably append a record the caller has already validated.
    pub fn append(&mut self, record: AnnotationRecord) -> Result<(), StoreError> {
        if self.contains(&record.image_id) {
            return Err(StoreError::Duplicate(record.image_id));
        }
        let mut line = serde_json::to_vec(&record).expect("records serialize");
        line.push(b'\n');
        let io_err = |source| StoreError::Io {
            path: self.path.clone(),
            source,
        };
        self.file.write_all(&line).map_err(io_err)?;
        self.file.sync_data().map_err(io_err)?;
        self.by_image.insert(record.image_id.clone(), self.records.len());
        self.records.push(record);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportSummary {
    pub written: usize,
    pub warnings: Vec<LineWarning>,
}

/// Write one annotation per valid store record, with `style_id` set to the
/// image id, so the output can serve as a style library.
pub fn export<W: Write>(store_path: &Path, tax: &Taxonomy, mut out: W) -> Result<ExportSummary, StoreError> {
    let io_err = |source| StoreError::Io {
        path: store_path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(store_path).map_err(io_err)?);
    let (records, warnings) = replay(reader, tax).map_err(io_err)?;
    for r in &records {
        let mut ann = r.annotation.clone();
        ann.style_id = r.image_id.clone();
        serde_json::to_writer(&mut out, &ann).expect("annotations serialize");
        out.write_all(b"\n").map_err(io_err)?;
    }
    out.flush().map_err(io_err)?;
    Ok(ExportSummary {
        written: records.len(),
        warnings,
    })
}
