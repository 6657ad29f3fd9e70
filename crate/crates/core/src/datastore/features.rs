//! Binary feature store.
//!
//! Layout (little-endian): magic `HMFT`, `u32` version (1), `u32` dim,
//! `u64` count, then `count * dim` `f32` values row-major. Sample ids live in
//! a JSON Lines sidecar (`<path>.ids.jsonl`), line `i` naming row `i`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"HMFT";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("version mismatch: expected {VERSION}, found {0}")]
    VersionMismatch(u32),
    #[error("dimension must be positive")]
    ZeroDim,
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("trailing bytes after payload")]
    TrailingBytes,
    #[error("NaN or infinite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("{ids} ids for {rows} rows")]
    IdCountMismatch { ids: usize, rows: usize },
    #[error("row has {found} values, store dimension is {dim}")]
    RowLength { dim: usize, found: usize },
    #[error("id sidecar line {line}: {source}")]
    Sidecar {
        line: usize,
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStore {
    dim: usize,
    ids: Vec<String>,
    data: Vec<f32>,
    index: HashMap<String, usize>,
}

impl FeatureStore {
    pub fn new(dim: usize, ids: Vec<String>, data: Vec<f32>) -> Result<Self, StoreError> {
        if dim == 0 {
            return Err(StoreError::ZeroDim);
        }
        if !data.len().is_multiple_of(dim) {
            return Err(StoreError::RowLength {
                dim,
                found: data.len() % dim,
            });
        }
        let rows = data.len() / dim;
        if ids.len() != rows {
            return Err(StoreError::IdCountMismatch {
                ids: ids.len(),
                rows,
            });
        }
        check_finite(&data, dim)?;
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(StoreError::DuplicateId(id.clone()));
            }
        }
        Ok(Self {
            dim,
            ids,
            data,
            index,
        })
    }

    pub fn empty(dim: usize) -> Result<Self, StoreError> {
        Self::new(dim, Vec::new(), Vec::new())
    }

    pub fn push(&mut self, id: impl Into<String>, row: &[f32]) -> Result<(), StoreError> {
        let id = id.into();
        if row.len() != self.dim {
            return Err(StoreError::RowLength {
                dim: self.dim,
                found: row.len(),
            });
        }
        if let Some(col) = row.iter().position(|v| !v.is_finite()) {
            return Err(StoreError::NonFinite {
                row: self.ids.len(),
                col,
            });
        }
        if self.index.contains_key(&id) {
            return Err(StoreError::DuplicateId(id));
        }
        self.index.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.index_of(id).map(|i| self.row(i))
    }

    /// Write the binary payload (header + vectors) only.
    pub fn write_payload<W: Write>(&self, mut w: W) -> Result<(), StoreError> {
        w.write_all(&MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a binary payload; returns `(dim, values)`.
    pub fn read_payload<R: Read>(mut r: R) -> Result<(usize, Vec<f32>), StoreError> {
        let mut header = [0u8; HEADER_LEN];
        let mut filled = 0;
        while filled < HEADER_LEN {
            let n = r.read(&mut header[filled..])?;
            if n == 0 {
                break;
            }
            filled += n;
        }
        if filled >= 4 && header[..4] != MAGIC {
            return Err(StoreError::BadMagic(header[..4].try_into().unwrap()));
        }
        if filled < HEADER_LEN {
            return Err(StoreError::Truncated {
                expected: HEADER_LEN as u64,
                found: filled as u64,
            });
        }
        let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(StoreError::VersionMismatch(version));
        }
        let dim = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        if dim == 0 {
            return Err(StoreError::ZeroDim);
        }
        let count = u64::from_le_bytes(header[12..20].try_into().unwrap());
        let expected = count
            .checked_mul(dim as u64)
            .and_then(|n| n.checked_mul(4))
            .ok_or(StoreError::Truncated {
                expected: u64::MAX,
                found: 0,
            })?;

        let mut payload = Vec::new();
        r.by_ref().take(expected).read_to_end(&mut payload)?;
        if (payload.len() as u64) < expected {
            return Err(StoreError::Truncated {
                expected: HEADER_LEN as u64 + expected,
                found: HEADER_LEN as u64 + payload.len() as u64,
            });
        }
        let mut probe = [0u8; 1];
        if r.read(&mut probe)? != 0 {
            return Err(StoreError::TrailingBytes);
        }
        let data: Vec<f32> = payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        check_finite(&data, dim)?;
        Ok((dim, data))
    }

    /// Write the payload to `path` and the ids to its sidecar.
    pub fn write(&self, path: &Path) -> Result<(), StoreError> {
        self.write_payload(BufWriter::new(File::create(path)?))?;
        let mut ids = BufWriter::new(File::create(sidecar_path(path))?);
        for id in &self.ids {
            serde_json::to_writer(&mut ids, id).map_err(io::Error::from)?;
            ids.write_all(b"\n")?;
        }
        ids.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, StoreError> {
        let (dim, data) = Self::read_payload(BufReader::new(File::open(path)?))?;
        let reader = BufReader::new(File::open(sidecar_path(path))?);
        let mut ids = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let id: String = serde_json::from_str(&line)
                .map_err(|source| StoreError::Sidecar { line: i + 1, source })?;
            ids.push(id);
        }
        Self::new(dim, ids, data)
    }
}

fn check_finite(data: &[f32], dim: usize) -> Result<(), StoreError> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(StoreError::NonFinite {
            row: i / dim,
            col: i % dim,
        }),
        None => Ok(()),
    }
}

/// `<path>.ids.jsonl`
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".ids.jsonl");
    PathBuf::from(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> FeatureStore {
        FeatureStore::new(
            4,
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                0.0, 1.5, -2.25, 3.0e-8, //
                f32::MIN_POSITIVE, -0.0, 1e30, 7.0, //
                0.1, 0.2, 0.3, 0.4,
            ],
        )
        .unwrap()
    }

    #[test]
    fn empty_store_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.hmft");
        let store = FeatureStore::empty(8192).unwrap();
        store.write(&path).unwrap();
        let back = FeatureStore::read(&path).unwrap();
        assert_eq!(back.dim(), 8192);
        assert!(back.is_empty());
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 20);
    }

    #[test]
    fn payload_round_trips_bit_for_bit() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.hmft");
        let store = small();
        store.write(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"HMFT");
        assert_eq!(bytes.len(), 20 + 12 * 4);
        // header fields, little-endian
        assert_eq!(&bytes[4..8], &[1, 0, 0, 0]);
        assert_eq!(&bytes[8..12], &[4, 0, 0, 0]);
        assert_eq!(&bytes[12..20], &[3, 0, 0, 0, 0, 0, 0, 0]);

        let back = FeatureStore::read(&path).unwrap();
        let bits = |s: &FeatureStore| s.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&store));
        assert_eq!(back.ids(), store.ids());

        let again = dir.path().join("g.hmft");
        back.write(&again).unwrap();
        assert_eq!(std::fs::read(&again).unwrap(), bytes);
    }

    #[test]
    fn header_errors() {
        let mut bytes = Vec::new();
        small().write_payload(&mut bytes).unwrap();

        let mut bad = bytes.clone();
        bad[..4].copy_from_slice(b"XXXX");
        let err = FeatureStore::read_payload(&bad[..]).unwrap_err();
        assert!(err.to_string().starts_with("bad magic"));

        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert!(matches!(
            FeatureStore::read_payload(&v2[..]),
            Err(StoreError::VersionMismatch(2))
        ));

        assert!(matches!(
            FeatureStore::read_payload(&bytes[..bytes.len() - 3]),
            Err(StoreError::Truncated { .. })
        ));
        assert!(matches!(
            FeatureStore::read_payload(&bytes[..10]),
            Err(StoreError::Truncated { .. })
        ));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(
            FeatureStore::read_payload(&long[..]),
            Err(StoreError::TrailingBytes)
        ));

        let mut nan = bytes.clone();
        nan[20 + 4 * 5..20 + 4 * 6].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            FeatureStore::read_payload(&nan[..]),
            Err(StoreError::NonFinite { row: 1, col: 1 })
        ));
    }

    #[test]
    fn invariants_enforced_on_construction() {
        assert!(matches!(
            FeatureStore::new(2, vec!["a".into(), "a".into()], vec![0.0; 4]),
            Err(StoreError::DuplicateId(_))
        ));
        assert!(matches!(
            FeatureStore::new(2, vec!["a".into()], vec![f32::INFINITY, 0.0]),
            Err(StoreError::NonFinite { row: 0, col: 0 })
        ));
        assert!(matches!(
            FeatureStore::new(2, vec!["a".into()], vec![0.0; 4]),
            Err(StoreError::IdCountMismatch { ids: 1, rows: 2 })
        ));
        let mut s = small();
        assert!(s.push("d", &[1.0; 3]).is_err());
        s.push("d", &[1.0; 4]).unwrap();
        assert_eq!(s.get("d"), Some(&[1.0f32; 4][..]));
    }
}
