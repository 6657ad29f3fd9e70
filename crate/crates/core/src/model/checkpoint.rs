//! JSON checkpoint envelope. Tensors are base64 little-endian `f32` with
//! explicit shapes, so a save/load cycle is bit-exact.

use std::fs;
use std::io;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use super::{HeadConfig, Linear, ModelError, ModelParams};
use crate::datastore::StyleLibrary;
use crate::taxonomy::{HairstyleAnnotation, SlotDef};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed checkpoint: {0}")]
    Format(String),
    #[error("checkpoint version {found}, expected {CHECKPOINT_VERSION}")]
    Version { found: u32 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tensor {
    shape: Vec<usize>,
    data: String,
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    version: u32,
    head_cfg: HeadConfig,
    layout: Vec<SlotDef>,
    tensors: IndexMap<String, Tensor>,
    style_ids: Vec<String>,
    #[serde(default)]
    library: Vec<HairstyleAnnotation>,
    #[serde(default, rename = "_meta")]
    meta: Map<String, Value>,
}

/// A trained model together with everything needed to evaluate it: the
/// label layout it was trained against and the style annotations its
/// class indices refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub head_cfg: HeadConfig,
    pub layout: Vec<SlotDef>,
    pub params: ModelParams<f32>,
    pub style_ids: Vec<String>,
    pub library: Vec<HairstyleAnnotation>,
    pub meta: Map<String, Value>,
}

fn encode(values: &[f32]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

fn decode(name: &str, t: &Tensor) -> Result<Vec<f32>, CheckpointError> {
    let bytes = STANDARD
        .decode(&t.data)
        .map_err(|e| CheckpointError::Format(format!("{name}: {e}")))?;
    let expected: usize = t.shape.iter().product();
    if bytes.len() != expected * 4 {
        return Err(CheckpointError::Format(format!(
            "{name}: {} bytes for shape {:?}",
            bytes.len(),
            t.shape
        )));
    }
    let out: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    if out.iter().any(|x| !x.is_finite()) {
        return Err(CheckpointError::Format(format!("{name}: non-finite value")));
    }
    Ok(out)
}

impl Checkpoint {
    pub fn library(&self) -> Result<StyleLibrary, CheckpointError> {
        StyleLibrary::new(self.library.clone()).map_err(|e| CheckpointError::Format(e.to_string()))
    }

    pub fn to_json(&self) -> Value {
        let mut tensors = IndexMap::new();
        for (name, layer) in self.params.layers() {
            tensors.insert(
                format!("{name}.weight"),
                Tensor {
                    shape: vec![layer.rows, layer.cols],
                    data: encode(&layer.weight),
                },
            );
            tensors.insert(
                format!("{name}.bias"),
                Tensor {
                    shape: vec![layer.rows],
                    data: encode(&layer.bias),
                },
            );
        }
        let env = Envelope {
            version: CHECKPOINT_VERSION,
            head_cfg: self.head_cfg.clone(),
            layout: self.layout.clone(),
            tensors,
            style_ids: self.style_ids.clone(),
            library: self.library.clone(),
            meta: self.meta.clone(),
        };
        serde_json::to_value(env).expect("checkpoint envelope serializes")
    }

    pub fn from_json(doc: Value) -> Result<Self, CheckpointError> {
        let env: Envelope =
            serde_json::from_value(doc).map_err(|e| CheckpointError::Format(e.to_string()))?;
        if env.version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version { found: env.version });
        }
        let cfg = env.head_cfg;
        cfg.validate()?;
        let layout_cards: Vec<usize> = env.layout.iter().map(|s| s.cardinality).collect();
        if layout_cards != cfg.attribute_cardinalities {
            return Err(CheckpointError::Format(
                "layout cardinalities disagree with head config".into(),
            ));
        }
        if env.style_ids.len() != cfg.num_styles {
            return Err(CheckpointError::Format(format!(
                "{} style ids for {} styles",
                env.style_ids.len(),
                cfg.num_styles
            )));
        }
        if !env.library.is_empty()
            && !env.library.iter().map(|a| &a.style_id).eq(env.style_ids.iter())
        {
            return Err(CheckpointError::Format(
                "library order disagrees with style ids".into(),
            ));
        }

        let mut params = ModelParams::zeros(&cfg);
        for (name, layer) in ["shared", "style", "attr"].into_iter().zip(params.layers_mut()) {
            *layer = Self::read_layer(&env.tensors, name, layer.rows, layer.cols)?;
        }
        Ok(Self {
            head_cfg: cfg,
            layout: env.layout,
            params,
            style_ids: env.style_ids,
            library: env.library,
            meta: env.meta,
        })
    }

    fn read_layer(
        tensors: &IndexMap<String, Tensor>,
        name: &str,
        rows: usize,
        cols: usize,
    ) -> Result<Linear<f32>, CheckpointError> {
        let get = |suffix: &str, shape: Vec<usize>| {
            let key = format!("{name}.{suffix}");
            let t = tensors
                .get(&key)
                .ok_or_else(|| CheckpointError::Format(format!("missing tensor {key}")))?;
            if t.shape != shape {
                return Err(CheckpointError::Format(format!(
                    "{key} has shape {:?}, expected {shape:?}",
                    t.shape
                )));
            }
            decode(&key, t)
        };
        Ok(Linear {
            rows,
            cols,
            weight: get("weight", vec![rows, cols])?,
            bias: get("bias", vec![rows])?,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let mut text = serde_json::to_string_pretty(&self.to_json())
            .map_err(|e| CheckpointError::Format(e.to_string()))?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let text = fs::read_to_string(path)?;
        let doc = serde_json::from_str(&text).map_err(|e| CheckpointError::Format(e.to_string()))?;
        Self::from_json(doc)
    }
}
