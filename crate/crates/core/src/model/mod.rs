//! Classification head over frozen backbone features.
//!
//! A shared fully connected layer feeds a style head and one softmax head
//! per taxonomy slot. Parameters are generic over the float type: training
//! runs in `f32`, gradient checks in `f64`.

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taxonomy::Taxonomy;

mod backward;
pub mod checkpoint;
mod forward;
mod optim;
mod train;

pub use backward::{backward, Dropout, Example};
pub use checkpoint::{Checkpoint, CheckpointError, CHECKPOINT_VERSION};
pub use forward::{attr_loss, cross_entropy, forward, predict, predict_batch, softmax, style_loss, ForwardOutput, Mode, Prediction};
pub use optim::{adamw_step, cosine_lr, AdamState, OptimConfig};
pub use train::{train, EpochRecord, TrainConfig, TrainOutput, TrainingSet};

pub trait Scalar:
    Float + Sum + AddAssign + SubAssign + MulAssign + Default + Debug + Send + Sync + 'static
{
    fn of(x: f64) -> Self;
}

impl Scalar for f32 {
    fn of(x: f64) -> Self {
        x as f32
    }
}

impl Scalar for f64 {
    fn of(x: f64) -> Self {
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttrHeadInput {
    /// Attribute heads read the shared hidden layer.
    #[default]
    Hidden,
    /// Attribute heads read the backbone features directly.
    Feature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadConfig {
    pub feature_dim: usize,
    pub hidden_dim: usize,
    pub num_styles: usize,
    pub attribute_cardinalities: Vec<usize>,
    pub dropout_rate: f64,
    #[serde(default)]
    pub attr_head_input: AttrHeadInput,
}

pub const DEFAULT_DROPOUT: f64 = 0.1;

impl HeadConfig {
    /// Full-size preset: 8192-d features, 4096 hidden units, 480 styles.
    pub fn preset(tax: &Taxonomy) -> Self {
        Self::for_taxonomy(tax, 8192, 4096, 480)
    }

    pub fn for_taxonomy(tax: &Taxonomy, feature_dim: usize, hidden_dim: usize, num_styles: usize) -> Self {
        Self {
            feature_dim,
            hidden_dim,
            num_styles,
            attribute_cardinalities: tax.cardinalities(),
            dropout_rate: DEFAULT_DROPOUT,
            attr_head_input: AttrHeadInput::Hidden,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::Config(m.to_string()));
        if self.feature_dim == 0 || self.hidden_dim == 0 || self.num_styles == 0 {
            return bad("dimensions must be positive");
        }
        if self.attribute_cardinalities.contains(&0) {
            return bad("attribute cardinalities must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad("dropout_rate must lie in [0, 1)");
        }
        Ok(())
    }

    pub fn attr_input_dim(&self) -> usize {
        match self.attr_head_input {
            AttrHeadInput::Hidden => self.hidden_dim,
            AttrHeadInput::Feature => self.feature_dim,
        }
    }

    /// Start of each head's rows in the concatenated attribute layer, plus
    /// a final entry equal to the total row count.
    pub fn attr_offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.attribute_cardinalities.len() + 1);
        let mut acc = 0;
        out.push(0);
        for c in &self.attribute_cardinalities {
            acc += c;
            out.push(acc);
        }
        out
    }

    pub fn attr_rows(&self) -> usize {
        self.attribute_cardinalities.iter().sum()
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid head config: {0}")]
    Config(String),
    #[error("expected a {expected}-dimensional input, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("label vector has {actual} slots, heads expect {expected}")]
    Layout { expected: usize, actual: usize },
    #[error("label {label} out of range for head {head} of cardinality {cardinality}")]
    LabelRange { head: usize, label: usize, cardinality: usize },
    #[error("style index {style} out of range for {num_styles} styles")]
    StyleRange { style: usize, num_styles: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("total_steps must be positive")]
    ZeroSteps,
}

/// Dense affine layer; `weight` is row-major `rows × cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear<T> {
    pub rows: usize,
    pub cols: usize,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Linear<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            weight: vec![T::zero(); rows * cols],
            bias: vec![T::zero(); rows],
        }
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.weight[r * self.cols..(r + 1) * self.cols]
    }

    /// `W x + b`.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|r| dot(self.row(r), x) + self.bias[r])
            .collect()
    }

    /// `dx += Wᵀ g`.
    pub fn accumulate_input_grad(&self, g: &[T], dx: &mut [T]) {
        for (r, &gr) in g.iter().enumerate() {
            if gr != T::zero() {
                for (d, &w) in dx.iter_mut().zip(self.row(r)) {
                    *d += gr * w;
                }
            }
        }
    }

    pub fn cast<U: Scalar>(&self) -> Linear<U> {
        let conv = |v: &[T]| v.iter().map(|x| U::of(x.to_f64().unwrap())).collect();
        Linear {
            rows: self.rows,
            cols: self.cols,
            weight: conv(&self.weight),
            bias: conv(&self.bias),
        }
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub shared: Linear<T>,
    pub style: Linear<T>,
    /// All attribute heads stacked; head `t` owns rows `attr_offsets[t]..attr_offsets[t+1]`.
    pub attr: Linear<T>,
}

impl<T: Scalar> ModelParams<T> {
    pub fn zeros(cfg: &HeadConfig) -> Self {
        Self {
            shared: Linear::zeros(cfg.hidden_dim, cfg.feature_dim),
            style: Linear::zeros(cfg.num_styles, cfg.hidden_dim),
            attr: Linear::zeros(cfg.attr_rows(), cfg.attr_input_dim()),
        }
    }

    pub fn layers(&self) -> [(&'static str, &Linear<T>); 3] {
        [("shared", &self.shared), ("style", &self.style), ("attr", &self.attr)]
    }

    pub fn layers_mut(&mut self) -> [&mut Linear<T>; 3] {
        [&mut self.shared, &mut self.style, &mut self.attr]
    }

    pub fn check_shapes(&self, cfg: &HeadConfig) -> Result<(), ModelError> {
        let want = Self::zeros(cfg);
        for ((name, got), (_, exp)) in self.layers().into_iter().zip(want.layers()) {
            if got.rows != exp.rows
                || got.cols != exp.cols
                || got.weight.len() != exp.weight.len()
                || got.bias.len() != exp.bias.len()
            {
                return Err(ModelError::Config(format!(
                    "{name} layer is {}x{}, config expects {}x{}",
                    got.rows, got.cols, exp.rows, exp.cols
                )));
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers()
            .iter()
            .all(|(_, l)| l.weight.iter().chain(&l.bias).all(|x| x.is_finite()))
    }

    pub fn parameter_count(&self) -> usize {
        self.layers()
            .iter()
            .map(|(_, l)| l.weight.len() + l.bias.len())
            .sum()
    }

    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        ModelParams {
            shared: self.shared.cast(),
            style: self.style.cast(),
            attr: self.attr.cast(),
        }
    }
}

/// Weights uniform in ±1/√fan_in, biases zero; deterministic in `seed`.
pub fn init_params<T: Scalar>(cfg: &HeadConfig, seed: u64) -> Result<ModelParams<T>, ModelError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ModelParams::zeros(cfg);
    for layer in params.layers_mut() {
        let bound = 1.0 / (layer.cols as f64).sqrt();
        for w in &mut layer.weight {
            *w = T::of(rng.gen_range(-bound..bound));
        }
    }
    Ok(params)
}
