use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::backward::{backward, Dropout, Example};
use super::optim::{adamw_step, cosine_lr, AdamState, OptimConfig};
use super::{init_params, HeadConfig, ModelError, ModelParams};
use crate::datastore::Dataset;
use crate::par::Execution;
use crate::taxonomy::{FlattenError, LabelVector, Taxonomy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr_max: f64,
    pub lr_min: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub weight_decay: f64,
    pub betas: [f64; 2],
    pub eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let optim = OptimConfig::default();
        Self {
            lr_max: 3e-4,
            lr_min: 0.0,
            epochs: 30,
            batch_size: 512,
            weight_decay: optim.weight_decay,
            betas: optim.betas,
            eps: optim.eps,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn optim(&self) -> OptimConfig {
        OptimConfig {
            weight_decay: self.weight_decay,
            betas: self.betas,
            eps: self.eps,
        }
    }

    pub fn steps_per_epoch(&self, samples: usize) -> usize {
        samples.div_ceil(self.batch_size.max(1))
    }
}

/// Feature rows with their style index; attribute labels come from the
/// style's annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub dim: usize,
    pub features: Vec<f32>,
    pub styles: Vec<usize>,
    /// Label vector of each style, by style index.
    pub style_labels: Vec<LabelVector>,
}

impl TrainingSet {
    pub fn from_dataset(ds: &Dataset, tax: &Taxonomy) -> Result<Self, FlattenError> {
        let mut features = Vec::with_capacity(ds.len() * ds.features.dim());
        for i in 0..ds.len() {
            features.extend_from_slice(ds.feature(i));
        }
        Ok(Self {
            dim: ds.features.dim(),
            features,
            styles: ds.classes().to_vec(),
            style_labels: ds.styles.labels(tax)?,
        })
    }

    pub fn len(&self) -> usize {
        self.styles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.styles.is_empty()
    }

    pub fn example(&self, i: usize) -> Example<'_, f32> {
        Example {
            features: &self.features[i * self.dim..(i + 1) * self.dim],
            style: self.styles[i],
            labels: self.style_labels[self.styles[i]].as_slice(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Learning rate of the epoch's first step.
    pub lr: f64,
    /// Sample-weighted mean training loss over the epoch.
    pub loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub params: ModelParams<f32>,
    pub history: Vec<EpochRecord>,
    pub total_steps: usize,
}

const SHUFFLE_STREAM: u64 = 1;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Dropout key of optimizer step `step`.
pub(crate) fn dropout_key(seed: u64, step: usize) -> u64 {
    splitmix64(seed ^ splitmix64(step as u64))
}

/// Mini-batch AdamW with a per-step cosine schedule. Initialisation,
/// shuffling and dropout are all derived from `train_cfg.seed`.
pub fn train(
    set: &TrainingSet,
    head_cfg: &HeadConfig,
    train_cfg: &TrainConfig,
    exec: Execution,
) -> Result<TrainOutput, ModelError> {
    head_cfg.validate()?;
    if set.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    if set.dim != head_cfg.feature_dim {
        return Err(ModelError::Dimension {
            expected: head_cfg.feature_dim,
            actual: set.dim,
        });
    }
    if set.style_labels.len() != head_cfg.num_styles {
        return Err(ModelError::Config(format!(
            "{} style label vectors for {} styles",
            set.style_labels.len(),
            head_cfg.num_styles
        )));
    }
    if train_cfg.batch_size == 0 || train_cfg.epochs == 0 {
        return Err(ModelError::Config("epochs and batch_size must be positive".into()));
    }

    let mut params = init_params::<f32>(head_cfg, train_cfg.seed)?;
    let mut state = AdamState::new(head_cfg);
    let optim = train_cfg.optim();
    let per_epoch = train_cfg.steps_per_epoch(set.len());
    let total_steps = per_epoch * train_cfg.epochs;

    let mut shuffle = ChaCha8Rng::seed_from_u64(train_cfg.seed);
    shuffle.set_stream(SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..set.len()).collect();
    let mut history = Vec::with_capacity(train_cfg.epochs);
    let mut step = 0;
    for epoch in 0..train_cfg.epochs {
        order.shuffle(&mut shuffle);
        let epoch_lr = cosine_lr(step, total_steps, train_cfg.lr_max, train_cfg.lr_min)?;
        let mut loss_sum = 0.0;
        for chunk in order.chunks(train_cfg.batch_size) {
            let lr = cosine_lr(step, total_steps, train_cfg.lr_max, train_cfg.lr_min)?;
            let batch: Vec<Example<'_, f32>> = chunk.iter().map(|&i| set.example(i)).collect();
            let dropout = Dropout::Seeded(dropout_key(train_cfg.seed, step));
            let (grads, loss) = backward(&params, head_cfg, &batch, dropout, exec)?;
            adamw_step(&mut params, &grads, &mut state, lr, &optim);
            loss_sum += f64::from(loss) * chunk.len() as f64;
            step += 1;
        }
        history.push(EpochRecord {
            epoch,
            lr: epoch_lr,
            loss: loss_sum / set.len() as f64,
        });
    }
    Ok(TrainOutput {
        params,
        history,
        total_steps,
    })
}
