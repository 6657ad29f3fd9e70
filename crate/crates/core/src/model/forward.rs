use rand::{Rng, RngCore};

use super::{AttrHeadInput, HeadConfig, ModelError, ModelParams, Scalar};
use crate::par::{self, Execution};

pub enum Mode<'a> {
    Eval,
    /// Inverted dropout on the hidden layer, masks drawn from the given RNG.
    Train(&'a mut dyn RngCore),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput<T> {
    /// Post-activation, post-dropout hidden layer.
    pub hidden: Vec<T>,
    pub style_logits: Vec<T>,
    /// All attribute heads concatenated in slot order.
    pub attr_logits: Vec<T>,
    pub(crate) pre_activation: Vec<T>,
    /// Per-unit dropout multiplier (0 or 1/(1-p)); `None` when no dropout ran.
    pub(crate) mask: Option<Vec<T>>,
}

impl<T: Scalar> ForwardOutput<T> {
    pub fn attr_head<'a>(&'a self, cfg: &HeadConfig, t: usize) -> &'a [T] {
        let off = cfg.attr_offsets();
        &self.attr_logits[off[t]..off[t + 1]]
    }

    pub fn attr_heads<'a>(&'a self, cfg: &HeadConfig) -> Vec<&'a [T]> {
        cfg.attr_offsets()
            .windows(2)
            .map(|w| &self.attr_logits[w[0]..w[1]])
            .collect()
    }
}

pub fn forward<T: Scalar>(
    params: &ModelParams<T>,
    cfg: &HeadConfig,
    f: &[T],
    mode: Mode<'_>,
) -> Result<ForwardOutput<T>, ModelError> {
    if f.len() != cfg.feature_dim {
        return Err(ModelError::Dimension {
            expected: cfg.feature_dim,
            actual: f.len(),
        });
    }
    let pre_activation = params.shared.apply(f);
    let mut hidden: Vec<T> = pre_activation.iter().map(|&z| z.max(T::zero())).collect();
    let mask = match mode {
        Mode::Train(rng) if cfg.dropout_rate > 0.0 => {
            let keep = T::of(1.0 / (1.0 - cfg.dropout_rate));
            let mask: Vec<T> = (0..hidden.len())
                .map(|_| {
                    if rng.gen::<f64>() < cfg.dropout_rate {
                        T::zero()
                    } else {
                        keep
                    }
                })
                .collect();
            for (h, &m) in hidden.iter_mut().zip(&mask) {
                *h *= m;
            }
            Some(mask)
        }
        _ => None,
    };
    let style_logits = params.style.apply(&hidden);
    let attr_logits = match cfg.attr_head_input {
        AttrHeadInput::Hidden => params.attr.apply(&hidden),
        AttrHeadInput::Feature => params.attr.apply(f),
    };
    Ok(ForwardOutput {
        hidden,
        style_logits,
        attr_logits,
        pre_activation,
        mask,
    })
}

pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let m = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&l| (l - m).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// `−log softmax(logits)[target]`, stabilised by max subtraction.
pub fn cross_entropy<T: Scalar>(logits: &[T], target: usize) -> T {
    let m = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let total: T = logits.iter().map(|&l| (l - m).exp()).sum();
    m + total.ln() - logits[target]
}

pub fn style_loss<T: Scalar>(style_logits: &[T], style: usize) -> T {
    cross_entropy(style_logits, style)
}

/// Unweighted sum of per-head cross-entropies.
pub fn attr_loss<T: Scalar>(cfg: &HeadConfig, attr_logits: &[T], labels: &[u16]) -> Result<T, ModelError> {
    check_labels(cfg, labels)?;
    if attr_logits.len() != cfg.attr_rows() {
        return Err(ModelError::Dimension {
            expected: cfg.attr_rows(),
            actual: attr_logits.len(),
        });
    }
    let off = cfg.attr_offsets();
    Ok(labels
        .iter()
        .enumerate()
        .map(|(t, &y)| cross_entropy(&attr_logits[off[t]..off[t + 1]], y as usize))
        .sum())
}

pub(crate) fn check_labels(cfg: &HeadConfig, labels: &[u16]) -> Result<(), ModelError> {
    if labels.len() != cfg.attribute_cardinalities.len() {
        return Err(ModelError::Layout {
            expected: cfg.attribute_cardinalities.len(),
            actual: labels.len(),
        });
    }
    for (head, (&y, &cardinality)) in labels.iter().zip(&cfg.attribute_cardinalities).enumerate() {
        if y as usize >= cardinality {
            return Err(ModelError::LabelRange {
                head,
                label: y as usize,
                cardinality,
            });
        }
    }
    Ok(())
}

/// First index of the maximum.
pub(crate) fn argmax<T: Scalar>(xs: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<T> {
    pub style: usize,
    /// Argmax of every attribute head, in slot order.
    pub attributes: Vec<u16>,
    pub style_probs: Vec<T>,
}

pub fn predict<T: Scalar>(params: &ModelParams<T>, cfg: &HeadConfig, f: &[T]) -> Result<Prediction<T>, ModelError> {
    let out = forward(params, cfg, f, Mode::Eval)?;
    Ok(Prediction {
        style: argmax(&out.style_logits),
        attributes: out
            .attr_heads(cfg)
            .into_iter()
            .map(|h| argmax(h) as u16)
            .collect(),
        style_probs: softmax(&out.style_logits),
    })
}

/// Eval-mode predictions for consecutive `cfg.feature_dim`-wide rows.
pub fn predict_batch<T: Scalar>(
    params: &ModelParams<T>,
    cfg: &HeadConfig,
    features: &[T],
    exec: Execution,
) -> Result<Vec<Prediction<T>>, ModelError> {
    let dim = cfg.feature_dim;
    if dim == 0 || !features.len().is_multiple_of(dim) {
        return Err(ModelError::Dimension {
            expected: dim,
            actual: features.len(),
        });
    }
    par::map_range(exec, features.len() / dim, |i| {
        predict(params, cfg, &features[i * dim..(i + 1) * dim])
    })
    .into_iter()
    .collect()
}
