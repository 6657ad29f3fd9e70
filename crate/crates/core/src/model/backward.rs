use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::forward::{check_labels, cross_entropy, forward, softmax, Mode};
use super::{AttrHeadInput, HeadConfig, Linear, ModelError, ModelParams, Scalar};
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy)]
pub struct Example<'a, T> {
    pub features: &'a [T],
    pub style: usize,
    pub labels: &'a [u16],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dropout {
    Off,
    /// Sample `i` of the batch draws its mask from ChaCha8 seeded with the
    /// key, on stream `i`.
    Seeded(u64),
}

struct SampleDelta<T> {
    loss: T,
    hidden: Vec<T>,
    /// dL/d(pre-activation) of the shared layer
    shared: Vec<T>,
    style: Vec<T>,
    attr: Vec<T>,
}

fn sample_delta<T: Scalar>(
    params: &ModelParams<T>,
    cfg: &HeadConfig,
    ex: &Example<'_, T>,
    i: usize,
    dropout: Dropout,
) -> Result<SampleDelta<T>, ModelError> {
    if ex.style >= cfg.num_styles {
        return Err(ModelError::StyleRange {
            style: ex.style,
            num_styles: cfg.num_styles,
        });
    }
    check_labels(cfg, ex.labels)?;
    let out = match dropout {
        Dropout::Seeded(key) if cfg.dropout_rate > 0.0 => {
            let mut rng = ChaCha8Rng::seed_from_u64(key);
            rng.set_stream(i as u64);
            forward(params, cfg, ex.features, Mode::Train(&mut rng))?
        }
        _ => forward(params, cfg, ex.features, Mode::Eval)?,
    };

    let mut loss = cross_entropy(&out.style_logits, ex.style);
    let mut style = softmax(&out.style_logits);
    style[ex.style] -= T::one();

    let off = cfg.attr_offsets();
    let mut attr = Vec::with_capacity(out.attr_logits.len());
    for (t, &y) in ex.labels.iter().enumerate() {
        let head = &out.attr_logits[off[t]..off[t + 1]];
        loss += cross_entropy(head, y as usize);
        let mut g = softmax(head);
        g[y as usize] -= T::one();
        attr.extend(g);
    }

    let mut dh = vec![T::zero(); cfg.hidden_dim];
    params.style.accumulate_input_grad(&style, &mut dh);
    if cfg.attr_head_input == AttrHeadInput::Hidden {
        params.attr.accumulate_input_grad(&attr, &mut dh);
    }
    let shared = dh
        .iter()
        .enumerate()
        .map(|(j, &g)| {
            if out.pre_activation[j] <= T::zero() {
                T::zero()
            } else {
                out.mask.as_ref().map_or(g, |m| g * m[j])
            }
        })
        .collect();

    Ok(SampleDelta {
        loss,
        hidden: out.hidden,
        shared,
        style,
        attr,
    })
}

/// `grad.weight[r] = scale · Σ_b delta_b[r] · input_b`, summed in batch order
/// for every row, so the result does not depend on the execution strategy.
fn accumulate<'a, T: Scalar>(
    exec: Execution,
    grad: &mut Linear<T>,
    deltas: &[&'a [T]],
    inputs: &[&'a [T]],
    scale: T,
) {
    par::for_each_row(exec, &mut grad.weight, grad.cols, |r, row| {
        for (d, x) in deltas.iter().zip(inputs) {
            let c = d[r];
            if c != T::zero() {
                for (w, &xi) in row.iter_mut().zip(x.iter()) {
                    *w += c * xi;
                }
            }
        }
        for w in row.iter_mut() {
            *w *= scale;
        }
    });
    for (r, b) in grad.bias.iter_mut().enumerate() {
        *b = deltas.iter().fold(T::zero(), |acc, d| acc + d[r]) * scale;
    }
}

/// Gradients of the batch-mean of `L_style + L_attr`, and that mean loss.
pub fn backward<T: Scalar>(
    params: &ModelParams<T>,
    cfg: &HeadConfig,
    batch: &[Example<'_, T>],
    dropout: Dropout,
    exec: Execution,
) -> Result<(ModelParams<T>, T), ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let deltas = par::map(exec, batch, |i, ex| sample_delta(params, cfg, ex, i, dropout))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let scale = T::one() / T::of(batch.len() as f64);
    let features: Vec<&[T]> = batch.iter().map(|e| e.features).collect();
    let hidden: Vec<&[T]> = deltas.iter().map(|d| d.hidden.as_slice()).collect();
    let pick = |f: fn(&SampleDelta<T>) -> &Vec<T>| -> Vec<&[T]> {
        deltas.iter().map(|d| f(d).as_slice()).collect()
    };

    let mut grads = ModelParams::zeros(cfg);
    accumulate(exec, &mut grads.shared, &pick(|d| &d.shared), &features, scale);
    accumulate(exec, &mut grads.style, &pick(|d| &d.style), &hidden, scale);
    let attr_inputs = match cfg.attr_head_input {
        AttrHeadInput::Hidden => &hidden,
        AttrHeadInput::Feature => &features,
    };
    accumulate(exec, &mut grads.attr, &pick(|d| &d.attr), attr_inputs, scale);

    let loss = deltas.iter().fold(T::zero(), |acc, d| acc + d.loss) * scale;
    Ok((grads, loss))
}
