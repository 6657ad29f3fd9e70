//! Attribute-balanced style sampling.
//!
//! Per-style weights are fitted by iterative proportional fitting (raking)
//! so that the weighted marginals of selected attributes match target
//! distributions; styles are then drawn i.i.d. from those weights.

use indexmap::IndexMap;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::datastore::marginals::{
    self, key_distribution, MarginalKey, FRINGE_PRESENT, GATHERED_PRESENT, LENGTH_BUCKET,
};
use crate::datastore::StyleLibrary;
use crate::evaluation::collate::{CollationError, Collator};
use crate::taxonomy::{names, FlattenError, Taxonomy};

const SUM_TOLERANCE: f64 = 1e-9;

/// attribute (or derived flag) → value → target probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TargetMarginals {
    pub entries: IndexMap<String, IndexMap<String, f64>>,
}

impl TargetMarginals {
    /// Balanced training distribution: half the styles with a fringe, three
    /// quarters gathered, 40/30/30 short/medium/long, and
    /// 50/15/15/20 straight/wavy/curly/coily.
    pub fn canonical() -> Self {
        let dist = |pairs: &[(&str, f64)]| {
            pairs
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect::<IndexMap<_, _>>()
        };
        let mut entries = IndexMap::new();
        entries.insert(
            FRINGE_PRESENT.to_string(),
            dist(&[("true", 0.5), ("false", 0.5)]),
        );
        entries.insert(
            GATHERED_PRESENT.to_string(),
            dist(&[("true", 0.75), ("false", 0.25)]),
        );
        entries.insert(
            LENGTH_BUCKET.to_string(),
            dist(&[("Short", 0.4), ("Medium", 0.3), ("Long", 0.3)]),
        );
        entries.insert(
            names::HAIR_TYPE.to_string(),
            dist(&[("Straight", 0.5), ("Wavy", 0.15), ("Curly", 0.15), ("Coily", 0.2)]),
        );
        Self { entries }
    }

    pub fn validate(&self) -> Result<(), BalanceError> {
        for (attr, dist) in &self.entries {
            if dist.values().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(BalanceError::BadTarget {
                    attribute: attr.clone(),
                    reason: "probabilities must be finite and non-negative".into(),
                });
            }
            let sum: f64 = dist.values().sum();
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(BalanceError::BadTarget {
                    attribute: attr.clone(),
                    reason: format!("probabilities sum to {sum}"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BalanceConfig {
    pub max_iters: usize,
    pub tol: f64,
    /// Exponent applied to each multiplicative update; 1.0 is plain IPF.
    pub damping: f64,
}

impl Default for BalanceConfig {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            tol: 1e-6,
            damping: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingWeights {
    /// style id → probability, in library order.
    pub weights: IndexMap<String, f64>,
    /// attribute → L1 gap between fitted and target marginals.
    pub residuals: IndexMap<String, f64>,
    pub iterations_used: usize,
    pub converged: bool,
}

#[derive(Debug, Error)]
pub enum BalanceError {
    #[error("style library is empty")]
    EmptyLibrary,
    #[error("unknown target attribute {0:?}")]
    UnknownAttribute(String),
    #[error("unknown value {value:?} for target attribute {attribute:?}")]
    UnknownValue { attribute: String, value: String },
    #[error("target for {attribute:?} is invalid: {reason}")]
    BadTarget { attribute: String, reason: String },
    #[error("infeasible target: {attribute} = {value:?} has positive probability but no style can carry it")]
    Infeasible { attribute: String, value: String },
    #[error("malformed weights document: {0}")]
    Malformed(String),
    #[error(transparent)]
    Invalid(#[from] FlattenError),
    #[error(transparent)]
    Collation(#[from] CollationError),
}

struct Constraint {
    name: String,
    categories: Vec<String>,
    key: MarginalKey,
    target: Vec<f64>,
    /// category of each style
    of_style: Vec<usize>,
}

impl Constraint {
    fn residual(&self, collator: &Collator<'_>, labels: &[crate::taxonomy::LabelVector], w: &[f64]) -> f64 {
        key_distribution(collator, self.key, labels, w)
            .iter()
            .zip(&self.target)
            .map(|(c, t)| (c - t).abs())
            .sum()
    }
}

/// Fit per-style weights to the target marginals, starting from uniform.
pub fn fit_weights(
    tax: &Taxonomy,
    library: &StyleLibrary,
    targets: &TargetMarginals,
    cfg: &BalanceConfig,
) -> Result<SamplingWeights, BalanceError> {
    if library.is_empty() {
        return Err(BalanceError::EmptyLibrary);
    }
    targets.validate()?;
    let collator = Collator::new(tax)?;
    let labels = library.labels(tax)?;

    let mut constraints = Vec::with_capacity(targets.entries.len());
    for (name, dist) in &targets.entries {
        let key = MarginalKey::parse(tax, name)
            .ok_or_else(|| BalanceError::UnknownAttribute(name.clone()))?;
        let categories = key.categories(tax);
        let mut target = vec![0.0; categories.len()];
        for (value, &p) in dist {
            let c = categories.iter().position(|c| c == value).ok_or_else(|| {
                BalanceError::UnknownValue {
                    attribute: name.clone(),
                    value: value.clone(),
                }
            })?;
            target[c] = p;
        }
        let of_style: Vec<usize> = labels.iter().map(|l| key.category(&collator, l)).collect();
        for (c, &p) in target.iter().enumerate() {
            if p > 0.0 && !of_style.contains(&c) {
                return Err(BalanceError::Infeasible {
                    attribute: name.clone(),
                    value: categories[c].clone(),
                });
            }
        }
        constraints.push(Constraint {
            name: name.clone(),
            categories,
            key,
            target,
            of_style,
        });
    }

    let n = library.len();
    let mut w = vec![1.0 / n as f64; n];
    let max_residual = |w: &[f64]| {
        constraints
            .iter()
            .map(|c| c.residual(&collator, &labels, w))
            .fold(0.0, f64::max)
    };

    let mut iterations = 0;
    let mut converged = max_residual(&w) <= cfg.tol;
    while !converged && iterations < cfg.max_iters {
        iterations += 1;
        for c in &constraints {
            let mut current = vec![0.0; c.categories.len()];
            for (s, &cat) in c.of_style.iter().enumerate() {
                current[cat] += w[s];
            }
            for (s, &cat) in c.of_style.iter().enumerate() {
                if c.target[cat] == 0.0 {
                    w[s] = 0.0;
                } else if current[cat] > 0.0 {
                    w[s] *= (c.target[cat] / current[cat]).powf(cfg.damping);
                }
            }
            if let Some(cat) = (0..c.categories.len())
                .find(|&cat| c.target[cat] > 0.0 && current[cat] == 0.0)
            {
                return Err(BalanceError::Infeasible {
                    attribute: c.name.clone(),
                    value: c.categories[cat].clone(),
                });
            }
            let total: f64 = w.iter().sum();
            for x in &mut w {
                *x /= total;
            }
        }
        converged = max_residual(&w) <= cfg.tol;
    }

    let residuals = constraints
        .iter()
        .map(|c| (c.name.clone(), c.residual(&collator, &labels, &w)))
        .collect();
    Ok(SamplingWeights {
        weights: library.ids().map(String::from).zip(w).collect(),
        residuals,
        iterations_used: iterations,
        converged,
    })
}

impl SamplingWeights {
    pub fn uniform(library: &StyleLibrary) -> Self {
        let p = 1.0 / library.len() as f64;
        Self {
            weights: library.ids().map(|id| (id.to_string(), p)).collect(),
            residuals: IndexMap::new(),
            iterations_used: 0,
            converged: true,
        }
    }

    /// Weights aligned with `library` order; styles missing from the map get 0.
    pub fn aligned(&self, library: &StyleLibrary) -> Vec<f64> {
        library
            .ids()
            .map(|id| self.weights.get(id).copied().unwrap_or(0.0))
            .collect()
    }

    /// `{style_id: weight, ..., "_meta": {...}}`; `extra` is merged into `_meta`.
    pub fn to_json(&self, extra: Map<String, Value>) -> Value {
        let mut out = Map::new();
        for (id, w) in &self.weights {
            out.insert(id.clone(), json!(w));
        }
        let mut meta = Map::new();
        meta.insert("residuals".into(), json!(self.residuals));
        meta.insert("iterations".into(), json!(self.iterations_used));
        meta.insert("converged".into(), json!(self.converged));
        meta.extend(extra);
        out.insert("_meta".into(), Value::Object(meta));
        Value::Object(out)
    }

    pub fn from_json(doc: &Value) -> Result<Self, BalanceError> {
        let malformed = |m: &str| BalanceError::Malformed(m.to_string());
        let obj = doc.as_object().ok_or_else(|| malformed("expected an object"))?;
        let mut weights = IndexMap::new();
        for (k, v) in obj {
            if k == "_meta" {
                continue;
            }
            let w = v
                .as_f64()
                .ok_or_else(|| malformed(&format!("weight of {k:?} is not a number")))?;
            weights.insert(k.clone(), w);
        }
        let ws: Vec<f64> = weights.values().copied().collect();
        marginals::check_weights(&ws, ws.len()).map_err(|e| malformed(&e.to_string()))?;
        let meta = obj.get("_meta");
        let residuals = meta
            .and_then(|m| m.get("residuals"))
            .and_then(|r| serde_json::from_value(r.clone()).ok())
            .unwrap_or_default();
        Ok(Self {
            weights,
            residuals,
            iterations_used: meta
                .and_then(|m| m.get("iterations"))
                .and_then(Value::as_u64)
                .unwrap_or(0) as usize,
            converged: meta
                .and_then(|m| m.get("converged"))
                .and_then(Value::as_bool)
                .unwrap_or(false),
        })
    }
}

/// `n` i.i.d. style draws. The generator is ChaCha8 seeded with `seed`,
/// driving a cumulative-weight binary search over styles in map order.
pub fn sample(weights: &SamplingWeights, n: usize, seed: u64) -> Vec<String> {
    if n == 0 {
        return Vec::new();
    }
    let ids: Vec<&String> = weights.weights.keys().collect();
    let dist = WeightedIndex::new(weights.weights.values().copied())
        .expect("sampling weights are non-negative with positive total");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| ids[dist.sample(&mut rng)].clone()).collect()
}
