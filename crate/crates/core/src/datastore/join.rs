use std::collections::HashSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use super::features::FeatureStore;
use super::records::{DemographicSchema, SampleRecord, StyleLibrary};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JoinProblem {
    DuplicateId { sample_id: String },
    MissingFeatures { sample_id: String },
    UnknownStyle { sample_id: String, style_id: String },
    UnknownGroup {
        sample_id: String,
        category: String,
        group: String,
    },
}

impl fmt::Display for JoinProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JoinProblem::DuplicateId { sample_id } => write!(f, "duplicate id {sample_id:?}"),
            JoinProblem::MissingFeatures { sample_id } => {
                write!(f, "sample {sample_id:?} has no feature vector")
            }
            JoinProblem::UnknownStyle {
                sample_id,
                style_id,
            } => write!(f, "sample {sample_id:?} references unknown style {style_id:?}"),
            JoinProblem::UnknownGroup {
                sample_id,
                category,
                group,
            } => write!(
                f,
                "sample {sample_id:?} has unknown {category} group {group:?}"
            ),
        }
    }
}

#[derive(Debug, Clone, Error)]
#[error("{} sample(s) failed to join: {}", .problems.len(), .problems.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
pub struct JoinError {
    pub problems: Vec<JoinProblem>,
}

/// Features, samples and styles joined; every sample resolves to a feature
/// row and an annotated style.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: FeatureStore,
    pub samples: Vec<SampleRecord>,
    pub styles: StyleLibrary,
    rows: Vec<usize>,
    classes: Vec<usize>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Feature vector of sample `i`.
    pub fn feature(&self, i: usize) -> &[f32] {
        self.features.row(self.rows[i])
    }

    /// Library index of sample `i`'s style.
    pub fn class(&self, i: usize) -> usize {
        self.classes[i]
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }
}

/// Join samples to features and styles, reporting every dangling reference.
/// Demographic group names are checked when a schema is given.
pub fn join(
    features: FeatureStore,
    samples: Vec<SampleRecord>,
    styles: StyleLibrary,
    demographics: Option<&DemographicSchema>,
) -> Result<Dataset, JoinError> {
    let mut problems = Vec::new();
    let mut seen = HashSet::new();
    let mut rows = Vec::with_capacity(samples.len());
    let mut classes = Vec::with_capacity(samples.len());
    for s in &samples {
        if !seen.insert(s.sample_id.as_str()) {
            problems.push(JoinProblem::DuplicateId {
                sample_id: s.sample_id.clone(),
            });
        }
        match features.index_of(&s.sample_id) {
            Some(r) => rows.push(r),
            None => problems.push(JoinProblem::MissingFeatures {
                sample_id: s.sample_id.clone(),
            }),
        }
        match styles.index_of(&s.style_id) {
            Some(c) => classes.push(c),
            None => problems.push(JoinProblem::UnknownStyle {
                sample_id: s.sample_id.clone(),
                style_id: s.style_id.clone(),
            }),
        }
        if let (Some(schema), Some(demo)) = (demographics, &s.demographics) {
            for (category, group) in schema.unknown_groups(demo) {
                problems.push(JoinProblem::UnknownGroup {
                    sample_id: s.sample_id.clone(),
                    category: category.to_string(),
                    group: group.to_string(),
                });
            }
        }
    }
    if !problems.is_empty() {
        return Err(JoinError { problems });
    }
    Ok(Dataset {
        features,
        samples,
        styles,
        rows,
        classes,
    })
}
