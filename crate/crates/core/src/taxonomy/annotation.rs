use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Taxonomy, Violation};

/// One style's labels: global attributes plus one attribute map per region.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HairstyleAnnotation {
    pub style_id: String,
    pub global: IndexMap<String, String>,
    pub regions: IndexMap<String, IndexMap<String, String>>,
}

/// Categorical indices in layout order (globals, then region-major regional slots).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelVector {
    labels: Vec<u16>,
}

impl LabelVector {
    pub fn new(labels: Vec<u16>) -> Self {
        Self { labels }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            labels: vec![0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, slot: usize) -> usize {
        self.labels[slot] as usize
    }

    pub fn set(&mut self, slot: usize, value: usize) {
        self.labels[slot] = value as u16;
    }

    pub fn as_slice(&self) -> &[u16] {
        &self.labels
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels.iter().map(|&l| l as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlotProblem {
    UnknownRegion { region: String },
    UnknownAttribute { path: String },
    UnknownValue { path: String, value: String },
    MissingSlot { path: String },
    MissingRegion { region: String },
}

impl fmt::Display for SlotProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlotProblem::UnknownRegion { region } => write!(f, "unknown region {region:?}"),
            SlotProblem::UnknownAttribute { path } => write!(f, "unknown attribute at {path}"),
            SlotProblem::UnknownValue { path, value } => {
                write!(f, "unknown value {value:?} at {path}")
            }
            SlotProblem::MissingSlot { path } => write!(f, "missing slot {path}"),
            SlotProblem::MissingRegion { region } => write!(f, "missing region {region:?}"),
        }
    }
}

/// The annotation does not fit the schema (distinct from rule violations).
#[derive(Debug, Clone, Error)]
#[error("annotation {style_id:?} does not fit the taxonomy: {}", join(.problems))]
pub struct AnnotationError {
    pub style_id: String,
    pub problems: Vec<SlotProblem>,
}

fn join(problems: &[SlotProblem]) -> String {
    problems
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, Error)]
pub enum FlattenError {
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error("annotation {style_id:?} violates {}", .violations.iter().map(|v| v.rule_id.as_str()).collect::<Vec<_>>().join(", "))]
    Inconsistent {
        style_id: String,
        violations: Vec<Violation>,
    },
}

impl Taxonomy {
    /// Map an annotation's names onto indices. Slots left out are filled with
    /// `N/A` when the attribute allows it and reported missing otherwise.
    pub fn resolve(&self, ann: &HairstyleAnnotation) -> Result<LabelVector, AnnotationError> {
        let mut problems = Vec::new();
        let mut labels = LabelVector::zeros(self.slot_count());

        for name in ann.global.keys() {
            if self.global_index(name).is_none() {
                problems.push(SlotProblem::UnknownAttribute {
                    path: format!("global/{name}"),
                });
            }
        }
        for (a, attr) in self.global_attributes().iter().enumerate() {
            let path = || format!("global/{}", attr.name);
            match ann.global.get(&attr.name) {
                Some(value) => match attr.value_index(value) {
                    Some(i) => labels.set(self.global_slot(a), i),
                    None => problems.push(SlotProblem::UnknownValue {
                        path: path(),
                        value: value.clone(),
                    }),
                },
                None => match attr.not_applicable_index() {
                    Some(i) => labels.set(self.global_slot(a), i),
                    None => problems.push(SlotProblem::MissingSlot { path: path() }),
                },
            }
        }

        for region in ann.regions.keys() {
            if self.region_index(region).is_none() {
                problems.push(SlotProblem::UnknownRegion {
                    region: region.clone(),
                });
            }
        }
        for (r, region) in self.regions().iter().enumerate() {
            let Some(slots) = ann.regions.get(region) else {
                problems.push(SlotProblem::MissingRegion {
                    region: region.clone(),
                });
                continue;
            };
            for name in slots.keys() {
                if self.regional_index(name).is_none() {
                    problems.push(SlotProblem::UnknownAttribute {
                        path: format!("{region}/{name}"),
                    });
                }
            }
            for (a, attr) in self.regional_attributes().iter().enumerate() {
                let path = || format!("{region}/{}", attr.name);
                let slot = self.regional_slot(r, a);
                match slots.get(&attr.name) {
                    Some(value) => match attr.value_index(value) {
                        Some(i) => labels.set(slot, i),
                        None => problems.push(SlotProblem::UnknownValue {
                            path: path(),
                            value: value.clone(),
                        }),
                    },
                    None => match attr.not_applicable_index() {
                        Some(i) => labels.set(slot, i),
                        None => problems.push(SlotProblem::MissingSlot { path: path() }),
                    },
                }
            }
        }

        if problems.is_empty() {
            Ok(labels)
        } else {
            Err(AnnotationError {
                style_id: ann.style_id.clone(),
                problems,
            })
        }
    }

    /// Inverse of [`Taxonomy::flatten`]; every slot is written explicitly,
    /// in schema order.
    pub fn unflatten(&self, style_id: &str, labels: &LabelVector) -> HairstyleAnnotation {
        assert_eq!(labels.len(), self.slot_count(), "label vector length");
        let global = self
            .global_attributes()
            .iter()
            .enumerate()
            .map(|(a, attr)| {
                (
                    attr.name.clone(),
                    attr.values[labels.get(self.global_slot(a))].clone(),
                )
            })
            .collect();
        let regions = self
            .regions()
            .iter()
            .enumerate()
            .map(|(r, region)| {
                let slots = self
                    .regional_attributes()
                    .iter()
                    .enumerate()
                    .map(|(a, attr)| {
                        (
                            attr.name.clone(),
                            attr.values[labels.get(self.regional_slot(r, a))].clone(),
                        )
                    })
                    .collect();
                (region.clone(), slots)
            })
            .collect();
        HairstyleAnnotation {
            style_id: style_id.to_string(),
            global,
            regions,
        }
    }
}
