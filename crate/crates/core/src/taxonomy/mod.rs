//! Hairstyle taxonomy: ten global attributes, eight regional attributes
//! repeated over eight scalp regions, and the consistency rules that tie
//! slots together.

mod annotation;
mod rules;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use annotation::{
    AnnotationError, FlattenError, HairstyleAnnotation, LabelVector, SlotProblem,
};
pub use rules::{ConsistencyRule, Predicate, RuleDocument, RuleScope, Violation};

/// Sentinel value for conditionally inapplicable attributes.
pub const NOT_APPLICABLE: &str = "N/A";

pub const GLOBAL_ATTRIBUTE_COUNT: usize = 10;
pub const REGIONAL_ATTRIBUTE_COUNT: usize = 8;
pub const REGION_COUNT: usize = 8;
pub const LABEL_SLOT_COUNT: usize =
    GLOBAL_ATTRIBUTE_COUNT + REGION_COUNT * REGIONAL_ATTRIBUTE_COUNT;

/// The canonical schema document, also shipped as `data/taxonomy.v1.json`.
pub const CANONICAL_SCHEMA: &str = include_str!("../../../../data/taxonomy.v1.json");

/// Names of attributes and values the rest of the toolkit refers to directly.
pub mod names {
    pub const BANGS_STYLE: &str = "Bangs Style";
    pub const BANGS_NONE: &str = "None";
    pub const HAIR_TYPE: &str = "Hair Type";
    pub const STRAND_STYLING: &str = "Strand Styling";
    pub const HAIR_GATHERED: &str = "Hair Gathered";
    pub const NOT_GATHERED: &str = "None, not gathered";
    pub const HAIR_LENGTH: &str = "Hair Length";
    pub const BALD: &str = "No hair/Bald (clipper 0)";
    pub const HAIR_NOT_VISIBLE: &str = "Hair not visible";
}

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("malformed taxonomy document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("wrong region count: expected {expected}, found {found}")]
    WrongRegionCount { expected: usize, found: usize },
    #[error("duplicate region {0:?}")]
    DuplicateRegion(String),
    #[error("wrong {scope} attribute count: expected {expected}, found {found}")]
    WrongAttributeCount {
        scope: Scope,
        expected: usize,
        found: usize,
    },
    #[error("duplicate attribute {0:?}")]
    DuplicateAttribute(String),
    #[error("duplicate value {value:?} in attribute {attribute:?}")]
    DuplicateValue { attribute: String, value: String },
    #[error("attribute {0:?} needs at least two values")]
    TooFewValues(String),
    #[error("attribute {0:?} declares the reserved value \"N/A\"; use not_applicable instead")]
    ReservedValue(String),
    #[error("attribute {0:?} has more than 64 values")]
    TooManyValues(String),
    #[error("duplicate rule id {0:?}")]
    DuplicateRule(String),
    #[error("rule {rule:?} references unknown attribute {attribute:?}")]
    UnknownRuleAttribute { rule: String, attribute: String },
    #[error("rule {rule:?} references unknown value {value:?} of attribute {attribute:?}")]
    UnknownRuleValue {
        rule: String,
        attribute: String,
        value: String,
    },
    #[error("rule {rule:?} uses regional attribute {attribute:?} outside a region context")]
    RegionalOutsideRegion { rule: String, attribute: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Global,
    Regional,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::Global => "global",
            Scope::Regional => "regional",
        })
    }
}

/// Attribute entry as it appears in the schema document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeDocument {
    pub name: String,
    pub values: Vec<String>,
    #[serde(default)]
    pub ordinal: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub not_applicable: bool,
}

/// Serialized form of a taxonomy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaDocument {
    pub version: String,
    pub regions: Vec<String>,
    pub global_attributes: Vec<AttributeDocument>,
    pub regional_attributes: Vec<AttributeDocument>,
    #[serde(default)]
    pub rules: Vec<RuleDocument>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeDef {
    pub name: String,
    /// Declared values followed by the `N/A` sentinel when the attribute
    /// can be conditionally absent.
    pub values: Vec<String>,
    pub scope: Scope,
    pub ordinal: bool,
    pub not_applicable: bool,
}

impl AttributeDef {
    pub fn cardinality(&self) -> usize {
        self.values.len()
    }

    /// Values as declared in the schema, without the sentinel.
    pub fn declared_values(&self) -> &[String] {
        if self.not_applicable {
            &self.values[..self.values.len() - 1]
        } else {
            &self.values
        }
    }

    pub fn value_index(&self, value: &str) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }

    pub fn not_applicable_index(&self) -> Option<usize> {
        self.not_applicable.then(|| self.values.len() - 1)
    }
}

/// One entry of the label-vector layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotDef {
    /// `"global"` or the region name.
    pub slot: String,
    pub attribute: String,
    pub cardinality: usize,
}

impl SlotDef {
    pub fn path(&self) -> String {
        format!("{}/{}", self.slot, self.attribute)
    }
}

#[derive(Debug, Clone)]
pub struct Taxonomy {
    version: String,
    regions: Vec<String>,
    global: Vec<AttributeDef>,
    regional: Vec<AttributeDef>,
    rules: Vec<ConsistencyRule>,
    layout: Vec<SlotDef>,
    document: SchemaDocument,
}

impl Taxonomy {
    /// Parse and check a schema document.
    pub fn from_json(document: &str) -> Result<Self, TaxonomyError> {
        let doc: SchemaDocument = serde_json::from_str(document)?;
        Self::from_document(doc)
    }

    /// The schema shipped with the toolkit.
    pub fn canonical() -> Self {
        Self::from_json(CANONICAL_SCHEMA).expect("canonical taxonomy is valid")
    }

    pub fn from_document(doc: SchemaDocument) -> Result<Self, TaxonomyError> {
        if doc.regions.len() != REGION_COUNT {
            return Err(TaxonomyError::WrongRegionCount {
                expected: REGION_COUNT,
                found: doc.regions.len(),
            });
        }
        let mut seen = HashSet::new();
        for region in &doc.regions {
            if !seen.insert(region.as_str()) {
                return Err(TaxonomyError::DuplicateRegion(region.clone()));
            }
        }
        for (scope, attrs, expected) in [
            (Scope::Global, &doc.global_attributes, GLOBAL_ATTRIBUTE_COUNT),
            (
                Scope::Regional,
                &doc.regional_attributes,
                REGIONAL_ATTRIBUTE_COUNT,
            ),
        ] {
            if attrs.len() != expected {
                return Err(TaxonomyError::WrongAttributeCount {
                    scope,
                    expected,
                    found: attrs.len(),
                });
            }
        }

        let mut names = HashSet::new();
        let mut build = |scope: Scope, raw: &AttributeDocument| -> Result<AttributeDef, TaxonomyError> {
            if !names.insert(raw.name.clone()) {
                return Err(TaxonomyError::DuplicateAttribute(raw.name.clone()));
            }
            if raw.values.len() < 2 {
                return Err(TaxonomyError::TooFewValues(raw.name.clone()));
            }
            let mut values = HashSet::new();
            for v in &raw.values {
                if v == NOT_APPLICABLE {
                    return Err(TaxonomyError::ReservedValue(raw.name.clone()));
                }
                if !values.insert(v.as_str()) {
                    return Err(TaxonomyError::DuplicateValue {
                        attribute: raw.name.clone(),
                        value: v.clone(),
                    });
                }
            }
            let mut all = raw.values.clone();
            if raw.not_applicable {
                all.push(NOT_APPLICABLE.to_string());
            }
            if all.len() > 64 {
                return Err(TaxonomyError::TooManyValues(raw.name.clone()));
            }
            Ok(AttributeDef {
                name: raw.name.clone(),
                values: all,
                scope,
                ordinal: raw.ordinal,
                not_applicable: raw.not_applicable,
            })
        };
        let global = doc
            .global_attributes
            .iter()
            .map(|a| build(Scope::Global, a))
            .collect::<Result<Vec<_>, _>>()?;
        let regional = doc
            .regional_attributes
            .iter()
            .map(|a| build(Scope::Regional, a))
            .collect::<Result<Vec<_>, _>>()?;

        let mut layout = Vec::with_capacity(LABEL_SLOT_COUNT);
        for attr in &global {
            layout.push(SlotDef {
                slot: "global".into(),
                attribute: attr.name.clone(),
                cardinality: attr.cardinality(),
            });
        }
        for region in &doc.regions {
            for attr in &regional {
                layout.push(SlotDef {
                    slot: region.clone(),
                    attribute: attr.name.clone(),
                    cardinality: attr.cardinality(),
                });
            }
        }

        let mut tax = Taxonomy {
            version: doc.version.clone(),
            regions: doc.regions.clone(),
            global,
            regional,
            rules: Vec::new(),
            layout,
            document: doc,
        };
        let mut ids = HashSet::new();
        let mut compiled = Vec::with_capacity(tax.document.rules.len());
        for rule in &tax.document.rules {
            if !ids.insert(rule.id.clone()) {
                return Err(TaxonomyError::DuplicateRule(rule.id.clone()));
            }
            compiled.push(ConsistencyRule::compile(&tax, rule)?);
        }
        tax.rules = compiled;
        Ok(tax)
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn regions(&self) -> &[String] {
        &self.regions
    }

    pub fn global_attributes(&self) -> &[AttributeDef] {
        &self.global
    }

    pub fn regional_attributes(&self) -> &[AttributeDef] {
        &self.regional
    }

    pub fn rules(&self) -> &[ConsistencyRule] {
        &self.rules
    }

    pub fn layout(&self) -> &[SlotDef] {
        &self.layout
    }

    pub fn document(&self) -> &SchemaDocument {
        &self.document
    }

    pub fn slot_count(&self) -> usize {
        self.layout.len()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.layout.iter().map(|s| s.cardinality).collect()
    }

    pub fn global_index(&self, name: &str) -> Option<usize> {
        self.global.iter().position(|a| a.name == name)
    }

    pub fn regional_index(&self, name: &str) -> Option<usize> {
        self.regional.iter().position(|a| a.name == name)
    }

    pub fn region_index(&self, name: &str) -> Option<usize> {
        self.regions.iter().position(|r| r == name)
    }

    /// Any attribute by name, global or regional.
    pub fn attribute(&self, name: &str) -> Option<&AttributeDef> {
        self.global
            .iter()
            .chain(self.regional.iter())
            .find(|a| a.name == name)
    }

    /// Label-vector position of a global attribute.
    pub fn global_slot(&self, attr: usize) -> usize {
        attr
    }

    /// Label-vector position of a regional attribute in a region.
    pub fn regional_slot(&self, region: usize, attr: usize) -> usize {
        self.global.len() + region * self.regional.len() + attr
    }

    /// Check a resolved label vector against every rule.
    pub fn check(&self, labels: &LabelVector) -> Vec<Violation> {
        self.rules
            .iter()
            .flat_map(|rule| rule.check(self, labels))
            .collect()
    }

    /// Validate an annotation. Unknown names or missing slots are errors;
    /// rule violations are returned as a (possibly empty) list.
    pub fn validate_annotation(
        &self,
        ann: &HairstyleAnnotation,
    ) -> Result<Vec<Violation>, AnnotationError> {
        let labels = self.resolve(ann)?;
        Ok(self.check(&labels))
    }

    /// Flatten a valid annotation into its label vector.
    pub fn flatten(&self, ann: &HairstyleAnnotation) -> Result<LabelVector, FlattenError> {
        let labels = self.resolve(ann)?;
        let violations = self.check(&labels);
        if violations.is_empty() {
            Ok(labels)
        } else {
            Err(FlattenError::Inconsistent {
                style_id: ann.style_id.clone(),
                violations,
            })
        }
    }

    /// True iff every region's Hair Length is "No hair/Bald".
    pub fn is_bald(&self, labels: &LabelVector) -> bool {
        let Some(attr) = self.regional_index(names::HAIR_LENGTH) else {
            return false;
        };
        let Some(bald) = self.regional[attr].value_index(names::BALD) else {
            return false;
        };
        (0..self.regions.len()).all(|r| labels.get(self.regional_slot(r, attr)) == bald)
    }
}
