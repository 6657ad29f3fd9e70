//! Collation v1: reduce the eight regional labels of a style to one value
//! per evaluated metric.
//!
//! * Bald: every region's Hair Length is "No hair/Bald".
//! * Bang Styling: the global Bangs Style.
//! * Gathered: any region's Hair Gathered differs from "None, not gathered".
//! * Length: ordinal maximum of regional Hair Length, ignoring
//!   "Hair not visible" unless no region is visible.
//! * Hair Type, Strands: modal value over regions that are not `N/A`, ties
//!   broken by region order (Front first); `N/A` when every region is.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taxonomy::{names, FlattenError, HairstyleAnnotation, LabelVector, Taxonomy};

pub const COLLATION_VERSION: &str = "collation v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    Bald,
    #[serde(rename = "Bang Styling")]
    BangStyling,
    Gathered,
    Length,
    #[serde(rename = "Hair Type")]
    HairType,
    Strands,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Bald,
        Metric::BangStyling,
        Metric::Gathered,
        Metric::Length,
        Metric::HairType,
        Metric::Strands,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Bald => "Bald",
            Metric::BangStyling => "Bang Styling",
            Metric::Gathered => "Gathered",
            Metric::Length => "Length",
            Metric::HairType => "Hair Type",
            Metric::Strands => "Strands",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One sample's collated labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CollatedLabels {
    pub bald: bool,
    pub bang_styling: String,
    pub gathered: bool,
    pub length: String,
    pub hair_type: String,
    pub strands: String,
}

impl CollatedLabels {
    pub fn matches(&self, other: &CollatedLabels, metric: Metric) -> bool {
        match metric {
            Metric::Bald => self.bald == other.bald,
            Metric::BangStyling => self.bang_styling == other.bang_styling,
            Metric::Gathered => self.gathered == other.gathered,
            Metric::Length => self.length == other.length,
            Metric::HairType => self.hair_type == other.hair_type,
            Metric::Strands => self.strands == other.strands,
        }
    }

    pub fn value(&self, metric: Metric) -> String {
        match metric {
            Metric::Bald => self.bald.to_string(),
            Metric::BangStyling => self.bang_styling.clone(),
            Metric::Gathered => self.gathered.to_string(),
            Metric::Length => self.length.clone(),
            Metric::HairType => self.hair_type.clone(),
            Metric::Strands => self.strands.clone(),
        }
    }
}

/// Three-way length split used for balancing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LengthBucket {
    Short,
    Medium,
    Long,
    /// No region shows hair.
    Unknown,
}

impl LengthBucket {
    pub fn name(self) -> &'static str {
        match self {
            LengthBucket::Short => "Short",
            LengthBucket::Medium => "Medium",
            LengthBucket::Long => "Long",
            LengthBucket::Unknown => "Unknown",
        }
    }
}

#[derive(Debug, Clone, Error)]
#[error("taxonomy lacks {0:?}, which collation needs")]
pub struct CollationError(pub String);

/// Collation rules bound to a taxonomy's indices.
#[derive(Debug, Clone)]
pub struct Collator<'t> {
    tax: &'t Taxonomy,
    bangs_style: usize,
    bangs_none: usize,
    hair_gathered: usize,
    not_gathered: usize,
    hair_length: usize,
    not_visible: usize,
    ear_length: usize,
    shoulder_length: usize,
    hair_type: usize,
    strand_styling: usize,
}

impl<'t> Collator<'t> {
    pub fn new(tax: &'t Taxonomy) -> Result<Self, CollationError> {
        let missing = |what: &str| CollationError(what.to_string());
        let global = |n: &str| tax.global_index(n).ok_or_else(|| missing(n));
        let regional = |n: &str| tax.regional_index(n).ok_or_else(|| missing(n));
        let value = |attr: &str, v: &str| {
            tax.attribute(attr)
                .and_then(|a| a.value_index(v))
                .ok_or_else(|| missing(&format!("{attr}/{v}")))
        };
        Ok(Self {
            tax,
            bangs_style: global(names::BANGS_STYLE)?,
            bangs_none: value(names::BANGS_STYLE, names::BANGS_NONE)?,
            hair_gathered: regional(names::HAIR_GATHERED)?,
            not_gathered: value(names::HAIR_GATHERED, names::NOT_GATHERED)?,
            hair_length: regional(names::HAIR_LENGTH)?,
            not_visible: value(names::HAIR_LENGTH, names::HAIR_NOT_VISIBLE)?,
            ear_length: value(names::HAIR_LENGTH, "Ear length")?,
            shoulder_length: value(names::HAIR_LENGTH, "Shoulder length")?,
            hair_type: regional(names::HAIR_TYPE)?,
            strand_styling: regional(names::STRAND_STYLING)?,
        })
    }

    pub fn taxonomy(&self) -> &'t Taxonomy {
        self.tax
    }

    fn regional_values<'a>(&'a self, attr: usize, labels: &'a LabelVector) -> impl Iterator<Item = usize> + 'a {
        (0..self.tax.regions().len()).map(move |r| labels.get(self.tax.regional_slot(r, attr)))
    }

    /// Modal value over non-`N/A` regions; earliest region wins ties.
    pub fn modal(&self, attr: usize, labels: &LabelVector) -> usize {
        let def = &self.tax.regional_attributes()[attr];
        let na = def.not_applicable_index();
        let mut counts = vec![0usize; def.cardinality()];
        let mut first_seen = vec![usize::MAX; def.cardinality()];
        for (r, v) in self.regional_values(attr, labels).enumerate() {
            if Some(v) == na {
                continue;
            }
            counts[v] += 1;
            first_seen[v] = first_seen[v].min(r);
        }
        (0..def.cardinality())
            .filter(|&v| counts[v] > 0)
            .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(first_seen[b].cmp(&first_seen[a])))
            .or(na)
            .unwrap_or(0)
    }

    /// Longest visible Hair Length index.
    pub fn max_length(&self, labels: &LabelVector) -> usize {
        self.regional_values(self.hair_length, labels)
            .filter(|&v| v != self.not_visible)
            .max()
            .unwrap_or(self.not_visible)
    }

    /// Collated value index of any regional attribute: ordinal maximum for
    /// Hair Length, modal otherwise.
    pub fn regional(&self, attr: usize, labels: &LabelVector) -> usize {
        if attr == self.hair_length {
            self.max_length(labels)
        } else {
            self.modal(attr, labels)
        }
    }

    pub fn fringe_present(&self, labels: &LabelVector) -> bool {
        labels.get(self.tax.global_slot(self.bangs_style)) != self.bangs_none
    }

    pub fn gathered_present(&self, labels: &LabelVector) -> bool {
        self.regional_values(self.hair_gathered, labels)
            .any(|v| v != self.not_gathered)
    }

    pub fn length_bucket(&self, labels: &LabelVector) -> LengthBucket {
        let max = self.max_length(labels);
        if max == self.not_visible {
            LengthBucket::Unknown
        } else if max <= self.ear_length {
            LengthBucket::Short
        } else if max <= self.shoulder_length {
            LengthBucket::Medium
        } else {
            LengthBucket::Long
        }
    }

    pub fn collate(&self, labels: &LabelVector) -> CollatedLabels {
        let regional = self.tax.regional_attributes();
        let name = |attr: usize, v: usize| regional[attr].values[v].clone();
        CollatedLabels {
            bald: self.tax.is_bald(labels),
            bang_styling: self.tax.global_attributes()[self.bangs_style].values
                [labels.get(self.tax.global_slot(self.bangs_style))]
            .clone(),
            gathered: self.gathered_present(labels),
            length: name(self.hair_length, self.max_length(labels)),
            hair_type: name(self.hair_type, self.modal(self.hair_type, labels)),
            strands: name(self.strand_styling, self.modal(self.strand_styling, labels)),
        }
    }

    pub fn collate_annotation(&self, ann: &HairstyleAnnotation) -> Result<CollatedLabels, FlattenError> {
        Ok(self.collate(&self.tax.flatten(ann)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::AnnotationBuilder;

    #[test]
    fn unanimous_regions_collate_to_that_value() {
        let tax = Taxonomy::canonical();
        let c = Collator::new(&tax).unwrap();
        let ann = AnnotationBuilder::new(&tax, "s")
            .all_regions("Hair Type", "Wavy")
            .all_regions("Strand Styling", "Twists/Ringlets")
            .all_regions("Strand Thickness", "Medium (1-2cm)")
            .all_regions("Hair Length", "Armpit length")
            .all_regions("Hair Gathered", "Bun, single")
            .global("Bangs Style", "U-shaped")
            .global("Bangs Length", "To eyebrows (~10cm)")
            .build();
        let got = c.collate_annotation(&ann).unwrap();
        assert_eq!(
            got,
            CollatedLabels {
                bald: false,
                bang_styling: "U-shaped".into(),
                gathered: true,
                length: "Armpit length".into(),
                hair_type: "Wavy".into(),
                strands: "Twists/Ringlets".into(),
            }
        );
    }

    #[test]
    fn modal_hair_type() {
        let tax = Taxonomy::canonical();
        let c = Collator::new(&tax).unwrap();
        let ann = AnnotationBuilder::new(&tax, "s")
            .region("Crown", "Hair Type", "Coily")
            .build();
        assert_eq!(c.collate_annotation(&ann).unwrap().hair_type, "Straight");
    }

    #[test]
    fn modal_ties_go_to_earliest_region() {
        let tax = Taxonomy::canonical();
        let c = Collator::new(&tax).unwrap();
        // Front, Top, Crown, Nape = Coily; the four side/temple regions Wavy.
        let mut b = AnnotationBuilder::new(&tax, "s").all_regions("Hair Type", "Wavy");
        for r in ["Front", "Top", "Crown", "Nape"] {
            b = b.region(r, "Hair Type", "Coily");
        }
        assert_eq!(c.collate_annotation(&b.build()).unwrap().hair_type, "Coily");

        let mut b = AnnotationBuilder::new(&tax, "s").all_regions("Hair Type", "Coily");
        for r in ["Front", "Top", "Crown", "Nape"] {
            b = b.region(r, "Hair Type", "Wavy");
        }
        assert_eq!(c.collate_annotation(&b.build()).unwrap().hair_type, "Wavy");
    }

    #[test]
    fn n_a_regions_are_ignored_by_mode() {
        let tax = Taxonomy::canonical();
        let c = Collator::new(&tax).unwrap();
        let ann = AnnotationBuilder::new(&tax, "s")
            .all_regions("Hair Type", "N/A")
            .region("Left Temple", "Hair Type", "Curly")
            .build();
        assert_eq!(c.collate_annotation(&ann).unwrap().hair_type, "Curly");
        let bald = AnnotationBuilder::new(&tax, "b").bald().build();
        let got = c.collate_annotation(&bald).unwrap();
        assert!(got.bald);
        assert_eq!(got.hair_type, "N/A");
        assert_eq!(got.length, names::BALD);
    }

    #[test]
    fn length_is_ordinal_maximum() {
        let tax = Taxonomy::canonical();
        let c = Collator::new(&tax).unwrap();
        let mut b = AnnotationBuilder::new(&tax, "s").all_regions("Hair Length", "Chin length");
        for r in ["Crown", "Nape", "Right Side", "Left Side"] {
            b = b.region(r, "Hair Length", "Waist length or longer");
        }
        let ann = b.build();
        assert_eq!(c.collate_annotation(&ann).unwrap().length, "Waist length or longer");
        assert_eq!(c.length_bucket(&tax.flatten(&ann).unwrap()), LengthBucket::Long);
    }

    #[test]
    fn hidden_hair_does_not_count_as_longest() {
        let tax = Taxonomy::canonical();
        let c = Collator::new(&tax).unwrap();
        let ann = AnnotationBuilder::new(&tax, "s")
            .all_regions("Hair Length", "Ear length")
            .region("Nape", "Hair Length", "Hair not visible")
            .build();
        let labels = tax.flatten(&ann).unwrap();
        assert_eq!(c.collate(&labels).length, "Ear length");
        assert_eq!(c.length_bucket(&labels), LengthBucket::Short);
        let hidden = AnnotationBuilder::new(&tax, "s")
            .all_regions("Hair Length", "Hair not visible")
            .build();
        assert_eq!(c.length_bucket(&tax.flatten(&hidden).unwrap()), LengthBucket::Unknown);
    }

    #[test]
    fn buckets() {
        let tax = Taxonomy::canonical();
        let c = Collator::new(&tax).unwrap();
        for (len, bucket) in [
            ("No hair/Bald (clipper 0)", LengthBucket::Short),
            ("Ear length", LengthBucket::Short),
            ("Chin length", LengthBucket::Medium),
            ("Shoulder length", LengthBucket::Medium),
            ("Armpit length", LengthBucket::Long),
            ("Waist length or longer", LengthBucket::Long),
        ] {
            let ann = AnnotationBuilder::new(&tax, "s")
                .all_regions("Hair Length", len)
                .build();
            assert_eq!(c.length_bucket(&tax.resolve(&ann).unwrap()), bucket, "{len}");
        }
    }
}
