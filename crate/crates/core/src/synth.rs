//! Seeded generator of random, rule-consistent annotations for the canonical
//! taxonomy. Used by property tests and to build demo style libraries.

use std::collections::HashMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::datastore::StyleLibrary;
use crate::model::TrainingSet;
use crate::taxonomy::{names, HairstyleAnnotation, LabelVector, Taxonomy};

#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    /// Probability that a style is bald in every region.
    pub bald_probability: f64,
    /// Probability that a region copies the style's base region.
    pub region_coherence: f64,
    /// Optional relative weights over an attribute's declared values
    /// (keyed by attribute name). Unlisted attributes are uniform.
    pub value_weights: HashMap<String, Vec<f64>>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            bald_probability: 0.1,
            region_coherence: 0.7,
            value_weights: HashMap::new(),
        }
    }
}

impl GeneratorConfig {
    /// Skewed toward straight, loose, ungathered hair, like a library that
    /// grew from whatever assets were at hand.
    pub fn imbalanced_library() -> Self {
        let mut value_weights = HashMap::new();
        value_weights.insert(names::HAIR_TYPE.to_string(), vec![0.08, 0.12, 0.25, 0.55]);
        value_weights.insert(
            names::BANGS_STYLE.to_string(),
            vec![6.0, 1.0, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.2],
        );
        value_weights.insert(
            names::HAIR_GATHERED.to_string(),
            vec![30.0, 1.0, 1.0, 0.3, 1.0, 0.3, 1.0, 0.5, 0.2, 0.2, 0.2],
        );
        value_weights.insert(
            names::STRAND_STYLING.to_string(),
            vec![8.0, 0.5, 1.0, 0.7, 1.0],
        );
        Self {
            bald_probability: 0.04,
            region_coherence: 0.85,
            value_weights,
        }
    }
}

struct Indices {
    bangs_style: usize,
    bangs_length: usize,
    hairline_shape: usize,
    hairline_position: usize,
    hairline_visibility: usize,
    strand_styling: usize,
    strand_thickness: usize,
    hair_length: usize,
    hair_gathered: usize,
}

pub struct AnnotationGenerator<'t> {
    tax: &'t Taxonomy,
    cfg: GeneratorConfig,
    idx: Indices,
}

impl<'t> AnnotationGenerator<'t> {
    /// Fails when the taxonomy lacks one of the canonical attributes the
    /// generator needs to keep annotations consistent.
    pub fn new(tax: &'t Taxonomy, cfg: GeneratorConfig) -> Option<Self> {
        let g = |n: &str| tax.global_index(n);
        let r = |n: &str| tax.regional_index(n);
        let idx = Indices {
            bangs_style: g(names::BANGS_STYLE)?,
            bangs_length: g("Bangs Length")?,
            hairline_shape: g("Hairline Shape")?,
            hairline_position: g("Hairline Position")?,
            hairline_visibility: g("Hairline Visibility")?,
            strand_styling: r(names::STRAND_STYLING)?,
            strand_thickness: r("Strand Thickness")?,
            hair_length: r(names::HAIR_LENGTH)?,
            hair_gathered: r(names::HAIR_GATHERED)?,
        };
        Some(Self { tax, cfg, idx })
    }

    fn pick<R: Rng>(&self, rng: &mut R, attr: &crate::taxonomy::AttributeDef, exclude: &[&str]) -> usize {
        let declared = attr.declared_values();
        let weights: Vec<f64> = match self.cfg.value_weights.get(&attr.name) {
            Some(w) if w.len() == declared.len() => w.clone(),
            _ => vec![1.0; declared.len()],
        };
        let weights: Vec<f64> = weights
            .iter()
            .zip(declared)
            .map(|(&w, v)| if exclude.contains(&v.as_str()) { 0.0 } else { w })
            .collect();
        WeightedIndex::new(&weights)
            .expect("at least one eligible value")
            .sample(rng)
    }

    fn na(&self, attr: usize) -> usize {
        self.tax.regional_attributes()[attr]
            .not_applicable_index()
            .expect("attribute has N/A")
    }

    /// A random annotation that passes every canonical rule.
    pub fn generate<R: Rng>(&self, rng: &mut R, style_id: &str) -> HairstyleAnnotation {
        let labels = self.generate_labels(rng);
        self.tax.unflatten(style_id, &labels)
    }

    pub fn generate_labels<R: Rng>(&self, rng: &mut R) -> LabelVector {
        let tax = self.tax;
        let idx = &self.idx;
        let mut labels = LabelVector::zeros(tax.slot_count());
        let globals = tax.global_attributes();
        for (a, attr) in globals.iter().enumerate() {
            labels.set(tax.global_slot(a), self.pick(rng, attr, &[]));
        }
        let bangs_none = globals[idx.bangs_style].value_index(names::BANGS_NONE);
        if Some(labels.get(idx.bangs_style)) == bangs_none {
            let na = globals[idx.bangs_length].not_applicable_index().unwrap();
            labels.set(idx.bangs_length, na);
        }
        let hidden = globals[idx.hairline_visibility].value_index("Not visible");
        if Some(labels.get(idx.hairline_visibility)) != hidden {
            for a in [idx.hairline_shape, idx.hairline_position] {
                let v = self.pick(rng, &globals[a], &["I don't know"]);
                labels.set(a, v);
            }
        }

        let regional = tax.regional_attributes();
        let n_regions = tax.regions().len();
        let bald = regional[idx.hair_length].value_index(names::BALD).unwrap();
        let not_gathered = regional[idx.hair_gathered]
            .value_index(names::NOT_GATHERED)
            .unwrap();

        if rng.gen_bool(self.cfg.bald_probability) {
            let decor = self.pick(rng, &regional[regional.len() - 1], &[]);
            for r in 0..n_regions {
                for (a, attr) in regional.iter().enumerate() {
                    let v = if a == idx.hair_length {
                        bald
                    } else if a == idx.hair_gathered {
                        not_gathered
                    } else if let Some(na) = attr.not_applicable_index() {
                        na
                    } else {
                        decor
                    };
                    labels.set(tax.regional_slot(r, a), v);
                }
            }
            return labels;
        }

        let draw_region = |rng: &mut R| -> Vec<usize> {
            let mut values: Vec<usize> = regional
                .iter()
                .map(|attr| self.pick(rng, attr, &[]))
                .collect();
            let styling_none = regional[idx.strand_styling].value_index("None").unwrap();
            if values[idx.strand_styling] == styling_none {
                values[idx.strand_thickness] = self.na(idx.strand_thickness);
            }
            values
        };
        let base = draw_region(rng);
        for r in 0..n_regions {
            let values = if rng.gen_bool(self.cfg.region_coherence) {
                base.clone()
            } else {
                draw_region(rng)
            };
            for (a, v) in values.into_iter().enumerate() {
                labels.set(tax.regional_slot(r, a), v);
            }
        }
        if tax.is_bald(&labels) {
            let short = regional[idx.hair_length]
                .value_index("Short (1-5cm, clipper 4-10)")
                .unwrap();
            labels.set(tax.regional_slot(0, idx.hair_length), short);
        }
        labels
    }
}

/// Hand-crafted annotations for fixtures: starts from a plain, valid style
/// (straight shoulder-length hair, no bangs, nothing gathered) and lets the
/// caller overwrite individual slots. The result is not validated.
#[derive(Debug, Clone)]
pub struct AnnotationBuilder {
    ann: HairstyleAnnotation,
}

impl AnnotationBuilder {
    pub fn new(tax: &Taxonomy, style_id: &str) -> Self {
        let mut ann = tax.unflatten(style_id, &LabelVector::zeros(tax.slot_count()));
        let base_global = [
            (names::BANGS_STYLE, "None"),
            ("Bangs Length", crate::taxonomy::NOT_APPLICABLE),
            ("Hair Accessories", "None"),
            ("Parting Location", "Central"),
            ("Hairline Shape", "Straight"),
            ("Hairline Position", "Medium"),
            ("Hairline Visibility", "Full"),
        ];
        for (attr, value) in base_global {
            if let Some(slot) = ann.global.get_mut(attr) {
                *slot = value.to_string();
            }
        }
        let base_regional = [
            (names::HAIR_TYPE, "Straight"),
            (names::STRAND_STYLING, "None"),
            ("Strand Thickness", crate::taxonomy::NOT_APPLICABLE),
            (names::HAIR_GATHERED, names::NOT_GATHERED),
            ("Hair Direction", "Brushed/flowing down"),
            (names::HAIR_LENGTH, "Shoulder length"),
            ("Layering", "None/Single length"),
            ("Decorative patterns", "None"),
        ];
        for slots in ann.regions.values_mut() {
            for (attr, value) in base_regional {
                if let Some(slot) = slots.get_mut(attr) {
                    *slot = value.to_string();
                }
            }
        }
        Self { ann }
    }

    pub fn global(mut self, attr: &str, value: &str) -> Self {
        self.ann.global.insert(attr.to_string(), value.to_string());
        self
    }

    pub fn region(mut self, region: &str, attr: &str, value: &str) -> Self {
        self.ann
            .regions
            .entry(region.to_string())
            .or_default()
            .insert(attr.to_string(), value.to_string());
        self
    }

    pub fn all_regions(mut self, attr: &str, value: &str) -> Self {
        for slots in self.ann.regions.values_mut() {
            slots.insert(attr.to_string(), value.to_string());
        }
        self
    }

    /// Bald everywhere, with the dependent slots set to N/A.
    pub fn bald(self) -> Self {
        let na = crate::taxonomy::NOT_APPLICABLE;
        self.all_regions(names::HAIR_LENGTH, names::BALD)
            .all_regions(names::HAIR_TYPE, na)
            .all_regions(names::STRAND_STYLING, na)
            .all_regions("Strand Thickness", na)
            .all_regions("Hair Direction", na)
            .all_regions("Layering", na)
    }

    pub fn remove_global(mut self, attr: &str) -> Self {
        self.ann.global.shift_remove(attr);
        self
    }

    pub fn build(self) -> HairstyleAnnotation {
        self.ann
    }
}

/// Separable toy classification task: one Gaussian cluster per style, each
/// style with a different annotation (and a different collated Hair Type).
#[derive(Debug, Clone)]
pub struct ClusterTask {
    pub library: StyleLibrary,
    pub train: TrainingSet,
    pub test: TrainingSet,
}

/// Cluster `k` is centred at `separation · e_k` with isotropic noise of
/// standard deviation `noise`; samples cycle through the styles.
pub fn cluster_task(
    tax: &Taxonomy,
    dim: usize,
    train_n: usize,
    test_n: usize,
    separation: f64,
    noise: f64,
    seed: u64,
) -> ClusterTask {
    let styles = vec![
        AnnotationBuilder::new(tax, "straight-short")
            .all_regions(names::HAIR_LENGTH, "Short (1-5cm, clipper 4-10)")
            .build(),
        AnnotationBuilder::new(tax, "wavy-long")
            .all_regions(names::HAIR_TYPE, "Wavy")
            .all_regions(names::HAIR_LENGTH, "Mid-back length")
            .build(),
        AnnotationBuilder::new(tax, "curly-fringe")
            .all_regions(names::HAIR_TYPE, "Curly")
            .global(names::BANGS_STYLE, "Straight")
            .global("Bangs Length", "To eyebrows (~10cm)")
            .build(),
        AnnotationBuilder::new(tax, "coily-gathered")
            .all_regions(names::HAIR_TYPE, "Coily")
            .all_regions(names::HAIR_GATHERED, "Bun, single")
            .build(),
        AnnotationBuilder::new(tax, "bald").bald().build(),
    ];
    assert!(dim >= styles.len(), "need one axis per cluster");
    let library = StyleLibrary::new(styles).expect("distinct style ids");
    let style_labels = library.labels(tax).expect("toy styles are valid");
    let k = library.len();
    let normal = Normal::new(0.0, noise).expect("noise is finite and non-negative");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = |n: usize| {
        let mut features = Vec::with_capacity(n * dim);
        let mut classes = Vec::with_capacity(n);
        for i in 0..n {
            let c = i % k;
            for d in 0..dim {
                let centre = if d == c { separation } else { 0.0 };
                features.push((centre + normal.sample(&mut rng)) as f32);
            }
            classes.push(c);
        }
        TrainingSet {
            dim,
            features,
            styles: classes,
            style_labels: style_labels.clone(),
        }
    };
    let train = split(train_n);
    let test = split(test_n);
    ClusterTask {
        library,
        train,
        test,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_annotations_are_consistent() {
        let tax = Taxonomy::canonical();
        for cfg in [GeneratorConfig::default(), GeneratorConfig::imbalanced_library()] {
            let gen = AnnotationGenerator::new(&tax, cfg).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            for i in 0..500 {
                let ann = gen.generate(&mut rng, &format!("s{i}"));
                let v = tax.validate_annotation(&ann).unwrap();
                assert!(v.is_empty(), "{v:?}");
            }
        }
    }

    #[test]
    fn bald_styles_are_generated() {
        let tax = Taxonomy::canonical();
        let cfg = GeneratorConfig {
            bald_probability: 1.0,
            ..Default::default()
        };
        let gen = AnnotationGenerator::new(&tax, cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let labels = gen.generate_labels(&mut rng);
        assert!(tax.is_bald(&labels));
        assert!(tax.check(&labels).is_empty());
    }
}
