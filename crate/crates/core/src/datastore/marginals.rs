//! Per-attribute value distributions of a (weighted) style library.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::collate::{CollationError, Collator, LengthBucket};
use crate::taxonomy::{FlattenError, LabelVector, Taxonomy};

use super::records::StyleLibrary;

pub const FRINGE_PRESENT: &str = "fringe-present";
pub const GATHERED_PRESENT: &str = "gathered-present";
pub const LENGTH_BUCKET: &str = "length-bucket";

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// A categorical view of a style: a taxonomy attribute (regional ones
/// collated) or one of the derived balancing flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MarginalKey {
    Global(usize),
    Regional(usize),
    FringePresent,
    GatheredPresent,
    LengthBucket,
}

const BUCKETS: [LengthBucket; 4] = [
    LengthBucket::Short,
    LengthBucket::Medium,
    LengthBucket::Long,
    LengthBucket::Unknown,
];

impl MarginalKey {
    pub fn parse(tax: &Taxonomy, name: &str) -> Option<Self> {
        match name {
            FRINGE_PRESENT => Some(Self::FringePresent),
            GATHERED_PRESENT => Some(Self::GatheredPresent),
            LENGTH_BUCKET => Some(Self::LengthBucket),
            _ => tax
                .global_index(name)
                .map(Self::Global)
                .or_else(|| tax.regional_index(name).map(Self::Regional)),
        }
    }

    /// Every key, globals then regionals then derived flags.
    pub fn all(tax: &Taxonomy) -> Vec<Self> {
        (0..tax.global_attributes().len())
            .map(Self::Global)
            .chain((0..tax.regional_attributes().len()).map(Self::Regional))
            .chain([Self::FringePresent, Self::GatheredPresent, Self::LengthBucket])
            .collect()
    }

    pub fn name(&self, tax: &Taxonomy) -> String {
        match *self {
            Self::Global(a) => tax.global_attributes()[a].name.clone(),
            Self::Regional(a) => tax.regional_attributes()[a].name.clone(),
            Self::FringePresent => FRINGE_PRESENT.into(),
            Self::GatheredPresent => GATHERED_PRESENT.into(),
            Self::LengthBucket => LENGTH_BUCKET.into(),
        }
    }

    pub fn categories(&self, tax: &Taxonomy) -> Vec<String> {
        match *self {
            Self::Global(a) => tax.global_attributes()[a].values.clone(),
            Self::Regional(a) => tax.regional_attributes()[a].values.clone(),
            Self::FringePresent | Self::GatheredPresent => vec!["true".into(), "false".into()],
            Self::LengthBucket => BUCKETS.iter().map(|b| b.name().to_string()).collect(),
        }
    }

    /// Index into [`MarginalKey::categories`] for one style.
    pub fn category(&self, collator: &Collator<'_>, labels: &LabelVector) -> usize {
        let tax = collator.taxonomy();
        match *self {
            Self::Global(a) => labels.get(tax.global_slot(a)),
            Self::Regional(a) => collator.regional(a, labels),
            Self::FringePresent => usize::from(!collator.fringe_present(labels)),
            Self::GatheredPresent => usize::from(!collator.gathered_present(labels)),
            Self::LengthBucket => {
                let b = collator.length_bucket(labels);
                BUCKETS.iter().position(|&x| x == b).unwrap()
            }
        }
    }
}

/// attribute → (value → probability), in taxonomy order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MarginalTable(pub IndexMap<String, IndexMap<String, f64>>);

impl MarginalTable {
    pub fn get(&self, attribute: &str, value: &str) -> Option<f64> {
        self.0.get(attribute).and_then(|d| d.get(value)).copied()
    }
}

#[derive(Debug, Error)]
pub enum MarginalError {
    #[error("style library is empty")]
    EmptyLibrary,
    #[error("{weights} weights for {styles} styles")]
    WeightCount { weights: usize, styles: usize },
    #[error("weight {index} is negative or not finite")]
    BadWeight { index: usize },
    #[error("weights sum to {0}, expected 1")]
    WeightSum(f64),
    #[error(transparent)]
    Invalid(#[from] FlattenError),
    #[error(transparent)]
    Collation(#[from] CollationError),
}

pub fn check_weights(weights: &[f64], styles: usize) -> Result<(), MarginalError> {
    if weights.len() != styles {
        return Err(MarginalError::WeightCount {
            weights: weights.len(),
            styles,
        });
    }
    if let Some(index) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
        return Err(MarginalError::BadWeight { index });
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(MarginalError::WeightSum(sum));
    }
    Ok(())
}

/// Weighted distribution of one key over pre-flattened styles.
pub fn key_distribution(
    collator: &Collator<'_>,
    key: MarginalKey,
    labels: &[LabelVector],
    weights: &[f64],
) -> Vec<f64> {
    let mut dist = vec![0.0; key.categories(collator.taxonomy()).len()];
    for (l, &w) in labels.iter().zip(weights) {
        dist[key.category(collator, l)] += w;
    }
    dist
}

/// Marginals of every attribute and derived flag. `weights` are aligned
/// with library order and default to uniform.
pub fn attribute_marginals(
    tax: &Taxonomy,
    library: &StyleLibrary,
    weights: Option<&[f64]>,
) -> Result<MarginalTable, MarginalError> {
    if library.is_empty() {
        return Err(MarginalError::EmptyLibrary);
    }
    let uniform;
    let weights = match weights {
        Some(w) => {
            check_weights(w, library.len())?;
            w
        }
        None => {
            uniform = vec![1.0 / library.len() as f64; library.len()];
            &uniform
        }
    };
    let collator = Collator::new(tax)?;
    let labels = library.labels(tax)?;
    let mut table = IndexMap::new();
    for key in MarginalKey::all(tax) {
        let dist = key_distribution(&collator, key, &labels, weights);
        let entry = key
            .categories(tax)
            .into_iter()
            .zip(dist)
            .collect::<IndexMap<_, _>>();
        table.insert(key.name(tax), entry);
    }
    Ok(MarginalTable(table))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{AnnotationBuilder, AnnotationGenerator, GeneratorConfig};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_styles(tax: &Taxonomy) -> StyleLibrary {
        StyleLibrary::new(vec![
            AnnotationBuilder::new(tax, "straight").build(),
            AnnotationBuilder::new(tax, "coily")
                .all_regions("Hair Type", "Coily")
                .build(),
        ])
        .unwrap()
    }

    #[test]
    fn uniform_weights_split_evenly() {
        let tax = Taxonomy::canonical();
        let m = attribute_marginals(&tax, &two_styles(&tax), None).unwrap();
        assert_eq!(m.get("Hair Type", "Straight"), Some(0.5));
        assert_eq!(m.get("Hair Type", "Coily"), Some(0.5));
        assert_eq!(m.get("Hair Type", "Wavy"), Some(0.0));
    }

    #[test]
    fn weighted_marginals_follow_weights() {
        let tax = Taxonomy::canonical();
        let m = attribute_marginals(&tax, &two_styles(&tax), Some(&[0.8, 0.2])).unwrap();
        assert_eq!(m.get("Hair Type", "Straight"), Some(0.8));
        assert_eq!(m.get("Hair Type", "Coily"), Some(0.2));
        assert_eq!(m.get(FRINGE_PRESENT, "false"), Some(1.0));
        assert_eq!(m.get(LENGTH_BUCKET, "Medium"), Some(1.0));
    }

    #[test]
    fn every_distribution_sums_to_one() {
        let tax = Taxonomy::canonical();
        let gen = AnnotationGenerator::new(&tax, GeneratorConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lib = StyleLibrary::new(
            (0..40).map(|i| gen.generate(&mut rng, &format!("s{i}"))).collect(),
        )
        .unwrap();
        let m = attribute_marginals(&tax, &lib, None).unwrap();
        assert_eq!(m.0.len(), 21);
        for (attr, dist) in &m.0 {
            let s: f64 = dist.values().sum();
            assert!((s - 1.0).abs() <= 1e-9, "{attr}: {s}");
        }
    }

    #[test]
    fn bad_inputs() {
        let tax = Taxonomy::canonical();
        assert!(matches!(
            attribute_marginals(&tax, &StyleLibrary::default(), None),
            Err(MarginalError::EmptyLibrary)
        ));
        let lib = two_styles(&tax);
        assert!(matches!(
            attribute_marginals(&tax, &lib, Some(&[0.5, 0.4])),
            Err(MarginalError::WeightSum(_))
        ));
        assert!(matches!(
            attribute_marginals(&tax, &lib, Some(&[1.5, -0.5])),
            Err(MarginalError::BadWeight { index: 1 })
        ));
    }

    proptest! {
        #[test]
        fn marginals_are_affine_in_weights(
            seed in any::<u64>(),
            raw1 in prop::collection::vec(0.01f64..1.0, 12),
            raw2 in prop::collection::vec(0.01f64..1.0, 12),
            alpha in 0.0f64..=1.0,
        ) {
            let tax = Taxonomy::canonical();
            let gen = AnnotationGenerator::new(&tax, GeneratorConfig::default()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let lib = StyleLibrary::new(
                (0..12).map(|i| gen.generate(&mut rng, &format!("s{i}"))).collect(),
            ).unwrap();
            let norm = |v: Vec<f64>| { let s: f64 = v.iter().sum(); v.into_iter().map(|x| x / s).collect::<Vec<_>>() };
            let w1 = norm(raw1);
            let w2 = norm(raw2);
            let mix: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect();
            let m1 = attribute_marginals(&tax, &lib, Some(&w1)).unwrap();
            let m2 = attribute_marginals(&tax, &lib, Some(&w2)).unwrap();
            let mm = attribute_marginals(&tax, &lib, Some(&mix)).unwrap();
            for (attr, dist) in &mm.0 {
                for (value, p) in dist {
                    let expect = alpha * m1.0[attr][value] + (1.0 - alpha) * m2.0[attr][value];
                    prop_assert!((p - expect).abs() <= 1e-12);
                }
            }
        }
    }
}
