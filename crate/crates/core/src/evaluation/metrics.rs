use indexmap::IndexMap;
use thiserror::Error;

use super::collate::{CollatedLabels, Metric};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("{preds} predictions for {truths} ground-truth samples")]
    LengthMismatch { preds: usize, truths: usize },
    #[error("no samples to evaluate")]
    Empty,
    #[error("no groups given")]
    NoGroups,
    #[error("accuracy of group {0:?} is outside [0, 1]")]
    OutOfRange(String),
    #[error("fairness is undefined: every group has zero accuracy")]
    Undefined,
}

/// Fraction of aligned samples whose collated value for `metric` matches.
pub fn attribute_accuracy(
    preds: &[CollatedLabels],
    truths: &[CollatedLabels],
    metric: Metric,
) -> Result<f64, MetricError> {
    if preds.len() != truths.len() {
        return Err(MetricError::LengthMismatch {
            preds: preds.len(),
            truths: truths.len(),
        });
    }
    if preds.is_empty() {
        return Err(MetricError::Empty);
    }
    let hits = preds
        .iter()
        .zip(truths)
        .filter(|(p, t)| p.matches(t, metric))
        .count();
    Ok(hits as f64 / preds.len() as f64)
}

/// `100 · mean / max` over group accuracies; exactly 100 when all groups tie.
pub fn fairness(group_accuracies: &IndexMap<String, f64>) -> Result<f64, MetricError> {
    if group_accuracies.is_empty() {
        return Err(MetricError::NoGroups);
    }
    if let Some((g, _)) = group_accuracies
        .iter()
        .find(|(_, a)| !(0.0..=1.0).contains(*a))
    {
        return Err(MetricError::OutOfRange(g.clone()));
    }
    let max = group_accuracies.values().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(MetricError::Undefined);
    }
    if group_accuracies.values().all(|&a| a == max) {
        return Ok(100.0);
    }
    let mean = group_accuracies.values().sum::<f64>() / group_accuracies.len() as f64;
    Ok((100.0 * mean / max).min(100.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn groups(values: &[f64]) -> IndexMap<String, f64> {
        values
            .iter()
            .enumerate()
            .map(|(i, v)| (format!("g{i}"), *v))
            .collect()
    }

    fn labels(bald: bool, hair: &str) -> CollatedLabels {
        CollatedLabels {
            bald,
            bang_styling: "None".into(),
            gathered: false,
            length: "Chin length".into(),
            hair_type: hair.into(),
            strands: "None".into(),
        }
    }

    #[test]
    fn fairness_examples() {
        assert_eq!(fairness(&groups(&[0.8, 0.9, 1.0])).unwrap(), 90.0);
        assert_eq!(fairness(&groups(&[0.9, 0.9])).unwrap(), 100.0);
        assert_eq!(fairness(&groups(&[0.7])).unwrap(), 100.0);
        assert_eq!(fairness(&groups(&[0.1, 0.1, 0.1])).unwrap(), 100.0);
        assert_eq!(fairness(&groups(&[0.0, 0.0])), Err(MetricError::Undefined));
        assert_eq!(fairness(&groups(&[])), Err(MetricError::NoGroups));
        assert!(matches!(fairness(&groups(&[0.5, 1.5])), Err(MetricError::OutOfRange(_))));
    }

    #[test]
    fn accuracy_counts_matches() {
        let truths = vec![labels(false, "Straight"), labels(false, "Wavy"), labels(true, "N/A"), labels(false, "Coily")];
        assert_eq!(attribute_accuracy(&truths, &truths, Metric::HairType).unwrap(), 1.0);
        let mut preds = truths.clone();
        preds[3].hair_type = "Straight".into();
        assert_eq!(attribute_accuracy(&preds, &truths, Metric::HairType).unwrap(), 0.75);
        assert_eq!(attribute_accuracy(&preds, &truths, Metric::Bald).unwrap(), 1.0);
        let wrong: Vec<_> = truths.iter().map(|t| labels(!t.bald, "Other")).collect();
        assert_eq!(attribute_accuracy(&wrong, &truths, Metric::Bald).unwrap(), 0.0);
        assert!(matches!(
            attribute_accuracy(&preds[..2], &truths, Metric::Bald),
            Err(MetricError::LengthMismatch { .. })
        ));
        assert_eq!(attribute_accuracy(&[], &[], Metric::Bald), Err(MetricError::Empty));
    }

    proptest! {
        #[test]
        fn fairness_is_bounded_and_scale_free(values in prop::collection::vec(0.01f64..=1.0, 1..8), c in 0.01f64..=1.0) {
            let f = fairness(&groups(&values)).unwrap();
            prop_assert!(f > 0.0 && f <= 100.0);
            let all_equal = values.iter().all(|v| *v == values[0]);
            prop_assert_eq!(f == 100.0, all_equal || (f - 100.0).abs() < 1e-12);
            let scaled: Vec<f64> = values.iter().map(|v| v * c).collect();
            prop_assert!((fairness(&groups(&scaled)).unwrap() - f).abs() < 1e-9);
        }

        #[test]
        fn accuracy_is_permutation_invariant(flags in prop::collection::vec((any::<bool>(), any::<bool>()), 1..30), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let preds: Vec<_> = flags.iter().map(|(a, _)| labels(*a, "Straight")).collect();
            let truths: Vec<_> = flags.iter().map(|(_, b)| labels(*b, "Straight")).collect();
            let mut idx: Vec<usize> = (0..flags.len()).collect();
            idx.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let p2: Vec<_> = idx.iter().map(|&i| preds[i].clone()).collect();
            let t2: Vec<_> = idx.iter().map(|&i| truths[i].clone()).collect();
            prop_assert_eq!(
                attribute_accuracy(&preds, &truths, Metric::Bald).unwrap(),
                attribute_accuracy(&p2, &t2, Metric::Bald).unwrap()
            );
        }
    }
}
