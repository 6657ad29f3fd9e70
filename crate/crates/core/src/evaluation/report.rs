//! Accuracy and fairness report over demographic groups.

use std::fmt::Write as _;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::collate::{CollatedLabels, Collator, Metric, COLLATION_VERSION};
use super::metrics::{attribute_accuracy, fairness, MetricError};
use crate::datastore::{DemographicSchema, SampleRecord, StyleLibrary};
use crate::taxonomy::{FlattenError, LabelVector};

/// A classifier's output for one sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub sample_id: String,
    /// Predicted style.
    pub style_id: String,
    /// Attribute-head argmaxes in slot order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head_labels: Option<LabelVector>,
}

/// One evaluated sample: collated truth and prediction plus demographics.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSample {
    pub sample_id: String,
    pub truth: CollatedLabels,
    /// Collated annotation of the predicted style.
    pub pred: CollatedLabels,
    /// Collated attribute-head argmaxes, when available.
    pub head_pred: Option<CollatedLabels>,
    pub demographics: IndexMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DemographicProblem {
    Missing { sample_id: String, category: String },
    UnknownGroup { sample_id: String, category: String, group: String },
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no samples to evaluate")]
    Empty,
    #[error("demographics incomplete: {}", .0.iter().map(|p| match p {
        DemographicProblem::Missing { sample_id, category } => format!("{sample_id} lacks {category}"),
        DemographicProblem::UnknownGroup { sample_id, category, group } => format!("{sample_id} has unknown {category} group {group:?}"),
    }).collect::<Vec<_>>().join("; "))]
    Demographics(Vec<DemographicProblem>),
    #[error("no prediction for sample {0:?}")]
    MissingPrediction(String),
    #[error("sample {sample_id:?} references unknown style {style_id:?}")]
    UnknownStyle { sample_id: String, style_id: String },
    #[error("head labels of sample {0:?} do not fit the taxonomy layout")]
    HeadLayout(String),
    #[error(transparent)]
    Invalid(#[from] FlattenError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Pair every sample with its prediction and collate both sides through
/// the style library. Samples keep their input order.
pub fn collate_predictions(
    collator: &Collator<'_>,
    library: &StyleLibrary,
    samples: &[SampleRecord],
    predictions: &[PredictionRecord],
) -> Result<Vec<EvalSample>, ReportError> {
    let tax = collator.taxonomy();
    let by_id: IndexMap<&str, &PredictionRecord> =
        predictions.iter().map(|p| (p.sample_id.as_str(), p)).collect();
    let style = |sample_id: &str, style_id: &str| {
        library.get(style_id).ok_or_else(|| ReportError::UnknownStyle {
            sample_id: sample_id.to_string(),
            style_id: style_id.to_string(),
        })
    };
    samples
        .iter()
        .map(|s| {
            let p = by_id
                .get(s.sample_id.as_str())
                .ok_or_else(|| ReportError::MissingPrediction(s.sample_id.clone()))?;
            let truth = collator.collate_annotation(style(&s.sample_id, &s.style_id)?)?;
            let pred = collator.collate_annotation(style(&s.sample_id, &p.style_id)?)?;
            let head_pred = match &p.head_labels {
                Some(l) => {
                    let fits = l.len() == tax.slot_count()
                        && l.iter().zip(tax.layout()).all(|(v, d)| v < d.cardinality);
                    if !fits {
                        return Err(ReportError::HeadLayout(s.sample_id.clone()));
                    }
                    Some(collator.collate(l))
                }
                None => None,
            };
            Ok(EvalSample {
                sample_id: s.sample_id.clone(),
                truth,
                pred,
                head_pred,
                demographics: s.demographics.clone().unwrap_or_default(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub count: usize,
    pub accuracy: IndexMap<Metric, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryReport {
    pub groups: IndexMap<String, GroupReport>,
    /// `None` where every group scored zero.
    pub fairness: IndexMap<Metric, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub collation: String,
    pub samples: usize,
    pub metrics: Vec<Metric>,
    pub accuracy: IndexMap<Metric, f64>,
    pub mean_accuracy: f64,
    pub categories: IndexMap<String, CategoryReport>,
    /// `category/metric` cells averaged into `mean_fairness`.
    pub fairness_cells: Vec<String>,
    pub mean_fairness: f64,
    /// Accuracy of the attribute heads read directly, as a diagnostic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head_accuracy: Option<IndexMap<Metric, f64>>,
}

fn check_demographics(samples: &[EvalSample], schema: &DemographicSchema) -> Result<(), ReportError> {
    let mut problems = Vec::new();
    for s in samples {
        for (category, groups) in &schema.categories {
            match s.demographics.get(category) {
                None => problems.push(DemographicProblem::Missing {
                    sample_id: s.sample_id.clone(),
                    category: category.clone(),
                }),
                Some(g) if !groups.contains(g) => problems.push(DemographicProblem::UnknownGroup {
                    sample_id: s.sample_id.clone(),
                    category: category.clone(),
                    group: g.clone(),
                }),
                Some(_) => {}
            }
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(ReportError::Demographics(problems))
    }
}

fn accuracies(samples: &[&EvalSample], pick: impl Fn(&EvalSample) -> &CollatedLabels) -> Result<IndexMap<Metric, f64>, MetricError> {
    let preds: Vec<CollatedLabels> = samples.iter().map(|s| pick(s).clone()).collect();
    let truths: Vec<CollatedLabels> = samples.iter().map(|s| s.truth.clone()).collect();
    Metric::ALL
        .iter()
        .map(|&m| Ok((m, attribute_accuracy(&preds, &truths, m)?)))
        .collect()
}

/// Per-metric accuracy overall and per group, fairness per category and
/// metric, and their unweighted means. Groups appear in schema order and
/// only when they have samples.
pub fn report(samples: &[EvalSample], schema: &DemographicSchema) -> Result<FairnessReport, ReportError> {
    if samples.is_empty() {
        return Err(ReportError::Empty);
    }
    check_demographics(samples, schema)?;
    let all: Vec<&EvalSample> = samples.iter().collect();
    let accuracy = accuracies(&all, |s| &s.pred)?;
    let mean_accuracy = accuracy.values().sum::<f64>() / accuracy.len() as f64;

    let mut categories = IndexMap::new();
    let mut fairness_cells = Vec::new();
    let mut fairness_values = Vec::new();
    for (category, group_names) in &schema.categories {
        let mut groups = IndexMap::new();
        for g in group_names {
            let members: Vec<&EvalSample> = samples
                .iter()
                .filter(|s| s.demographics.get(category) == Some(g))
                .collect();
            if members.is_empty() {
                continue;
            }
            groups.insert(
                g.clone(),
                GroupReport {
                    count: members.len(),
                    accuracy: accuracies(&members, |s| &s.pred)?,
                },
            );
        }
        let mut cell_fairness = IndexMap::new();
        for m in Metric::ALL {
            let per_group: IndexMap<String, f64> =
                groups.iter().map(|(g, r)| (g.clone(), r.accuracy[&m])).collect();
            let value = match fairness(&per_group) {
                Ok(v) => Some(v),
                Err(MetricError::Undefined) => None,
                Err(e) => return Err(e.into()),
            };
            if let Some(v) = value {
                fairness_cells.push(format!("{category}/{m}"));
                fairness_values.push(v);
            }
            cell_fairness.insert(m, value);
        }
        categories.insert(
            category.clone(),
            CategoryReport {
                groups,
                fairness: cell_fairness,
            },
        );
    }
    let mean_fairness = if fairness_values.is_empty() {
        return Err(MetricError::Undefined.into());
    } else {
        fairness_values.iter().sum::<f64>() / fairness_values.len() as f64
    };

    let head_accuracy = if samples.iter().all(|s| s.head_pred.is_some()) {
        Some(accuracies(&all, |s| s.head_pred.as_ref().unwrap())?)
    } else {
        None
    };

    Ok(FairnessReport {
        collation: COLLATION_VERSION.to_string(),
        samples: samples.len(),
        metrics: Metric::ALL.to_vec(),
        accuracy,
        mean_accuracy,
        categories,
        fairness_cells,
        mean_fairness,
        head_accuracy,
    })
}

fn pct(v: f64) -> String {
    format!("{:.1}%", 100.0 * v)
}

fn render_rows(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            rows.iter()
                .map(|r| r[c].len())
                .chain([header[c].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    for row in std::iter::once(header).chain(rows.iter().map(Vec::as_slice)) {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
}

impl FairnessReport {
    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Plain-text tables: one accuracy row in the ablation-table layout
    /// (six metrics, mean accuracy, mean fairness), then fairness per
    /// category and accuracy per group.
    pub fn render_text(&self, model: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}, {} samples", self.collation, self.samples);
        let _ = writeln!(out);

        let mut header: Vec<String> = vec!["Model".into()];
        header.extend(self.metrics.iter().map(|m| m.name().to_string()));
        header.push("Mean Accuracy".into());
        header.push("Mean Fairness".into());
        let mut row = vec![model.to_string()];
        row.extend(self.metrics.iter().map(|m| pct(self.accuracy[m])));
        row.push(pct(self.mean_accuracy));
        row.push(format!("{:.1}%", self.mean_fairness));
        render_rows(&mut out, &header, &[row]);

        let _ = writeln!(out);
        let mut header: Vec<String> = vec!["Fairness".into()];
        header.extend(self.metrics.iter().map(|m| m.name().to_string()));
        let rows: Vec<Vec<String>> = self
            .categories
            .iter()
            .map(|(cat, r)| {
                std::iter::once(cat.clone())
                    .chain(self.metrics.iter().map(|m| match r.fairness[m] {
                        Some(v) => format!("{v:.1}%"),
                        None => "n/a".into(),
                    }))
                    .collect()
            })
            .collect();
        render_rows(&mut out, &header, &rows);

        let _ = writeln!(out);
        let mut header: Vec<String> = vec!["Group".into(), "n".into()];
        header.extend(self.metrics.iter().map(|m| m.name().to_string()));
        let mut rows = Vec::new();
        for (cat, r) in &self.categories {
            for (g, gr) in &r.groups {
                let mut row = vec![format!("{cat}/{g}"), gr.count.to_string()];
                row.extend(self.metrics.iter().map(|m| pct(gr.accuracy[m])));
                rows.push(row);
            }
        }
        render_rows(&mut out, &header, &rows);
        out
    }

    /// Long-format CSV: `section,category,group,metric,value`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["section", "category", "group", "metric", "value"])
            .expect("in-memory csv write");
        let mut put = |section: &str, category: &str, group: &str, metric: &str, value: Option<f64>| {
            let v = value.map(|v| v.to_string()).unwrap_or_default();
            w.write_record([section, category, group, metric, v.as_str()])
                .expect("in-memory csv write");
        };
        for (m, a) in &self.accuracy {
            put("accuracy", "", "", m.name(), Some(*a));
        }
        for (cat, r) in &self.categories {
            for (g, gr) in &r.groups {
                for (m, a) in &gr.accuracy {
                    put("group_accuracy", cat, g, m.name(), Some(*a));
                }
            }
            for (m, f) in &r.fairness {
                put("fairness", cat, "", m.name(), *f);
            }
        }
        put("mean_accuracy", "", "", "", Some(self.mean_accuracy));
        put("mean_fairness", "", "", "", Some(self.mean_fairness));
        String::from_utf8(w.into_inner().expect("flush in-memory csv")).expect("csv is utf-8")
    }
}
