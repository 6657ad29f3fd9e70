pub mod collate;
pub mod metrics;
pub mod report;

pub use collate::{CollatedLabels, Collator, LengthBucket, Metric, COLLATION_VERSION};
pub use metrics::{attribute_accuracy, fairness, MetricError};
pub use report::{collate_predictions, report, PredictionRecord, CategoryReport, DemographicProblem, EvalSample, FairnessReport, GroupReport, ReportError};
