//! Feature vectors, annotations, sample records and their joins.

pub mod features;
pub mod join;
pub mod marginals;
pub mod records;

pub use features::{FeatureStore, StoreError};
pub use join::{join, Dataset, JoinError, JoinProblem};
pub use marginals::{attribute_marginals, MarginalError, MarginalKey, MarginalTable};
pub use records::{
    read_jsonl, write_jsonl, DemographicSchema, JsonlError, LibraryError, SampleRecord,
    StyleLibrary,
};
