//! Fairness-aware hairstyle classification toolkit.
//!
//! The crate covers the hairstyle taxonomy and its consistency rules,
//! feature/annotation storage, attribute-balanced style sampling, a
//! linear-head classifier over precomputed backbone features, and
//! taxonomy-based accuracy and fairness evaluation.

pub mod balancer;
pub mod datastore;
pub mod evaluation;
pub mod model;
pub mod par;
pub mod synth;
pub mod taxonomy;
