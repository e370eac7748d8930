//! Explainable network intrusion detection on NSL-KDD.

pub mod data;
pub mod explain;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod survey;
