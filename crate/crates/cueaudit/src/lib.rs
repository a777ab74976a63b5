//! Audit harness for pairwise LLM judging: cue-invariance probes, tie-aware
//! metrics, anchoring attacks, and deterministic extractive baselines.

pub mod analysis;
pub mod attacks;
pub mod core;
pub mod corpus;
pub mod cueprobe;
pub mod error;
pub mod fixtures;
pub mod harness;
pub mod judgeclient;
pub mod protocols;
pub mod summarizers;

pub use error::{AuditError, Result};
