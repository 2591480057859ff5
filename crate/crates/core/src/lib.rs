//! Schema matching and transformation of proprietary XML EHR extracts into
//! FHIR resource bundles.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`ingest`] parses the EHR document and flattens it into uniquely named
//!    leaf elements, resolving coded names through a static terminology table.
//! 2. [`catalog`] loads a FHIR snapshot and derives pseudo-elements, effective
//!    leaves and the resource connection graph.
//! 3. [`equivalence`] searches the catalog for the largest connected,
//!    type-compatible assignment of EHR elements to FHIR elements, scored by
//!    the configurable metrics in [`similarity`] and gated by [`typing`].
//! 4. [`mapper`] materializes that assignment into FHIR resource instances
//!    and serializes the bundle.
//!
//! [`pipeline`] wires the stages together with the per-source configuration
//! in [`config`] and the on-disk equivalence cache.

pub mod catalog;
pub mod config;
pub mod equivalence;
pub mod error;
pub mod ingest;
pub mod mapper;
pub mod pipeline;
pub mod similarity;
pub mod typing;

pub use error::{Error, Result};
