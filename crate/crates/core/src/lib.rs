//! Joint search over spatial-accelerator hardware (PE array shape, buffer
//! sizes) and per-layer loop-nest mappings under a chip-area budget.
//!
//! * [`workload`] loads models and lowers layers to convolution form.
//! * [`space`] encodes, repairs and decodes design points.
//! * [`cost`] scores designs analytically; [`cost::oracle`] re-derives the
//!   same counts by brute-force execution.
//! * [`search`] holds the domain-aware GA and the baseline optimizers.
//! * [`experiment`] runs named schemes and comparison tables.

pub mod cost;
pub mod error;
pub mod experiment;
pub mod platform;
pub mod report;
pub mod search;
pub mod space;
pub mod workload;

pub use cost::{evaluate, CostReport, Objective};
pub use error::{Error, Result};
pub use platform::Platform;
pub use space::{decode, AcceleratorDesign, Dim, Genome, MappingChromosome, Template};
pub use workload::{LayerShape, Model};
