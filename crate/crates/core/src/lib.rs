//! Skeleton micro-gesture representation learning.
//!
//! Data model and dataset I/O ([`skeleton`], [`graph`], [`dataset`]),
//! micro-gesture augmentations ([`augment`]), the graph-form and
//! sequence-form encoders ([`spatial`], [`temporal`]), momentum-contrastive
//! pretraining ([`contrastive`]), linear evaluation with score fusion
//! ([`eval`]), a synthetic dataset generator ([`synth`]) and the glue that
//! runs one stream end to end ([`pipeline`]).

pub mod annotation;
pub mod augment;
pub mod checkpoint;
pub mod contrastive;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod graph;
pub mod model;
pub mod nn;
pub mod pipeline;
pub mod rng;
pub mod skeleton;
pub mod spatial;
pub mod synth;
pub mod temporal;

pub use error::{Error, Result};
