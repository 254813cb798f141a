//! Minimal parameter storage, initializers, optimizer and activation helpers.
//!
//! Layers in [`crate::spatial`] and [`crate::temporal`] implement their own
//! forward and backward passes on top of these.

mod ops;
mod optim;
mod params;

pub use ops::*;
pub use optim::SgdNesterov;
pub use params::{Init, ParamId, ParamLayout, ParamSet, Tensor};
