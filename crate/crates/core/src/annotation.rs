//! Inter-labeler agreement for a pair of annotators.

use crate::error::{Error, Result};

/// Dataset-level average agreement reported for the iMiGUE annotations.
pub const IMIGUE_AVERAGE_RELIABILITY: f64 = 0.81;

/// `2 * agreed / total`, where `total` counts the gestures annotated by both
/// labelers together (so full agreement gives `agreed = total / 2`).
pub fn annotation_reliability(agreed_count: u64, total_annotated: u64) -> Result<f64> {
    if total_annotated == 0 {
        return Err(Error::InvalidInput("reliability undefined for zero annotations".into()));
    }
    if 2 * agreed_count > total_annotated {
        return Err(Error::InvalidInput(format!(
            "agreed count {agreed_count} exceeds half of {total_annotated} annotations"
        )));
    }
    Ok(2.0 * agreed_count as f64 / total_annotated as f64)
}
