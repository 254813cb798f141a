//! The 32 micro-gesture category names used by event logs.

use crate::error::{EmotionError, Result};

/// Category names, grouped head, body, hand, body-hand, head-hand, then the
/// non-micro-gesture class.
pub const MG_CATEGORIES: [&str; 32] = [
    "Nodding",
    "Shaking head",
    "Turning head",
    "Bowing head",
    "Sitting straightly",
    "Moving torso",
    "Shrugging",
    "Shaking shoulders",
    "Bulging face/deep breath",
    "Crossing fingers",
    "Rubbing hands",
    "Folding arms",
    "Minaret gesture",
    "Playing or manipulating objects",
    "Arms akimbo",
    "Putting hands together",
    "Scratching arms",
    "Touching or scratching chest",
    "Covering face",
    "Touching forehead",
    "Touching neck",
    "Covering suprasternal notch",
    "Touching hat",
    "Touching ear",
    "Touching jaw",
    "Scratching head",
    "Rubbing eyes",
    "Touching nose",
    "Biting nails",
    "Adjusting hair",
    "Touching facial parts",
    "Illustrative gestures",
];

fn normalize(label: &str) -> String {
    label.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Canonical spelling of `label`, matched case- and whitespace-insensitively.
pub fn canonical_label(label: &str) -> Result<&'static str> {
    let key = normalize(label);
    MG_CATEGORIES
        .iter()
        .copied()
        .find(|c| normalize(c) == key)
        .ok_or_else(|| EmotionError::UnknownLabel(label.to_string()))
}

pub fn category_index(label: &str) -> Result<usize> {
    let canonical = canonical_label(label)?;
    Ok(MG_CATEGORIES.iter().position(|c| *c == canonical).expect("canonical label is listed"))
}
