//! Scenario documents shipped with the project.

use crate::sim::{Scenario, ScenarioError};

pub const BUILTIN: [(&str, &str); 5] = [
    ("dry-start", include_str!("../../../scenarios/dry-start.json")),
    ("saturated", include_str!("../../../scenarios/saturated.json")),
    (
        "hot-dry-ambient",
        include_str!("../../../scenarios/hot-dry-ambient.json"),
    ),
    ("intruder-night", include_str!("../../../scenarios/intruder-night.json")),
    ("sick-leaf", include_str!("../../../scenarios/sick-leaf.json")),
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTIN.iter().map(|(name, _)| *name)
}

/// Parses a shipped scenario by name.
pub fn builtin(name: &str) -> Option<Result<Scenario, ScenarioError>> {
    BUILTIN
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, doc)| Scenario::from_json(doc))
}
