//! Scenarios shipped with the crate.

use std::path::Path;

use super::compile::Scenario;
use crate::error::ScenarioError;

pub const BUNDLE: &[(&str, &str)] = &[
    ("pg1", include_str!("../../scenarios/pg1.kbp.json")),
    ("pg2_gamma", include_str!("../../scenarios/pg2_gamma.kbp.json")),
    ("pg2_gamma_prime", include_str!("../../scenarios/pg2_gamma_prime.kbp.json")),
    ("pg3", include_str!("../../scenarios/pg3.kbp.json")),
    ("pg2_two_agent", include_str!("../../scenarios/pg2_two_agent.kbp.json")),
    ("diffuse_line3", include_str!("../../scenarios/diffuse_line3.kbp.json")),
    ("muddy_children_n3", include_str!("../../scenarios/muddy_children_n3.kbp.json")),
];

/// Every bundled scenario, compiled.
pub fn bundled() -> Vec<Scenario> {
    BUNDLE.iter().map(|(name, text)| Scenario::from_json(text).unwrap_or_else(|e| panic!("bundled scenario {name}: {e}"))).collect()
}

/// A bundled scenario by name or alias.
pub fn load_bundled(name: &str) -> Result<Scenario, ScenarioError> {
    for (key, text) in BUNDLE {
        let scenario = Scenario::from_json(text)?;
        if *key == name || scenario.doc.aliases.iter().any(|a| a == name) {
            return Ok(scenario);
        }
    }
    Err(ScenarioError::UnknownScenario(name.to_string()))
}

/// A scenario file path, or else a bundled scenario name.
pub fn load(name_or_path: &str) -> Result<Scenario, ScenarioError> {
    let path = Path::new(name_or_path);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io { path: name_or_path.to_string(), source: e })?;
        return Scenario::from_json(&text);
    }
    load_bundled(name_or_path)
}
