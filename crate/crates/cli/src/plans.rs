use permutest::montecarlo::SimulationPlan;

use crate::{CliError, CliResult};

pub const BUNDLED: &[(&str, &str)] = &[
    ("table1_row1", include_str!("../plans/table1_row1.toml")),
    ("table1_row2", include_str!("../plans/table1_row2.toml")),
    ("table1_row3", include_str!("../plans/table1_row3.toml")),
    ("table1_row4", include_str!("../plans/table1_row4.toml")),
    ("smoke", include_str!("../plans/smoke.toml")),
    ("identical", include_str!("../plans/identical.toml")),
];

pub fn parse(text: &str) -> CliResult<SimulationPlan> {
    let plan: SimulationPlan = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    plan.validate()?;
    Ok(plan)
}

/// A bundled plan by name, otherwise a TOML file.
pub fn load(name_or_path: &str) -> CliResult<SimulationPlan> {
    if let Some((_, text)) = BUNDLED.iter().find(|(name, _)| *name == name_or_path) {
        return parse(text);
    }
    let text = std::fs::read_to_string(name_or_path)
        .map_err(|e| CliError::Config(format!("`{name_or_path}` is neither a bundled plan nor a readable file: {e}")))?;
    parse(&text)
}
