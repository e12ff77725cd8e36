//! Built-in sweep and table configurations.

use crate::experiments::{SweepConfig, TableConfig};

const FIG1: &str = include_str!("../presets/fig1.json");
const FIG1_SMALL: &str = include_str!("../presets/fig1_small.json");
const FIG2: &str = include_str!("../presets/fig2.json");
const FIG2_SMALL: &str = include_str!("../presets/fig2_small.json");
const TABLE1: &str = include_str!("../presets/table1.json");

/// Names accepted by [`sweep_preset`].
pub const SWEEP_PRESETS: [&str; 4] = ["fig1", "fig1_small", "fig2", "fig2_small"];

/// Names accepted by [`table_preset`].
pub const TABLE_PRESETS: [&str; 1] = ["table1"];

/// Raw JSON of a preset.
pub fn preset_json(name: &str) -> Option<&'static str> {
    match name {
        "fig1" => Some(FIG1),
        "fig1_small" => Some(FIG1_SMALL),
        "fig2" => Some(FIG2),
        "fig2_small" => Some(FIG2_SMALL),
        "table1" => Some(TABLE1),
        _ => None,
    }
}

/// Sweep preset by name.
///
/// `fig1` and `fig2` use the full 3000 x 6000 dictionary with block norms in
/// `[2√d, 3√d]` and `[0.1√d, √d]` respectively; the `_small` variants shrink to
/// `L = 500`, `M = 200`.
pub fn sweep_preset(name: &str) -> Option<SweepConfig> {
    if !SWEEP_PRESETS.contains(&name) {
        return None;
    }
    preset_json(name).map(|s| serde_json::from_str(s).expect("embedded preset parses"))
}

/// Table preset by name. `table1` pins the coherence values of each row.
pub fn table_preset(name: &str) -> Option<TableConfig> {
    if !TABLE_PRESETS.contains(&name) {
        return None;
    }
    preset_json(name).map(|s| serde_json::from_str(s).expect("embedded preset parses"))
}
