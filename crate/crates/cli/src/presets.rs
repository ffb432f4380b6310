//! Shipped configurations, embedded in the binary.

pub const PRESETS: &[(&str, &str)] = &[
    ("jc-ladder", include_str!("../presets/jc-ladder.toml")),
    ("bh-meanfield", include_str!("../presets/bh-meanfield.toml")),
    ("jch-meanfield", include_str!("../presets/jch-meanfield.toml")),
    ("blockade-ness", include_str!("../presets/blockade-ness.toml")),
    ("fermionization-peaks", include_str!("../presets/fermionization-peaks.toml")),
    ("crystallization-g2", include_str!("../presets/crystallization-g2.toml")),
    ("butterfly", include_str!("../presets/butterfly.toml")),
    ("harper-levelstats", include_str!("../presets/harper-levelstats.toml")),
    ("chiral-ring", include_str!("../presets/chiral-ring.toml")),
    ("transmon-array", include_str!("../presets/transmon-array.toml")),
    ("cavity-decay", include_str!("../presets/cavity-decay.toml")),
    ("harper-spectroscopy", include_str!("../presets/harper-spectroscopy.toml")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// Preset used when a task is run without `--config` or `--preset`.
pub fn default_for_task(task: &str) -> &'static str {
    match task {
        "diagonalize" => "jc-ladder",
        "meanfield" => "jch-meanfield",
        "lindblad" => "cavity-decay",
        "ness-sweep" => "fermionization-peaks",
        "spectroscopy" => "harper-spectroscopy",
        "butterfly" => "butterfly",
        "levelstats" => "harper-levelstats",
        _ => "transmon-array",
    }
}
