//! Scenarios shipped with the binary.

pub const NAMES: [&str; 7] = ["fig1", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8"];

const TEXTS: [&str; 7] = [
    include_str!("../../presets/fig1.toml"),
    include_str!("../../presets/fig3.toml"),
    include_str!("../../presets/fig4.toml"),
    include_str!("../../presets/fig5.toml"),
    include_str!("../../presets/fig6.toml"),
    include_str!("../../presets/fig7.toml"),
    include_str!("../../presets/fig8.toml"),
];

pub fn get(name: &str) -> Option<&'static str> {
    NAMES.iter().position(|&n| n == name).map(|i| TEXTS[i])
}

/// First comment line of a preset.
pub fn summary(name: &str) -> Option<&'static str> {
    get(name)?.lines().next().map(|l| l.trim_start_matches('#').trim())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::RawConfig;

    #[test]
    fn every_preset_resolves() {
        for name in NAMES {
            let raw = RawConfig::load(name).unwrap();
            let scenario = raw.resolve().unwrap_or_else(|e| panic!("{name}: {e}"));
            scenario.model().unwrap_or_else(|e| panic!("{name}: {e}"));
            for point in super::super::ensemble::sweep_grid(&raw.sweep_axes().unwrap()) {
                let mut r = raw.clone();
                for (axis, v) in &point {
                    r.set_value(axis, toml::Value::Float(*v)).unwrap();
                }
                r.resolve().unwrap().model().unwrap_or_else(|e| panic!("{name} {point:?}: {e}"));
            }
            assert!(summary(name).is_some());
        }
    }
}
