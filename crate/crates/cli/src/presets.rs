//! Scenario files shipped with the binary.

pub const PRESETS: &[(&str, &str)] = &[
    ("ch3_horizontal", include_str!("../scenarios/ch3_horizontal.scn")),
    ("ch4_validation", include_str!("../scenarios/ch4_validation.scn")),
    ("ch4_hidden", include_str!("../scenarios/ch4_hidden.scn")),
    ("ch5", include_str!("../scenarios/ch5.scn")),
    ("ch6_sounding", include_str!("../scenarios/ch6_sounding.scn")),
    ("ch7", include_str!("../scenarios/ch7.scn")),
];

/// Text of a preset by name, with or without the `.scn` suffix.
pub fn get(name: &str) -> Option<&'static str> {
    let name = name.strip_suffix(".scn").unwrap_or(name);
    PRESETS.iter().find(|p| p.0 == name).map(|p| p.1)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|p| p.0)
}
