/// Bundled experiment suites, by name.
pub const SUITES: &[(&str, &str)] = &[
    ("bm_conformal", include_str!("../../suites/bm_conformal.toml")),
    ("weighted_product", include_str!("../../suites/weighted_product.toml")),
    ("sprays", include_str!("../../suites/sprays.toml")),
    ("geodesics", include_str!("../../suites/geodesics.toml")),
    ("homogeneity", include_str!("../../suites/homogeneity.toml")),
    ("fields", include_str!("../../suites/fields.toml")),
];

/// Source of a bundled suite; the `.toml` suffix is optional.
pub fn suite(name: &str) -> Option<&'static str> {
    let name = name.strip_suffix(".toml").unwrap_or(name);
    SUITES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}
