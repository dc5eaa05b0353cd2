//! Region codes used by the catalogs.

/// Region code for records that are not tied to a single country.
pub const GLOBAL: &str = "GLOBAL";

const NAMES: &[(&str, &str)] = &[
    ("AT", "Austria"),
    ("BE", "Belgium"),
    ("CH", "Switzerland"),
    ("CN", "China"),
    ("DE", "Germany"),
    ("DK", "Denmark"),
    ("ES", "Spain"),
    ("FR", "France"),
    ("GB", "United Kingdom"),
    ("GR", "Greece"),
    ("IE", "Ireland"),
    ("IT", "Italy"),
    ("MA", "Morocco"),
    ("NL", "Netherlands"),
    ("NZ", "New Zealand"),
    ("PL", "Poland"),
    ("PT", "Portugal"),
    ("SE", "Sweden"),
    ("TR", "Turkey"),
    ("US", "United States"),
    (GLOBAL, "Global"),
];

/// Human-readable name for a region code, or the code itself when unknown.
pub fn display_name(code: &str) -> &str {
    NAMES
        .iter()
        .find(|(c, _)| c.eq_ignore_ascii_case(code))
        .map(|(_, name)| *name)
        .unwrap_or(code)
}

/// Canonical form of a region code: trimmed and upper-cased.
pub fn normalize(code: &str) -> String {
    code.trim().to_ascii_uppercase()
}

/// Joins region names as "A", "A and B", "A, B and C".
pub fn join_names<'a>(codes: impl IntoIterator<Item = &'a str>) -> String {
    let names: Vec<&str> = codes.into_iter().map(display_name).collect();
    match names.as_slice() {
        [] => String::new(),
        [one] => one.to_string(),
        [init @ .., last] => format!("{} and {}", init.join(", "), last),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names() {
        assert_eq!(display_name("fr"), "France");
        assert_eq!(display_name("XX"), "XX");
        assert_eq!(join_names(["FR", "NL"]), "France and Netherlands");
        assert_eq!(join_names(["IT", "DE", "PT"]), "Italy, Germany and Portugal");
    }
}
