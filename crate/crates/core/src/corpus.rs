//! Built-in example systems, embedded at compile time.

use crate::gifs::OrderedGifs;
use crate::spec_file::{parse_spec_str, SpecError};

/// `(name, spec text)` for every bundled system.
pub const BUILTIN: [(&str, &str); 5] = [
    ("square", include_str!("../specs/square.spec")),
    ("dekking", include_str!("../specs/dekking.spec")),
    ("mcmullen", include_str!("../specs/mcmullen.spec")),
    ("square_rules", include_str!("../specs/square_rules.spec")),
    (
        "mcmullen_rules",
        include_str!("../specs/mcmullen_rules.spec"),
    ),
];

/// The three explicit-edge examples used throughout the test suites.
pub const EXAMPLES: [&str; 3] = ["square", "dekking", "mcmullen"];

pub fn source(name: &str) -> Option<&'static str> {
    BUILTIN.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// Parses a built-in system. Panics on an unknown name or a broken bundle,
/// both of which are programming errors.
pub fn load(name: &str) -> OrderedGifs {
    try_load(name)
        .unwrap_or_else(|| panic!("no built-in system `{name}`"))
        .unwrap_or_else(|e| panic!("built-in `{name}` is invalid: {e}"))
}

pub fn try_load(name: &str) -> Option<Result<OrderedGifs, SpecError>> {
    source(name).map(parse_spec_str)
}
