//! End-to-end acceptance checks for `fieldforge`; see `tests/acceptance.rs`.
