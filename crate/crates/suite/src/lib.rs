//! Host package for the full-size acceptance suite in `tests/acceptance.rs`.
//!
//! It is a separate package so that `cargo test --workspace` runs every
//! other test target before this long one.
