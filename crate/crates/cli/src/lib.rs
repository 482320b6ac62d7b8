//! Support code for the `flmgof` command-line tool.

pub mod checks;
pub mod manifest;
