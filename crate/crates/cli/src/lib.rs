//! Library surface of the experiment runner, shared by the binary and the
//! acceptance tests.

pub mod commands;
pub mod config;
pub mod output;
pub mod presets;
