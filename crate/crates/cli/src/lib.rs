//! Command-line front end: argument parsing, config files, and file export
//! for the simulator library.

pub mod commands;
pub mod config_file;
pub mod export;
