//! Library surface of the `rotbec` command-line tool: configuration parsing
//! with explicit unit tags, the binary checkpoint formats, and the command
//! pipelines (reservoir tables, sampling, evolution, analysis, the full
//! quench workflow, and the verification gates).

pub mod checkpoint;
pub mod config;
pub mod pipeline;
