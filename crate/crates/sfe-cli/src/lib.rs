//! Library surface behind the `sfe` binary: graph ingestion, the JSON
//! report schema, and the solve/verify/closure commands.

pub mod commands;
pub mod graph_io;
pub mod report;

pub use commands::{cmd_closure, cmd_solve, cmd_verify, CliError};
pub use report::Report;
