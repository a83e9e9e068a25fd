//! Command-line surface: simulation, fitting, benchmarks and post-processing.
//!
//! Exit codes: 0 on success, 1 on any failure, 2 when an input path does not
//! exist or the command line cannot be parsed.

use std::path::PathBuf;

pub mod bench;
pub mod commands;
pub mod scenario;

/// An input file or directory that does not exist.
#[derive(Debug, thiserror::Error)]
#[error("no such file or directory: {}", .0.display())]
pub struct MissingInput(pub PathBuf);

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_MISSING_INPUT: i32 = 2;

/// Maps an error chain to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let missing = err.chain().any(|e| {
        e.is::<MissingInput>()
            || e.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::NotFound)
            || matches!(e.downcast_ref::<ffs::FfsError>(), Some(ffs::FfsError::Io(io)) if io.kind() == std::io::ErrorKind::NotFound)
    });
    if missing {
        EXIT_MISSING_INPUT
    } else {
        EXIT_FAILURE
    }
}
