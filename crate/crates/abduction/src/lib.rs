//! File formats, multi-threaded coverage and run reports around
//! [`abduction_core`]. The `abduct` binary is a thin layer over this crate.

pub mod generate;
pub mod io;
pub mod parallel;
pub mod report;

pub use generate::{generate, write_generated, GenerateConfig, GenerateError, Generated};
pub use io::{load_dataset, load_kb, read_dataset, read_query, save_dataset, write_dataset, DatasetFormat, IoError};
pub use parallel::build_coverage_parallel;
