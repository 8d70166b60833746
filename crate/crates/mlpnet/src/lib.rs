//! Standard-library companion of `mlpnet-core`: network files, CSV IO,
//! parallel drivers, reference oracles, verification suites and benchmarks.

pub mod bench;
pub mod csvio;
pub mod format;
pub mod oracle;
pub mod par;
pub mod verify;
