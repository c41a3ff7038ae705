//! Shared code behind the `claimforge-bench` and `claimforge-serve` binaries.

pub mod bench;
