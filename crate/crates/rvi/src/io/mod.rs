//! Model ingestion, benchmark generators, alpha-vector persistence, and
//! run-stats output.

pub mod cassandra;
pub mod formats;
pub mod gen;
