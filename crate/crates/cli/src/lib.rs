//! File formats and command line for `reachcert`.
//!
//! The numerical work lives in [`reachcert_core`]; this crate reads scenario
//! JSON, writes reports, program dumps and CSV tables, and maps verdicts to
//! exit codes.

pub mod cmd;
pub mod program;
pub mod report;
pub mod scenario;
