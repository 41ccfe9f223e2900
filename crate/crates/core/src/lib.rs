//! Monochromatic combinatorial lines in [3]^n, found by an explicit
//! block-by-block pigeonhole induction and emitted as checkable certificates.
//!
//! The pipeline: [`word::block_structure`] fixes the block sizes,
//! [`oracle::make_oracle`] names a colouring, [`solver::find_line`] runs the
//! induction and [`certificate::verify_certificate`] replays the result.
//! [`bruteforce`] provides exhaustive ground truth for tiny cubes.

pub mod bruteforce;
pub mod certificate;
pub mod cli;
pub mod error;
pub mod oracle;
pub mod solver;
pub mod word;

pub use certificate::{verify_certificate, verify_line, Certificate, LineSpec, VerificationReport};
pub use error::{HjError, Result};
pub use oracle::{make_oracle, with_memo_and_counting, ColourOracle, CountingOracle, OracleStats};
pub use solver::{find_line, PairTable, Solver};
pub use word::{block_structure, BlockStructure, Mode, Symbol, Word};
