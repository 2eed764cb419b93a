//! Circulant biased weighing designs for fMRI experiments.
//!
//! Builds stimulus sequences (Paley difference sets, LFSR m-sequences and
//! their zero-insertion extensions), evaluates information-matrix optimality
//! criteria, certifies designs against the known target forms per design
//! length, and brute-force verifies optimality claims at small sizes.

pub mod blocks;
pub mod certify;
pub mod criteria;
pub mod design;
pub mod error;
pub mod record;
pub mod search;
pub mod sequence;
pub mod simulate;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
