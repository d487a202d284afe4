//! Egyptian fraction representations of 1 whose denominators factor over a
//! fixed finite set of primes.
//!
//! The crate enumerates such representations exactly, computes the greedy
//! maximum-denominator bound and compares it with the truth, builds the known
//! closed-form families, and regenerates the summary tables.

pub mod analysis;
pub mod enumerate;
pub mod error;
pub mod families;
pub mod feasibility;
pub mod greedy;
pub mod numeric;
pub mod output;

pub use enumerate::{EnumOptions, Solution, SolutionSet};
pub use error::{Error, Result};
pub use numeric::{Natural, PrimeSet, Rational, SmoothNumber};
