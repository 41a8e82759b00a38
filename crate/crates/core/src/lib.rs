//! Exact computation over coded complete separable metric spaces.
//!
//! The crate manipulates Polish spaces purely through their codes: a
//! countable dense set with a metric oracle. On top of that coding it
//! provides open-set and continuous-function codes, compactness
//! witnesses, a certified covering calculus (Lebesgue numbers, finite
//! subcovers, witness search, moduli of uniform continuity) and the
//! ball-scheme embedding of Cantor space into perfect spaces.
//!
//! Every search result ships a certificate: a finite bundle of rational
//! inequalities whose exact replay proves the claim without repeating
//! the search.

pub mod enumerate;
pub mod functions;
pub mod sets;
pub mod exact;
pub mod spaces;

pub use exact::{Approx, CauchyReal, Comparison, Rational};
pub use spaces::{CodePoint, Point, SpaceCode, SpaceSpec};
