//! Revenue-optimal multi-unit price curves for a single buyer whose value for
//! `n` units is `v * min(n, d)` with a private demand cap `d`.

pub mod distributions;
pub mod dynpricing;
pub mod error;
pub mod ktwo;
pub mod numeric;
pub mod optimizer;
pub mod oracle;
pub mod revenue;
pub mod sampling;

pub use distributions::{Marginal, MarginalKind, ProblemInstance};
pub use error::{Error, Result};
pub use revenue::{PriceVector, SigmaAssignment};
