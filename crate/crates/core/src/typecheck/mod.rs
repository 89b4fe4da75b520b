//! Kinding, environment well-formedness and bidirectional type checking with
//! re-validatable typing derivations.

mod check;
mod kinding;

pub use check::*;
pub use kinding::*;
