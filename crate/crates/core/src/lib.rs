//! A realizability engine for minimal, second-order and higher-order
//! intuitionistic logic.
//!
//! Propositions are checked by running a verifier `ver(A, M)` against a
//! candidate program `M`: the program realizes `A` when the verifier reduces
//! to `star` under weak-head reduction. Generators `gen(A)` act as generic
//! inhabitants of `A`, so open programs are verified by substituting
//! generators for their free variables.

pub mod driver;
pub mod extract;
pub mod intersect;
pub mod reduction;
pub mod syntax;
pub mod typecheck;
pub mod verify;
