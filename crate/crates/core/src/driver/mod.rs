//! Generators, property suites, the example corpus and the command line.

pub mod cli;
pub mod corpus;
pub mod gen;
pub mod suite;

pub use cli::{dispatch, CliOutput};
pub use corpus::*;
pub use gen::*;
pub use suite::*;
