//! IO, report documents, Monte Carlo dependence testing, and the `fdcolor`
//! command line on top of `fdcolor-core`.

pub mod cli;
pub mod document;
pub mod edgelist;
pub mod genspec;
pub mod mc;
