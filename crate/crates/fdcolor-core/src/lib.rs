//! Finitely dependent proper colorings of bounded-degree graphs: the
//! constructions, their samplers, and exact verification of the dependence
//! claims. IO, CLI, and Monte Carlo testing live in the companion `fdcolor`
//! crate.

#![cfg_attr(not(test), no_std)]
extern crate alloc;

pub mod decomp;
pub mod graph;
pub mod line;
pub mod pipeline;
pub mod randomness;
pub mod verify;
