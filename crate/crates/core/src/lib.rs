//! Finite slalom covering numbers, transfer systems between covering
//! problems, normed trees with their fusion game, and the extraction of
//! covering slaloms from bounded names.
//!
//! Everything here is desk scale: every construction is followed by an
//! exhaustive check over the finite branch space it claims to handle.

pub mod cli;
pub mod conditions;
pub mod corpus;
pub mod covernum;
pub mod error;
pub mod extraction;
pub mod game;
pub mod nat;
pub mod norms;
pub mod reductions;
pub mod report;
pub mod scales;
pub mod slaloms;

pub use error::{Error, Result, Violation};
pub use nat::{BoundFn, Ratio};
