//! Models of vague communication: literal listeners over parameterized
//! vague predicates, KL-divergence speakers, iterated best response, and
//! equilibrium analysis of common-interest cheap-talk games.

pub mod dist;
pub mod error;
pub mod game;
pub mod ibr;
pub mod lexicon;
pub mod listener;
pub mod report;
pub mod scenario;
pub mod schema;
pub mod speaker;

pub use error::{Error, Result};
