//! RxO: a nonprocedural object-oriented data language executed on a
//! relational machine. Complex-object data lives in named relations;
//! any non-terminal path names a relation (an O-view) whose attributes
//! are the path's scalar post-paths, and group operations on objects run
//! as bulk set operations without iterators.

pub mod catalog;
pub mod database;
pub mod engine;
pub mod error;
pub mod kernel;
pub mod parser;
pub mod query;
pub mod runtime;
pub mod schema;
pub mod shell;
pub mod store;
#[cfg(test)]
pub mod testkit;

pub use database::Database;
pub use engine::{execute, run_source, Outcome};
pub use error::{Error, Result};
pub use kernel::{Kind, Oid, Scalar};
