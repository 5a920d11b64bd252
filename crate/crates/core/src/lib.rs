//! Relaxations and global solution of the pooling problem.

pub mod aggregation;
pub mod cuts;
pub mod error;
pub mod globalsolve;
pub mod hulllab;
pub mod instance;
pub mod lpcore;
pub mod pqmodel;
pub mod report;
pub mod tset;

pub use error::{Error, Result};
