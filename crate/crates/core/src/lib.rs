//! Hypergraphic LP machinery for the Steiner tree problem.

pub mod error;
pub mod bcr;
pub mod blowup;
pub mod components;
pub mod contract;
pub mod flow;
pub mod gen;
pub mod hyperlp;
pub mod instance;
pub mod matroid;
pub mod oracles;
pub mod partition;
pub mod rational;
pub mod sepflow;
pub mod splitting;
pub mod simplex;
pub mod util;

pub use error::{Error, Result};
pub use rational::Rational;
