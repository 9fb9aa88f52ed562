//! File formats, streaming pipelines and the command-line tool built on
//! [`bbmh_core`].

pub mod bench;
pub mod cli;
pub mod error;
pub mod formats;
pub mod libsvm;
pub mod pipeline;
pub mod sim;
pub mod source;
pub mod train;
pub mod transform;

pub use bbmh_core;
pub use error::{Error, Result};
