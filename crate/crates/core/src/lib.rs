//! b-bit minwise hashing without the standard library.
//!
//! The crate covers the algorithmic half of the pipeline: hash families that
//! replace random permutations, sketch computation, resemblance estimators with
//! their bias correction, expansion of sketches into learner rows, online
//! linear learners and a signed feature-hashing baseline. File formats, the
//! parallel pipeline and the command line live in the `bbmh` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod estimator;
pub mod expansion;
pub mod hashfamilies;
pub mod learners;
pub mod sketch;
pub mod synth;
pub mod vw;

pub use error::{Error, Result};
pub use hashfamilies::{bitmod_p31, build_family, FamilyHeader, FamilyParams, HashFamily, Scheme};
pub use sketch::{sketch_one, FeatureSet, PackedCodes, Sketch, SketchHeader};
