//! Dynamic C-arm CBCT perfusion toolkit.
//!
//! Simulates multi-sweep perfusion acquisitions of a 2D digital liver phantom,
//! reconstructs them per sweep or with temporal basis functions (time separation
//! technique), and evaluates binary liver segmentations.

pub mod cli;
pub mod datasetgen;
pub mod error;
pub mod grid;
pub mod phantom;
pub mod plot;
pub mod projector;
pub mod recon;
pub mod segeval;
pub mod tensorio;
pub mod tst;

pub use error::{Error, Result};
pub use grid::Volume;
