//! Detection of static superimposed text in raw video frame sequences.
//!
//! The flow for every consecutive frame pair is: a histogram-difference
//! trigger ([`change_detect`]), binarized Sobel edge maps and their difference
//! ([`edgemap`]), a density-driven quadtree split and merge ([`quadtree`]),
//! then size, contrast and temporal-persistence filters ([`filtering`]).
//! [`pipeline`] ties these together and [`evaluation`] scores the output
//! against ground truth and generates synthetic test clips.

pub mod change_detect;
pub mod cli;
pub mod edgemap;
pub mod error;
pub mod evaluation;
pub mod filtering;
pub mod frame_io;
pub mod pipeline;
pub mod quadtree;

pub use error::{Error, Result};
