pub mod cli;
pub mod config;
pub mod error;
pub mod evalkit;
pub mod features;
pub mod geo;
pub mod homography;
pub mod localizer;
pub mod mapstore;
pub mod raster;
pub mod synth;

pub use error::{Error, Result};
