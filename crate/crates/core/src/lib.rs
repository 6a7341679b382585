//! Source-resolution classification and crop detection from DCT statistics.
//!
//! An image is reduced to its luminance plane, split into 8×8 blocks and
//! transformed with an orthonormal DCT-II. Each of the 63 AC positions yields
//! a distribution of coefficients across blocks; fitting a Laplacian to each
//! gives a 63-entry vector of scale parameters (β). A one-vs-one RBF SVM maps
//! that vector to one of five source resolutions, and an image whose predicted
//! resolution exceeds its actual side is reported as cropped.
//!
//! Modules follow the pipeline order:
//!
//! * [`imagery`] decoding, center cropping, bicubic resizing, luminance
//! * [`transform`] 1-D/2-D DCT and 8×8 block decomposition
//! * [`laplace`] maximum-likelihood Laplacian fitting
//! * [`features`] β vectors, resolution ladders, feature CSV files
//! * [`classifier`] scaler, RBF kernel, SMO, one-vs-one model, grid search, model files
//! * [`detector`] resolution classification and the crop decision rule
//! * [`harness`] dataset build, training, crop sweeps and β trends

pub mod classifier;
pub mod detector;
mod error;
pub mod features;
pub mod harness;
pub mod imagery;
pub mod laplace;
pub mod transform;

pub use error::{Error, Result};
