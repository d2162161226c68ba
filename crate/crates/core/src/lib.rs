//! Spectral clustering with model-based rounding.
//!
//! Points become a similarity graph ([`graph`]), whose random-walk Laplacian
//! yields leading eigenvectors ([`spectra`]). Those are binarized
//! ([`binarize`]) and rounded into a partition either by overlay
//! ([`naive`]), by latent class and latent tree models ([`lcm`], [`ltm`]) or
//! by k-means ([`baseline`]).

pub mod baseline;
pub mod binarize;
pub mod cli;
pub mod datagen;
pub mod error;
pub mod graph;
pub mod io;
pub mod lcm;
pub mod ltm;
pub mod metrics;
pub mod naive;
pub mod pipeline;
pub mod plot;
pub mod spectra;

pub use nalgebra;

pub use binarize::{BinaryVector, Partition};
pub use error::{Error, Result};
pub use graph::{DataSet, Laplacian, SimilarityFn, SimilarityMatrix};
pub use lcm::{FeatureData, LCModel};
pub use ltm::{ltm_rounding, LTModel, RoundingResult};
pub use pipeline::{ClusterParams, ClusterResult, Method};
pub use spectra::EigenSystem;
