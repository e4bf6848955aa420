//! File formats, synthetic fixtures, the `timt` command line and the HTTP
//! service built on `timt-core`.

pub mod cli;
pub mod dataset;
pub mod dictionary_io;
pub mod error;
pub mod fixtures;
pub mod pipeline;
pub mod run_record;
pub mod segmentation_io;
pub mod service;
pub mod trait_doc;
pub mod tree_export;

pub use error::IoError;
