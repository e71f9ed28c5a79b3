//! Measuring and comparing the certainty of scientific findings as stated in
//! paper abstracts and in news coverage.

pub mod analysis;
pub mod corpus;
pub mod error;
pub mod evalkit;
pub mod extraction;
pub mod io;
pub mod lexicon;
pub mod matching;
pub mod scoring;

pub use error::{Error, Result};
