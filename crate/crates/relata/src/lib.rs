//! Relational word-pair embeddings from corpus co-occurrence patterns.
//!
//! The crate mines lexico-syntactic patterns connecting target word pairs,
//! builds pair representations three ways — vector offsets of pretrained
//! word embeddings, latent relational analysis (LRA: wildcard-generalized
//! pattern counts, PPMI, truncated SVD), and neural latent relational
//! analysis (NLRA: an MLP pair encoder and LSTM pattern encoder trained
//! with negative sampling) — and evaluates relational similarity with
//! MaxDiff accuracy and Spearman correlation.

pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod graph;
pub mod lra;
pub mod nlra;
pub mod nn;
pub mod svd;
pub mod tensor;

mod binio;

pub use error::{Error, Result};
