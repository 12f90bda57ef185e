//! Construction of graph-structured queries from natural-language questions
//! over a knowledge graph.
//!
//! The pipeline has three online stages on top of an offline embedding
//! stage:
//!
//! 1. [`phrase`] maps question phrases to ranked, pruned candidate sets of
//!    vertices and edges.
//! 2. [`structure`] finds the cheapest valid arrangement of those candidate
//!    sets in embedding space.
//! 3. [`query`] picks one candidate per set, turns class vertices into typed
//!    variables and executes the result against the graph.
//!
//! Embeddings come from [`embedding`], trained on generalized local
//! knowledge graphs built by [`kg`].

pub mod cache;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod kg;
pub mod phrase;
pub mod pipeline;
pub mod query;
pub mod structure;
pub mod synthetic;

pub use error::{Error, Result};
