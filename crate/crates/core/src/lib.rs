//! Metaphor generation and delivery.
//!
//! Connecting words are scored in an embedding space, validated against a
//! dependency-parsed corpus, rendered through sentence templates and
//! delivered in conversation as literal, one-round or two-round expressions.

pub mod config;
pub mod connector;
pub mod dialogue;
pub mod embedding;
pub mod error;
pub mod events;
pub mod evidence;
pub mod generator;
pub mod lexicon;
pub mod pipeline;
pub mod pos;
pub mod tables;

pub use error::{Error, Result};
