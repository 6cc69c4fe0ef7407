//! Heterogeneous-image code encoding and contrastive language-code
//! pretraining.
//!
//! Source code is cleaned, lexed and classified into component classes
//! ([`pylex`]), mapped to numeric IDs with fixed ranges per component and
//! per-snippet namespaces ([`vocab`]), and laid out as a single-channel
//! one-dimensional image ([`himg`]). A 1D convolutional code encoder and a
//! small transformer text encoder ([`encoders`], built on the [`ndnn`]
//! tensor stack) are trained jointly with a symmetric cross-entropy loss
//! over batch cosine similarities ([`clcp`]) and evaluated by zero-shot
//! pair matching ([`zeval`]).

pub mod clcp;
pub mod encoders;
pub mod error;
pub mod himg;
pub mod ingest;
pub mod ndnn;
pub mod pylex;
pub mod textclean;
pub mod vocab;
pub mod zeval;

pub use error::{Error, Result};
