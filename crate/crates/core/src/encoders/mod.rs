//! Code and text encoders projecting into a shared embedding space.

mod code;
mod config;
mod model;
mod plan;
mod text;

pub use code::{CodeEncoder, ConvUnit};
pub use config::{Arch, ModelConfig, PoolScope, FIELDS};
pub use model::ClcpModel;
pub use plan::{shape_plan, ShapePlan, Stage};
pub use text::{text_tokens, TextEncoder, TextVocab, TEXT_OOV, TEXT_PAD};
