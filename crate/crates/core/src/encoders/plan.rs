use super::config::{Arch, ModelConfig, PoolScope};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stage {
    /// 1-based block number; 0 for stem and head layers.
    pub block: usize,
    pub layer: &'static str,
    pub channels: usize,
    pub len: usize,
}

/// Intermediate shapes of the code encoder, per sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapePlan {
    pub stages: Vec<Stage>,
    /// Width of the flattened feature vector entering the dense head.
    pub features: usize,
    pub embed_dim: usize,
}

fn window(len: usize, k: usize, s: usize, block: usize, layer: &str) -> Result<usize> {
    if len < k {
        return Err(Error::config(
            "geometry",
            format!("block {block}: {layer} window {k} exceeds input length {len}"),
        ));
    }
    Ok((len - k) / s + 1)
}

/// Dry run of the code encoder geometry; no tensors are allocated.
pub fn shape_plan(c: &ModelConfig) -> Result<ShapePlan> {
    let mut stages = Vec::new();
    let mut len = c.img_len;
    let mut ch = 1;
    let mut push = |block, layer, channels, len| {
        stages.push(Stage {
            block,
            layer,
            channels,
            len,
        })
    };
    push(0, "input", ch, len);
    match c.arch {
        Arch::BlockStack => {
            for b in 1..=c.blocks {
                ch = c.channels(b - 1);
                len = window(len, c.kernel, c.stride, b, "conv")?;
                push(b, "conv", ch, len);
                if c.use_pooling {
                    if c.pool_scope == PoolScope::Global && b == c.blocks {
                        len = 1;
                        push(b, "global_pool", ch, len);
                    } else {
                        len = window(len, c.pool_kernel, c.pool_stride, b, "pool")?;
                        push(b, "pool", ch, len);
                    }
                }
            }
        }
        Arch::Residual => {
            ch = c.channels(0);
            len = window(len, c.kernel, 1, 0, "stem conv")?;
            push(0, "stem", ch, len);
            for b in 1..=c.blocks {
                ch = c.channels(b - 1);
                len = window(len, c.kernel, c.stride, b, "conv_a")?;
                len = window(len, c.kernel, 1, b, "conv_b")?;
                push(b, "residual", ch, len);
                if c.use_pooling && c.pool_scope == PoolScope::Local {
                    len = window(len, c.pool_kernel, c.pool_stride, b, "pool")?;
                    push(b, "pool", ch, len);
                }
            }
            if c.use_pooling {
                len = 1;
                push(0, "global_pool", ch, len);
            }
        }
    }
    Ok(ShapePlan {
        stages,
        features: ch * len,
        embed_dim: c.embed_dim,
    })
}

impl ShapePlan {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in &self.stages {
            out.push_str(&format!("block {:>2} {:<12} [{:>4} x {:>4}]\n", s.block, s.layer, s.channels, s.len));
        }
        out.push_str(&format!("flatten {} -> dense {}\n", self.features, self.embed_dim));
        out
    }
}

/// Shortcut crop offset in a residual block: centres the 1x1 path on the
/// two-convolution path.
pub(crate) fn residual_offset(in_len: usize, out_len: usize, stride: usize) -> usize {
    let short = (in_len - 1) / stride + 1;
    (short - out_len) / 2
}
