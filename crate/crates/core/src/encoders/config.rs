use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::ndnn::{OptimizerKind, PoolMode};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arch {
    BlockStack,
    Residual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PoolScope {
    Local,
    Global,
}

/// Architecture and training hyperparameters. Every field is addressable
/// by name in the `key = value` file format.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub arch: Arch,
    pub blocks: usize,
    pub img_len: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pool_kernel: usize,
    pub pool_stride: usize,
    pub pool_mode: PoolMode,
    pub pool_scope: PoolScope,
    pub channel_base: usize,
    pub channel_cap: usize,
    pub use_bn: bool,
    pub use_he_init: bool,
    pub use_pooling: bool,
    pub embed_dim: usize,

    pub text_vocab_size: usize,
    pub text_min_freq: usize,
    pub text_embed_dim: usize,
    pub text_layers: usize,
    pub text_heads: usize,
    pub text_ff_dim: usize,
    pub text_max_len: usize,

    /// Initial logit scale; stored as its logarithm during training.
    pub logit_scale_init: f64,
    pub logit_scale_max: f64,

    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub val_fraction: f64,
    pub bn_momentum: f64,
    pub bn_eps: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            arch: Arch::BlockStack,
            blocks: 3,
            img_len: crate::himg::DEFAULT_IMG_LEN,
            kernel: 3,
            stride: 1,
            pool_kernel: 2,
            pool_stride: 2,
            pool_mode: PoolMode::Max,
            pool_scope: PoolScope::Local,
            channel_base: 16,
            channel_cap: 128,
            use_bn: false,
            use_he_init: true,
            use_pooling: true,
            embed_dim: 64,
            text_vocab_size: 8000,
            text_min_freq: 1,
            text_embed_dim: 64,
            text_layers: 1,
            text_heads: 4,
            text_ff_dim: 128,
            text_max_len: 48,
            logit_scale_init: 1.0 / 0.07,
            logit_scale_max: 100.0,
            optimizer: OptimizerKind::Adam,
            lr: 1e-3,
            batch_size: 32,
            max_epochs: 30,
            patience: 5,
            val_fraction: 0.05,
            bn_momentum: 0.1,
            bn_eps: 1e-5,
            seed: 0,
        }
    }
}

/// Field names in file order.
pub const FIELDS: &[&str] = &[
    "arch",
    "blocks",
    "img_len",
    "kernel",
    "stride",
    "pool_kernel",
    "pool_stride",
    "pool_mode",
    "pool_scope",
    "channel_base",
    "channel_cap",
    "use_bn",
    "use_he_init",
    "use_pooling",
    "embed_dim",
    "text_vocab_size",
    "text_min_freq",
    "text_embed_dim",
    "text_layers",
    "text_heads",
    "text_ff_dim",
    "text_max_len",
    "logit_scale_init",
    "logit_scale_max",
    "optimizer",
    "lr",
    "batch_size",
    "max_epochs",
    "patience",
    "val_fraction",
    "bn_momentum",
    "bn_eps",
    "seed",
];

fn parse<V: FromStr>(field: &str, value: &str) -> Result<V> {
    value
        .parse()
        .map_err(|_| Error::config(field, format!("cannot parse {value:?}")))
}

fn parse_bool(field: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::config(field, format!("expected true or false, got {value:?}"))),
    }
}

impl ModelConfig {
    /// Named presets: `lp`, `gp` and `rn`.
    pub fn family(name: &str) -> Result<Self> {
        let mut c = ModelConfig::default();
        match name {
            "lp" => {}
            "gp" => c.pool_scope = PoolScope::Global,
            "rn" => c.arch = Arch::Residual,
            other => return Err(Error::config("family", format!("unknown family {other:?}"))),
        }
        Ok(c)
    }

    /// `lp`, `gp` or `rn`.
    pub fn family_name(&self) -> &'static str {
        match (self.arch, self.pool_scope) {
            (Arch::Residual, _) => "rn",
            (Arch::BlockStack, PoolScope::Local) => "lp",
            (Arch::BlockStack, PoolScope::Global) => "gp",
        }
    }

    /// Short identifier such as `lp3+BN`.
    pub fn id(&self) -> String {
        let mut s = format!("{}{}", self.family_name(), self.blocks);
        if self.use_bn {
            s.push_str("+BN");
        }
        if !self.use_pooling {
            s.push_str("-Pool");
        }
        if !self.use_he_init {
            s.push_str("-Init");
        }
        s
    }

    pub fn channels(&self, block: usize) -> usize {
        let mut c = self.channel_base;
        for _ in 0..block {
            c = (c * 2).min(self.channel_cap);
        }
        c.min(self.channel_cap)
    }

    pub fn set(&mut self, field: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match field {
            "arch" => {
                self.arch = match v {
                    "block_stack" => Arch::BlockStack,
                    "residual" => Arch::Residual,
                    _ => return Err(Error::config(field, "expected block_stack or residual")),
                }
            }
            "blocks" => self.blocks = parse(field, v)?,
            "img_len" => self.img_len = parse(field, v)?,
            "kernel" => self.kernel = parse(field, v)?,
            "stride" => self.stride = parse(field, v)?,
            "pool_kernel" => self.pool_kernel = parse(field, v)?,
            "pool_stride" => self.pool_stride = parse(field, v)?,
            "pool_mode" => {
                self.pool_mode = match v {
                    "max" => PoolMode::Max,
                    "avg" => PoolMode::Avg,
                    _ => return Err(Error::config(field, "expected max or avg")),
                }
            }
            "pool_scope" => {
                self.pool_scope = match v {
                    "local" => PoolScope::Local,
                    "global" => PoolScope::Global,
                    _ => return Err(Error::config(field, "expected local or global")),
                }
            }
            "channel_base" => self.channel_base = parse(field, v)?,
            "channel_cap" => self.channel_cap = parse(field, v)?,
            "use_bn" => self.use_bn = parse_bool(field, v)?,
            "use_he_init" => self.use_he_init = parse_bool(field, v)?,
            "use_pooling" => self.use_pooling = parse_bool(field, v)?,
            "embed_dim" => self.embed_dim = parse(field, v)?,
            "text_vocab_size" => self.text_vocab_size = parse(field, v)?,
            "text_min_freq" => self.text_min_freq = parse(field, v)?,
            "text_embed_dim" => self.text_embed_dim = parse(field, v)?,
            "text_layers" => self.text_layers = parse(field, v)?,
            "text_heads" => self.text_heads = parse(field, v)?,
            "text_ff_dim" => self.text_ff_dim = parse(field, v)?,
            "text_max_len" => self.text_max_len = parse(field, v)?,
            "logit_scale_init" => self.logit_scale_init = parse(field, v)?,
            "logit_scale_max" => self.logit_scale_max = parse(field, v)?,
            "optimizer" => {
                self.optimizer = match v {
                    "adam" => OptimizerKind::Adam,
                    "sgd" => OptimizerKind::Sgd,
                    _ => return Err(Error::config(field, "expected adam or sgd")),
                }
            }
            "lr" => self.lr = parse(field, v)?,
            "batch_size" => self.batch_size = parse(field, v)?,
            "max_epochs" => self.max_epochs = parse(field, v)?,
            "patience" => self.patience = parse(field, v)?,
            "val_fraction" => self.val_fraction = parse(field, v)?,
            "bn_momentum" => self.bn_momentum = parse(field, v)?,
            "bn_eps" => self.bn_eps = parse(field, v)?,
            "seed" => self.seed = parse(field, v)?,
            _ => return Err(Error::config(field, "unknown field")),
        }
        Ok(())
    }

    pub fn get(&self, field: &str) -> Option<String> {
        let s = match field {
            "arch" => match self.arch {
                Arch::BlockStack => "block_stack".to_string(),
                Arch::Residual => "residual".to_string(),
            },
            "blocks" => self.blocks.to_string(),
            "img_len" => self.img_len.to_string(),
            "kernel" => self.kernel.to_string(),
            "stride" => self.stride.to_string(),
            "pool_kernel" => self.pool_kernel.to_string(),
            "pool_stride" => self.pool_stride.to_string(),
            "pool_mode" => match self.pool_mode {
                PoolMode::Max => "max".to_string(),
                PoolMode::Avg => "avg".to_string(),
            },
            "pool_scope" => match self.pool_scope {
                PoolScope::Local => "local".to_string(),
                PoolScope::Global => "global".to_string(),
            },
            "channel_base" => self.channel_base.to_string(),
            "channel_cap" => self.channel_cap.to_string(),
            "use_bn" => self.use_bn.to_string(),
            "use_he_init" => self.use_he_init.to_string(),
            "use_pooling" => self.use_pooling.to_string(),
            "embed_dim" => self.embed_dim.to_string(),
            "text_vocab_size" => self.text_vocab_size.to_string(),
            "text_min_freq" => self.text_min_freq.to_string(),
            "text_embed_dim" => self.text_embed_dim.to_string(),
            "text_layers" => self.text_layers.to_string(),
            "text_heads" => self.text_heads.to_string(),
            "text_ff_dim" => self.text_ff_dim.to_string(),
            "text_max_len" => self.text_max_len.to_string(),
            "logit_scale_init" => format!("{:?}", self.logit_scale_init),
            "logit_scale_max" => format!("{:?}", self.logit_scale_max),
            "optimizer" => match self.optimizer {
                OptimizerKind::Adam => "adam".to_string(),
                OptimizerKind::Sgd => "sgd".to_string(),
            },
            "lr" => format!("{:?}", self.lr),
            "batch_size" => self.batch_size.to_string(),
            "max_epochs" => self.max_epochs.to_string(),
            "patience" => self.patience.to_string(),
            "val_fraction" => format!("{:?}", self.val_fraction),
            "bn_momentum" => format!("{:?}", self.bn_momentum),
            "bn_eps" => format!("{:?}", self.bn_eps),
            "seed" => self.seed.to_string(),
            _ => return None,
        };
        Some(s)
    }

    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn parse(src: &str) -> Result<Self> {
        let mut c = ModelConfig::default();
        for (n, raw) in src.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}", n + 1), "expected `key = value`"))?;
            c.set(k.trim(), v)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&src)
    }

    /// Every field, one per line, in [`FIELDS`] order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for f in FIELDS {
            let _ = writeln!(out, "{f} = {}", self.get(f).expect("known field"));
        }
        out
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("kernel", self.kernel),
            ("stride", self.stride),
            ("pool_kernel", self.pool_kernel),
            ("pool_stride", self.pool_stride),
            ("channel_base", self.channel_base),
            ("img_len", self.img_len),
            ("text_embed_dim", self.text_embed_dim),
            ("text_ff_dim", self.text_ff_dim),
            ("text_max_len", self.text_max_len),
            ("batch_size", self.batch_size),
            ("text_min_freq", self.text_min_freq),
        ];
        for (f, v) in positive {
            if v == 0 {
                return Err(Error::config(f, "must be at least 1"));
            }
        }
        if !(3..=7).contains(&self.blocks) {
            return Err(Error::config("blocks", format!("must be in 3..=7, got {}", self.blocks)));
        }
        if self.channel_cap < self.channel_base {
            return Err(Error::config("channel_cap", "must be at least channel_base"));
        }
        if self.embed_dim < 8 {
            return Err(Error::config("embed_dim", format!("must be at least 8, got {}", self.embed_dim)));
        }
        if self.text_vocab_size < 3 {
            return Err(Error::config("text_vocab_size", "must be at least 3"));
        }
        if self.text_layers > 0 && (self.text_heads == 0 || self.text_embed_dim % self.text_heads != 0) {
            return Err(Error::config("text_heads", "must divide text_embed_dim"));
        }
        if !(self.logit_scale_init > 0.0 && self.logit_scale_init <= self.logit_scale_max) {
            return Err(Error::config("logit_scale_init", "must be in (0, logit_scale_max]"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config("lr", "must be positive"));
        }
        if !(0.0..0.5).contains(&self.val_fraction) {
            return Err(Error::config("val_fraction", "must be in [0, 0.5)"));
        }
        if !(0.0..=1.0).contains(&self.bn_momentum) {
            return Err(Error::config("bn_momentum", "must be in [0, 1]"));
        }
        if !(self.bn_eps > 0.0) {
            return Err(Error::config("bn_eps", "must be positive"));
        }
        super::plan::shape_plan(self)?;
        Ok(())
    }
}
