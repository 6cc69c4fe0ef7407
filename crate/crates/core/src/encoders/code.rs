use rand::Rng;

use super::config::{Arch, ModelConfig, PoolScope};
use super::plan::{residual_offset, shape_plan};
use crate::ndnn::{Graph, InitScheme, ParamId, ParamSet, PoolMode, Real, Tensor, Var};
use crate::Result;

#[derive(Debug, Clone)]
pub(crate) struct BnUnit {
    gamma: ParamId,
    beta: ParamId,
    mean: ParamId,
    var: ParamId,
}

/// Convolution with bias and optional batch norm after it.
#[derive(Debug, Clone)]
pub struct ConvUnit {
    pub name: String,
    pub w: ParamId,
    pub b: ParamId,
    bn: Option<BnUnit>,
    stride: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pool {
    None,
    Local,
    Global,
}

#[derive(Debug, Clone)]
enum Block {
    Plain {
        conv: ConvUnit,
        pool: Pool,
    },
    Residual {
        a: ConvUnit,
        b: ConvUnit,
        shortcut: ConvUnit,
        pool: Pool,
    },
}

/// Code encoder: block stack (`lp`, `gp`) or residual (`rn`), then a dense
/// projection. Parameters live in the caller's [`ParamSet`].
#[derive(Debug, Clone)]
pub struct CodeEncoder {
    stem: Option<ConvUnit>,
    blocks: Vec<Block>,
    final_global: bool,
    pub head_w: ParamId,
    pub head_b: ParamId,
    pool_mode: PoolMode,
    pool_kernel: usize,
    pool_stride: usize,
    bn_momentum: f64,
    bn_eps: f64,
    img_len: usize,
}

struct Builder<'a, T: Real, R: Rng> {
    params: &'a mut ParamSet<T>,
    rng: &'a mut R,
    init: InitScheme,
    use_bn: bool,
}

impl<T: Real, R: Rng> Builder<'_, T, R> {
    fn conv(&mut self, name: String, cin: usize, cout: usize, k: usize, stride: usize, bn: bool) -> ConvUnit {
        let w = self.init.sample(&[cout, cin, k], cin * k, self.rng);
        let w = self.params.add(format!("{name}.w"), w);
        let b = self.params.add(format!("{name}.b"), Tensor::zeros(&[cout]));
        let bn = (bn && self.use_bn).then(|| BnUnit {
            gamma: self.params.add(format!("{name}.bn.gamma"), Tensor::full(&[cout], T::one())),
            beta: self.params.add(format!("{name}.bn.beta"), Tensor::zeros(&[cout])),
            mean: self.params.add_buffer(format!("{name}.bn.running_mean"), Tensor::zeros(&[cout])),
            var: self.params.add_buffer(format!("{name}.bn.running_var"), Tensor::full(&[cout], T::one())),
        });
        ConvUnit {
            name,
            w,
            b,
            bn,
            stride,
        }
    }
}

impl CodeEncoder {
    pub fn build<T: Real, R: Rng>(cfg: &ModelConfig, params: &mut ParamSet<T>, rng: &mut R) -> Result<Self> {
        let plan = shape_plan(cfg)?;
        let init = if cfg.use_he_init {
            InitScheme::He
        } else {
            InitScheme::Default
        };
        let mut bld = Builder {
            params,
            rng,
            init,
            use_bn: cfg.use_bn,
        };
        let k = cfg.kernel;
        let mut stem = None;
        let mut blocks = Vec::with_capacity(cfg.blocks);
        let mut cin = 1;
        match cfg.arch {
            Arch::BlockStack => {
                for i in 0..cfg.blocks {
                    let cout = cfg.channels(i);
                    let conv = bld.conv(format!("code.block{}.conv", i + 1), cin, cout, k, cfg.stride, true);
                    let pool = match (cfg.use_pooling, cfg.pool_scope) {
                        (false, _) => Pool::None,
                        (true, PoolScope::Global) if i + 1 == cfg.blocks => Pool::Global,
                        (true, _) => Pool::Local,
                    };
                    blocks.push(Block::Plain { conv, pool });
                    cin = cout;
                }
            }
            Arch::Residual => {
                cin = cfg.channels(0);
                stem = Some(bld.conv("code.stem".into(), 1, cin, k, 1, true));
                for i in 0..cfg.blocks {
                    let cout = cfg.channels(i);
                    let name = format!("code.block{}", i + 1);
                    let a = bld.conv(format!("{name}.conv_a"), cin, cout, k, cfg.stride, true);
                    let b = bld.conv(format!("{name}.conv_b"), cout, cout, k, 1, true);
                    let shortcut = bld.conv(format!("{name}.shortcut"), cin, cout, 1, cfg.stride, false);
                    let pool = if cfg.use_pooling && cfg.pool_scope == PoolScope::Local {
                        Pool::Local
                    } else {
                        Pool::None
                    };
                    blocks.push(Block::Residual { a, b, shortcut, pool });
                    cin = cout;
                }
            }
        }
        let head_w = init.sample(&[plan.features, cfg.embed_dim], plan.features, bld.rng);
        let head_w = bld.params.add("code.head.w", head_w);
        let head_b = bld.params.add("code.head.b", Tensor::zeros(&[cfg.embed_dim]));
        Ok(CodeEncoder {
            stem,
            blocks,
            final_global: cfg.arch == Arch::Residual && cfg.use_pooling,
            head_w,
            head_b,
            pool_mode: cfg.pool_mode,
            pool_kernel: cfg.pool_kernel,
            pool_stride: cfg.pool_stride,
            bn_momentum: cfg.bn_momentum,
            bn_eps: cfg.bn_eps,
            img_len: cfg.img_len,
        })
    }

    pub fn img_len(&self) -> usize {
        self.img_len
    }

    fn unit<T: Real>(&self, g: &mut Graph<'_, T>, u: &ConvUnit, x: Var, training: bool) -> Result<Var> {
        let (w, b) = (g.param(u.w), g.param(u.b));
        let mut y = g.conv1d(x, w, Some(b), u.stride)?;
        if let Some(bn) = &u.bn {
            let (gamma, beta) = (g.param(bn.gamma), g.param(bn.beta));
            y = g.batch_norm(y, gamma, beta, bn.mean, bn.var, self.bn_momentum, self.bn_eps, training)?;
        }
        g.check_finite(y, &u.name)?;
        Ok(y)
    }

    fn pool<T: Real>(&self, g: &mut Graph<'_, T>, x: Var, pool: Pool) -> Result<Var> {
        match pool {
            Pool::None => Ok(x),
            Pool::Local => g.pool1d(x, self.pool_mode, self.pool_kernel, self.pool_stride),
            Pool::Global => g.global_pool(x, self.pool_mode),
        }
    }

    /// `x` is `[B, 1, L]`; returns unnormalized `[B, d]`.
    pub fn forward<T: Real>(&self, g: &mut Graph<'_, T>, x: Var, training: bool) -> Result<Var> {
        let mut h = x;
        if let Some(stem) = &self.stem {
            let y = self.unit(g, stem, h, training)?;
            h = g.relu(y);
        }
        for block in &self.blocks {
            h = match block {
                Block::Plain { conv, pool } => {
                    let y = self.unit(g, conv, h, training)?;
                    let y = g.relu(y);
                    self.pool(g, y, *pool)?
                }
                Block::Residual { a, b, shortcut, pool } => {
                    let ya = self.unit(g, a, h, training)?;
                    let ya = g.relu(ya);
                    let yb = self.unit(g, b, ya, training)?;
                    let ys = self.unit(g, shortcut, h, training)?;
                    let in_len = g.shape(h)[2];
                    let out_len = g.shape(yb)[2];
                    let ys = g.crop(ys, residual_offset(in_len, out_len, shortcut.stride), out_len)?;
                    let sum = g.add(yb, ys)?;
                    let y = g.relu(sum);
                    self.pool(g, y, *pool)?
                }
            };
        }
        if self.final_global {
            h = g.global_pool(h, self.pool_mode)?;
        }
        let flat = g.flatten(h)?;
        let (w, b) = (g.param(self.head_w), g.param(self.head_b));
        let out = g.linear(flat, w, Some(b))?;
        g.check_finite(out, "code.head")?;
        Ok(out)
    }

    /// Parameters of residual block `i` (0-based): conv_a, conv_b, shortcut.
    pub fn residual_units(&self, i: usize) -> Option<(&ConvUnit, &ConvUnit, &ConvUnit)> {
        match self.blocks.get(i)? {
            Block::Residual { a, b, shortcut, .. } => Some((a, b, shortcut)),
            Block::Plain { .. } => None,
        }
    }
}
