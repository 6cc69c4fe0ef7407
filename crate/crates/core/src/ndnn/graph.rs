use rayon::prelude::*;

use super::{parallel, ParamId, ParamSet, PoolMode, Real, Tensor};
use crate::{Error, Result};

/// Handle to a value recorded on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

enum Op<T> {
    Input,
    Param(ParamId),
    Conv1d {
        x: Var,
        w: Var,
        b: Option<Var>,
        stride: usize,
    },
    Pool1d {
        x: Var,
        mode: PoolMode,
        window: usize,
        stride: usize,
        argmax: Vec<u32>,
    },
    Relu(Var),
    BatchNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<T>,
        inv_std: Vec<T>,
        training: bool,
    },
    Linear {
        x: Var,
        w: Var,
        b: Option<Var>,
    },
    Add(Var, Var),
    Reshape(Var),
    Crop {
        x: Var,
        offset: usize,
    },
    L2Normalize {
        x: Var,
        norms: Vec<T>,
    },
    Embedding {
        table: Var,
        indices: Vec<usize>,
    },
    AddPositions {
        x: Var,
        table: Var,
    },
    Attention {
        q: Var,
        k: Var,
        v: Var,
        heads: usize,
        probs: Vec<T>,
    },
    MaskedMean {
        x: Var,
        mask: Vec<bool>,
        counts: Vec<usize>,
    },
    MatMulNt(Var, Var),
    ScaleExp {
        x: Var,
        s: Var,
        scale: T,
        clamped: bool,
    },
    ClipLoss {
        sim: Var,
        row_p: Vec<T>,
        col_p: Vec<T>,
    },
    WeightedSum {
        x: Var,
        w: Vec<T>,
    },
}

struct Node<T> {
    shape: Vec<usize>,
    /// Empty for parameter leaves, whose values live in the [`ParamSet`].
    value: Vec<T>,
    op: Op<T>,
    needs_grad: bool,
}

/// Gradients indexed by parameter; `None` for buffers and parameters the
/// loss does not depend on.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    by_param: Vec<Option<Vec<T>>>,
}

impl<T: Real> Gradients<T> {
    pub fn get(&self, id: ParamId) -> Option<&[T]> {
        self.by_param.get(id.0).and_then(|g| g.as_deref())
    }

    pub fn global_norm(&self) -> f64 {
        self.by_param
            .iter()
            .flatten()
            .flat_map(|g| g.iter())
            .map(|v| v.f64() * v.f64())
            .sum::<f64>()
            .sqrt()
    }
}

/// Eager forward tape over a borrowed parameter set.
pub struct Graph<'p, T: Real> {
    params: &'p ParamSet<T>,
    nodes: Vec<Node<T>>,
    stat_updates: Vec<(ParamId, Vec<T>)>,
}

fn shape_err(msg: String) -> Error {
    Error::Shape(msg)
}

impl<'p, T: Real> Graph<'p, T> {
    pub fn new(params: &'p ParamSet<T>) -> Self {
        Graph {
            params,
            nodes: Vec::new(),
            stat_updates: Vec::new(),
        }
    }

    fn push(&mut self, shape: Vec<usize>, value: Vec<T>, op: Op<T>, needs_grad: bool) -> Var {
        debug_assert!(matches!(op, Op::Param(_)) || value.len() == shape.iter().product::<usize>());
        self.nodes.push(Node {
            shape,
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn ng(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].needs_grad)
    }

    pub fn input(&mut self, t: Tensor<T>) -> Var {
        let shape = t.shape().to_vec();
        self.push(shape, t.into_data(), Op::Input, false)
    }

    pub fn input_from(&mut self, shape: Vec<usize>, data: Vec<T>) -> Result<Var> {
        Ok(self.input(Tensor::new(shape, data)?))
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        let entry = self.params.get(id);
        let shape = entry.value.shape().to_vec();
        let trainable = entry.trainable;
        self.push(shape, Vec::new(), Op::Param(id), trainable)
    }

    pub fn value(&self, v: Var) -> &[T] {
        match self.nodes[v.0].op {
            Op::Param(id) => self.params.value(id).data(),
            _ => &self.nodes[v.0].value,
        }
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    pub fn tensor(&self, v: Var) -> Tensor<T> {
        Tensor::new(self.shape(v).to_vec(), self.value(v).to_vec()).expect("consistent node")
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Fails with the layer label when `v` holds NaN or infinity.
    pub fn check_finite(&self, v: Var, label: &str) -> Result<()> {
        if self.value(v).iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(format!("activation of {label}")))
        }
    }

    /// Running-statistic updates produced by training-mode batch norm.
    pub fn take_stat_updates(&mut self) -> Vec<(ParamId, Vec<T>)> {
        std::mem::take(&mut self.stat_updates)
    }

    fn dims3(&self, v: Var, what: &str) -> Result<(usize, usize, usize)> {
        match *self.shape(v) {
            [a, b, c] => Ok((a, b, c)),
            ref s => Err(shape_err(format!("{what} expects a rank-3 tensor, got {s:?}"))),
        }
    }

    fn dims2(&self, v: Var, what: &str) -> Result<(usize, usize)> {
        match *self.shape(v) {
            [a, b] => Ok((a, b)),
            ref s => Err(shape_err(format!("{what} expects a rank-2 tensor, got {s:?}"))),
        }
    }

    /// Valid 1-D convolution. `x` is `[B, Cin, L]`, `w` is `[Cout, Cin, K]`,
    /// `b` is `[Cout]`; output is `[B, Cout, (L-K)/stride+1]`.
    pub fn conv1d(&mut self, x: Var, w: Var, b: Option<Var>, stride: usize) -> Result<Var> {
        let (bsz, cin, l) = self.dims3(x, "conv1d input")?;
        let (cout, wcin, k) = self.dims3(w, "conv1d weight")?;
        if wcin != cin {
            return Err(shape_err(format!("conv1d: input has {cin} channels, weight expects {wcin}")));
        }
        if stride == 0 || k == 0 || l < k {
            return Err(shape_err(format!("conv1d: length {l} too short for kernel {k} (stride {stride})")));
        }
        if let Some(b) = b {
            if self.shape(b) != [cout] {
                return Err(shape_err(format!("conv1d: bias shape {:?}", self.shape(b))));
            }
        }
        let lout = (l - k) / stride + 1;
        let xs = self.value(x);
        let ws = self.value(w);
        let bs = b.map(|b| self.value(b));
        let per = |bi: usize| -> Vec<T> {
            let xb = &xs[bi * cin * l..(bi + 1) * cin * l];
            let mut out = vec![T::zero(); cout * lout];
            for o in 0..cout {
                let row = &mut out[o * lout..(o + 1) * lout];
                if let Some(bs) = bs {
                    row.iter_mut().for_each(|r| *r = bs[o]);
                }
                for c in 0..cin {
                    let xr = &xb[c * l..(c + 1) * l];
                    for kk in 0..k {
                        let wv = ws[(o * cin + c) * k + kk];
                        if stride == 1 {
                            for (r, &xv) in row.iter_mut().zip(&xr[kk..kk + lout]) {
                                *r += wv * xv;
                            }
                        } else {
                            for (t, r) in row.iter_mut().enumerate() {
                                *r += wv * xr[t * stride + kk];
                            }
                        }
                    }
                }
            }
            out
        };
        let chunks: Vec<Vec<T>> = if parallel() && bsz > 1 {
            (0..bsz).into_par_iter().map(per).collect()
        } else {
            (0..bsz).map(per).collect()
        };
        let value = chunks.concat();
        let ng = self.ng(&[x, w]) || b.is_some_and(|b| self.ng(&[b]));
        Ok(self.push(vec![bsz, cout, lout], value, Op::Conv1d { x, w, b, stride }, ng))
    }

    /// Pooling along the last axis of `[B, C, L]`. Max ties resolve to the
    /// first index.
    pub fn pool1d(&mut self, x: Var, mode: PoolMode, window: usize, stride: usize) -> Result<Var> {
        let (bsz, c, l) = self.dims3(x, "pool1d input")?;
        if window == 0 || stride == 0 || l < window {
            return Err(shape_err(format!("pool1d: length {l} too short for window {window}")));
        }
        let lout = (l - window) / stride + 1;
        let xs = self.value(x);
        let mut value = vec![T::zero(); bsz * c * lout];
        let mut argmax = Vec::new();
        if mode == PoolMode::Max {
            argmax = vec![0u32; bsz * c * lout];
        }
        let inv = T::one() / T::c(window as f64);
        for row in 0..bsz * c {
            let xr = &xs[row * l..(row + 1) * l];
            for t in 0..lout {
                let win = &xr[t * stride..t * stride + window];
                let o = row * lout + t;
                match mode {
                    PoolMode::Max => {
                        let mut best = 0;
                        for (j, v) in win.iter().enumerate().skip(1) {
                            if *v > win[best] {
                                best = j;
                            }
                        }
                        value[o] = win[best];
                        argmax[o] = (t * stride + best) as u32;
                    }
                    PoolMode::Avg => {
                        value[o] = win.iter().copied().sum::<T>() * inv;
                    }
                }
            }
        }
        let ng = self.ng(&[x]);
        Ok(self.push(
            vec![bsz, c, lout],
            value,
            Op::Pool1d {
                x,
                mode,
                window,
                stride,
                argmax,
            },
            ng,
        ))
    }

    /// Pools the whole length to one position: `[B, C, L] -> [B, C, 1]`.
    pub fn global_pool(&mut self, x: Var, mode: PoolMode) -> Result<Var> {
        let (_, _, l) = self.dims3(x, "global pool input")?;
        self.pool1d(x, mode, l, 1)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let value = self
            .value(x)
            .iter()
            .map(|&v| if v > T::zero() { v } else { T::zero() })
            .collect();
        let shape = self.shape(x).to_vec();
        let ng = self.ng(&[x]);
        self.push(shape, value, Op::Relu(x), ng)
    }

    /// Per-channel batch normalization of `[B, C, L]` or `[B, C]`.
    ///
    /// Training mode normalizes with biased batch statistics over all
    /// non-channel positions and queues running-stat updates; eval mode
    /// uses the running buffers.
    #[allow(clippy::too_many_arguments)]
    pub fn batch_norm(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        running_mean: ParamId,
        running_var: ParamId,
        momentum: f64,
        eps: f64,
        training: bool,
    ) -> Result<Var> {
        let (bsz, c, l) = match *self.shape(x) {
            [b, c, l] => (b, c, l),
            [b, c] => (b, c, 1),
            ref s => return Err(shape_err(format!("batch norm expects rank 2 or 3, got {s:?}"))),
        };
        if self.shape(gamma) != [c] || self.shape(beta) != [c] {
            return Err(shape_err(format!("batch norm affine parameters must be [{c}]")));
        }
        let m = bsz * l;
        if training && m < 2 {
            return Err(shape_err("batch norm in training mode needs at least 2 values per channel".into()));
        }
        let xs = self.value(x);
        let eps_t = T::c(eps);
        let mut mean = vec![T::zero(); c];
        let mut inv_std = vec![T::zero(); c];
        let mut pending = Vec::new();
        if training {
            let rm = self.params.value(running_mean).data();
            let rv = self.params.value(running_var).data();
            let mut new_rm = rm.to_vec();
            let mut new_rv = rv.to_vec();
            let mom = T::c(momentum);
            for ch in 0..c {
                let mut s = T::zero();
                for b in 0..bsz {
                    s += xs[(b * c + ch) * l..(b * c + ch + 1) * l].iter().copied().sum::<T>();
                }
                let mu = s / T::c(m as f64);
                let mut ss = T::zero();
                for b in 0..bsz {
                    for &v in &xs[(b * c + ch) * l..(b * c + ch + 1) * l] {
                        ss += (v - mu) * (v - mu);
                    }
                }
                let var = ss / T::c(m as f64);
                mean[ch] = mu;
                inv_std[ch] = T::one() / (var + eps_t).sqrt();
                let unbiased = ss / T::c((m - 1) as f64);
                new_rm[ch] = (T::one() - mom) * rm[ch] + mom * mu;
                new_rv[ch] = (T::one() - mom) * rv[ch] + mom * unbiased;
            }
            pending.push((running_mean, new_rm));
            pending.push((running_var, new_rv));
        } else {
            let rm = self.params.value(running_mean).data();
            let rv = self.params.value(running_var).data();
            for ch in 0..c {
                mean[ch] = rm[ch];
                inv_std[ch] = T::one() / (rv[ch] + eps_t).sqrt();
            }
        }
        let g = self.value(gamma);
        let be = self.value(beta);
        let mut xhat = vec![T::zero(); xs.len()];
        let mut value = vec![T::zero(); xs.len()];
        for b in 0..bsz {
            for ch in 0..c {
                let base = (b * c + ch) * l;
                for i in base..base + l {
                    xhat[i] = (xs[i] - mean[ch]) * inv_std[ch];
                    value[i] = g[ch] * xhat[i] + be[ch];
                }
            }
        }
        self.stat_updates.extend(pending);
        let shape = self.shape(x).to_vec();
        let ng = self.ng(&[x, gamma, beta]);
        Ok(self.push(
            shape,
            value,
            Op::BatchNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
                training,
            },
            ng,
        ))
    }

    /// Affine map over the last axis: `[.., n] x [n, m] -> [.., m]`.
    pub fn linear(&mut self, x: Var, w: Var, b: Option<Var>) -> Result<Var> {
        let (n, m) = self.dims2(w, "linear weight")?;
        let xshape = self.shape(x).to_vec();
        if xshape.last() != Some(&n) {
            return Err(shape_err(format!("linear: input {xshape:?} does not end in {n}")));
        }
        if let Some(b) = b {
            if self.shape(b) != [m] {
                return Err(shape_err(format!("linear: bias shape {:?}", self.shape(b))));
            }
        }
        let xs = self.value(x);
        let ws = self.value(w);
        let rows = xs.len() / n;
        let mut value = vec![T::zero(); rows * m];
        for r in 0..rows {
            let out = &mut value[r * m..(r + 1) * m];
            if let Some(b) = b {
                out.copy_from_slice(self.value(b));
            }
            for i in 0..n {
                let xv = xs[r * n + i];
                if xv == T::zero() {
                    continue;
                }
                for (o, &wv) in out.iter_mut().zip(&ws[i * m..(i + 1) * m]) {
                    *o += xv * wv;
                }
            }
        }
        let mut shape = xshape;
        *shape.last_mut().expect("non-empty") = m;
        let ng = self.ng(&[x, w]) || b.is_some_and(|b| self.ng(&[b]));
        Ok(self.push(shape, value, Op::Linear { x, w, b }, ng))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(shape_err(format!("add: {:?} vs {:?}", self.shape(a), self.shape(b))));
        }
        let value = self.value(a).iter().zip(self.value(b)).map(|(&x, &y)| x + y).collect();
        let shape = self.shape(a).to_vec();
        let ng = self.ng(&[a, b]);
        Ok(self.push(shape, value, Op::Add(a, b), ng))
    }

    pub fn reshape(&mut self, x: Var, shape: Vec<usize>) -> Result<Var> {
        if shape.iter().product::<usize>() != self.value(x).len() {
            return Err(shape_err(format!("cannot reshape {:?} to {shape:?}", self.shape(x))));
        }
        let value = self.value(x).to_vec();
        let ng = self.ng(&[x]);
        Ok(self.push(shape, value, Op::Reshape(x), ng))
    }

    /// `[B, ...] -> [B, prod(...)]`.
    pub fn flatten(&mut self, x: Var) -> Result<Var> {
        let b = self.shape(x)[0];
        let rest = self.value(x).len() / b.max(1);
        self.reshape(x, vec![b, rest])
    }

    /// Keeps `len` positions of the last axis of `[B, C, L]` from `offset`.
    pub fn crop(&mut self, x: Var, offset: usize, len: usize) -> Result<Var> {
        let (bsz, c, l) = self.dims3(x, "crop input")?;
        if offset + len > l {
            return Err(shape_err(format!("crop {offset}+{len} exceeds length {l}")));
        }
        let xs = self.value(x);
        let mut value = Vec::with_capacity(bsz * c * len);
        for row in 0..bsz * c {
            value.extend_from_slice(&xs[row * l + offset..row * l + offset + len]);
        }
        let ng = self.ng(&[x]);
        Ok(self.push(vec![bsz, c, len], value, Op::Crop { x, offset }, ng))
    }

    /// Scales each row of the last axis to unit Euclidean norm.
    pub fn l2_normalize(&mut self, x: Var) -> Var {
        let shape = self.shape(x).to_vec();
        let d = *shape.last().expect("non-empty shape");
        let xs = self.value(x);
        let floor = T::c(1e-12);
        let mut norms = Vec::with_capacity(xs.len() / d);
        let mut value = Vec::with_capacity(xs.len());
        for row in xs.chunks(d) {
            let n = row.iter().map(|&v| v * v).sum::<T>().sqrt().max(floor);
            norms.push(n);
            value.extend(row.iter().map(|&v| v / n));
        }
        let ng = self.ng(&[x]);
        self.push(shape, value, Op::L2Normalize { x, norms }, ng)
    }

    /// Gathers rows of `table` (`[V, D]`); output shape is `shape ++ [D]`.
    pub fn embedding(&mut self, table: Var, indices: &[usize], shape: &[usize]) -> Result<Var> {
        let (v, d) = self.dims2(table, "embedding table")?;
        if shape.iter().product::<usize>() != indices.len() {
            return Err(shape_err("embedding: index count does not match shape".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= v) {
            return Err(shape_err(format!("embedding index {bad} out of range {v}")));
        }
        let ts = self.value(table);
        let mut value = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            value.extend_from_slice(&ts[i * d..(i + 1) * d]);
        }
        let mut out_shape = shape.to_vec();
        out_shape.push(d);
        let ng = self.ng(&[table]);
        Ok(self.push(
            out_shape,
            value,
            Op::Embedding {
                table,
                indices: indices.to_vec(),
            },
            ng,
        ))
    }

    /// Adds row `t` of `table` (`[Tmax, D]`) to position `t` of `[B, T, D]`.
    pub fn add_positions(&mut self, x: Var, table: Var) -> Result<Var> {
        let (bsz, t, d) = self.dims3(x, "position input")?;
        let (tmax, td) = self.dims2(table, "position table")?;
        if td != d || t > tmax {
            return Err(shape_err(format!("positions: [{t}, {d}] does not fit table [{tmax}, {td}]")));
        }
        let ps = &self.value(table)[..t * d];
        let value = self
            .value(x)
            .chunks(t * d)
            .flat_map(|s| s.iter().zip(ps).map(|(&a, &b)| a + b))
            .collect::<Vec<T>>();
        debug_assert_eq!(value.len(), bsz * t * d);
        let ng = self.ng(&[x, table]);
        Ok(self.push(vec![bsz, t, d], value, Op::AddPositions { x, table }, ng))
    }

    /// Scaled dot-product attention over `[B, T, D]` with `heads` heads.
    /// `key_mask[b*T + u]` marks valid keys; each sequence needs one.
    pub fn attention(&mut self, q: Var, k: Var, v: Var, heads: usize, key_mask: &[bool]) -> Result<Var> {
        let (bsz, t, d) = self.dims3(q, "attention query")?;
        if self.shape(k) != [bsz, t, d] || self.shape(v) != [bsz, t, d] {
            return Err(shape_err("attention: q, k, v shapes differ".into()));
        }
        if heads == 0 || d % heads != 0 {
            return Err(shape_err(format!("attention: {d} not divisible by {heads} heads")));
        }
        if key_mask.len() != bsz * t {
            return Err(shape_err("attention: mask length".into()));
        }
        if (0..bsz).any(|b| !key_mask[b * t..(b + 1) * t].iter().any(|&m| m)) {
            return Err(shape_err("attention: a sequence has no valid key".into()));
        }
        let dh = d / heads;
        let scale = T::one() / T::c(dh as f64).sqrt();
        let (qs, ks, vs) = (self.value(q), self.value(k), self.value(v));
        let mut probs = vec![T::zero(); bsz * heads * t * t];
        let mut value = vec![T::zero(); bsz * t * d];
        for b in 0..bsz {
            for h in 0..heads {
                let p = &mut probs[((b * heads + h) * t) * t..((b * heads + h + 1) * t) * t];
                for i in 0..t {
                    let qi = &qs[(b * t + i) * d + h * dh..(b * t + i) * d + (h + 1) * dh];
                    let row = &mut p[i * t..(i + 1) * t];
                    let mut mx = T::neg_infinity();
                    for u in 0..t {
                        if key_mask[b * t + u] {
                            let ku = &ks[(b * t + u) * d + h * dh..(b * t + u) * d + (h + 1) * dh];
                            let s = qi.iter().zip(ku).map(|(&a, &c)| a * c).sum::<T>() * scale;
                            row[u] = s;
                            mx = mx.max(s);
                        }
                    }
                    let mut z = T::zero();
                    for u in 0..t {
                        if key_mask[b * t + u] {
                            row[u] = (row[u] - mx).exp();
                            z += row[u];
                        } else {
                            row[u] = T::zero();
                        }
                    }
                    let out = &mut value[(b * t + i) * d + h * dh..(b * t + i) * d + (h + 1) * dh];
                    for u in 0..t {
                        row[u] /= z;
                        if row[u] != T::zero() {
                            let vu = &vs[(b * t + u) * d + h * dh..(b * t + u) * d + (h + 1) * dh];
                            for (o, &vv) in out.iter_mut().zip(vu) {
                                *o += row[u] * vv;
                            }
                        }
                    }
                }
            }
        }
        let ng = self.ng(&[q, k, v]);
        Ok(self.push(vec![bsz, t, d], value, Op::Attention { q, k, v, heads, probs }, ng))
    }

    /// Mean over valid positions: `[B, T, D] -> [B, D]`.
    pub fn masked_mean(&mut self, x: Var, mask: &[bool]) -> Result<Var> {
        let (bsz, t, d) = self.dims3(x, "masked mean input")?;
        if mask.len() != bsz * t {
            return Err(shape_err("masked mean: mask length".into()));
        }
        let counts: Vec<usize> = mask.chunks(t).map(|m| m.iter().filter(|&&v| v).count()).collect();
        if counts.contains(&0) {
            return Err(shape_err("masked mean: a sequence has no valid position".into()));
        }
        let xs = self.value(x);
        let mut value = vec![T::zero(); bsz * d];
        for b in 0..bsz {
            let out = &mut value[b * d..(b + 1) * d];
            for u in 0..t {
                if mask[b * t + u] {
                    for (o, &v) in out.iter_mut().zip(&xs[(b * t + u) * d..(b * t + u + 1) * d]) {
                        *o += v;
                    }
                }
            }
            let inv = T::one() / T::c(counts[b] as f64);
            out.iter_mut().for_each(|o| *o *= inv);
        }
        let ng = self.ng(&[x]);
        Ok(self.push(
            vec![bsz, d],
            value,
            Op::MaskedMean {
                x,
                mask: mask.to_vec(),
                counts,
            },
            ng,
        ))
    }

    /// `a [N, D]` times `b [M, D]` transposed: `[N, M]`.
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var> {
        let (n, d) = self.dims2(a, "matmul lhs")?;
        let (m, d2) = self.dims2(b, "matmul rhs")?;
        if d != d2 {
            return Err(shape_err(format!("matmul: inner dims {d} vs {d2}")));
        }
        let (av, bv) = (self.value(a), self.value(b));
        let mut value = vec![T::zero(); n * m];
        for i in 0..n {
            for j in 0..m {
                value[i * m + j] = av[i * d..(i + 1) * d]
                    .iter()
                    .zip(&bv[j * d..(j + 1) * d])
                    .map(|(&x, &y)| x * y)
                    .sum();
            }
        }
        let ng = self.ng(&[a, b]);
        Ok(self.push(vec![n, m], value, Op::MatMulNt(a, b), ng))
    }

    /// Multiplies by `min(exp(s), max)` where `s` is a one-element tensor.
    /// The gradient to `s` is zero while clamped.
    pub fn scale_by_exp(&mut self, x: Var, s: Var, max: f64) -> Result<Var> {
        if self.value(s).len() != 1 {
            return Err(shape_err("scale_by_exp: scale must have one element".into()));
        }
        let raw = self.value(s)[0].exp();
        let cap = T::c(max);
        let (scale, clamped) = if raw > cap { (cap, true) } else { (raw, false) };
        let value = self.value(x).iter().map(|&v| v * scale).collect();
        let shape = self.shape(x).to_vec();
        let ng = self.ng(&[x, s]);
        Ok(self.push(shape, value, Op::ScaleExp { x, s, scale, clamped }, ng))
    }

    /// Symmetric cross-entropy over a square logit matrix with the diagonal
    /// as targets: mean of the row-wise and column-wise losses.
    pub fn clip_loss(&mut self, sim: Var) -> Result<Var> {
        let (n, m) = self.dims2(sim, "clip loss logits")?;
        if n != m || n == 0 {
            return Err(shape_err(format!("clip loss needs a square non-empty matrix, got [{n}, {m}]")));
        }
        let s = self.value(sim);
        let mut row_p = vec![T::zero(); n * n];
        let mut col_p = vec![T::zero(); n * n];
        let mut row_loss = T::zero();
        let mut col_loss = T::zero();
        for i in 0..n {
            let row = &s[i * n..(i + 1) * n];
            let mx = row.iter().copied().fold(T::neg_infinity(), T::max);
            let lse = mx + row.iter().map(|&v| (v - mx).exp()).sum::<T>().ln();
            row_loss += lse - row[i];
            for j in 0..n {
                row_p[i * n + j] = (row[j] - lse).exp();
            }
        }
        for j in 0..n {
            let mx = (0..n).map(|i| s[i * n + j]).fold(T::neg_infinity(), T::max);
            let lse = mx + (0..n).map(|i| (s[i * n + j] - mx).exp()).sum::<T>().ln();
            col_loss += lse - s[j * n + j];
            for i in 0..n {
                col_p[i * n + j] = (s[i * n + j] - lse).exp();
            }
        }
        let nt = T::c(n as f64);
        let loss = (row_loss / nt + col_loss / nt) * T::c(0.5);
        let ng = self.ng(&[sim]);
        Ok(self.push(vec![1], vec![loss], Op::ClipLoss { sim, row_p, col_p }, ng))
    }

    /// `sum(x * w)` as a one-element tensor.
    pub fn weighted_sum(&mut self, x: Var, w: Vec<T>) -> Result<Var> {
        if w.len() != self.value(x).len() {
            return Err(shape_err("weighted sum: weight length".into()));
        }
        let v = self.value(x).iter().zip(&w).map(|(&a, &b)| a * b).sum();
        let ng = self.ng(&[x]);
        Ok(self.push(vec![1], vec![v], Op::WeightedSum { x, w }, ng))
    }

    /// Reverse pass from a one-element `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        if self.value(loss).len() != 1 {
            return Err(Error::Graph(format!("backward needs a scalar, got {:?}", self.shape(loss))));
        }
        self.backward_with(loss, vec![T::one()])
    }

    /// Reverse pass seeded with an explicit upstream gradient for `out`.
    pub fn backward_with(&self, out: Var, seed: Vec<T>) -> Result<Gradients<T>> {
        if seed.len() != self.value(out).len() {
            return Err(Error::Graph("seed gradient size mismatch".into()));
        }
        let mut grads: Vec<Option<Vec<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        let mut by_param: Vec<Option<Vec<T>>> = vec![None; self.params.len()];
        grads[out.0] = Some(seed);
        for idx in (0..=out.0).rev() {
            let Some(dy) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            self.backprop_node(node, &self.nodes[idx].value, dy, &mut grads, &mut by_param);
        }
        Ok(Gradients { by_param })
    }

    fn acc(&self, grads: &mut [Option<Vec<T>>], v: Var, g: Vec<T>) {
        if !self.nodes[v.0].needs_grad {
            return;
        }
        match &mut grads[v.0] {
            Some(existing) => {
                for (e, x) in existing.iter_mut().zip(g) {
                    *e += x;
                }
            }
            slot => *slot = Some(g),
        }
    }

    fn wants(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn backprop_node(
        &self,
        node: &Node<T>,
        y: &[T],
        dy: Vec<T>,
        grads: &mut [Option<Vec<T>>],
        by_param: &mut [Option<Vec<T>>],
    ) {
        let zero = T::zero();
        match &node.op {
            Op::Input => {}
            Op::Param(id) => match &mut by_param[id.0] {
                Some(existing) => existing.iter_mut().zip(dy).for_each(|(e, x)| *e += x),
                slot => *slot = Some(dy),
            },
            Op::Conv1d { x, w, b, stride } => {
                let (bsz, cin, l) = self.dims3(*x, "").expect("checked");
                let (cout, _, k) = self.dims3(*w, "").expect("checked");
                let s = *stride;
                let lout = node.shape[2];
                let xs = self.value(*x);
                let ws = self.value(*w);
                let need_dx = self.wants(*x);
                let need_dw = self.wants(*w);
                let per = |bi: usize| -> (Vec<T>, Vec<T>) {
                    let xb = &xs[bi * cin * l..(bi + 1) * cin * l];
                    let dyb = &dy[bi * cout * lout..(bi + 1) * cout * lout];
                    let mut dx = if need_dx { vec![zero; cin * l] } else { Vec::new() };
                    let mut dw = if need_dw { vec![zero; cout * cin * k] } else { Vec::new() };
                    for o in 0..cout {
                        let dr = &dyb[o * lout..(o + 1) * lout];
                        for c in 0..cin {
                            let xr = &xb[c * l..(c + 1) * l];
                            for kk in 0..k {
                                let wi = (o * cin + c) * k + kk;
                                if need_dw {
                                    let acc: T = if s == 1 {
                                        dr.iter().zip(&xr[kk..kk + lout]).map(|(&a, &b)| a * b).sum()
                                    } else {
                                        (0..lout).map(|t| dr[t] * xr[t * s + kk]).sum()
                                    };
                                    dw[wi] += acc;
                                }
                                if need_dx {
                                    let wv = ws[wi];
                                    let dxr = &mut dx[c * l..(c + 1) * l];
                                    if s == 1 {
                                        for (d, &g) in dxr[kk..kk + lout].iter_mut().zip(dr) {
                                            *d += wv * g;
                                        }
                                    } else {
                                        for t in 0..lout {
                                            dxr[t * s + kk] += wv * dr[t];
                                        }
                                    }
                                }
                            }
                        }
                    }
                    (dx, dw)
                };
                let parts: Vec<(Vec<T>, Vec<T>)> = if parallel() && bsz > 1 {
                    (0..bsz).into_par_iter().map(per).collect()
                } else {
                    (0..bsz).map(per).collect()
                };
                if let Some(b) = b {
                    if self.wants(*b) {
                        let mut db = vec![zero; cout];
                        for bi in 0..bsz {
                            for o in 0..cout {
                                db[o] += dy[(bi * cout + o) * lout..(bi * cout + o + 1) * lout]
                                    .iter()
                                    .copied()
                                    .sum::<T>();
                            }
                        }
                        self.acc(grads, *b, db);
                    }
                }
                if need_dw {
                    let mut dw = vec![zero; cout * cin * k];
                    for (_, p) in &parts {
                        dw.iter_mut().zip(p).for_each(|(a, &b)| *a += b);
                    }
                    self.acc(grads, *w, dw);
                }
                if need_dx {
                    let dx = parts.into_iter().flat_map(|(dx, _)| dx).collect();
                    self.acc(grads, *x, dx);
                }
            }
            Op::Pool1d {
                x,
                mode,
                window,
                stride,
                argmax,
            } => {
                let (bsz, c, l) = self.dims3(*x, "").expect("checked");
                let lout = node.shape[2];
                let mut dx = vec![zero; bsz * c * l];
                let inv = T::one() / T::c(*window as f64);
                for row in 0..bsz * c {
                    for t in 0..lout {
                        let g = dy[row * lout + t];
                        match mode {
                            PoolMode::Max => dx[row * l + argmax[row * lout + t] as usize] += g,
                            PoolMode::Avg => {
                                for j in 0..*window {
                                    dx[row * l + t * stride + j] += g * inv;
                                }
                            }
                        }
                    }
                }
                self.acc(grads, *x, dx);
            }
            Op::Relu(x) => {
                let dx = dy
                    .iter()
                    .zip(y)
                    .map(|(&g, &v)| if v > zero { g } else { zero })
                    .collect();
                self.acc(grads, *x, dx);
            }
            Op::BatchNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
                training,
            } => {
                let bsz = node.shape[0];
                let c = node.shape[1];
                let l = if node.shape.len() == 3 { node.shape[2] } else { 1 };
                let m = T::c((bsz * l) as f64);
                let g = self.value(*gamma);
                let mut dgamma = vec![zero; c];
                let mut dbeta = vec![zero; c];
                for b in 0..bsz {
                    for ch in 0..c {
                        let base = (b * c + ch) * l;
                        for i in base..base + l {
                            dgamma[ch] += dy[i] * xhat[i];
                            dbeta[ch] += dy[i];
                        }
                    }
                }
                if self.wants(*x) {
                    let mut dx = vec![zero; dy.len()];
                    for b in 0..bsz {
                        for ch in 0..c {
                            let base = (b * c + ch) * l;
                            for i in base..base + l {
                                dx[i] = if *training {
                                    g[ch] * inv_std[ch] / m
                                        * (m * dy[i] - dbeta[ch] - xhat[i] * dgamma[ch])
                                } else {
                                    g[ch] * inv_std[ch] * dy[i]
                                };
                            }
                        }
                    }
                    self.acc(grads, *x, dx);
                }
                self.acc(grads, *gamma, dgamma);
                self.acc(grads, *beta, dbeta);
            }
            Op::Linear { x, w, b } => {
                let (n, m) = self.dims2(*w, "").expect("checked");
                let xs = self.value(*x);
                let ws = self.value(*w);
                let rows = xs.len() / n;
                if let Some(b) = b {
                    if self.wants(*b) {
                        let mut db = vec![zero; m];
                        for r in 0..rows {
                            db.iter_mut().zip(&dy[r * m..(r + 1) * m]).for_each(|(a, &g)| *a += g);
                        }
                        self.acc(grads, *b, db);
                    }
                }
                if self.wants(*w) {
                    let mut dw = vec![zero; n * m];
                    for r in 0..rows {
                        let dr = &dy[r * m..(r + 1) * m];
                        for i in 0..n {
                            let xv = xs[r * n + i];
                            if xv == zero {
                                continue;
                            }
                            for (d, &g) in dw[i * m..(i + 1) * m].iter_mut().zip(dr) {
                                *d += xv * g;
                            }
                        }
                    }
                    self.acc(grads, *w, dw);
                }
                if self.wants(*x) {
                    let mut dx = vec![zero; rows * n];
                    for r in 0..rows {
                        let dr = &dy[r * m..(r + 1) * m];
                        for i in 0..n {
                            dx[r * n + i] = ws[i * m..(i + 1) * m]
                                .iter()
                                .zip(dr)
                                .map(|(&a, &b)| a * b)
                                .sum();
                        }
                    }
                    self.acc(grads, *x, dx);
                }
            }
            Op::Add(a, b) => {
                self.acc(grads, *b, dy.clone());
                self.acc(grads, *a, dy);
            }
            Op::Reshape(x) => self.acc(grads, *x, dy),
            Op::Crop { x, offset } => {
                let (bsz, c, l) = self.dims3(*x, "").expect("checked");
                let len = node.shape[2];
                let mut dx = vec![zero; bsz * c * l];
                for row in 0..bsz * c {
                    dx[row * l + offset..row * l + offset + len]
                        .copy_from_slice(&dy[row * len..(row + 1) * len]);
                }
                self.acc(grads, *x, dx);
            }
            Op::L2Normalize { x, norms } => {
                let d = *node.shape.last().expect("non-empty");
                let mut dx = Vec::with_capacity(dy.len());
                for (r, (yr, gr)) in y.chunks(d).zip(dy.chunks(d)).enumerate() {
                    let dot: T = yr.iter().zip(gr).map(|(&a, &b)| a * b).sum();
                    dx.extend(yr.iter().zip(gr).map(|(&yv, &g)| (g - yv * dot) / norms[r]));
                }
                self.acc(grads, *x, dx);
            }
            Op::Embedding { table, indices } => {
                let (v, d) = self.dims2(*table, "").expect("checked");
                let mut dt = vec![zero; v * d];
                for (p, &i) in indices.iter().enumerate() {
                    dt[i * d..(i + 1) * d]
                        .iter_mut()
                        .zip(&dy[p * d..(p + 1) * d])
                        .for_each(|(a, &g)| *a += g);
                }
                self.acc(grads, *table, dt);
            }
            Op::AddPositions { x, table } => {
                let (t, d) = (node.shape[1], node.shape[2]);
                if self.wants(*table) {
                    let (tmax, _) = self.dims2(*table, "").expect("checked");
                    let mut dt = vec![zero; tmax * d];
                    for chunk in dy.chunks(t * d) {
                        dt[..t * d].iter_mut().zip(chunk).for_each(|(a, &g)| *a += g);
                    }
                    self.acc(grads, *table, dt);
                }
                self.acc(grads, *x, dy);
            }
            Op::Attention { q, k, v, heads, probs } => {
                let (bsz, t, d) = (node.shape[0], node.shape[1], node.shape[2]);
                let dh = d / heads;
                let scale = T::one() / T::c(dh as f64).sqrt();
                let (qs, ks, vs) = (self.value(*q), self.value(*k), self.value(*v));
                let mut dq = vec![zero; bsz * t * d];
                let mut dk = vec![zero; bsz * t * d];
                let mut dv = vec![zero; bsz * t * d];
                let mut dp = vec![zero; t];
                let head = |b: usize, pos: usize, h: usize| (b * t + pos) * d + h * dh;
                for b in 0..bsz {
                    for h in 0..*heads {
                        let p = &probs[((b * heads + h) * t) * t..((b * heads + h + 1) * t) * t];
                        for i in 0..t {
                            let gi = head(b, i, h);
                            let doi = &dy[gi..gi + dh];
                            for u in 0..t {
                                let vu = head(b, u, h);
                                dp[u] = doi.iter().zip(&vs[vu..vu + dh]).map(|(&a, &c)| a * c).sum();
                                let pr = p[i * t + u];
                                if pr != zero {
                                    for e in 0..dh {
                                        dv[vu + e] += pr * doi[e];
                                    }
                                }
                            }
                            let row = &p[i * t..(i + 1) * t];
                            let dot: T = row.iter().zip(&dp).map(|(&a, &c)| a * c).sum();
                            for u in 0..t {
                                let ds = row[u] * (dp[u] - dot) * scale;
                                if ds == zero {
                                    continue;
                                }
                                let ku = head(b, u, h);
                                for e in 0..dh {
                                    dq[gi + e] += ds * ks[ku + e];
                                    dk[ku + e] += ds * qs[gi + e];
                                }
                            }
                        }
                    }
                }
                self.acc(grads, *q, dq);
                self.acc(grads, *k, dk);
                self.acc(grads, *v, dv);
            }
            Op::MaskedMean { x, mask, counts } => {
                let (bsz, t, d) = self.dims3(*x, "").expect("checked");
                let mut dx = vec![zero; bsz * t * d];
                for b in 0..bsz {
                    let inv = T::one() / T::c(counts[b] as f64);
                    for u in 0..t {
                        if mask[b * t + u] {
                            for e in 0..d {
                                dx[(b * t + u) * d + e] = dy[b * d + e] * inv;
                            }
                        }
                    }
                }
                self.acc(grads, *x, dx);
            }
            Op::MatMulNt(a, b) => {
                let (n, d) = self.dims2(*a, "").expect("checked");
                let (m, _) = self.dims2(*b, "").expect("checked");
                let (av, bv) = (self.value(*a), self.value(*b));
                if self.wants(*a) {
                    let mut da = vec![zero; n * d];
                    for i in 0..n {
                        for j in 0..m {
                            let g = dy[i * m + j];
                            for e in 0..d {
                                da[i * d + e] += g * bv[j * d + e];
                            }
                        }
                    }
                    self.acc(grads, *a, da);
                }
                if self.wants(*b) {
                    let mut db = vec![zero; m * d];
                    for i in 0..n {
                        for j in 0..m {
                            let g = dy[i * m + j];
                            for e in 0..d {
                                db[j * d + e] += g * av[i * d + e];
                            }
                        }
                    }
                    self.acc(grads, *b, db);
                }
            }
            Op::ScaleExp { x, s, scale, clamped } => {
                if self.wants(*s) {
                    let ds = if *clamped {
                        zero
                    } else {
                        dy.iter().zip(y).map(|(&g, &v)| g * v).sum()
                    };
                    self.acc(grads, *s, vec![ds]);
                }
                let dx = dy.iter().map(|&g| g * *scale).collect();
                self.acc(grads, *x, dx);
            }
            Op::ClipLoss { sim, row_p, col_p } => {
                let n = self.shape(*sim)[0];
                let coef = dy[0] * T::c(0.5) / T::c(n as f64);
                let mut ds = vec![zero; n * n];
                for i in 0..n {
                    for j in 0..n {
                        let diag = if i == j { T::c(2.0) } else { zero };
                        ds[i * n + j] = coef * (row_p[i * n + j] + col_p[i * n + j] - diag);
                    }
                }
                self.acc(grads, *sim, ds);
            }
            Op::WeightedSum { x, w } => {
                let dx = w.iter().map(|&wv| wv * dy[0]).collect();
                self.acc(grads, *x, dx);
            }
        }
    }
}
