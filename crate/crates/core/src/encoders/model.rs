use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::code::CodeEncoder;
use super::config::ModelConfig;
use super::text::TextEncoder;
use crate::ndnn::{Graph, ParamId, ParamSet, Real, Tensor, Var};
use crate::{Error, Result};

/// Code and text encoders plus the shared logit scale.
#[derive(Debug, Clone)]
pub struct ClcpModel<T: Real> {
    pub config: ModelConfig,
    pub params: ParamSet<T>,
    pub code: CodeEncoder,
    pub text: TextEncoder,
    /// One element holding the log of the logit scale.
    pub log_scale: ParamId,
}

impl<T: Real> ClcpModel<T> {
    pub fn new(config: &ModelConfig, text_vocab_size: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let code = CodeEncoder::build(config, &mut params, &mut rng)?;
        let text = TextEncoder::build(config, text_vocab_size, &mut params, &mut rng);
        let log_scale = params.add("logit_scale", Tensor::scalar(T::c(config.logit_scale_init.ln())));
        Ok(ClcpModel {
            config: config.clone(),
            params,
            code,
            text,
            log_scale,
        })
    }

    /// Effective multiplier on cosine similarities.
    pub fn logit_scale(&self) -> f64 {
        let raw = self.params.value(self.log_scale).data()[0].f64().exp();
        raw.min(self.config.logit_scale_max)
    }

    /// Records code images (`[B, L]` row-major values) and returns the
    /// normalized `[B, d]` embedding var.
    pub fn code_var(&self, g: &mut Graph<'_, T>, images: &[&[f32]], training: bool) -> Result<Var> {
        let l = self.code.img_len();
        if images.is_empty() {
            return Err(Error::Shape("empty code batch".into()));
        }
        let mut data = Vec::with_capacity(images.len() * l);
        for img in images {
            if img.len() != l {
                return Err(Error::Shape(format!("image length {} != configured {l}", img.len())));
            }
            data.extend(img.iter().map(|&v| T::c(v as f64)));
        }
        let x = g.input_from(vec![images.len(), 1, l], data)?;
        let y = self.code.forward(g, x, training)?;
        Ok(g.l2_normalize(y))
    }

    pub fn text_var(&self, g: &mut Graph<'_, T>, docs: &[Vec<usize>]) -> Result<Var> {
        let y = self.text.forward(g, docs)?;
        Ok(g.l2_normalize(y))
    }

    /// Contrastive loss on one batch of aligned pairs.
    pub fn batch_loss(
        &self,
        g: &mut Graph<'_, T>,
        images: &[&[f32]],
        docs: &[Vec<usize>],
        training: bool,
    ) -> Result<Var> {
        if images.len() != docs.len() {
            return Err(Error::LengthMismatch(format!("{} images vs {} docs", images.len(), docs.len())));
        }
        let c = self.code_var(g, images, training)?;
        let t = self.text_var(g, docs)?;
        let sim = g.matmul_nt(c, t)?;
        let s = g.param(self.log_scale);
        let logits = g.scale_by_exp(sim, s, self.config.logit_scale_max)?;
        g.clip_loss(logits)
    }

    /// Normalized code embeddings in eval mode, `[B, d]`.
    pub fn embed_code(&self, images: &[&[f32]]) -> Result<Tensor<T>> {
        self.embed_chunks(images.len(), |g, lo, hi| self.code_var(g, &images[lo..hi], false))
    }

    /// Normalized text embeddings, `[B, d]`.
    pub fn embed_text(&self, docs: &[Vec<usize>]) -> Result<Tensor<T>> {
        self.embed_chunks(docs.len(), |g, lo, hi| self.text_var(g, &docs[lo..hi]))
    }

    fn embed_chunks(
        &self,
        n: usize,
        mut run: impl FnMut(&mut Graph<'_, T>, usize, usize) -> Result<Var>,
    ) -> Result<Tensor<T>> {
        let d = self.config.embed_dim;
        let mut out = Vec::with_capacity(n * d);
        let chunk = self.config.batch_size.max(1) * 4;
        for lo in (0..n).step_by(chunk) {
            let hi = (lo + chunk).min(n);
            let mut g = Graph::new(&self.params);
            let v = run(&mut g, lo, hi)?;
            out.extend_from_slice(g.value(v));
        }
        Tensor::new(vec![n, d], out)
    }
}
