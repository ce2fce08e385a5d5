use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::LatentGrid;
use crate::{Error, Result};

const LN_EPS: f32 = 1e-5;

/// Shape of a control block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlConfig {
    /// Width of the transformer layers.
    pub hidden_dim: usize,
    pub n_layers: usize,
    /// Spatial patch edge; each token covers one frame and `patch x patch` positions.
    pub patch_size: usize,
    /// Channels of the concatenated `[z_t, z_anchor]` input.
    pub in_channels: usize,
    /// Channels of the control output, matching the backbone latent.
    pub backbone_dim: usize,
    pub mlp_ratio: usize,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 256,
            n_layers: 8,
            patch_size: 2,
            in_channels: 128,
            backbone_dim: 64,
            mlp_ratio: 4,
        }
    }
}

impl ControlConfig {
    pub fn token_in(&self) -> usize {
        self.in_channels * self.patch_size * self.patch_size
    }

    pub fn token_out(&self) -> usize {
        self.backbone_dim * self.patch_size * self.patch_size
    }

    pub fn topology(&self) -> BlockTopology {
        BlockTopology {
            hidden_dim: self.hidden_dim,
            n_layers: self.n_layers,
            token_in: self.token_in(),
            token_out: self.token_out(),
            mlp_ratio: self.mlp_ratio,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0
            || self.n_layers == 0
            || self.patch_size == 0
            || self.in_channels == 0
            || self.backbone_dim == 0
            || self.mlp_ratio == 0
        {
            return Err(Error::InvalidParameter(format!(
                "control config has a zero dimension: {self:?}"
            )));
        }
        // The projection widens each token back to the backbone: it must not narrow.
        if self.hidden_dim > self.token_out() {
            return Err(Error::InvalidParameter(format!(
                "hidden_dim {} exceeds projection width {} (backbone_dim {} x patch {}^2)",
                self.hidden_dim,
                self.token_out(),
                self.backbone_dim,
                self.patch_size
            )));
        }
        Ok(())
    }
}

/// Dimensions needed to count block parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockTopology {
    pub hidden_dim: usize,
    pub n_layers: usize,
    pub token_in: usize,
    pub token_out: usize,
    pub mlp_ratio: usize,
}

/// Weights plus biases of patch embedding, `n_layers` attention+MLP layers
/// (with two layer norms each) and the output projection.
pub fn block_parameter_count(t: &BlockTopology) -> u64 {
    let h = t.hidden_dim as u64;
    let m = (t.mlp_ratio * t.hidden_dim) as u64;
    let embed = t.token_in as u64 * h + h;
    let attention = 4 * (h * h + h);
    let norms = 2 * 2 * h;
    let mlp = (m * h + m) + (h * m + h);
    let proj = t.token_out as u64 * h + t.token_out as u64;
    embed + t.n_layers as u64 * (attention + norms + mlp) + proj
}

/// One pre-norm transformer layer. Matrices are row-major `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlLayer {
    pub ln1_gamma: Vec<f32>,
    pub ln1_beta: Vec<f32>,
    pub wq: Vec<f32>,
    pub bq: Vec<f32>,
    pub wk: Vec<f32>,
    pub bk: Vec<f32>,
    pub wv: Vec<f32>,
    pub bv: Vec<f32>,
    pub wo: Vec<f32>,
    pub bo: Vec<f32>,
    pub ln2_gamma: Vec<f32>,
    pub ln2_beta: Vec<f32>,
    pub w1: Vec<f32>,
    pub b1: Vec<f32>,
    pub w2: Vec<f32>,
    pub b2: Vec<f32>,
}

/// Control block weights. All fields are public so tests can set weights by
/// hand; [`ControlBlockParams::init`] gives the seeded starting point with a
/// zero output projection.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlBlockParams {
    pub config: ControlConfig,
    pub seed: u64,
    pub embed_w: Vec<f32>,
    pub embed_b: Vec<f32>,
    pub layers: Vec<ControlLayer>,
    /// `token_out x hidden_dim`, zero at initialization.
    pub proj_w: Vec<f32>,
    pub proj_b: Vec<f32>,
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize, std: f32) -> Vec<f32> {
    let dist = Normal::new(0.0f32, std).expect("positive std");
    (0..n).map(|_| dist.sample(rng)).collect()
}

impl ControlBlockParams {
    /// Seeded initialization: Gaussian weights with `1/sqrt(fan_in)` scale,
    /// zero biases, unit layer-norm gains and an all-zero projection.
    pub fn init(config: ControlConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = config.hidden_dim;
        let m = config.mlp_ratio * h;
        let tin = config.token_in();
        let tout = config.token_out();
        let inv = |n: usize| 1.0 / (n as f32).sqrt();
        let embed_w = normal_vec(&mut rng, h * tin, inv(tin));
        let layers = (0..config.n_layers)
            .map(|_| ControlLayer {
                ln1_gamma: vec![1.0; h],
                ln1_beta: vec![0.0; h],
                wq: normal_vec(&mut rng, h * h, inv(h)),
                bq: vec![0.0; h],
                wk: normal_vec(&mut rng, h * h, inv(h)),
                bk: vec![0.0; h],
                wv: normal_vec(&mut rng, h * h, inv(h)),
                bv: vec![0.0; h],
                wo: normal_vec(&mut rng, h * h, inv(h)),
                bo: vec![0.0; h],
                ln2_gamma: vec![1.0; h],
                ln2_beta: vec![0.0; h],
                w1: normal_vec(&mut rng, m * h, inv(h)),
                b1: vec![0.0; m],
                w2: normal_vec(&mut rng, h * m, inv(m)),
                b2: vec![0.0; h],
            })
            .collect();
        Ok(Self {
            config,
            seed,
            embed_w,
            embed_b: vec![0.0; h],
            layers,
            proj_w: vec![0.0; tout * h],
            proj_b: vec![0.0; tout],
        })
    }

    /// Replaces the projection with seeded Gaussian weights of standard
    /// deviation `scale / sqrt(hidden_dim)`, standing in for a trained block.
    pub fn with_random_projection(mut self, seed: u64, scale: f32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15);
        let h = self.config.hidden_dim;
        self.proj_w = normal_vec(&mut rng, self.proj_w.len(), scale / (h as f32).sqrt());
        self
    }

    pub fn projection_is_zero(&self) -> bool {
        self.proj_w.iter().chain(&self.proj_b).all(|v| *v == 0.0)
    }

    pub fn parameter_count(&self) -> u64 {
        block_parameter_count(&self.config.topology())
    }

    fn check_shapes(&self) -> Result<()> {
        let c = &self.config;
        let h = c.hidden_dim;
        let m = c.mlp_ratio * h;
        let mut ok = self.embed_w.len() == h * c.token_in()
            && self.embed_b.len() == h
            && self.layers.len() == c.n_layers
            && self.proj_w.len() == c.token_out() * h
            && self.proj_b.len() == c.token_out();
        for l in &self.layers {
            ok &= [
                &l.ln1_gamma,
                &l.ln1_beta,
                &l.bq,
                &l.bk,
                &l.bv,
                &l.bo,
                &l.ln2_gamma,
                &l.ln2_beta,
                &l.b2,
            ]
            .iter()
            .all(|v| v.len() == h);
            ok &= [&l.wq, &l.wk, &l.wv, &l.wo].iter().all(|v| v.len() == h * h);
            ok &= l.w1.len() == m * h && l.b1.len() == m && l.w2.len() == h * m;
        }
        if ok {
            Ok(())
        } else {
            Err(Error::Shape("control block weights do not match their config".into()))
        }
    }
}

/// `y = W x + b` with `W` row-major `out x in`.
fn affine(w: &[f32], b: &[f32], x: &[f32], out: &mut [f32]) {
    let n_in = x.len();
    for (o, (row, bias)) in out.iter_mut().zip(w.chunks_exact(n_in).zip(b)) {
        let mut acc = *bias;
        for (wi, xi) in row.iter().zip(x) {
            acc += wi * xi;
        }
        *o = acc;
    }
}

fn layer_norm(x: &[f32], gamma: &[f32], beta: &[f32], out: &mut [f32]) {
    let n = x.len() as f32;
    let mean = x.iter().sum::<f32>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f32>() / n;
    let inv = 1.0 / (var + LN_EPS).sqrt();
    for i in 0..x.len() {
        out[i] = (x[i] - mean) * inv * gamma[i] + beta[i];
    }
}

fn gelu(x: f32) -> f32 {
    const C: f32 = 0.797_884_6; // sqrt(2/pi)
    0.5 * x * (1.0 + (C * (x + 0.044715 * x * x * x)).tanh())
}

/// Runs the control branch on `[z_t, z_anchor]`.
///
/// The inputs are concatenated along channels, cut into `1 x p x p` patches
/// (one token per patch, features ordered channel, row, column), passed
/// through `n_layers` pre-norm single-head self-attention + MLP layers over
/// all tokens, projected to `backbone_dim * p * p` features per token and
/// folded back into a `frames x backbone_dim x height x width` grid.
pub fn control_forward(z_t: &LatentGrid, z_anchor: &LatentGrid, params: &ControlBlockParams) -> Result<LatentGrid> {
    params.check_shapes()?;
    let cfg = &params.config;
    let (lf, ct, lh, lw) = z_t.shape();
    let (af, ca, ah, aw) = z_anchor.shape();
    if (af, ah, aw) != (lf, lh, lw) {
        return Err(Error::Shape(format!(
            "z_t is {lf}x{lh}x{lw} but z_anchor is {af}x{ah}x{aw}"
        )));
    }
    if ct + ca != cfg.in_channels {
        return Err(Error::Shape(format!(
            "concatenated input has {} channels, block expects {}",
            ct + ca,
            cfg.in_channels
        )));
    }
    let p = cfg.patch_size;
    if lh % p != 0 || lw % p != 0 {
        return Err(Error::Shape(format!(
            "latent {lh}x{lw} not divisible by patch size {p}"
        )));
    }
    let (ph, pw) = (lh / p, lw / p);
    let n_tokens = lf * ph * pw;
    let h = cfg.hidden_dim;
    let m = cfg.mlp_ratio * h;
    let tin = cfg.token_in();

    // Patchify + embed.
    let mut x = vec![0f32; n_tokens * h];
    let mut patch = vec![0f32; tin];
    for t in 0..lf {
        for py in 0..ph {
            for px in 0..pw {
                let tok = (t * ph + py) * pw + px;
                for c in 0..cfg.in_channels {
                    for dy in 0..p {
                        for dx in 0..p {
                            let (y, xx) = (py * p + dy, px * p + dx);
                            patch[(c * p + dy) * p + dx] = if c < ct {
                                z_t.get(t, c, y, xx)
                            } else {
                                z_anchor.get(t, c - ct, y, xx)
                            };
                        }
                    }
                }
                affine(&params.embed_w, &params.embed_b, &patch, &mut x[tok * h..(tok + 1) * h]);
            }
        }
    }

    let scale = 1.0 / (h as f32).sqrt();
    let mut normed = vec![0f32; n_tokens * h];
    let mut q = vec![0f32; n_tokens * h];
    let mut k = vec![0f32; n_tokens * h];
    let mut v = vec![0f32; n_tokens * h];
    let mut scores = vec![0f32; n_tokens];
    let mut mixed = vec![0f32; h];
    let mut delta = vec![0f32; h];
    let mut hidden = vec![0f32; m];
    for layer in &params.layers {
        for i in 0..n_tokens {
            let r = i * h..(i + 1) * h;
            layer_norm(&x[r.clone()], &layer.ln1_gamma, &layer.ln1_beta, &mut normed[r.clone()]);
            affine(&layer.wq, &layer.bq, &normed[r.clone()], &mut q[r.clone()]);
            affine(&layer.wk, &layer.bk, &normed[r.clone()], &mut k[r.clone()]);
            affine(&layer.wv, &layer.bv, &normed[r.clone()], &mut v[r]);
        }
        let mut attn_out = vec![0f32; n_tokens * h];
        for i in 0..n_tokens {
            let qi = &q[i * h..(i + 1) * h];
            let mut max = f32::NEG_INFINITY;
            for (j, s) in scores.iter_mut().enumerate() {
                let kj = &k[j * h..(j + 1) * h];
                *s = qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f32>() * scale;
                max = max.max(*s);
            }
            let mut denom = 0f32;
            for s in scores.iter_mut() {
                *s = (*s - max).exp();
                denom += *s;
            }
            mixed.fill(0.0);
            for (j, s) in scores.iter().enumerate() {
                let a = s / denom;
                for (o, vj) in mixed.iter_mut().zip(&v[j * h..(j + 1) * h]) {
                    *o += a * vj;
                }
            }
            affine(&layer.wo, &layer.bo, &mixed, &mut attn_out[i * h..(i + 1) * h]);
        }
        for (xi, a) in x.iter_mut().zip(&attn_out) {
            *xi += a;
        }
        for i in 0..n_tokens {
            let r = i * h..(i + 1) * h;
            layer_norm(&x[r.clone()], &layer.ln2_gamma, &layer.ln2_beta, &mut normed[r.clone()]);
            affine(&layer.w1, &layer.b1, &normed[r.clone()], &mut hidden);
            hidden.iter_mut().for_each(|v| *v = gelu(*v));
            affine(&layer.w2, &layer.b2, &hidden, &mut delta);
            for (xi, d) in x[r].iter_mut().zip(&delta) {
                *xi += d;
            }
        }
    }

    // Project + unpatchify.
    let cout = cfg.backbone_dim;
    let mut out = LatentGrid::zeros(lf, cout, lh, lw);
    let mut token_out = vec![0f32; cfg.token_out()];
    for t in 0..lf {
        for py in 0..ph {
            for px in 0..pw {
                let tok = (t * ph + py) * pw + px;
                affine(
                    &params.proj_w,
                    &params.proj_b,
                    &x[tok * h..(tok + 1) * h],
                    &mut token_out,
                );
                for c in 0..cout {
                    for dy in 0..p {
                        for dx in 0..p {
                            let i = out.index(t, c, py * p + dy, px * p + dx);
                            out.data_mut()[i] = token_out[(c * p + dy) * p + dx];
                        }
                    }
                }
            }
        }
    }
    if out.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "control block produced non-finite output".into(),
        ));
    }
    Ok(out)
}
