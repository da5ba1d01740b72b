//! Three-stream embedding model over ingested frame features.
//!
//! Every parameter lives in one flat `Vec<f64>`. A [`Layout`] maps each
//! stream role onto a parameter group; roles that share parameters point at
//! the same group, so aliased weights cannot drift apart and their gradients
//! accumulate in one place.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::math::{affine_backward_accumulate, affine_forward_into, l2_distance, l2_distance_backward, logistic, softplus};
use crate::objective::{triplet_loss, TripletLossValue, TripletUpstreams};
use crate::sampling::Modality;
use crate::selector::{SelectorHead, SelectorScore, DEFAULT_SCALE_FLOOR};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub feature_dim: usize,
    pub hidden_dim: usize,
    pub embed_dim: usize,
    /// Classifier width; `None` outside mixed mode.
    pub n_classes: Option<usize>,
    /// One trunk for both modalities.
    pub share_trunk: bool,
    /// One selector head for the positive and negative first-person streams.
    pub share_ego_selectors: bool,
    /// Standard deviation of the Gaussian the tanh scales are drawn from.
    pub scale_init_sigma: f64,
    pub scale_floor: f64,
    /// Whether selector gradients continue into the trunk.
    pub selector_feeds_trunk: bool,
}

impl ModelConfig {
    pub fn new(feature_dim: usize) -> Self {
        Self {
            feature_dim,
            hidden_dim: 128,
            embed_dim: 128,
            n_classes: None,
            share_trunk: true,
            share_ego_selectors: true,
            scale_init_sigma: 5.0,
            scale_floor: DEFAULT_SCALE_FLOOR,
            selector_feeds_trunk: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_dim == 0 || self.hidden_dim == 0 || self.embed_dim == 0 {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        if self.n_classes == Some(0) {
            return Err(Error::Config("classifier needs at least one class".into()));
        }
        if !(self.scale_floor > 0.0) || !(self.scale_init_sigma > 0.0) {
            return Err(Error::Config("tanh scale floor and init sigma must be positive".into()));
        }
        Ok(())
    }
}

/// Which of the three streams a selector score belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamRole {
    Third,
    EgoPositive,
    EgoNegative,
}

impl StreamRole {
    pub const ALL: [StreamRole; 3] = [StreamRole::Third, StreamRole::EgoPositive, StreamRole::EgoNegative];

    fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct MlpOffsets {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeadOffsets {
    w: usize,
    b: usize,
    scale: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ClassifierOffsets {
    w: usize,
    b: usize,
}

/// A named contiguous range of the parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamGroup {
    pub name: &'static str,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    trunk_third: MlpOffsets,
    trunk_ego: MlpOffsets,
    heads: [HeadOffsets; 3],
    classifier: Option<ClassifierOffsets>,
    groups: Vec<ParamGroup>,
    len: usize,
}

impl Layout {
    pub fn new(config: &ModelConfig) -> Self {
        let (f, h, e) = (config.feature_dim, config.hidden_dim, config.embed_dim);
        let mut len = 0;
        let mut groups = Vec::new();
        let mut trunk = |name: &'static str, len: &mut usize| {
            let w1 = *len;
            let b1 = w1 + h * f;
            let w2 = b1 + h;
            let b2 = w2 + e * h;
            let end = b2 + e;
            groups.push(ParamGroup { name, offset: w1, len: end - w1 });
            *len = end;
            MlpOffsets { w1, b1, w2, b2, end }
        };
        let trunk_third = trunk("trunk_third", &mut len);
        let trunk_ego = if config.share_trunk {
            trunk_third
        } else {
            trunk("trunk_ego", &mut len)
        };
        let mut head = |name: &'static str, len: &mut usize| {
            let w = *len;
            let o = HeadOffsets { w, b: w + e, scale: w + e + 1 };
            groups.push(ParamGroup { name, offset: w, len: e + 2 });
            *len = w + e + 2;
            o
        };
        let third = head("selector_third", &mut len);
        let ego_pos = head("selector_ego_positive", &mut len);
        let ego_neg = if config.share_ego_selectors {
            ego_pos
        } else {
            head("selector_ego_negative", &mut len)
        };
        let classifier = config.n_classes.map(|c| {
            let o = ClassifierOffsets { w: len, b: len + c * e };
            groups.push(ParamGroup { name: "classifier", offset: len, len: c * e + c });
            len += c * e + c;
            o
        });
        Self {
            trunk_third,
            trunk_ego,
            heads: [third, ego_pos, ego_neg],
            classifier,
            groups,
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Distinct parameter groups in storage order.
    pub fn groups(&self) -> &[ParamGroup] {
        &self.groups
    }

    fn trunk(&self, modality: Modality) -> MlpOffsets {
        match modality {
            Modality::ThirdPerson => self.trunk_third,
            Modality::FirstPerson => self.trunk_ego,
        }
    }

    /// Offsets of every tanh-scale parameter (deduplicated).
    fn scale_offsets(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.heads.iter().map(|h| h.scale).collect();
        v.dedup();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Parameter range of one stream's trunk.
    pub fn trunk_range(&self, modality: Modality) -> std::ops::Range<usize> {
        let t = self.trunk(modality);
        t.w1..t.end
    }

    /// Parameter range of one stream's selector head.
    pub fn head_range(&self, role: StreamRole) -> std::ops::Range<usize> {
        let h = self.heads[role.slot()];
        h.w..h.scale + 1
    }
}

/// Cached activations of one trunk pass.
#[derive(Debug, Clone, PartialEq)]
pub struct TrunkActivations {
    pub modality: Modality,
    pub input: Vec<f64>,
    pub hidden: Vec<f64>,
    pub embedding: Vec<f64>,
}

/// Forward record of one triplet through all three streams.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletForward {
    pub x: TrunkActivations,
    pub z: TrunkActivations,
    pub z_prime: TrunkActivations,
    pub loss: TripletLossValue,
    /// Selector scores for `x`, `z`, `z′` in that order.
    pub scores: [SelectorScore; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    pub config: ModelConfig,
    layout: Layout,
    pub values: Vec<f64>,
}

impl ModelParameters {
    /// Draws a fresh model: trunk weights ~ N(0, 1/dim_in), selector weights
    /// ~ N(0, 0.01²), tanh scales |N(0, σ²)| clamped to the floor, biases 0.
    pub fn init<R: Rng + ?Sized>(config: ModelConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config);
        let mut values = vec![0.0; layout.len()];
        let gauss = |sd: f64| Normal::new(0.0, sd).expect("positive standard deviation");
        let fill = |values: &mut [f64], range: std::ops::Range<usize>, sd: f64, rng: &mut R| {
            let d = gauss(sd);
            for v in &mut values[range] {
                *v = d.sample(rng);
            }
        };
        let mut trunks = vec![layout.trunk_third];
        if !config.share_trunk {
            trunks.push(layout.trunk_ego);
        }
        for t in trunks {
            fill(&mut values, t.w1..t.b1, 1.0 / (config.feature_dim as f64).sqrt(), rng);
            fill(&mut values, t.w2..t.b2, 1.0 / (config.hidden_dim as f64).sqrt(), rng);
        }
        let mut heads = vec![layout.heads[0], layout.heads[1]];
        if !config.share_ego_selectors {
            heads.push(layout.heads[2]);
        }
        for h in heads {
            fill(&mut values, h.w..h.b, 0.01, rng);
            let s: f64 = gauss(config.scale_init_sigma).sample(rng);
            values[h.scale] = s.abs().max(config.scale_floor);
        }
        if let Some(c) = layout.classifier {
            fill(&mut values, c.w..c.b, 1.0 / (config.embed_dim as f64).sqrt(), rng);
        }
        Ok(Self { config, layout, values })
    }

    /// Rebuilds a model from stored values.
    pub fn from_values(config: ModelConfig, values: Vec<f64>) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config);
        check_len("model parameters", layout.len(), values.len())?;
        Ok(Self { config, layout, values })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn param_count(&self) -> usize {
        self.values.len()
    }

    pub fn has_classifier(&self) -> bool {
        self.layout.classifier.is_some()
    }

    pub fn trunk_forward(&self, modality: Modality, features: &[f64]) -> Result<TrunkActivations> {
        check_len("frame features", self.config.feature_dim, features.len())?;
        let t = self.layout.trunk(modality);
        let v = &self.values;
        let mut hidden = vec![0.0; self.config.hidden_dim];
        affine_forward_into(&v[t.w1..t.b1], &v[t.b1..t.w2], features, &mut hidden)?;
        hidden.iter_mut().for_each(|h| *h = h.tanh());
        let mut embedding = vec![0.0; self.config.embed_dim];
        affine_forward_into(&v[t.w2..t.b2], &v[t.b2..t.end], &hidden, &mut embedding)?;
        Ok(TrunkActivations {
            modality,
            input: features.to_vec(),
            hidden,
            embedding,
        })
    }

    pub fn embed(&self, modality: Modality, features: &[f64]) -> Result<Vec<f64>> {
        Ok(self.trunk_forward(modality, features)?.embedding)
    }

    /// Adds the trunk parameter gradients for `∂/∂embedding = upstream` into `grad`.
    pub fn trunk_backward(&self, act: &TrunkActivations, upstream: &[f64], grad: &mut [f64]) -> Result<()> {
        check_len("gradient buffer", self.values.len(), grad.len())?;
        let t = self.layout.trunk(act.modality);
        let v = &self.values;
        let (g_w2, rest) = grad[t.w2..t.end].split_at_mut(t.b2 - t.w2);
        let d_hidden = affine_backward_accumulate(&v[t.w2..t.b2], &act.hidden, upstream, g_w2, rest)?;
        let d_pre: Vec<f64> = d_hidden.iter().zip(&act.hidden).map(|(d, h)| d * (1.0 - h * h)).collect();
        let (g_w1, rest) = grad[t.w1..t.w2].split_at_mut(t.b1 - t.w1);
        affine_backward_accumulate(&v[t.w1..t.b1], &act.input, &d_pre, g_w1, rest)?;
        Ok(())
    }

    pub fn selector(&self, role: StreamRole) -> SelectorHead<'_> {
        let h = self.layout.heads[role.slot()];
        SelectorHead {
            weight: &self.values[h.w..h.b],
            bias: self.values[h.b],
            scale: self.values[h.scale],
        }
    }

    /// Selector score of an embedding under one stream's head.
    pub fn selector_score(&self, role: StreamRole, embedding: &[f64]) -> Result<SelectorScore> {
        self.selector(role).score(embedding)
    }

    /// Adds head gradients for `∂/∂f = upstream` into `grad`; returns the
    /// gradient with respect to the embedding.
    pub fn selector_backward(
        &self,
        role: StreamRole,
        embedding: &[f64],
        score: SelectorScore,
        upstream: f64,
        grad: &mut [f64],
    ) -> Result<Vec<f64>> {
        check_len("gradient buffer", self.values.len(), grad.len())?;
        let h = self.layout.heads[role.slot()];
        let g = self.selector(role).backward(embedding, score, upstream)?;
        for (dst, src) in grad[h.w..h.b].iter_mut().zip(&g.weight) {
            *dst += src;
        }
        grad[h.b] += g.bias;
        grad[h.scale] += g.scale;
        Ok(g.embedding)
    }

    pub fn classifier_logits(&self, embedding: &[f64]) -> Result<Vec<f64>> {
        let c = self
            .layout
            .classifier
            .ok_or_else(|| Error::Mode("model has no classifier head".into()))?;
        let n = self.config.n_classes.unwrap_or(0);
        let mut out = vec![0.0; n];
        affine_forward_into(&self.values[c.w..c.b], &self.values[c.b..c.b + n], embedding, &mut out)?;
        Ok(out)
    }

    /// Per-class probabilities for one frame seen through `modality`'s trunk.
    pub fn class_probabilities(&self, modality: Modality, features: &[f64]) -> Result<Vec<f64>> {
        let emb = self.embed(modality, features)?;
        Ok(self.classifier_logits(&emb)?.into_iter().map(logistic).collect())
    }

    /// Adds classifier gradients for `∂/∂logits = upstream`; returns `∂/∂embedding`.
    pub fn classifier_backward(&self, embedding: &[f64], upstream: &[f64], grad: &mut [f64]) -> Result<Vec<f64>> {
        check_len("gradient buffer", self.values.len(), grad.len())?;
        let c = self
            .layout
            .classifier
            .ok_or_else(|| Error::Mode("model has no classifier head".into()))?;
        let n = upstream.len();
        let (gw, gb) = grad[c.w..c.b + n].split_at_mut(c.b - c.w);
        affine_backward_accumulate(&self.values[c.w..c.b], embedding, upstream, gw, gb)
    }

    pub fn forward_triplet(&self, x: &[f64], z: &[f64], z_prime: &[f64]) -> Result<TripletForward> {
        let x = self.trunk_forward(Modality::ThirdPerson, x)?;
        let z = self.trunk_forward(Modality::FirstPerson, z)?;
        let z_prime = self.trunk_forward(Modality::FirstPerson, z_prime)?;
        let d_pos = l2_distance(&x.embedding, &z.embedding)?;
        let d_neg = l2_distance(&x.embedding, &z_prime.embedding)?;
        let scores = [
            self.selector_score(StreamRole::Third, &x.embedding)?,
            self.selector_score(StreamRole::EgoPositive, &z.embedding)?,
            self.selector_score(StreamRole::EgoNegative, &z_prime.embedding)?,
        ];
        Ok(TripletForward {
            x,
            z,
            z_prime,
            loss: triplet_loss(d_pos, d_neg),
            scores,
        })
    }

    /// Routes one triplet's upstream gradients through the network.
    ///
    /// The weighted triplet-loss gradient lands in `embedding_grad`; the
    /// selector gradient (through the scaled tanh, the head, and, when
    /// enabled, the trunk) lands in `selector_grad`.
    pub fn weighted_backward(
        &self,
        fwd: &TripletForward,
        up: &TripletUpstreams,
        embedding_grad: &mut [f64],
        selector_grad: &mut [f64],
    ) -> Result<()> {
        let (gx_pos, gz) = l2_distance_backward(&fwd.x.embedding, &fwd.z.embedding, up.d_pos)?;
        let (gx_neg, gzp) = l2_distance_backward(&fwd.x.embedding, &fwd.z_prime.embedding, up.d_neg)?;
        let gx: Vec<f64> = gx_pos.iter().zip(&gx_neg).map(|(a, b)| a + b).collect();
        self.trunk_backward(&fwd.x, &gx, embedding_grad)?;
        self.trunk_backward(&fwd.z, &gz, embedding_grad)?;
        self.trunk_backward(&fwd.z_prime, &gzp, embedding_grad)?;

        for (role, (act, score)) in StreamRole::ALL
            .into_iter()
            .zip([&fwd.x, &fwd.z, &fwd.z_prime].into_iter().zip(fwd.scores))
        {
            let d_emb = self.selector_backward(role, &act.embedding, score, up.selector, selector_grad)?;
            if self.config.selector_feeds_trunk {
                self.trunk_backward(act, &d_emb, selector_grad)?;
            }
        }
        Ok(())
    }

    /// Independent per-class logistic loss of one labeled third-person frame.
    /// Returns the loss and adds its gradient into `grad`.
    pub fn classification_backward(&self, features: &[f64], labels: &[f64], scale: f64, grad: &mut [f64]) -> Result<f64> {
        let act = self.trunk_forward(Modality::ThirdPerson, features)?;
        let logits = self.classifier_logits(&act.embedding)?;
        check_len("label vector", logits.len(), labels.len())?;
        let loss = classification_loss(&logits, labels);
        let d_logits: Vec<f64> = logits.iter().zip(labels).map(|(s, y)| scale * (logistic(*s) - y)).collect();
        let d_emb = self.classifier_backward(&act.embedding, &d_logits, grad)?;
        self.trunk_backward(&act, &d_emb, grad)?;
        Ok(loss)
    }

    /// Projects every tanh scale onto `[scale_floor, ∞)`.
    pub fn project_scales(&mut self) {
        let floor = self.config.scale_floor;
        for o in self.layout.scale_offsets() {
            if !(self.values[o] >= floor) {
                self.values[o] = floor;
            }
        }
    }

    pub fn scales(&self) -> Vec<f64> {
        self.layout.scale_offsets().into_iter().map(|o| self.values[o]).collect()
    }
}

/// `Σ_c log(1 + e^{s_c}) − y_c · s_c`.
pub fn classification_loss(logits: &[f64], labels: &[f64]) -> f64 {
    logits.iter().zip(labels).map(|(s, y)| softplus(*s) - y * s).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::finite_difference_check;
    use crate::objective::{weighted_upstreams, RunningLossState};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small(share_trunk: bool, share_heads: bool, classes: Option<usize>) -> ModelConfig {
        ModelConfig {
            hidden_dim: 5,
            embed_dim: 4,
            n_classes: classes,
            share_trunk,
            share_ego_selectors: share_heads,
            ..ModelConfig::new(3)
        }
    }

    #[test]
    fn layout_aliases_shared_groups() {
        let shared = Layout::new(&small(true, true, None));
        assert_eq!(shared.trunk_range(Modality::ThirdPerson), shared.trunk_range(Modality::FirstPerson));
        assert_eq!(shared.head_range(StreamRole::EgoPositive), shared.head_range(StreamRole::EgoNegative));
        assert_eq!(shared.groups().len(), 3);
        let split = Layout::new(&small(false, false, Some(2)));
        assert_ne!(split.trunk_range(Modality::ThirdPerson), split.trunk_range(Modality::FirstPerson));
        assert_eq!(split.groups().len(), 6);
        assert_eq!(split.groups().iter().map(|g| g.len).sum::<usize>(), split.len());
    }

    #[test]
    fn init_respects_scale_floor_and_is_seeded() {
        let a = ModelParameters::init(small(true, true, None), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = ModelParameters::init(small(true, true, None), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a.values, b.values);
        assert!(a.scales().iter().all(|s| *s >= 0.01));
    }

    #[test]
    fn identical_negatives_give_half_loss() {
        let m = ModelParameters::init(small(true, true, None), &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let f = m.forward_triplet(&[0.1, 0.2, 0.3], &[1.0, -1.0, 0.5], &[1.0, -1.0, 0.5]).unwrap();
        assert_eq!(f.loss.d_pos, f.loss.d_neg);
        assert_eq!(f.loss.l, 0.5);

        let mut zero = m.clone();
        let r = zero.layout.trunk_range(Modality::ThirdPerson);
        let t = zero.layout.trunk_third;
        zero.values[t.w2..t.b2].iter_mut().for_each(|v| *v = 0.0);
        zero.values[r.start..t.b1].iter_mut().for_each(|v| *v = 0.0);
        let f = zero.forward_triplet(&[0.1, 0.2, 0.3], &[5.0, 1.0, 0.5], &[-3.0, 2.0, 0.0]).unwrap();
        assert_eq!(f.x.embedding, zero.values[t.b2..t.end].to_vec());
        assert_eq!(f.loss.l, 0.5);
    }

    #[test]
    fn shape_and_mode_errors() {
        let m = ModelParameters::init(small(true, true, None), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert!(matches!(m.embed(Modality::ThirdPerson, &[1.0]), Err(Error::Shape { .. })));
        assert!(matches!(m.classifier_logits(&[0.0; 4]), Err(Error::Mode(_))));
        assert!(ModelParameters::from_values(small(true, true, None), vec![0.0; 3]).is_err());
    }

    fn random_features(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.5..1.5)).collect()
    }

    #[test]
    fn weighted_backward_matches_finite_differences() {
        for (seed, share_trunk, share_heads) in [(4, true, true), (5, false, false), (6, true, false)] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut model = ModelParameters::init(small(share_trunk, share_heads, None), &mut rng).unwrap();
            // keep the scales moderate so tanh is not saturated
            for o in model.layout.scale_offsets() {
                model.values[o] = 1.3;
            }
            for h in model.layout.heads {
                for v in &mut model.values[h.w..h.b] {
                    *v = rng.random_range(-0.5..0.5);
                }
            }
            let (x, z, zp) = (random_features(&mut rng, 3), random_features(&mut rng, 3), random_features(&mut rng, 3));
            let (p, running) = (0.8, 0.35);
            // objective: p·e^{f_x+f_z+f_z'}·l − running·p·e^{...} has the same
            // gradients at the current point as the routed upstreams
            let fwd = model.forward_triplet(&x, &z, &zp).unwrap();
            let f0: f64 = fwd.scores.iter().map(|s| s.f).sum();
            let objective = |vals: &[f64]| -> f64 {
                let m = ModelParameters::from_values(model.config.clone(), vals.to_vec()).unwrap();
                let f = m.forward_triplet(&x, &z, &zp).unwrap();
                let w = p * (f.scores.iter().map(|s| s.f).sum::<f64>() - f0).exp();
                w * f.loss.l - running * w
            };
            let up = weighted_upstreams(p, &fwd.loss, &RunningLossState::with_estimate(running)).unwrap();
            let mut ge = vec![0.0; model.param_count()];
            let mut gs = vec![0.0; model.param_count()];
            model.weighted_backward(&fwd, &up, &mut ge, &mut gs).unwrap();
            let total: Vec<f64> = ge.iter().zip(&gs).map(|(a, b)| a + b).collect();
            let err = finite_difference_check(objective, &model.values, &total, 1e-5).unwrap();
            assert!(err < 1e-6, "relative error {err}");
        }
    }

    #[test]
    fn classification_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let model = ModelParameters::init(small(true, true, Some(3)), &mut rng).unwrap();
        let x = random_features(&mut rng, 3);
        let y = vec![1.0, 0.0, 1.0];
        let mut g = vec![0.0; model.param_count()];
        model.classification_backward(&x, &y, 1.0, &mut g).unwrap();
        let objective = |vals: &[f64]| {
            let m = ModelParameters::from_values(model.config.clone(), vals.to_vec()).unwrap();
            let emb = m.embed(Modality::ThirdPerson, &x).unwrap();
            classification_loss(&m.classifier_logits(&emb).unwrap(), &y)
        };
        assert!(finite_difference_check(objective, &model.values, &g, 1e-5).unwrap() < 1e-6);
    }

    #[test]
    fn classification_loss_limits() {
        let logits = [0.3, -1.2, 2.0];
        assert_abs_diff_eq!(
            classification_loss(&logits, &[0.0; 3]),
            logits.iter().map(|s: &f64| (1.0 + s.exp()).ln()).sum::<f64>(),
            epsilon = 1e-12
        );
        assert!(classification_loss(&[60.0, -60.0], &[1.0, 0.0]) < 1e-20);
    }

    #[test]
    fn projection_clamps_scales() {
        let mut m = ModelParameters::init(small(false, false, None), &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        for o in m.layout.scale_offsets() {
            m.values[o] = -4.0;
        }
        m.project_scales();
        assert!(m.scales().iter().all(|s| *s == 0.01));
        assert_eq!(m.scales().len(), 3);
    }
}
