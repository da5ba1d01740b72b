//! SGD with momentum over selector-weighted triplets, optionally mixed with
//! labeled third-person frames for a classification head.
//!
//! One step runs in a fixed order: forward every triplet of the batch, fold
//! the selector scores and losses into the online accumulators in batch
//! order, then backpropagate against the post-update running loss. The
//! selector and classification gradient blocks are rescaled to the norm of
//! the triplet-loss block before the momentum update.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::GradientBlock;
use crate::model::{ModelConfig, ModelParameters, TripletForward};
use crate::objective::{rescale_gradient_block, weighted_upstreams, RunningLossState};
use crate::sampling::{split_pairs, FrameId, Modality, PairIndex, SamplerConfig, SplitManifest, TripletSample, TripletSampler};
use crate::selector::{triplet_weight, AccumulatorBank, SelectorWeight, SigmaInit, VideoKey, DEFAULT_MIXING, DEFAULT_SCALE_FLOOR};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub base_lr: f64,
    pub lr_decay_factor: f64,
    pub lr_decay_every_epochs: usize,
    pub momentum: f64,
    pub epochs: usize,
    pub seed: u64,
    pub train_fraction: f64,
    pub delta: f64,
    pub delta_prime: f64,
    /// Mixing constant of the online selector and loss recursions.
    pub k: f64,
    pub sigma_init: SigmaInit,
    pub reset_accumulators_each_epoch: bool,
    pub hidden_dim: usize,
    pub embed_dim: usize,
    pub share_trunk: bool,
    pub share_ego_selectors: bool,
    pub scale_init_sigma: f64,
    pub scale_floor: f64,
    pub selector_feeds_trunk: bool,
    /// Rescale selector/classification gradients to the triplet-gradient norm.
    pub rescale_gradients: bool,
    pub mixed_mode: bool,
    /// Labeled frames drawn per triplet in mixed mode (1.0 = alternate 1:1).
    pub labeled_per_triplet: f64,
    /// Classifier width; inferred from the labels when absent.
    pub n_classes: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 15,
            base_lr: 3e-5,
            lr_decay_factor: 10.0,
            lr_decay_every_epochs: 3,
            momentum: 0.95,
            epochs: 10,
            seed: 0,
            train_fraction: 0.8,
            delta: 1.0,
            delta_prime: 10.0,
            k: DEFAULT_MIXING,
            sigma_init: SigmaInit::FirstObservation,
            reset_accumulators_each_epoch: false,
            hidden_dim: 128,
            embed_dim: 128,
            share_trunk: true,
            share_ego_selectors: true,
            scale_init_sigma: 5.0,
            scale_floor: DEFAULT_SCALE_FLOOR,
            selector_feeds_trunk: true,
            rescale_gradients: true,
            mixed_mode: false,
            labeled_per_triplet: 1.0,
            n_classes: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("base_lr", self.base_lr),
            ("lr_decay_factor", self.lr_decay_factor),
            ("train_fraction", self.train_fraction),
            ("scale_init_sigma", self.scale_init_sigma),
            ("scale_floor", self.scale_floor),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.batch_size == 0 || self.lr_decay_every_epochs == 0 {
            return Err(Error::Config("batch_size and lr_decay_every_epochs must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum must lie in [0,1), got {}", self.momentum)));
        }
        if !(self.labeled_per_triplet >= 0.0) {
            return Err(Error::Config("labeled_per_triplet must be non-negative".into()));
        }
        self.sampler().validate()
    }

    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            delta: self.delta,
            delta_prime: self.delta_prime,
            seed: self.seed,
        }
    }

    /// `base_lr / decay_factor^⌊epoch / decay_every⌋`.
    pub fn learning_rate(&self, epoch: usize) -> f64 {
        let drops = (epoch / self.lr_decay_every_epochs) as i32;
        self.base_lr / self.lr_decay_factor.powi(drops)
    }

    pub fn model_config(&self, feature_dim: usize, n_classes: Option<usize>) -> ModelConfig {
        ModelConfig {
            feature_dim,
            hidden_dim: self.hidden_dim,
            embed_dim: self.embed_dim,
            n_classes,
            share_trunk: self.share_trunk,
            share_ego_selectors: self.share_ego_selectors,
            scale_init_sigma: self.scale_init_sigma,
            scale_floor: self.scale_floor,
            selector_feeds_trunk: self.selector_feeds_trunk,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub velocity: Vec<f64>,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epoch: usize,
    pub steps: u64,
}

/// One unit of a training batch: a full triplet, or a labeled third-person
/// frame with no first-person partners.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixedItem {
    pub x: FrameId,
    pub partners: Option<(FrameId, FrameId)>,
    pub labels: Option<Vec<usize>>,
}

impl MixedItem {
    pub fn triplet(t: TripletSample) -> Self {
        Self {
            x: t.x,
            partners: Some((t.z, t.z_prime)),
            labels: None,
        }
    }

    pub fn labeled(x: FrameId, labels: Vec<usize>) -> Self {
        Self {
            x,
            partners: None,
            labels: Some(labels),
        }
    }

    fn validate(&self) -> Result<()> {
        match (&self.partners, &self.labels) {
            (Some(_), Some(_)) => Err(Error::MalformedItem(format!("{:?}: label attached to a full triplet", self.x))),
            (None, None) => Err(Error::MalformedItem(format!("{:?}: neither partners nor labels", self.x))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    pub n_triplets: usize,
    pub n_labeled: usize,
    /// Unweighted mean triplet loss.
    pub mean_loss: f64,
    /// `Σ p·l / Σ p` over the batch.
    pub weighted_loss: f64,
    pub running_loss: f64,
    pub classification_loss: f64,
    pub embedding_grad_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub learning_rate: f64,
    pub steps: usize,
    pub mean_loss: f64,
    pub weighted_loss: f64,
    pub running_loss: f64,
    pub classification_loss: f64,
}

/// Everything a checkpoint holds.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub config: TrainConfig,
    pub model: ModelParameters,
    pub optimizer: OptimizerState,
    pub accumulators: AccumulatorBank,
    pub running: RunningLossState,
    pub split: SplitManifest,
    pub history: Vec<EpochStats>,
    pub skipped_pairs: Vec<String>,
}

fn video_key(index: &PairIndex, id: FrameId) -> VideoKey {
    VideoKey {
        video_id: index.video(id.pair, id.modality).id.clone(),
        modality: id.modality,
    }
}

fn label_vector(labels: &[usize], n_classes: usize) -> Result<Vec<f64>> {
    let mut y = vec![0.0; n_classes];
    for &c in labels {
        *y.get_mut(c)
            .ok_or_else(|| Error::MalformedItem(format!("label {c} outside [0, {n_classes})")))? = 1.0;
    }
    Ok(y)
}

/// Everything one triplet contributes to a step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub triplet: TripletSample,
    pub forward: TripletForward,
    /// `p/k` of x, z and z′ from the online accumulators.
    pub weights: [SelectorWeight; 3],
    /// Product of the three frame weights.
    pub p: f64,
    /// Running loss after folding in this triplet.
    pub running_loss: f64,
}

fn check_finite(t: &TripletSample, fwd: &TripletForward) -> Result<()> {
    if fwd.loss.l.is_finite() && fwd.scores.iter().all(|s| s.f.is_finite()) {
        return Ok(());
    }
    Err(Error::NonFinite(format!(
        "triplet x={:?} z={:?} z'={:?}: d_pos={} d_neg={} scores={:?}",
        t.x, t.z, t.z_prime, fwd.loss.d_pos, fwd.loss.d_neg, fwd.scores
    )))
}

fn fold_statistics(
    index: &PairIndex,
    t: &TripletSample,
    fwd: &TripletForward,
    accumulators: &mut AccumulatorBank,
    running: &mut RunningLossState,
) -> ([SelectorWeight; 3], f64, f64) {
    let w = [
        accumulators.observe(&video_key(index, t.x), fwd.scores[0].f),
        accumulators.observe(&video_key(index, t.z), fwd.scores[1].f),
        accumulators.observe(&video_key(index, t.z_prime), fwd.scores[2].f),
    ];
    let p = triplet_weight(w[0], w[1], w[2]);
    let l = running.update(p, fwd.loss.l);
    (w, p, l)
}

/// Forward pass of one triplet plus the online selector and loss updates.
pub fn forward_triplet(
    model: &ModelParameters,
    index: &PairIndex,
    triplet: &TripletSample,
    accumulators: &mut AccumulatorBank,
    running: &mut RunningLossState,
) -> Result<StepRecord> {
    let forward = model.forward_triplet(
        index.frame(triplet.x).features,
        index.frame(triplet.z).features,
        index.frame(triplet.z_prime).features,
    )?;
    check_finite(triplet, &forward)?;
    let (weights, p, running_loss) = fold_statistics(index, triplet, &forward, accumulators, running);
    Ok(StepRecord {
        triplet: *triplet,
        forward,
        weights,
        p,
        running_loss,
    })
}

impl TrainState {
    /// Splits the pairs and draws an initial model; no optimization yet.
    pub fn initialize(config: TrainConfig, index: &PairIndex) -> Result<Self> {
        config.validate()?;
        let ids: Vec<&str> = index.pairs.iter().map(|p| p.id.as_str()).collect();
        let split = split_pairs(&ids, config.train_fraction, config.seed)?;
        if split.train.is_empty() {
            return Err(Error::Config("training split is empty".into()));
        }
        let feature_dim = index
            .feature_dim()
            .ok_or_else(|| Error::Config("dataset has no frames".into()))?;
        let n_classes = if config.mixed_mode {
            let inferred = index.pairs.iter().flat_map(|p| p.labels.iter()).max().map(|m| m + 1);
            Some(config.n_classes.or(inferred).ok_or_else(|| {
                Error::Config("mixed mode needs class labels in the manifest".into())
            })?)
        } else {
            None
        };
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let model = ModelParameters::init(config.model_config(feature_dim, n_classes), &mut rng)?;
        let optimizer = OptimizerState {
            velocity: vec![0.0; model.param_count()],
            learning_rate: config.learning_rate(0),
            momentum: config.momentum,
            epoch: 0,
            steps: 0,
        };
        Ok(Self {
            accumulators: AccumulatorBank::new(config.k, config.sigma_init)?,
            running: RunningLossState::new(config.k),
            config,
            model,
            optimizer,
            split,
            history: Vec::new(),
            skipped_pairs: Vec::new(),
        })
    }

    /// One optimizer step over `batch`.
    pub fn train_step(&mut self, index: &PairIndex, batch: &[MixedItem]) -> Result<StepReport> {
        if batch.is_empty() {
            return Err(Error::Config("empty batch".into()));
        }
        let n_classes = self.model.config.n_classes;
        for item in batch {
            item.validate()?;
            if item.labels.is_some() && n_classes.is_none() {
                return Err(Error::Mode("labeled item but the model has no classifier".into()));
            }
        }

        // forwards do not read the online statistics, so folding each triplet
        // in right after its forward equals batch-order updates before backward
        let mut records = Vec::new();
        for item in batch {
            if let Some((z, z_prime)) = item.partners {
                let t = TripletSample { x: item.x, z, z_prime };
                records.push(forward_triplet(&self.model, index, &t, &mut self.accumulators, &mut self.running)?);
            }
        }
        let weights: Vec<f64> = records.iter().map(|r| r.p).collect();
        let forwards: Vec<TripletForward> = records.into_iter().map(|r| r.forward).collect();

        let n = self.model.param_count();
        let mut emb = GradientBlock::zeros(n);
        let mut sel = GradientBlock::zeros(n);
        let mut cls = GradientBlock::zeros(n);
        let mut report = StepReport {
            n_triplets: forwards.len(),
            ..Default::default()
        };
        for (f, &p) in forwards.iter().zip(&weights) {
            let up = weighted_upstreams(p, &f.loss, &self.running)?;
            self.model.weighted_backward(f, &up, &mut emb.values, &mut sel.values)?;
            report.mean_loss += f.loss.l;
            report.weighted_loss += p * f.loss.l;
        }
        if !forwards.is_empty() {
            report.mean_loss /= forwards.len() as f64;
            report.weighted_loss /= weights.iter().sum::<f64>();
            report.running_loss = self.running.current()?;
        }
        for item in batch {
            if let Some(labels) = &item.labels {
                let y = label_vector(labels, n_classes.unwrap_or(0))?;
                let loss = self
                    .model
                    .classification_backward(index.frame(item.x).features, &y, 1.0, &mut cls.values)?;
                if !loss.is_finite() {
                    return Err(Error::NonFinite(format!("classification loss at {:?}", item.x)));
                }
                report.classification_loss += loss;
                report.n_labeled += 1;
            }
        }
        if report.n_labeled > 0 {
            report.classification_loss /= report.n_labeled as f64;
        }

        let inv = 1.0 / batch.len() as f64;
        emb.scale(inv);
        sel.scale(inv);
        cls.scale(inv);
        let reference = emb.norm();
        report.embedding_grad_norm = reference;
        if self.config.rescale_gradients && report.n_triplets > 0 {
            sel = rescale_gradient_block(sel, reference)?;
            cls = rescale_gradient_block(cls, reference)?;
        }
        emb.add_assign(&sel)?;
        emb.add_assign(&cls)?;
        if emb.values.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("gradient contains non-finite values".into()));
        }

        let opt = &mut self.optimizer;
        for ((v, g), theta) in opt.velocity.iter_mut().zip(&emb.values).zip(self.model.values.iter_mut()) {
            *v = opt.momentum * *v + g;
            *theta -= opt.learning_rate * *v;
        }
        opt.steps += 1;
        self.model.project_scales();
        Ok(report)
    }

    /// Triplets (and, in mixed mode, labeled frames) for the next epoch.
    ///
    /// Each training pair contributes one uniformly sampled triplet per
    /// third-person frame; the epoch is shuffled with a seed derived from the
    /// run seed and the epoch number so resumed runs replay identically.
    pub fn epoch_items(&mut self, index: &PairIndex) -> Result<Vec<MixedItem>> {
        let sampler_cfg = self.config.sampler();
        let mut rng = ChaCha8Rng::seed_from_u64(
            self.config.seed ^ (self.optimizer.epoch as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15),
        );
        let mut triplets = Vec::new();
        let mut skipped = Vec::new();
        let train: Vec<usize> = self.split.train.iter().filter_map(|id| index.position(id)).collect();
        for &p in &train {
            match TripletSampler::new(index, p, p, &sampler_cfg) {
                Ok(s) => {
                    for _ in 0..index.pairs[p].third.len() {
                        triplets.push(MixedItem::triplet(s.sample(&mut rng)));
                    }
                }
                Err(Error::InfeasiblePair(_)) => skipped.push(index.pairs[p].id.clone()),
                Err(e) => return Err(e),
            }
        }
        self.skipped_pairs = skipped;
        triplets.shuffle(&mut rng);
        if !self.config.mixed_mode {
            return Ok(triplets);
        }

        let pool: Vec<MixedItem> = train
            .iter()
            .filter(|&&p| !index.pairs[p].labels.is_empty())
            .flat_map(|&p| {
                let labels = index.pairs[p].labels.clone();
                (0..index.pairs[p].third.len()).map(move |frame| {
                    MixedItem::labeled(
                        FrameId {
                            pair: p,
                            modality: Modality::ThirdPerson,
                            frame,
                        },
                        labels.clone(),
                    )
                })
            })
            .collect();
        if pool.is_empty() {
            return Err(Error::Config("mixed mode without labeled training frames".into()));
        }
        let n_labeled = (triplets.len() as f64 * self.config.labeled_per_triplet).round() as usize;
        let labeled: Vec<MixedItem> = (0..n_labeled).map(|_| pool[rng.random_range(0..pool.len())].clone()).collect();
        // interleave in proportion, starting with a triplet
        let mut items = Vec::with_capacity(triplets.len() + labeled.len());
        let (mut ti, mut li) = (0, 0);
        while ti < triplets.len() || li < labeled.len() {
            let take_triplet = li >= labeled.len()
                || (ti < triplets.len() && (ti as f64) * self.config.labeled_per_triplet <= li as f64);
            if take_triplet {
                items.push(triplets[ti].clone());
                ti += 1;
            } else {
                items.push(labeled[li].clone());
                li += 1;
            }
        }
        Ok(items)
    }

    pub fn run_epoch(&mut self, index: &PairIndex) -> Result<EpochStats> {
        let epoch = self.optimizer.epoch;
        if self.config.reset_accumulators_each_epoch {
            self.accumulators.reset();
            self.running = RunningLossState::new(self.config.k);
        }
        self.optimizer.learning_rate = self.config.learning_rate(epoch);
        let items = self.epoch_items(index)?;
        if items.is_empty() {
            return Err(Error::Config("no feasible training pairs".into()));
        }
        let mut stats = EpochStats {
            epoch,
            learning_rate: self.optimizer.learning_rate,
            steps: 0,
            mean_loss: 0.0,
            weighted_loss: 0.0,
            running_loss: 0.0,
            classification_loss: 0.0,
        };
        let (mut n_trip, mut n_lab) = (0usize, 0usize);
        for batch in items.chunks(self.config.batch_size) {
            let r = self.train_step(index, batch)?;
            stats.steps += 1;
            stats.mean_loss += r.mean_loss * r.n_triplets as f64;
            stats.weighted_loss += r.weighted_loss * r.n_triplets as f64;
            stats.classification_loss += r.classification_loss * r.n_labeled as f64;
            n_trip += r.n_triplets;
            n_lab += r.n_labeled;
        }
        stats.mean_loss /= n_trip.max(1) as f64;
        stats.weighted_loss /= n_trip.max(1) as f64;
        stats.classification_loss /= n_lab.max(1) as f64;
        stats.running_loss = self.running.loss;
        self.optimizer.epoch += 1;
        self.history.push(stats);
        Ok(stats)
    }

    /// Runs epochs until `config.epochs` have completed.
    pub fn run(&mut self, index: &PairIndex) -> Result<()> {
        while self.optimizer.epoch < self.config.epochs {
            self.run_epoch(index)?;
        }
        Ok(())
    }
}

/// Initializes and trains for `config.epochs` epochs.
pub fn train(config: TrainConfig, index: &PairIndex) -> Result<TrainState> {
    let mut state = TrainState::initialize(config, index)?;
    state.run(index)?;
    Ok(state)
}

/// Applies one mixed batch (full triplets and labeled frames); requires mixed mode.
pub fn mixed_step(state: &mut TrainState, index: &PairIndex, batch: &[MixedItem]) -> Result<StepReport> {
    if !state.config.mixed_mode || !state.model.has_classifier() {
        return Err(Error::Mode("mixed steps need mixed mode".into()));
    }
    state.train_step(index, batch)
}
