//! `key = value` configuration files.
//!
//! One setting per line; `#` starts a comment; keys are the field names of
//! [`TrainConfig`] and [`SyntheticConfig`]. `sigma_init` takes `first` or a
//! number, `n_classes` takes a number or `none`.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::selector::SigmaInit;
use crate::synth::SyntheticConfig;
use crate::training::TrainConfig;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyValueConfig {
    pub entries: BTreeMap<String, String>,
}

const TRAIN_KEYS: &[&str] = &[
    "batch_size",
    "base_lr",
    "lr_decay_factor",
    "lr_decay_every_epochs",
    "momentum",
    "epochs",
    "seed",
    "train_fraction",
    "delta",
    "delta_prime",
    "k",
    "sigma_init",
    "reset_accumulators_each_epoch",
    "hidden_dim",
    "embed_dim",
    "share_trunk",
    "share_ego_selectors",
    "scale_init_sigma",
    "scale_floor",
    "selector_feeds_trunk",
    "rescale_gradients",
    "mixed_mode",
    "labeled_per_triplet",
    "n_classes",
];

const SYNTH_KEYS: &[&str] = &[
    "n_pairs",
    "pairs_per_scenario",
    "frames_per_video",
    "duration_seconds",
    "duration_jitter",
    "latent_dim",
    "feature_dim",
    "informative_fraction",
    "domain_noise_scale",
    "uninformative_noise_scale",
    "n_classes",
    "second_label_probability",
    "class_separation",
    "identity_transforms",
    "seed",
];

impl KeyValueConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`, got {raw:?}", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", n + 1)));
            }
            if !TRAIN_KEYS.contains(&k) && !SYNTH_KEYS.contains(&k) {
                return Err(Error::Config(format!("line {}: unknown key {k:?}", n + 1)));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key {k:?}", n + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.entries
            .get(key)
            .map(|v| v.parse::<T>().map_err(|_| Error::Config(format!("bad value {v:?} for {key}"))))
            .transpose()
    }

    fn set<T: FromStr>(&self, key: &str, slot: &mut T) -> Result<()> {
        if let Some(v) = self.get(key)? {
            *slot = v;
        }
        Ok(())
    }

    pub fn apply_train(&self, c: &mut TrainConfig) -> Result<()> {
        self.set("batch_size", &mut c.batch_size)?;
        self.set("base_lr", &mut c.base_lr)?;
        self.set("lr_decay_factor", &mut c.lr_decay_factor)?;
        self.set("lr_decay_every_epochs", &mut c.lr_decay_every_epochs)?;
        self.set("momentum", &mut c.momentum)?;
        self.set("epochs", &mut c.epochs)?;
        self.set("seed", &mut c.seed)?;
        self.set("train_fraction", &mut c.train_fraction)?;
        self.set("delta", &mut c.delta)?;
        self.set("delta_prime", &mut c.delta_prime)?;
        self.set("k", &mut c.k)?;
        self.set("reset_accumulators_each_epoch", &mut c.reset_accumulators_each_epoch)?;
        self.set("hidden_dim", &mut c.hidden_dim)?;
        self.set("embed_dim", &mut c.embed_dim)?;
        self.set("share_trunk", &mut c.share_trunk)?;
        self.set("share_ego_selectors", &mut c.share_ego_selectors)?;
        self.set("scale_init_sigma", &mut c.scale_init_sigma)?;
        self.set("scale_floor", &mut c.scale_floor)?;
        self.set("selector_feeds_trunk", &mut c.selector_feeds_trunk)?;
        self.set("rescale_gradients", &mut c.rescale_gradients)?;
        self.set("mixed_mode", &mut c.mixed_mode)?;
        self.set("labeled_per_triplet", &mut c.labeled_per_triplet)?;
        if let Some(v) = self.entries.get("sigma_init") {
            c.sigma_init = match v.as_str() {
                "first" => SigmaInit::FirstObservation,
                s => SigmaInit::Constant(
                    s.parse().map_err(|_| Error::Config(format!("bad value {s:?} for sigma_init")))?,
                ),
            };
        }
        if let Some(v) = self.entries.get("n_classes") {
            c.n_classes = match v.as_str() {
                "none" => None,
                _ => self.get("n_classes")?,
            };
        }
        c.validate()
    }

    pub fn apply_synth(&self, c: &mut SyntheticConfig) -> Result<()> {
        self.set("n_pairs", &mut c.n_pairs)?;
        self.set("pairs_per_scenario", &mut c.pairs_per_scenario)?;
        self.set("frames_per_video", &mut c.frames_per_video)?;
        self.set("duration_seconds", &mut c.duration_seconds)?;
        self.set("duration_jitter", &mut c.duration_jitter)?;
        self.set("latent_dim", &mut c.latent_dim)?;
        self.set("feature_dim", &mut c.feature_dim)?;
        self.set("informative_fraction", &mut c.informative_fraction)?;
        self.set("domain_noise_scale", &mut c.domain_noise_scale)?;
        self.set("uninformative_noise_scale", &mut c.uninformative_noise_scale)?;
        self.set("second_label_probability", &mut c.second_label_probability)?;
        self.set("class_separation", &mut c.class_separation)?;
        self.set("identity_transforms", &mut c.identity_transforms)?;
        self.set("seed", &mut c.seed)?;
        if self.entries.get("n_classes").is_some_and(|v| v != "none") {
            self.set("n_classes", &mut c.n_classes)?;
        }
        c.validate()
    }
}
