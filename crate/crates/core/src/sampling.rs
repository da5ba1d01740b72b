//! Paired first/third-person streams and triplet generation.
//!
//! A triplet `(x, z, z′)` takes `x` from a third-person video and `z`, `z′`
//! from a first-person video. Correspondence is judged on the first-person
//! timeline after mapping `t_x` through the linear [`TimeMap`] of the two
//! videos' durations: `z` lies strictly within `delta` seconds of the mapped
//! time, `z′` strictly beyond `delta_prime`.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    ThirdPerson,
    FirstPerson,
}

impl Modality {
    pub fn tag(self) -> u8 {
        match self {
            Modality::ThirdPerson => 0,
            Modality::FirstPerson => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Modality::ThirdPerson),
            1 => Some(Modality::FirstPerson),
            _ => None,
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::ThirdPerson => "third",
            Modality::FirstPerson => "ego",
        })
    }
}

/// One video: timestamps plus a row-major `len × dim` feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Video {
    pub id: String,
    pub modality: Modality,
    pub dim: usize,
    pub timestamps: Vec<f64>,
    pub features: Vec<f64>,
}

impl Video {
    pub fn new(
        id: impl Into<String>,
        modality: Modality,
        dim: usize,
        timestamps: Vec<f64>,
        features: Vec<f64>,
    ) -> Result<Self> {
        let id = id.into();
        if features.len() != timestamps.len() * dim {
            return Err(Error::Ingest(format!(
                "video {id}: {} feature values for {} frames of dim {dim}",
                features.len(),
                timestamps.len()
            )));
        }
        if timestamps.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::Ingest(format!("video {id}: timestamps must be finite and non-negative")));
        }
        if timestamps.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Ingest(format!("video {id}: timestamps are not sorted")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Ingest(format!("video {id}: non-finite feature value")));
        }
        Ok(Self {
            id,
            modality,
            dim,
            timestamps,
            features,
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn frame(&self, index: usize) -> &[f64] {
        &self.features[index * self.dim..(index + 1) * self.dim]
    }

    /// Seconds from the start of the video to its last frame.
    pub fn duration(&self) -> f64 {
        self.timestamps.last().copied().unwrap_or(0.0)
    }
}

/// A borrowed view of a single frame.
#[derive(Debug, Clone, Copy)]
pub struct FrameRecord<'a> {
    pub video_id: &'a str,
    pub pair_id: &'a str,
    pub modality: Modality,
    pub index: usize,
    pub timestamp: f64,
    pub features: &'a [f64],
}

/// An owned frame, the unit [`build_pair_index`] ingests.
#[derive(Debug, Clone, PartialEq)]
pub struct OwnedFrame {
    pub pair_id: String,
    pub modality: Modality,
    pub timestamp: f64,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub id: String,
    pub scenario: String,
    pub labels: Vec<usize>,
    pub third: Video,
    pub ego: Video,
}

impl Pair {
    pub fn video(&self, modality: Modality) -> &Video {
        match modality {
            Modality::ThirdPerson => &self.third,
            Modality::FirstPerson => &self.ego,
        }
    }

    pub fn time_map(&self) -> Result<TimeMap> {
        TimeMap::new(self.third.duration(), self.ego.duration())
    }
}

/// Addresses one frame of one video inside a [`PairIndex`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FrameId {
    pub pair: usize,
    pub modality: Modality,
    pub frame: usize,
}

/// Pairs in ascending `pair_id` order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairIndex {
    pub pairs: Vec<Pair>,
    by_id: BTreeMap<String, usize>,
}

impl PairIndex {
    pub fn new(mut pairs: Vec<Pair>) -> Result<Self> {
        pairs.sort_by(|a, b| a.id.cmp(&b.id));
        let mut by_id = BTreeMap::new();
        let mut dim = None;
        for (i, p) in pairs.iter().enumerate() {
            if p.third.modality != Modality::ThirdPerson || p.ego.modality != Modality::FirstPerson {
                return Err(Error::MalformedPair(format!("{}: modalities swapped", p.id)));
            }
            for v in [&p.third, &p.ego] {
                if !v.is_empty() && *dim.get_or_insert(v.dim) != v.dim {
                    return Err(Error::Ingest(format!("video {} has feature dim {}, expected {}", v.id, v.dim, dim.unwrap())));
                }
            }
            if by_id.insert(p.id.clone(), i).is_some() {
                return Err(Error::MalformedPair(format!("{}: duplicate pair id", p.id)));
            }
        }
        Ok(Self { pairs, by_id })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn position(&self, pair_id: &str) -> Option<usize> {
        self.by_id.get(pair_id).copied()
    }

    pub fn feature_dim(&self) -> Option<usize> {
        self.pairs
            .iter()
            .flat_map(|p| [&p.third, &p.ego])
            .find(|v| !v.is_empty())
            .map(|v| v.dim)
    }

    pub fn video(&self, pair: usize, modality: Modality) -> &Video {
        self.pairs[pair].video(modality)
    }

    pub fn frame(&self, id: FrameId) -> FrameRecord<'_> {
        let pair = &self.pairs[id.pair];
        let video = pair.video(id.modality);
        FrameRecord {
            video_id: &video.id,
            pair_id: &pair.id,
            modality: id.modality,
            index: id.frame,
            timestamp: video.timestamps[id.frame],
            features: video.frame(id.frame),
        }
    }

    /// A sub-index restricted to the given pair ids (unknown ids are ignored).
    pub fn subset<S: AsRef<str>>(&self, ids: &[S]) -> Result<PairIndex> {
        let pairs = ids
            .iter()
            .filter_map(|id| self.position(id.as_ref()))
            .map(|i| self.pairs[i].clone())
            .collect();
        PairIndex::new(pairs)
    }

    pub fn total_frames(&self) -> usize {
        self.pairs.iter().map(|p| p.third.len() + p.ego.len()).sum()
    }
}

/// Groups loose frames into pairs. Frames of each video must arrive in
/// non-decreasing timestamp order; the scenario tag defaults to the pair id.
pub fn build_pair_index<I>(frames: I) -> Result<PairIndex>
where
    I: IntoIterator<Item = OwnedFrame>,
{
    type Streams = (Vec<f64>, Vec<f64>, usize);
    let mut grouped: BTreeMap<(String, Modality), Streams> = BTreeMap::new();
    for frame in frames {
        let entry = grouped
            .entry((frame.pair_id.clone(), frame.modality))
            .or_insert_with(|| (Vec::new(), Vec::new(), frame.features.len()));
        if entry.2 != frame.features.len() {
            return Err(Error::Ingest(format!("pair {}: inconsistent feature dims", frame.pair_id)));
        }
        if entry.0.last().is_some_and(|&last| frame.timestamp < last) {
            return Err(Error::Ingest(format!(
                "pair {} {}: timestamps are not sorted",
                frame.pair_id, frame.modality
            )));
        }
        entry.0.push(frame.timestamp);
        entry.1.extend_from_slice(&frame.features);
    }
    let mut ids: Vec<String> = grouped.keys().map(|(id, _)| id.clone()).collect();
    ids.dedup();
    let mut pairs = Vec::with_capacity(ids.len());
    for id in ids {
        let mut take = |m: Modality| -> Result<Video> {
            let (ts, feats, dim) = grouped
                .remove(&(id.clone(), m))
                .ok_or_else(|| Error::MalformedPair(format!("{id}: missing {m} video")))?;
            Video::new(format!("{id}/{m}"), m, dim, ts, feats)
        };
        let third = take(Modality::ThirdPerson)?;
        let ego = take(Modality::FirstPerson)?;
        pairs.push(Pair {
            scenario: id.clone(),
            id,
            labels: Vec::new(),
            third,
            ego,
        });
    }
    PairIndex::new(pairs)
}

/// Linear correspondence between a third-person and a first-person timeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeMap {
    pub third_duration: f64,
    pub ego_duration: f64,
}

impl TimeMap {
    pub fn new(third_duration: f64, ego_duration: f64) -> Result<Self> {
        if !(third_duration > 0.0) || !(ego_duration > 0.0) {
            return Err(Error::DegenerateVideo(format!(
                "durations must be positive (third {third_duration}, ego {ego_duration})"
            )));
        }
        Ok(Self {
            third_duration,
            ego_duration,
        })
    }

    pub fn to_ego(&self, t_third: f64) -> f64 {
        if self.third_duration == self.ego_duration {
            return t_third;
        }
        t_third * self.ego_duration / self.third_duration
    }

    pub fn to_third(&self, t_ego: f64) -> f64 {
        if self.third_duration == self.ego_duration {
            return t_ego;
        }
        t_ego * self.third_duration / self.ego_duration
    }
}

/// Maps a third-person timestamp onto the pair's first-person timeline.
pub fn time_map(pair: &Pair, t_third: f64) -> Result<f64> {
    Ok(pair.time_map()?.to_ego(t_third))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub delta: f64,
    pub delta_prime: f64,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            delta: 1.0,
            delta_prime: 10.0,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < self.delta_prime) {
            return Err(Error::Config(format!(
                "need 0 < delta < delta_prime, got delta {} delta_prime {}",
                self.delta, self.delta_prime
            )));
        }
        Ok(())
    }
}

/// A third-person anchor with a corresponding and a non-corresponding
/// first-person frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TripletSample {
    pub x: FrameId,
    pub z: FrameId,
    pub z_prime: FrameId,
}

impl TripletSample {
    /// Checks modality roles and the temporal window constraints.
    pub fn validate(&self, index: &PairIndex, config: &SamplerConfig) -> Result<()> {
        let bad = |why: &str| Err(Error::MalformedItem(format!("{self:?}: {why}")));
        if self.x.modality != Modality::ThirdPerson
            || self.z.modality != Modality::FirstPerson
            || self.z_prime.modality != Modality::FirstPerson
        {
            return bad("wrong modality roles");
        }
        if self.z.pair != self.z_prime.pair {
            return bad("z and z' come from different videos");
        }
        let tm = TimeMap::new(
            index.video(self.x.pair, Modality::ThirdPerson).duration(),
            index.video(self.z.pair, Modality::FirstPerson).duration(),
        )?;
        let t = tm.to_ego(index.frame(self.x).timestamp);
        if (t - index.frame(self.z).timestamp).abs() >= config.delta {
            return bad("positive outside the delta window");
        }
        if (t - index.frame(self.z_prime).timestamp).abs() <= config.delta_prime {
            return bad("negative inside the delta' exclusion");
        }
        Ok(())
    }
}

/// Candidate windows for one third-person anchor.
#[derive(Debug, Clone, Copy)]
struct AnchorWindows {
    frame: usize,
    mapped: f64,
    /// Ego frames in `[pos_lo, pos_hi)` are positives.
    pos_lo: usize,
    pos_hi: usize,
    /// Ego frames in `[0, neg_lo)` and `[neg_hi, n)` are negatives.
    neg_lo: usize,
    neg_hi: usize,
}

impl AnchorWindows {
    fn negatives(&self, n: usize) -> usize {
        self.neg_lo + (n - self.neg_hi)
    }
}

/// Precomputed sampling windows for one (third video, ego video) combination.
#[derive(Debug, Clone)]
pub struct TripletSampler<'a> {
    index: &'a PairIndex,
    third_pair: usize,
    ego_pair: usize,
    config: SamplerConfig,
    anchors: Vec<AnchorWindows>,
}

impl<'a> TripletSampler<'a> {
    pub fn new(index: &'a PairIndex, third_pair: usize, ego_pair: usize, config: &SamplerConfig) -> Result<Self> {
        config.validate()?;
        let third = index.video(third_pair, Modality::ThirdPerson);
        let ego = index.video(ego_pair, Modality::FirstPerson);
        let tm = TimeMap::new(third.duration(), ego.duration())?;
        let ts = &ego.timestamps;
        let n = ts.len();
        let mut anchors = Vec::new();
        for (frame, &t) in third.timestamps.iter().enumerate() {
            let mapped = tm.to_ego(t);
            let pos_lo = ts.partition_point(|&s| s <= mapped - config.delta);
            let pos_hi = ts.partition_point(|&s| s < mapped + config.delta);
            let neg_lo = ts.partition_point(|&s| s < mapped - config.delta_prime);
            let neg_hi = ts.partition_point(|&s| s <= mapped + config.delta_prime);
            let w = AnchorWindows {
                frame,
                mapped,
                pos_lo,
                pos_hi,
                neg_lo,
                neg_hi,
            };
            if pos_hi > pos_lo && w.negatives(n) > 0 {
                anchors.push(w);
            }
        }
        if anchors.is_empty() {
            return Err(Error::InfeasiblePair(format!(
                "{} -> {}",
                index.pairs[third_pair].id, index.pairs[ego_pair].id
            )));
        }
        Ok(Self {
            index,
            third_pair,
            ego_pair,
            config: *config,
            anchors,
        })
    }

    /// Number of third-person frames that admit both a positive and a negative.
    pub fn feasible_anchors(&self) -> usize {
        self.anchors.len()
    }

    fn ego_len(&self) -> usize {
        self.index.video(self.ego_pair, Modality::FirstPerson).len()
    }

    fn draw_negative<R: Rng + ?Sized>(&self, w: &AnchorWindows, rng: &mut R) -> usize {
        let pick = rng.random_range(0..w.negatives(self.ego_len()));
        if pick < w.neg_lo {
            pick
        } else {
            w.neg_hi + (pick - w.neg_lo)
        }
    }

    fn triplet(&self, x: usize, z: usize, z_prime: usize) -> TripletSample {
        let t = TripletSample {
            x: FrameId {
                pair: self.third_pair,
                modality: Modality::ThirdPerson,
                frame: x,
            },
            z: FrameId {
                pair: self.ego_pair,
                modality: Modality::FirstPerson,
                frame: z,
            },
            z_prime: FrameId {
                pair: self.ego_pair,
                modality: Modality::FirstPerson,
                frame: z_prime,
            },
        };
        debug_assert!(t.validate(self.index, &self.config).is_ok(), "emitted invalid triplet {t:?}");
        t
    }

    /// Draws `x` uniformly over feasible anchors, then `z` and `z′` uniformly
    /// within their windows.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> TripletSample {
        let w = &self.anchors[rng.random_range(0..self.anchors.len())];
        let z = rng.random_range(w.pos_lo..w.pos_hi);
        let z_prime = self.draw_negative(w, rng);
        self.triplet(w.frame, z, z_prime)
    }

    /// One triplet per feasible third-person frame: `z` is the ego frame
    /// nearest the mapped time (earliest on ties), `z′` a seeded random negative.
    pub fn enumerate(&self) -> Vec<TripletSample> {
        let ego = self.index.video(self.ego_pair, Modality::FirstPerson);
        let mut rng = ChaCha8Rng::seed_from_u64(pair_seed(
            self.config.seed,
            &self.index.pairs[self.third_pair].id,
            &self.index.pairs[self.ego_pair].id,
        ));
        let mut out = Vec::with_capacity(self.anchors.len());
        for w in &self.anchors {
            let best = (w.pos_lo..w.pos_hi)
                .min_by(|&a, &b| {
                    let da = (ego.timestamps[a] - w.mapped).abs();
                    let db = (ego.timestamps[b] - w.mapped).abs();
                    da.total_cmp(&db).then(a.cmp(&b))
                })
                .expect("feasible anchors have a positive");
            let z_prime = self.draw_negative(w, &mut rng);
            out.push(self.triplet(w.frame, best, z_prime));
        }
        out
    }
}

/// Stable seed for per-pair random streams (FNV-1a over the ids, mixed with the base seed).
pub fn pair_seed(seed: u64, third_pair: &str, ego_pair: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for b in third_pair.bytes().chain([0xff]).chain(ego_pair.bytes()) {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn sample_triplet<R: Rng + ?Sized>(
    index: &PairIndex,
    pair: usize,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<TripletSample> {
    Ok(TripletSampler::new(index, pair, pair, config)?.sample(rng))
}

pub fn enumerate_test_triplets(index: &PairIndex, pair: usize, config: &SamplerConfig) -> Result<Vec<TripletSample>> {
    Ok(TripletSampler::new(index, pair, pair, config)?.enumerate())
}

/// Test triplets with `x` from `pair_a`'s third-person video and `z`, `z′`
/// from `pair_b`'s first-person video; the pairs must share a scenario.
pub fn cross_person_triplets(
    index: &PairIndex,
    pair_a: usize,
    pair_b: usize,
    config: &SamplerConfig,
) -> Result<Vec<TripletSample>> {
    let (a, b) = (&index.pairs[pair_a], &index.pairs[pair_b]);
    if a.scenario != b.scenario {
        return Err(Error::ScenarioMismatch(a.scenario.clone(), b.scenario.clone()));
    }
    Ok(TripletSampler::new(index, pair_a, pair_b, config)?.enumerate())
}

/// Deterministic test triplets over every feasible pair of the index;
/// infeasible pairs are skipped and their ids returned.
pub fn enumerate_all(index: &PairIndex, config: &SamplerConfig) -> Result<(Vec<TripletSample>, Vec<String>)> {
    let mut triplets = Vec::new();
    let mut skipped = Vec::new();
    for i in 0..index.len() {
        match enumerate_test_triplets(index, i, config) {
            Ok(t) => triplets.extend(t),
            Err(Error::InfeasiblePair(_)) => skipped.push(index.pairs[i].id.clone()),
            Err(e) => return Err(e),
        }
    }
    Ok((triplets, skipped))
}

/// Train/test partition of pair ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Seeded shuffle of the sorted ids, the first `round(train_fraction · n)` for training.
pub fn split_pairs<S: AsRef<str>>(ids: &[S], train_fraction: f64, seed: u64) -> Result<SplitManifest> {
    if !(train_fraction > 0.0 && train_fraction <= 1.0) {
        return Err(Error::Config(format!("train fraction must lie in (0,1], got {train_fraction}")));
    }
    let mut ids: Vec<String> = ids.iter().map(|s| s.as_ref().to_string()).collect();
    ids.sort();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((ids.len() as f64) * train_fraction).round() as usize;
    let test = ids.split_off(n_train.min(ids.len()));
    Ok(SplitManifest { train: ids, test })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn grid_video(id: &str, modality: Modality, n: usize, step: f64, dim: usize) -> Video {
        let ts: Vec<f64> = (0..n).map(|i| i as f64 * step).collect();
        let feats = (0..n * dim).map(|i| (i % 7) as f64 * 0.1).collect();
        Video::new(id, modality, dim, ts, feats).unwrap()
    }

    pub(crate) fn grid_pair(id: &str, n: usize, step: f64) -> Pair {
        Pair {
            id: id.into(),
            scenario: id.into(),
            labels: vec![],
            third: grid_video(&format!("{id}/third"), Modality::ThirdPerson, n, step, 2),
            ego: grid_video(&format!("{id}/ego"), Modality::FirstPerson, n, step, 2),
        }
    }

    fn frames_of(pair: &Pair) -> Vec<OwnedFrame> {
        [&pair.third, &pair.ego]
            .into_iter()
            .flat_map(|v| {
                (0..v.len()).map(move |i| OwnedFrame {
                    pair_id: pair.id.clone(),
                    modality: v.modality,
                    timestamp: v.timestamps[i],
                    features: v.frame(i).to_vec(),
                })
            })
            .collect()
    }

    #[test]
    fn index_examples() {
        let frames: Vec<OwnedFrame> = ["a", "b"].iter().flat_map(|id| frames_of(&grid_pair(id, 4, 1.0))).collect();
        assert_eq!(build_pair_index(frames).unwrap().len(), 2);

        let lonely: Vec<OwnedFrame> = frames_of(&grid_pair("c", 4, 1.0))
            .into_iter()
            .filter(|f| f.modality == Modality::ThirdPerson)
            .collect();
        assert!(matches!(build_pair_index(lonely), Err(Error::MalformedPair(_))));

        let mut shuffled = frames_of(&grid_pair("d", 4, 1.0));
        shuffled.swap(0, 2);
        assert!(matches!(build_pair_index(shuffled), Err(Error::Ingest(_))));

        let frames: Vec<OwnedFrame> = (0..10).flat_map(|i| frames_of(&grid_pair(&format!("p{i}"), 30, 1.0))).collect();
        let index = build_pair_index(frames).unwrap();
        assert_eq!(index.total_frames(), 600);
    }

    #[test]
    fn time_map_examples() {
        let tm = TimeMap::new(30.0, 30.0).unwrap();
        assert_eq!(tm.to_ego(12.3), 12.3);
        let tm = TimeMap::new(30.0, 15.0).unwrap();
        assert_eq!(tm.to_ego(10.0), 5.0);
        assert_eq!(tm.to_ego(30.0), 15.0);
        assert_eq!(tm.to_third(15.0), 30.0);
        assert!(matches!(TimeMap::new(0.0, 3.0), Err(Error::DegenerateVideo(_))));
    }

    #[test]
    fn positives_lie_in_open_window() {
        // frames every 0.5 s over 30 s
        let index = PairIndex::new(vec![grid_pair("a", 61, 0.5)]).unwrap();
        let cfg = SamplerConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sampler = TripletSampler::new(&index, 0, 0, &cfg).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..20_000 {
            let t = sampler.sample(&mut rng);
            if t.x.frame == 10 {
                seen.insert(t.z.frame);
            }
            t.validate(&index, &cfg).unwrap();
        }
        // t_x = 5.0: ego timestamps 4.5, 5.0, 5.5 only
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), vec![9, 10, 11]);
    }

    #[test]
    fn short_video_is_infeasible() {
        let index = PairIndex::new(vec![grid_pair("a", 17, 0.5)]).unwrap();
        let r = sample_triplet(&index, 0, &SamplerConfig::default(), &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(r, Err(Error::InfeasiblePair(_))));
    }

    #[test]
    fn enumeration_examples() {
        // 30 third frames every 1.2 s → 34.8 s: every frame has a negative
        let index = PairIndex::new(vec![grid_pair("a", 30, 1.2)]).unwrap();
        let cfg = SamplerConfig { seed: 9, ..Default::default() };
        let t = enumerate_test_triplets(&index, 0, &cfg).unwrap();
        assert_eq!(t.len(), 30);
        for tr in &t {
            assert_eq!(index.frame(tr.x).timestamp, index.frame(tr.z).timestamp);
        }
        assert_eq!(t, enumerate_test_triplets(&index, 0, &cfg).unwrap());
        let other = enumerate_test_triplets(&index, 0, &SamplerConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(t, other);
    }

    #[test]
    fn cross_person_examples() {
        let mut a = grid_pair("a", 40, 1.0);
        let mut b = grid_pair("b", 20, 2.0);
        a.scenario = "s".into();
        b.scenario = "s".into();
        let mut c = grid_pair("c", 40, 1.0);
        c.scenario = "t".into();
        let index = PairIndex::new(vec![a, b, c]).unwrap();
        let cfg = SamplerConfig::default();
        assert_eq!(
            cross_person_triplets(&index, 0, 0, &cfg).unwrap(),
            enumerate_test_triplets(&index, 0, &cfg).unwrap()
        );
        let t = cross_person_triplets(&index, 0, 1, &cfg).unwrap();
        assert!(!t.is_empty());
        for tr in &t {
            assert_eq!(tr.z.pair, 1);
            tr.validate(&index, &cfg).unwrap();
        }
        assert!(matches!(cross_person_triplets(&index, 0, 2, &cfg), Err(Error::ScenarioMismatch(..))));
    }

    #[test]
    fn anchor_marginal_is_uniform() {
        let index = PairIndex::new(vec![grid_pair("a", 40, 1.0)]).unwrap();
        let sampler = TripletSampler::new(&index, 0, 0, &SamplerConfig::default()).unwrap();
        let n = sampler.feasible_anchors();
        assert_eq!(n, 40);
        let mut counts = vec![0usize; n];
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let draws = 10_000;
        for _ in 0..draws {
            counts[sampler.sample(&mut rng).x.frame] += 1;
        }
        let expected = draws as f64 / n as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // chi-square(39) upper 0.001 quantile
        assert!(chi2 < 72.05, "chi2 = {chi2}");
        let sd = (expected * (1.0 - 1.0 / n as f64)).sqrt();
        assert!(counts.iter().all(|&c| (c as f64 - expected).abs() < 3.0 * sd));
    }

    #[test]
    fn split_is_seeded_and_complete() {
        let ids: Vec<String> = (0..10).map(|i| format!("p{i}")).collect();
        let s = split_pairs(&ids, 0.8, 4).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (8, 2));
        assert_eq!(s, split_pairs(&ids, 0.8, 4).unwrap());
        let mut all: Vec<String> = s.train.iter().chain(&s.test).cloned().collect();
        all.sort();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(all, sorted);
    }
}
