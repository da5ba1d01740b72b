//! Triplet similarity loss, the online estimate of the importance-weighted
//! objective, and the rules that turn both into per-path gradients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{logistic, GradientBlock};
use crate::selector::selector_gradient;

/// `l = e^{d_pos} / (e^{d_pos} + e^{d_neg})` together with its inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripletLossValue {
    pub l: f64,
    pub d_pos: f64,
    pub d_neg: f64,
}

/// Evaluates the triplet loss in its logistic form `1 / (1 + e^{d_neg − d_pos})`.
pub fn triplet_loss(d_pos: f64, d_neg: f64) -> TripletLossValue {
    TripletLossValue {
        l: logistic(d_pos - d_neg),
        d_pos,
        d_neg,
    }
}

/// Returns `(∂l/∂d_pos, ∂l/∂d_neg) = (l(1−l), −l(1−l))`.
pub fn triplet_loss_backward(value: &TripletLossValue) -> (f64, f64) {
    let g = value.l * (1.0 - value.l);
    (g, -g)
}

/// Online, normalized estimate of the weighted loss.
///
/// `Σ_N = k·p + (1−k)·Σ_{N−1}` and
/// `L_N = (k·p·l + (1−k)·Σ_{N−1}·L_{N−1}) / Σ_N`; the first update sets
/// `L ← l`, `Σ ← p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunningLossState {
    pub loss: f64,
    pub sigma: f64,
    pub count: u64,
    pub k: f64,
}

impl RunningLossState {
    pub fn new(k: f64) -> Self {
        Self {
            loss: 0.0,
            sigma: 0.0,
            count: 0,
            k,
        }
    }

    /// A state pinned at a known objective value, used when the exact
    /// normalized objective is available (gradient checks, exact batches).
    pub fn with_estimate(loss: f64) -> Self {
        Self {
            loss,
            sigma: 1.0,
            count: 1,
            k: crate::selector::DEFAULT_MIXING,
        }
    }

    pub fn update(&mut self, p: f64, l: f64) -> f64 {
        if self.count == 0 {
            self.loss = l;
            self.sigma = p;
        } else {
            let sigma = self.k * p + (1.0 - self.k) * self.sigma;
            // incremental form of the same recursion; exact when l == L
            self.loss += self.k * p * (l - self.loss) / sigma;
            self.sigma = sigma;
        }
        self.count += 1;
        self.loss
    }

    /// The current estimate of `L`; fails before the first update.
    pub fn current(&self) -> Result<f64> {
        if self.count == 0 {
            return Err(Error::Ordering(
                "running loss must be updated before the backward pass".into(),
            ));
        }
        Ok(self.loss)
    }
}

/// Functional form of [`RunningLossState::update`].
pub fn running_loss_update(state: &RunningLossState, p: f64, l: f64) -> (f64, RunningLossState) {
    let mut next = *state;
    let loss = next.update(p, l);
    (loss, next)
}

/// Scalar upstream gradients of one weighted triplet, before they are routed
/// through the network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripletUpstreams {
    /// `p · ∂l/∂d_pos`
    pub d_pos: f64,
    /// `p · ∂l/∂d_neg`
    pub d_neg: f64,
    /// `p · (l − L)`, applied at each of the three selector scores.
    pub selector: f64,
}

/// Splits the gradient of `p · l` into the embedding path (loss weighted by
/// `p`) and the selector path (`p · (l − L)` at every score head).
pub fn weighted_upstreams(
    p_triplet: f64,
    value: &TripletLossValue,
    running: &RunningLossState,
) -> Result<TripletUpstreams> {
    let running_loss = running.current()?;
    let (dl_dpos, dl_dneg) = triplet_loss_backward(value);
    Ok(TripletUpstreams {
        d_pos: p_triplet * dl_dpos,
        d_neg: p_triplet * dl_dneg,
        selector: selector_gradient(p_triplet, value.l, running_loss),
    })
}

/// Rescales `block` to Euclidean norm `reference_norm`; a zero block is
/// returned unchanged.
pub fn rescale_gradient_block(mut block: GradientBlock, reference_norm: f64) -> Result<GradientBlock> {
    if !(reference_norm >= 0.0) {
        return Err(Error::Constraint(format!(
            "reference norm must be non-negative, got {reference_norm}"
        )));
    }
    let norm = block.norm();
    if norm > 0.0 {
        block.scale(reference_norm / norm);
    }
    Ok(block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn loss_examples() {
        assert_eq!(triplet_loss(2.5, 2.5).l, 0.5);
        // 1/(1+e^20)
        assert_abs_diff_eq!(triplet_loss(0.0, 20.0).l, 2.0611536181902037e-9, epsilon = 1e-20);
        // logistic(1)
        assert_abs_diff_eq!(triplet_loss(1.0, 0.0).l, 0.7310585786300049, epsilon = 1e-15);
    }

    #[test]
    fn loss_backward_examples() {
        assert_eq!(triplet_loss_backward(&triplet_loss(1.0, 1.0)), (0.25, -0.25));
        let (a, b) = triplet_loss_backward(&triplet_loss(0.0, 60.0));
        assert!(a.abs() < 1e-25 && b.abs() < 1e-25);
        let (a, b) = triplet_loss_backward(&triplet_loss(1.0, 0.0));
        assert_abs_diff_eq!(a, 0.19661193324148185, epsilon = 1e-12);
        assert_abs_diff_eq!(b, -0.19661193324148185, epsilon = 1e-12);
    }

    #[test]
    fn running_loss_examples() {
        let mut s = RunningLossState::new(0.1);
        for _ in 0..100 {
            assert_eq!(s.update(1.7, 0.42), 0.42);
        }
        let (l1, s1) = running_loss_update(&RunningLossState::new(0.1), 2.0, 0.3);
        assert_eq!(l1, 0.3);
        assert_eq!(s1.sigma, 2.0);
        let s = RunningLossState { loss: 0.5, sigma: 1.0, count: 5, k: 0.1 };
        let (l, next) = running_loss_update(&s, 1.0, 0.1);
        assert_abs_diff_eq!(next.sigma, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l, 0.46, epsilon = 1e-15);
    }

    #[test]
    fn upstreams_require_initialized_running_loss() {
        let v = triplet_loss(1.0, 2.0);
        assert!(matches!(
            weighted_upstreams(1.0, &v, &RunningLossState::new(0.1)),
            Err(Error::Ordering(_))
        ));
        let at_average = RunningLossState::with_estimate(v.l);
        let u = weighted_upstreams(1.3, &v, &at_average).unwrap();
        assert_eq!(u.selector, 0.0);
        assert!(u.d_pos > 0.0 && u.d_neg < 0.0);
        let u = weighted_upstreams(0.0, &v, &at_average).unwrap();
        assert_eq!((u.d_pos, u.d_neg), (0.0, -0.0));
    }

    #[test]
    fn rescale_examples() {
        let b = GradientBlock { values: vec![2.0, 2.0, 2.0, 2.0] };
        assert_eq!(rescale_gradient_block(b, 2.0).unwrap().values, vec![1.0; 4]);
        let z = GradientBlock::zeros(3);
        assert_eq!(rescale_gradient_block(z.clone(), 7.0).unwrap(), z);
        let b = GradientBlock { values: vec![3.0, 4.0] };
        let r = rescale_gradient_block(b, 10.0).unwrap();
        assert_abs_diff_eq!(r.values[0], 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.values[1], 8.0, epsilon = 1e-12);
        assert!(rescale_gradient_block(GradientBlock::zeros(1), -1.0).is_err());
    }

    proptest! {
        #[test]
        fn stable_form_matches_ratio_form(d_pos in 0.0f64..30.0, d_neg in 0.0f64..30.0) {
            let ratio = d_pos.exp() / (d_pos.exp() + d_neg.exp());
            prop_assert!((triplet_loss(d_pos, d_neg).l - ratio).abs() < 1e-12);
        }

        #[test]
        fn complementary(a in 0.0f64..50.0, b in 0.0f64..50.0) {
            prop_assert!((triplet_loss(a, b).l + triplet_loss(b, a).l - 1.0).abs() < 1e-12);
        }

        #[test]
        fn monotone(a in 0.0f64..10.0, b in 0.0f64..10.0, step in 0.01f64..1.0) {
            prop_assert!(triplet_loss(a + step, b).l > triplet_loss(a, b).l);
            prop_assert!(triplet_loss(a, b + step).l < triplet_loss(a, b).l);
        }

        #[test]
        fn rescaled_norm_matches_reference(
            values in proptest::collection::vec(-100.0f64..100.0, 1..50),
            reference in 1e-6f64..1e3,
        ) {
            let block = GradientBlock { values };
            prop_assume!(block.norm() > 0.0);
            let r = rescale_gradient_block(block, reference).unwrap();
            prop_assert!((r.norm() - reference).abs() <= 1e-10 * reference.max(1.0));
        }

        #[test]
        fn running_loss_stays_in_hull(
            stream in proptest::collection::vec((0.01f64..10.0, 0.0f64..1.0), 1..200)
        ) {
            let mut s = RunningLossState::new(0.1);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for (p, l) in stream {
                lo = lo.min(l);
                hi = hi.max(l);
                let est = s.update(p, l);
                prop_assert!(est >= lo - 1e-12 && est <= hi + 1e-12);
                prop_assert!(s.sigma > 0.0);
            }
        }
    }
}
