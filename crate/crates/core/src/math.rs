//! Dense kernels with hand-written forward and backward passes.
//!
//! Matrices are row-major `dim_out × dim_in` slices. The `*_accumulate`
//! variants add into caller-owned gradient buffers so the model can reuse
//! one flat gradient vector per batch.

use crate::error::{check_len, Error, Result};

/// An owned affine map `weight · input + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineLayer {
    pub dim_in: usize,
    pub dim_out: usize,
    /// Row-major, `dim_out` rows of `dim_in`.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Gradients of an [`AffineLayer`], shape-congruent with it.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineGrad {
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl AffineLayer {
    pub fn new(dim_in: usize, dim_out: usize, weight: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        check_len("affine weight", dim_in * dim_out, weight.len())?;
        check_len("affine bias", dim_out, bias.len())?;
        if weight.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("affine parameters must be finite".into()));
        }
        Ok(Self {
            dim_in,
            dim_out,
            weight,
            bias,
        })
    }

    pub fn zeros(dim_in: usize, dim_out: usize) -> Self {
        Self {
            dim_in,
            dim_out,
            weight: vec![0.0; dim_in * dim_out],
            bias: vec![0.0; dim_out],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut layer = Self::zeros(dim, dim);
        for i in 0..dim {
            layer.weight[i * dim + i] = 1.0;
        }
        layer
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        affine_forward(&self.weight, &self.bias, input)
    }

    /// Returns the parameter gradients and the gradient with respect to `input`.
    pub fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<(AffineGrad, Vec<f64>)> {
        let mut grad = AffineGrad {
            weight: vec![0.0; self.weight.len()],
            bias: vec![0.0; self.bias.len()],
        };
        let d_input = affine_backward_accumulate(
            &self.weight,
            input,
            upstream,
            &mut grad.weight,
            &mut grad.bias,
        )?;
        Ok((grad, d_input))
    }
}

pub fn affine_forward(weight: &[f64], bias: &[f64], input: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; bias.len()];
    affine_forward_into(weight, bias, input, &mut out)?;
    Ok(out)
}

pub fn affine_forward_into(
    weight: &[f64],
    bias: &[f64],
    input: &[f64],
    out: &mut [f64],
) -> Result<()> {
    let dim_out = bias.len();
    let dim_in = input.len();
    check_len("affine weight", dim_out * dim_in, weight.len())?;
    check_len("affine output", dim_out, out.len())?;
    for (o, (row, b)) in out.iter_mut().zip(weight.chunks_exact(dim_in.max(1)).zip(bias)) {
        *o = b + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
    }
    Ok(())
}

/// Adds `upstream ⊗ input` into `grad_weight` and `upstream` into
/// `grad_bias`; returns `weightᵀ · upstream`.
pub fn affine_backward_accumulate(
    weight: &[f64],
    input: &[f64],
    upstream: &[f64],
    grad_weight: &mut [f64],
    grad_bias: &mut [f64],
) -> Result<Vec<f64>> {
    let dim_in = input.len();
    let dim_out = upstream.len();
    check_len("affine weight", dim_out * dim_in, weight.len())?;
    check_len("affine weight grad", weight.len(), grad_weight.len())?;
    check_len("affine bias grad", dim_out, grad_bias.len())?;
    let mut d_input = vec![0.0; dim_in];
    if dim_in == 0 {
        for (gb, u) in grad_bias.iter_mut().zip(upstream) {
            *gb += u;
        }
        return Ok(d_input);
    }
    for (r, &u) in upstream.iter().enumerate() {
        grad_bias[r] += u;
        if u == 0.0 {
            continue;
        }
        let row = &weight[r * dim_in..(r + 1) * dim_in];
        let grow = &mut grad_weight[r * dim_in..(r + 1) * dim_in];
        for ((g, w), (x, d)) in grow.iter_mut().zip(row).zip(input.iter().zip(d_input.iter_mut())) {
            *g += u * x;
            *d += w * u;
        }
    }
    Ok(d_input)
}

/// Euclidean distance `‖a − b‖₂`.
pub fn l2_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len("l2 distance", a.len(), b.len())?;
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// Gradients of `upstream · ‖a − b‖₂`. At `a == b` the zero subgradient is used.
pub fn l2_distance_backward(a: &[f64], b: &[f64], upstream: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let dist = l2_distance(a, b)?;
    if dist == 0.0 {
        return Ok((vec![0.0; a.len()], vec![0.0; b.len()]));
    }
    let grad_a: Vec<f64> = a.iter().zip(b).map(|(x, y)| upstream * (x - y) / dist).collect();
    let grad_b = grad_a.iter().map(|g| -g).collect();
    Ok((grad_a, grad_b))
}

/// `scale · tanh(raw)`; `scale` must be strictly positive.
pub fn scaled_tanh(raw: f64, scale: f64) -> Result<f64> {
    if !(scale > 0.0) {
        return Err(Error::Constraint(format!("tanh scale must be positive, got {scale}")));
    }
    Ok(scale * raw.tanh())
}

/// Returns `(∂/∂raw, ∂/∂scale)` of `upstream · scale · tanh(raw)`.
pub fn scaled_tanh_backward(raw: f64, scale: f64, upstream: f64) -> Result<(f64, f64)> {
    if !(scale > 0.0) {
        return Err(Error::Constraint(format!("tanh scale must be positive, got {scale}")));
    }
    let t = raw.tanh();
    Ok((upstream * scale * (1.0 - t * t), upstream * t))
}

/// Numerically stable logistic function.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// A flat gradient vector laid out like the parameters it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBlock {
    pub values: Vec<f64>,
}

impl GradientBlock {
    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn add_assign(&mut self, other: &GradientBlock) -> Result<()> {
        check_len("gradient block", self.len(), other.len())?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }

    pub fn fill_zero(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// Compares an analytic gradient against central differences.
///
/// Returns `max_i |analytic_i − fd_i| / max(1, |analytic_i|)` where
/// `fd_i = (f(θ + εe_i) − f(θ − εe_i)) / 2ε`.
pub fn finite_difference_check<F>(
    mut function: F,
    parameters: &[f64],
    analytic: &[f64],
    epsilon: f64,
) -> Result<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    check_len("finite difference gradient", parameters.len(), analytic.len())?;
    if !(epsilon > 0.0) {
        return Err(Error::Constraint("epsilon must be positive".into()));
    }
    let mut probe = parameters.to_vec();
    let mut worst = 0.0f64;
    for i in 0..parameters.len() {
        let original = probe[i];
        probe[i] = original + epsilon;
        let plus = function(&probe);
        probe[i] = original - epsilon;
        let minus = function(&probe);
        probe[i] = original;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::Numeric(format!("non-finite function value at parameter {i}")));
        }
        let numeric = (plus - minus) / (2.0 * epsilon);
        let err = (analytic[i] - numeric).abs() / analytic[i].abs().max(1.0);
        worst = worst.max(err);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn affine_forward_examples() {
        let id = AffineLayer::identity(2);
        assert_eq!(id.forward(&[3.0, -1.0]).unwrap(), vec![3.0, -1.0]);

        let zero = AffineLayer::new(2, 2, vec![0.0; 4], vec![1.0, 2.0]).unwrap();
        assert_eq!(zero.forward(&[7.0, -9.0]).unwrap(), vec![1.0, 2.0]);

        let m = AffineLayer::new(2, 2, vec![1.0, 1.0, 0.0, 2.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(m.forward(&[1.0, 1.0]).unwrap(), vec![2.0, 2.0]);
    }

    #[test]
    fn affine_shape_errors() {
        let m = AffineLayer::identity(2);
        assert!(matches!(m.forward(&[1.0, 2.0, 3.0]), Err(Error::Shape { .. })));
        assert!(matches!(m.backward(&[1.0], &[1.0, 0.0]), Err(Error::Shape { .. })));
        assert!(AffineLayer::new(2, 2, vec![0.0; 3], vec![0.0; 2]).is_err());
    }

    #[test]
    fn affine_backward_examples() {
        let m = AffineLayer::new(2, 2, vec![1.0, 1.0, 0.0, 2.0], vec![0.0, 0.0]).unwrap();
        let (g, d) = m.backward(&[1.0, 1.0], &[0.0, 0.0]).unwrap();
        assert!(g.weight.iter().chain(&g.bias).chain(&d).all(|v| *v == 0.0));

        let id = AffineLayer::identity(2);
        let (_, d) = id.backward(&[5.0, 6.0], &[1.0, 0.0]).unwrap();
        assert_eq!(d, vec![1.0, 0.0]);

        let (g, d) = m.backward(&[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(d, vec![1.0, 3.0]);
        assert_eq!(g.weight, vec![1.0, 1.0, 1.0, 1.0]);
        assert_eq!(g.bias, vec![1.0, 1.0]);
    }

    #[test]
    fn l2_examples() {
        assert_eq!(l2_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(l2_distance(&[3.0, 0.0], &[0.0, 4.0]).unwrap(), 5.0);
        let (ga, gb) = l2_distance_backward(&[1.0, 0.0], &[0.0, 0.0], 1.0).unwrap();
        assert_eq!(ga, vec![1.0, 0.0]);
        assert_eq!(gb, vec![-1.0, 0.0]);
        let (ga, gb) = l2_distance_backward(&[2.0, 2.0], &[2.0, 2.0], 1.0).unwrap();
        assert_eq!(ga, vec![0.0, 0.0]);
        assert_eq!(gb, vec![0.0, 0.0]);
        assert!(l2_distance(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn scaled_tanh_examples() {
        assert_eq!(scaled_tanh(0.0, 3.7).unwrap(), 0.0);
        assert_abs_diff_eq!(scaled_tanh(50.0, 5.0).unwrap(), 5.0, epsilon = 1e-12);
        // 2·tanh(1), tanh(1) = 0.7615941559557649
        assert_abs_diff_eq!(scaled_tanh(1.0, 2.0).unwrap(), 1.5231883119115297, epsilon = 1e-12);
        assert!(matches!(scaled_tanh(1.0, 0.0), Err(Error::Constraint(_))));
        assert!(matches!(scaled_tanh_backward(1.0, -1.0, 1.0), Err(Error::Constraint(_))));
    }

    #[test]
    fn finite_difference_examples() {
        let err = finite_difference_check(|w| w[0] * w[0], &[3.0], &[6.0], 1e-4).unwrap();
        assert!(err < 1e-6);
        let err = finite_difference_check(|_| 4.2, &[1.0, -2.0], &[0.0, 0.0], 1e-4).unwrap();
        assert_eq!(err, 0.0);
        let bad = finite_difference_check(|w| 1.0 / (w[0] - w[0]), &[1.0], &[0.0], 1e-4);
        assert!(matches!(bad, Err(Error::Numeric(_))));
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()
    }

    #[test]
    fn backward_passes_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let (din, dout) = (rng.random_range(1..6), rng.random_range(1..6));
            let layer = AffineLayer::new(din, dout, random_vec(&mut rng, din * dout), random_vec(&mut rng, dout)).unwrap();
            let input = random_vec(&mut rng, din);
            let up = random_vec(&mut rng, dout);
            let (g, d_input) = layer.backward(&input, &up).unwrap();
            let objective = |w: &[f64], b: &[f64], x: &[f64]| -> f64 {
                affine_forward(w, b, x).unwrap().iter().zip(&up).map(|(o, u)| o * u).sum()
            };
            let err = finite_difference_check(|w| objective(w, &layer.bias, &input), &layer.weight, &g.weight, 1e-4).unwrap();
            assert!(err < 1e-4);
            let err = finite_difference_check(|b| objective(&layer.weight, b, &input), &layer.bias, &g.bias, 1e-4).unwrap();
            assert!(err < 1e-4);
            let err = finite_difference_check(|x| objective(&layer.weight, &layer.bias, x), &input, &d_input, 1e-4).unwrap();
            assert!(err < 1e-4);

            let a = random_vec(&mut rng, din);
            let b = random_vec(&mut rng, din);
            let (ga, gb) = l2_distance_backward(&a, &b, 1.3).unwrap();
            let err = finite_difference_check(|v| 1.3 * l2_distance(v, &b).unwrap(), &a, &ga, 1e-4).unwrap();
            assert!(err < 1e-4);
            let err = finite_difference_check(|v| 1.3 * l2_distance(&a, v).unwrap(), &b, &gb, 1e-4).unwrap();
            assert!(err < 1e-4);

            let raw = rng.random_range(-3.0..3.0);
            let scale = rng.random_range(0.1..6.0);
            let (dr, ds) = scaled_tanh_backward(raw, scale, 0.7).unwrap();
            let err = finite_difference_check(
                |p| 0.7 * scaled_tanh(p[0], p[1]).unwrap(),
                &[raw, scale],
                &[dr, ds],
                1e-4,
            )
            .unwrap();
            assert!(err < 1e-4);
        }
    }

    #[test]
    fn stable_helpers() {
        assert_abs_diff_eq!(logistic(0.0), 0.5);
        assert_abs_diff_eq!(logistic(-800.0), 0.0);
        assert_abs_diff_eq!(logistic(800.0), 1.0);
        assert_abs_diff_eq!(softplus(0.0), 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(softplus(800.0), 800.0);
    }

    #[test]
    fn rescalable_block() {
        let mut b = GradientBlock { values: vec![3.0, 4.0] };
        assert_eq!(b.norm(), 5.0);
        b.scale(2.0);
        assert_eq!(b.values, vec![6.0, 8.0]);
    }

    proptest! {
        #[test]
        fn affine_is_affine(
            w in proptest::collection::vec(-3.0f64..3.0, 6),
            bias in proptest::collection::vec(-3.0f64..3.0, 2),
            u in proptest::collection::vec(-3.0f64..3.0, 3),
            v in proptest::collection::vec(-3.0f64..3.0, 3),
            alpha in -2.0f64..2.0,
            beta in -2.0f64..2.0,
        ) {
            let mix: Vec<f64> = u.iter().zip(&v).map(|(a, b)| alpha * a + beta * b).collect();
            let lhs = affine_forward(&w, &bias, &mix).unwrap();
            let fu = affine_forward(&w, &bias, &u).unwrap();
            let fv = affine_forward(&w, &bias, &v).unwrap();
            for i in 0..2 {
                let rhs = alpha * fu[i] + beta * fv[i] - (alpha + beta - 1.0) * bias[i];
                prop_assert!((lhs[i] - rhs).abs() < 1e-10);
            }
        }

        #[test]
        fn scaled_tanh_is_bounded(raw in -1e6f64..1e6, scale in 0.01f64..100.0) {
            prop_assert!(scaled_tanh(raw, scale).unwrap().abs() <= scale);
        }

        #[test]
        fn l2_is_a_metric(
            a in proptest::collection::vec(-10.0f64..10.0, 4),
            b in proptest::collection::vec(-10.0f64..10.0, 4),
            c in proptest::collection::vec(-10.0f64..10.0, 4),
        ) {
            let ab = l2_distance(&a, &b).unwrap();
            prop_assert!((ab - l2_distance(&b, &a).unwrap()).abs() < 1e-10);
            prop_assert!(ab <= l2_distance(&a, &c).unwrap() + l2_distance(&c, &b).unwrap() + 1e-10);
        }
    }
}
