//! Attention over the spans ending at the most recently read token.
//!
//! Each candidate span representation (2·d_r wide, from the bidirectional
//! span tables) is scored by a small MLP together with the current hidden
//! state; scores are softmax-normalized over however many spans are actually
//! available, the weighted sum of span representations forms the context
//! vector, and a gated residual merge folds the context back into the hidden
//! state.
//!
//! These are the reference (value-level) implementations; the language model
//! builds the same computation on the autodiff tape and is tested against
//! this module.

use crate::error::{Error, Result};
use crate::tensor::{sigmoid, softmax_slice, Real, Tensor};

/// Scorer MLP, residual gate, and merge MLP parameters.
///
/// The scorer is one tanh hidden layer to a scalar; its input is the
/// concatenation of the query hidden state (d_h) and one span representation
/// (2·d_r). The merge MLP maps [h; a] (d_h + 2·d_r) back to d_h. The residual
/// gate is a learned per-dimension vector passed through a sigmoid; an
/// input-conditioned gate (computed from [h; a]) is available behind
/// [`crate::lm::ModelConfig::conditioned_gate`].
#[derive(Clone, Debug)]
pub struct AttentionParams<F: Real> {
    /// (d_h + 2·d_r) × hidden
    pub scorer_w1: Tensor<F>,
    /// 1 × hidden
    pub scorer_b1: Tensor<F>,
    /// hidden × 1
    pub scorer_w2: Tensor<F>,
    /// 1 × 1
    pub scorer_b2: Tensor<F>,
    /// (d_h + 2·d_r) × d_h
    pub merge_w: Tensor<F>,
    /// 1 × d_h
    pub merge_b: Tensor<F>,
    /// 1 × d_h, pre-sigmoid residual gate (static variant)
    pub gate: Tensor<F>,
    /// (d_h + 2·d_r) × d_h and 1 × d_h, used when the gate is input-conditioned
    pub gate_w: Option<Tensor<F>>,
    pub gate_b: Option<Tensor<F>>,
}

impl<F: Real> AttentionParams<F> {
    pub fn hidden_dim(&self) -> usize {
        self.merge_w.cols()
    }

    pub fn span_dim(&self) -> usize {
        self.merge_w.rows() - self.merge_w.cols()
    }

    pub fn scorer_input_dim(&self) -> usize {
        self.scorer_w1.rows()
    }
}

/// One scalar score per candidate span: MLP([h_next; g_span]).
pub fn score_spans<F: Real>(
    params: &AttentionParams<F>,
    h_next: &[F],
    span_reprs: &[Vec<F>],
) -> Result<Vec<F>> {
    if span_reprs.is_empty() {
        return Err(Error::InvalidArg("score_spans needs at least one span".into()));
    }
    let d_h = params.hidden_dim();
    let span_w = params.span_dim();
    if h_next.len() != d_h {
        return Err(Error::Shape(format!("query width {} != d_h {}", h_next.len(), d_h)));
    }
    let hidden = params.scorer_w1.cols();
    let mut scores = Vec::with_capacity(span_reprs.len());
    for g in span_reprs {
        if g.len() != span_w {
            return Err(Error::Shape(format!(
                "span repr width {} != 2*d_r {}",
                g.len(),
                span_w
            )));
        }
        let mut act = params.scorer_b1.data().to_vec();
        for (k, &x) in h_next.iter().chain(g.iter()).enumerate() {
            let w_row = params.scorer_w1.row_slice(k);
            for j in 0..hidden {
                act[j] += x * w_row[j];
            }
        }
        let mut s = params.scorer_b2.item();
        for (j, a) in act.iter().enumerate() {
            s += a.tanh() * params.scorer_w2.at(j, 0);
        }
        scores.push(s);
    }
    Ok(scores)
}

/// Softmax with max subtraction over however many scores exist.
pub fn attention_weights<F: Real>(scores: &[F]) -> Result<Vec<F>> {
    if scores.is_empty() {
        return Err(Error::InvalidArg("attention_weights needs at least one score".into()));
    }
    Ok(softmax_slice(scores))
}

/// Convex combination of the span representations.
pub fn context_vector<F: Real>(weights: &[F], span_reprs: &[Vec<F>]) -> Result<Vec<F>> {
    if weights.len() != span_reprs.len() {
        return Err(Error::Shape(format!(
            "{} weights vs {} spans",
            weights.len(),
            span_reprs.len()
        )));
    }
    if span_reprs.is_empty() {
        return Err(Error::InvalidArg("context_vector needs at least one span".into()));
    }
    let width = span_reprs[0].len();
    let mut out = vec![F::zero(); width];
    for (&w, g) in weights.iter().zip(span_reprs) {
        if g.len() != width {
            return Err(Error::Shape("span reprs of unequal width".into()));
        }
        for (o, &x) in out.iter_mut().zip(g) {
            *o += w * x;
        }
    }
    Ok(out)
}

/// Gated residual merge: σ(gate) ⊙ tanh(W [h; a] + b) + (1 − σ(gate)) ⊙ h.
pub fn merge<F: Real>(params: &AttentionParams<F>, h: &[F], a: &[F]) -> Result<Vec<F>> {
    let d_h = params.hidden_dim();
    let span_w = params.span_dim();
    if h.len() != d_h {
        return Err(Error::Shape(format!("hidden width {} != d_h {}", h.len(), d_h)));
    }
    if a.len() != span_w {
        return Err(Error::Shape(format!("context width {} != 2*d_r {}", a.len(), span_w)));
    }
    let mut z = params.merge_b.data().to_vec();
    for (k, &x) in h.iter().chain(a.iter()).enumerate() {
        let w_row = params.merge_w.row_slice(k);
        for j in 0..d_h {
            z[j] += x * w_row[j];
        }
    }
    let gate: Vec<F> = match (&params.gate_w, &params.gate_b) {
        (Some(gw), Some(gb)) => {
            let mut pre = gb.data().to_vec();
            for (k, &x) in h.iter().chain(a.iter()).enumerate() {
                let w_row = gw.row_slice(k);
                for j in 0..d_h {
                    pre[j] += x * w_row[j];
                }
            }
            pre.into_iter().map(sigmoid).collect()
        }
        _ => params.gate.data().iter().map(|&x| sigmoid(x)).collect(),
    };
    Ok(z
        .iter()
        .zip(&gate)
        .zip(h)
        .map(|((&zv, &g), &hv)| g * zv.tanh() + (F::one() - g) * hv)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn rand_params(rng: &mut StdRng, d_h: usize, d_r: usize, hidden: usize) -> AttentionParams<f64> {
        let mut t = |rows: usize, cols: usize| {
            Tensor::from_fn(rows, cols, |_, _| rng.gen_range(-0.7..0.7))
        };
        AttentionParams {
            scorer_w1: t(d_h + 2 * d_r, hidden),
            scorer_b1: t(1, hidden),
            scorer_w2: t(hidden, 1),
            scorer_b2: t(1, 1),
            merge_w: t(d_h + 2 * d_r, d_h),
            merge_b: t(1, d_h),
            gate: t(1, d_h),
            gate_w: None,
            gate_b: None,
        }
    }

    fn zero_params(d_h: usize, d_r: usize, hidden: usize) -> AttentionParams<f64> {
        AttentionParams {
            scorer_w1: Tensor::zeros(d_h + 2 * d_r, hidden),
            scorer_b1: Tensor::zeros(1, hidden),
            scorer_w2: Tensor::zeros(hidden, 1),
            scorer_b2: Tensor::zeros(1, 1),
            merge_w: Tensor::zeros(d_h + 2 * d_r, d_h),
            merge_b: Tensor::zeros(1, d_h),
            gate: Tensor::zeros(1, d_h),
            gate_w: None,
            gate_b: None,
        }
    }

    #[test]
    fn zero_weights_score_zero() {
        let params = zero_params(3, 2, 4);
        let spans = vec![vec![1.0; 4], vec![-2.0; 4], vec![0.3; 4]];
        let scores = score_spans(&params, &[0.5, -0.5, 1.0], &spans).unwrap();
        assert_eq!(scores, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn scorer_is_per_span_permutation_equivariant() {
        let mut rng = StdRng::seed_from_u64(21);
        let params = rand_params(&mut rng, 3, 2, 5);
        let h = vec![0.2, -0.4, 0.9];
        let spans: Vec<Vec<f64>> =
            (0..4).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let scores = score_spans(&params, &h, &spans).unwrap();
        let permuted: Vec<Vec<f64>> = vec![spans[2].clone(), spans[0].clone(), spans[3].clone(), spans[1].clone()];
        let scores_p = score_spans(&params, &h, &permuted).unwrap();
        assert_eq!(scores_p, vec![scores[2], scores[0], scores[3], scores[1]]);
    }

    #[test]
    fn scorer_matches_hand_evaluated_mlp() {
        let mut rng = StdRng::seed_from_u64(22);
        let (d_h, d_r, hid) = (2, 1, 3);
        let params = rand_params(&mut rng, d_h, d_r, hid);
        let h = vec![0.3, -0.8];
        let spans = vec![vec![0.5, -0.2], vec![-0.1, 0.7]];
        let scores = score_spans(&params, &h, &spans).unwrap();
        for (g, &s) in spans.iter().zip(&scores) {
            let input: Vec<f64> = h.iter().chain(g).copied().collect();
            let mut expect = params.scorer_b2.item();
            for j in 0..hid {
                let mut act = params.scorer_b1.at(0, j);
                for (k, &x) in input.iter().enumerate() {
                    act += x * params.scorer_w1.at(k, j);
                }
                expect += act.tanh() * params.scorer_w2.at(j, 0);
            }
            assert!((s - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_examples() {
        let w = attention_weights(&[0.0f64, 0.0]).unwrap();
        assert!((w[0] - 0.5).abs() < 1e-12 && (w[1] - 0.5).abs() < 1e-12);

        let w = attention_weights(&[3.25f64]).unwrap();
        assert_eq!(w, vec![1.0]);

        let w = attention_weights(&[1.0f64.ln(), 3.0f64.ln()]).unwrap();
        assert!((w[0] - 0.25).abs() < 1e-12);
        assert!((w[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn weights_shift_invariant_and_argmax_preserving() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..50 {
            let n = rng.gen_range(1..=8);
            let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let shift = rng.gen_range(-100.0..100.0);
            let shifted: Vec<f64> = scores.iter().map(|&s| s + shift).collect();
            let w1 = attention_weights(&scores).unwrap();
            let w2 = attention_weights(&shifted).unwrap();
            for (a, b) in w1.iter().zip(&w2) {
                assert!((a - b).abs() < 1e-6);
            }
            let am_s = scores
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            let am_w = w1
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert_eq!(am_s, am_w);
            let sum: f64 = w1.iter().sum();
            assert!((sum - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn context_selects_and_stays_in_hull() {
        let spans = vec![vec![1.0, 2.0], vec![-3.0, 0.5], vec![0.0, 10.0]];
        let picked = context_vector(&[0.0, 1.0, 0.0], &spans).unwrap();
        assert_eq!(picked, vec![-3.0, 0.5]);

        let same = vec![vec![0.7, -0.2]; 4];
        let avg = context_vector(&[0.25; 4], &same).unwrap();
        assert!((avg[0] - 0.7).abs() < 1e-12 && (avg[1] + 0.2).abs() < 1e-12);

        let mut rng = StdRng::seed_from_u64(24);
        for _ in 0..20 {
            let k = rng.gen_range(1..=5);
            let spans: Vec<Vec<f64>> =
                (0..k).map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
            let scores: Vec<f64> = (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let w = attention_weights(&scores).unwrap();
            let ctx = context_vector(&w, &spans).unwrap();
            for d in 0..3 {
                let lo = spans.iter().map(|s| s[d]).fold(f64::INFINITY, f64::min);
                let hi = spans.iter().map(|s| s[d]).fold(f64::NEG_INFINITY, f64::max);
                assert!(ctx[d] >= lo - 1e-9 && ctx[d] <= hi + 1e-9);
            }
        }
        assert!(context_vector(&[0.5, 0.5], &spans[..1].to_vec()).is_err());
    }

    #[test]
    fn merge_gate_extremes() {
        let mut rng = StdRng::seed_from_u64(25);
        let mut params = rand_params(&mut rng, 3, 2, 4);
        let h = vec![0.4, -1.2, 0.05];
        let a = vec![0.3, 0.1, -0.6, 0.9];

        // gate pre-activation −40 → σ ≈ 0 → identity bypass
        params.gate = Tensor::filled(1, 3, -40.0);
        let out = merge(&params, &h, &a).unwrap();
        for (o, &hv) in out.iter().zip(&h) {
            assert!((o - hv).abs() < 1e-12);
        }

        // gate pre-activation +40 → σ ≈ 1 → pure MLP output
        params.gate = Tensor::filled(1, 3, 40.0);
        let out = merge(&params, &h, &a).unwrap();
        let input: Vec<f64> = h.iter().chain(&a).copied().collect();
        for j in 0..3 {
            let mut z = params.merge_b.at(0, j);
            for (k, &x) in input.iter().enumerate() {
                z += x * params.merge_w.at(k, j);
            }
            assert!((out[j] - z.tanh()).abs() < 1e-12);
        }
    }

    #[test]
    fn merge_matches_scalar_recomputation() {
        let mut rng = StdRng::seed_from_u64(26);
        let params = rand_params(&mut rng, 2, 1, 3);
        let h = vec![0.25, -0.5];
        let a = vec![0.8, -0.3];
        let out = merge(&params, &h, &a).unwrap();
        let input = [h[0], h[1], a[0], a[1]];
        for j in 0..2 {
            let mut z = params.merge_b.at(0, j);
            for (k, &x) in input.iter().enumerate() {
                z += x * params.merge_w.at(k, j);
            }
            let g = 1.0 / (1.0 + (-params.gate.at(0, j)).exp());
            let expect = g * z.tanh() + (1.0 - g) * h[j];
            assert!((out[j] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn width_mismatches_error() {
        let params = zero_params(3, 2, 4);
        assert!(score_spans(&params, &[0.0; 2], &[vec![0.0; 4]]).is_err());
        assert!(score_spans(&params, &[0.0; 3], &[vec![0.0; 3]]).is_err());
        assert!(merge(&params, &[0.0; 3], &[0.0; 3]).is_err());
        assert!(merge(&params, &[0.0; 2], &[0.0; 4]).is_err());
    }
}
