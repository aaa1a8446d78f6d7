//! Minimal reverse-mode automatic differentiation over [`Tensor`]s.
//!
//! A [`Tape`] records one forward computation; [`Tape::backward`] walks the
//! recording in reverse and accumulates gradients for every node. Each window
//! of language-model training builds a fresh tape, which makes detaching
//! carried state across windows automatic: carried values re-enter the next
//! tape as constants.
//!
//! The op set is exactly what the model needs; shapes are asserted because a
//! mismatch here is a programming error, not a user error.

use crate::tensor::{log_sigmoid, Real, Tensor};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

type BackFn<F> = Box<dyn Fn(&Tensor<F>, &[Tensor<F>], &mut GradStore<F>)>;

/// Per-node gradient accumulator produced by [`Tape::backward`].
pub struct GradStore<F: Real> {
    grads: Vec<Option<Tensor<F>>>,
}

impl<F: Real> GradStore<F> {
    fn new(n: usize) -> Self {
        GradStore { grads: (0..n).map(|_| None).collect() }
    }

    fn add(&mut self, idx: usize, g: Tensor<F>) {
        match &mut self.grads[idx] {
            Some(acc) => acc.add_assign(&g),
            slot @ None => *slot = Some(g),
        }
    }

    pub fn get(&self, v: Var) -> Option<&Tensor<F>> {
        self.grads[v.0].as_ref()
    }
}

pub struct Tape<F: Real> {
    values: Vec<Tensor<F>>,
    backs: Vec<Option<BackFn<F>>>,
    grad_enabled: bool,
}

impl<F: Real> Tape<F> {
    pub fn new() -> Self {
        Tape { values: Vec::new(), backs: Vec::new(), grad_enabled: true }
    }

    /// Evaluation-only tape: values are computed, no backward closures kept.
    pub fn no_grad() -> Self {
        Tape { values: Vec::new(), backs: Vec::new(), grad_enabled: false }
    }

    pub fn grad_enabled(&self) -> bool {
        self.grad_enabled
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<F> {
        &self.values[v.0]
    }

    fn push(&mut self, value: Tensor<F>, back: Option<BackFn<F>>) -> Var {
        self.values.push(value);
        self.backs.push(if self.grad_enabled { back } else { None });
        Var(self.values.len() - 1)
    }

    /// Leaf node. Gradients accumulate here like anywhere else; whether the
    /// caller reads them (parameter) or not (carried constant) is its choice.
    pub fn leaf(&mut self, value: Tensor<F>) -> Var {
        self.push(value, None)
    }

    /// Runs reverse accumulation from `root` (must be 1×1).
    pub fn backward(&self, root: Var) -> GradStore<F> {
        assert_eq!(self.values[root.0].len(), 1, "backward root must be scalar");
        let mut store = GradStore::new(self.values.len());
        store.grads[root.0] = Some(Tensor::scalar(F::one()));
        for i in (0..=root.0).rev() {
            let Some(g) = store.grads[i].take() else { continue };
            if let Some(back) = &self.backs[i] {
                back(&g, &self.values, &mut store);
            }
            store.grads[i] = Some(g);
        }
        store
    }

    // ---- arithmetic ----

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.values[a.0].zip_map(&self.values[b.0], |x, y| x + y);
        self.push(
            v,
            Some(Box::new(move |g, _, store| {
                store.add(a.0, g.clone());
                store.add(b.0, g.clone());
            })),
        )
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.values[a.0].zip_map(&self.values[b.0], |x, y| x - y);
        self.push(
            v,
            Some(Box::new(move |g, _, store| {
                store.add(a.0, g.clone());
                store.add(b.0, g.map(|x| -x));
            })),
        )
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.values[a.0].zip_map(&self.values[b.0], |x, y| x * y);
        self.push(
            v,
            Some(Box::new(move |g, vals, store| {
                store.add(a.0, g.zip_map(&vals[b.0], |gx, y| gx * y));
                store.add(b.0, g.zip_map(&vals[a.0], |gx, x| gx * x));
            })),
        )
    }

    /// a + s·b with a compile-time-constant mixing coefficient.
    pub fn add_scaled(&mut self, a: Var, b: Var, s: F) -> Var {
        let v = self.values[a.0].zip_map(&self.values[b.0], |x, y| x + s * y);
        self.push(
            v,
            Some(Box::new(move |g, _, store| {
                store.add(a.0, g.clone());
                store.add(b.0, g.map(|gx| gx * s));
            })),
        )
    }

    /// Elementwise k·x + c for scalar constants.
    pub fn affine(&mut self, a: Var, k: F, c: F) -> Var {
        let v = self.values[a.0].map(|x| k * x + c);
        self.push(
            v,
            Some(Box::new(move |g, _, store| {
                store.add(a.0, g.map(|gx| gx * k));
            })),
        )
    }

    pub fn scale(&mut self, a: Var, k: F) -> Var {
        self.affine(a, k, F::zero())
    }

    pub fn neg(&mut self, a: Var) -> Var {
        self.affine(a, -F::one(), F::zero())
    }

    // ---- matrix products ----

    /// a (p×q) · b (q×r).
    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.values[a.0].matmul(&self.values[b.0]);
        self.push(
            v,
            Some(Box::new(move |g, vals, store| {
                store.add(a.0, g.matmul_bt(&vals[b.0]));
                store.add(b.0, vals[a.0].matmul_at(g));
            })),
        )
    }

    /// a (p×q) · bᵀ where b is r×q. Used for the tied output projection.
    pub fn matmul_bt(&mut self, a: Var, b: Var) -> Var {
        let v = self.values[a.0].matmul_bt(&self.values[b.0]);
        self.push(
            v,
            Some(Box::new(move |g, vals, store| {
                store.add(a.0, g.matmul(&vals[b.0]));
                store.add(b.0, g.matmul_at(&vals[a.0]));
            })),
        )
    }

    // ---- broadcasts ----

    /// a (p×q) + row (1×q) broadcast over rows.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let av = &self.values[a.0];
        let rv = &self.values[row.0];
        assert_eq!(rv.rows(), 1);
        assert_eq!(av.cols(), rv.cols());
        let mut v = av.clone();
        for r in 0..v.rows() {
            let dst = v.row_slice_mut(r);
            for (d, &s) in dst.iter_mut().zip(rv.data()) {
                *d = *d + s;
            }
        }
        self.push(
            v,
            Some(Box::new(move |g, _, store| {
                store.add(a.0, g.clone());
                let mut rg = Tensor::zeros(1, g.cols());
                for r in 0..g.rows() {
                    for (d, &s) in rg.data_mut().iter_mut().zip(g.row_slice(r)) {
                        *d = *d + s;
                    }
                }
                store.add(row.0, rg);
            })),
        )
    }

    /// a (p×q) ⊙ row (1×q) broadcast over rows.
    pub fn mul_row(&mut self, a: Var, row: Var) -> Var {
        let av = &self.values[a.0];
        let rv = &self.values[row.0];
        assert_eq!(rv.rows(), 1);
        assert_eq!(av.cols(), rv.cols());
        let mut v = av.clone();
        for r in 0..v.rows() {
            let dst = v.row_slice_mut(r);
            for (d, &s) in dst.iter_mut().zip(rv.data()) {
                *d = *d * s;
            }
        }
        self.push(
            v,
            Some(Box::new(move |g, vals, store| {
                let rv = &vals[row.0];
                let av = &vals[a.0];
                let mut ag = g.clone();
                for r in 0..ag.rows() {
                    let dst = ag.row_slice_mut(r);
                    for (d, &s) in dst.iter_mut().zip(rv.data()) {
                        *d = *d * s;
                    }
                }
                store.add(a.0, ag);
                let mut rg = Tensor::zeros(1, g.cols());
                for r in 0..g.rows() {
                    let gr = g.row_slice(r);
                    let ar = av.row_slice(r);
                    for ((d, &gx), &ax) in rg.data_mut().iter_mut().zip(gr).zip(ar) {
                        *d = *d + gx * ax;
                    }
                }
                store.add(row.0, rg);
            })),
        )
    }

    /// a (p×q) ⊙ col (p×1) broadcast over columns.
    pub fn mul_col(&mut self, a: Var, col: Var) -> Var {
        let av = &self.values[a.0];
        let cv = &self.values[col.0];
        assert_eq!(cv.cols(), 1);
        assert_eq!(av.rows(), cv.rows());
        let mut v = av.clone();
        for r in 0..v.rows() {
            let s = cv.at(r, 0);
            for d in v.row_slice_mut(r) {
                *d = *d * s;
            }
        }
        self.push(
            v,
            Some(Box::new(move |g, vals, store| {
                let cv = &vals[col.0];
                let av = &vals[a.0];
                let mut ag = g.clone();
                for r in 0..ag.rows() {
                    let s = cv.at(r, 0);
                    for d in ag.row_slice_mut(r) {
                        *d = *d * s;
                    }
                }
                store.add(a.0, ag);
                let mut cg = Tensor::zeros(g.rows(), 1);
                for r in 0..g.rows() {
                    let mut acc = F::zero();
                    for (&gx, &ax) in g.row_slice(r).iter().zip(av.row_slice(r)) {
                        acc += gx * ax;
                    }
                    cg.set(r, 0, acc);
                }
                store.add(col.0, cg);
            })),
        )
    }

    // ---- nonlinearities ----

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.values[a.0].map(crate::tensor::sigmoid);
        self.push(
            v,
            Some(Box::new(move |g, vals, store| {
                // this node's value is vals[out]; recompute from input instead
                let y = vals[a.0].map(crate::tensor::sigmoid);
                store.add(a.0, g.zip_map(&y, |gx, yv| gx * yv * (F::one() - yv)));
            })),
        )
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.values[a.0].map(|x| x.tanh());
        self.push(
            v,
            Some(Box::new(move |g, vals, store| {
                let y = vals[a.0].map(|x| x.tanh());
                store.add(a.0, g.zip_map(&y, |gx, yv| gx * (F::one() - yv * yv)));
            })),
        )
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let v = self.values[a.0].map(|x| x.exp());
        self.push(
            v,
            Some(Box::new(move |g, vals, store| {
                let y = vals[a.0].map(|x| x.exp());
                store.add(a.0, g.zip_map(&y, |gx, yv| gx * yv));
            })),
        )
    }

    /// log σ(x), clamped to [lo, hi]. The clamp gates the gradient: entries at
    /// the clamp boundary receive zero gradient.
    pub fn log_sigmoid_clamped(&mut self, a: Var, lo: F, hi: F) -> Var {
        let raw = self.values[a.0].map(log_sigmoid);
        let v = raw.map(|x| x.max(lo).min(hi));
        self.push(
            v,
            Some(Box::new(move |g, vals, store| {
                let x = &vals[a.0];
                let mut out = Tensor::zeros(x.rows(), x.cols());
                for i in 0..x.len() {
                    let ls = log_sigmoid(x.data()[i]);
                    let d = if ls <= lo || ls >= hi {
                        F::zero()
                    } else {
                        // d/dx log σ(x) = σ(−x)
                        crate::tensor::sigmoid(-x.data()[i])
                    };
                    out.data_mut()[i] = g.data()[i] * d;
                }
                store.add(a.0, out);
            })),
        )
    }

    // ---- shape ops ----

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let rows = self.values[parts[0].0].rows();
        let total: usize = parts.iter().map(|p| self.values[p.0].cols()).sum();
        let mut v = Tensor::zeros(rows, total);
        let mut off = 0;
        let widths: Vec<usize> = parts.iter().map(|p| self.values[p.0].cols()).collect();
        for (p, &w) in parts.iter().zip(&widths) {
            let src = &self.values[p.0];
            assert_eq!(src.rows(), rows, "concat_cols row mismatch");
            for r in 0..rows {
                let dst = &mut v.row_slice_mut(r)[off..off + w];
                dst.copy_from_slice(src.row_slice(r));
            }
            off += w;
        }
        let parts: Vec<usize> = parts.iter().map(|p| p.0).collect();
        self.push(
            v,
            Some(Box::new(move |g, _, store| {
                let mut off = 0;
                for (&p, &w) in parts.iter().zip(&widths) {
                    let mut pg = Tensor::zeros(g.rows(), w);
                    for r in 0..g.rows() {
                        pg.row_slice_mut(r).copy_from_slice(&g.row_slice(r)[off..off + w]);
                    }
                    store.add(p, pg);
                    off += w;
                }
            })),
        )
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, width: usize) -> Var {
        let src = &self.values[a.0];
        assert!(start + width <= src.cols());
        let (rows, cols) = (src.rows(), src.cols());
        let mut v = Tensor::zeros(rows, width);
        for r in 0..rows {
            v.row_slice_mut(r).copy_from_slice(&src.row_slice(r)[start..start + width]);
        }
        self.push(
            v,
            Some(Box::new(move |g, _, store| {
                let mut ag = Tensor::zeros(rows, cols);
                for r in 0..rows {
                    ag.row_slice_mut(r)[start..start + width].copy_from_slice(g.row_slice(r));
                }
                store.add(a.0, ag);
            })),
        )
    }

    /// Row lookup: out[r] = table[ids[r]]. Embedding gather.
    pub fn select_rows(&mut self, table: Var, ids: &[usize]) -> Var {
        let src = &self.values[table.0];
        let mut v = Tensor::zeros(ids.len(), src.cols());
        for (r, &id) in ids.iter().enumerate() {
            assert!(id < src.rows(), "row id out of range");
            v.row_slice_mut(r).copy_from_slice(src.row_slice(id));
        }
        let ids = ids.to_vec();
        let (rows, cols) = (src.rows(), src.cols());
        self.push(
            v,
            Some(Box::new(move |g, _, store| {
                let mut tg = Tensor::zeros(rows, cols);
                for (r, &id) in ids.iter().enumerate() {
                    let dst = tg.row_slice_mut(id);
                    for (d, &s) in dst.iter_mut().zip(g.row_slice(r)) {
                        *d = *d + s;
                    }
                }
                store.add(table.0, tg);
            })),
        )
    }

    // ---- reductions ----

    pub fn row_sum(&mut self, a: Var) -> Var {
        let src = &self.values[a.0];
        let mut v = Tensor::zeros(src.rows(), 1);
        for r in 0..src.rows() {
            v.set(r, 0, src.row_slice(r).iter().copied().sum());
        }
        let cols = src.cols();
        self.push(
            v,
            Some(Box::new(move |g, _, store| {
                let mut ag = Tensor::zeros(g.rows(), cols);
                for r in 0..g.rows() {
                    let gx = g.at(r, 0);
                    for d in ag.row_slice_mut(r) {
                        *d = gx;
                    }
                }
                store.add(a.0, ag);
            })),
        )
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let v = Tensor::scalar(self.values[a.0].sum());
        let (rows, cols) = (self.values[a.0].rows(), self.values[a.0].cols());
        self.push(
            v,
            Some(Box::new(move |g, _, store| {
                store.add(a.0, Tensor::filled(rows, cols, g.item()));
            })),
        )
    }

    // ---- softmax family ----

    /// Row-wise log-softmax with max subtraction.
    pub fn log_softmax_rows(&mut self, a: Var) -> Var {
        let src = &self.values[a.0];
        let mut v = src.clone();
        for r in 0..v.rows() {
            let out = crate::tensor::log_softmax_slice(src.row_slice(r));
            v.row_slice_mut(r).copy_from_slice(&out);
        }
        let out_val = v.clone();
        self.push(
            v,
            Some(Box::new(move |g, _, store| {
                let mut ag = g.clone();
                for r in 0..ag.rows() {
                    let gsum: F = g.row_slice(r).iter().copied().sum();
                    let y = out_val.row_slice(r);
                    let dst = ag.row_slice_mut(r);
                    for (d, &yv) in dst.iter_mut().zip(y) {
                        *d = *d - yv.exp() * gsum;
                    }
                }
                store.add(a.0, ag);
            })),
        )
    }

    /// Sum over rows of the softmax cross-entropy against integer targets:
    /// Σ_r (logsumexp(x_r) − x_r[target_r]). Scalar output.
    pub fn ce_sum(&mut self, logits: Var, targets: &[usize]) -> Var {
        let src = &self.values[logits.0];
        assert_eq!(src.rows(), targets.len());
        let mut total = F::zero();
        for (r, &t) in targets.iter().enumerate() {
            assert!(t < src.cols(), "target id out of range");
            let row = src.row_slice(r);
            let lp = crate::tensor::log_softmax_slice(row);
            total += -lp[t];
        }
        let targets = targets.to_vec();
        self.push(
            Tensor::scalar(total),
            Some(Box::new(move |g, vals, store| {
                let src = &vals[logits.0];
                let gx = g.item();
                let mut lg = Tensor::zeros(src.rows(), src.cols());
                for (r, &t) in targets.iter().enumerate() {
                    let sm = crate::tensor::softmax_slice(src.row_slice(r));
                    let dst = lg.row_slice_mut(r);
                    for (d, &p) in dst.iter_mut().zip(&sm) {
                        *d = gx * p;
                    }
                    dst[t] = dst[t] - gx;
                }
                store.add(logits.0, lg);
            })),
        )
    }
}

impl<F: Real> Default for Tape<F> {
    fn default() -> Self {
        Tape::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn rand_tensor(rng: &mut StdRng, rows: usize, cols: usize) -> Tensor<f64> {
        Tensor::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    /// Checks d(scalar output)/d(inputs) against central differences for a
    /// graph builder that maps leaf tensors to a scalar var.
    fn grad_check(
        inputs: &[Tensor<f64>],
        build: impl Fn(&mut Tape<f64>, &[Var]) -> Var,
    ) {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
        let root = build(&mut tape, &vars);
        let store = tape.backward(root);

        let eps = 1e-6;
        for (i, input) in inputs.iter().enumerate() {
            let analytic = store.get(vars[i]).cloned().unwrap_or_else(|| {
                Tensor::zeros(input.rows(), input.cols())
            });
            for k in 0..input.len() {
                let eval = |delta: f64| {
                    let mut shifted: Vec<Tensor<f64>> = inputs.to_vec();
                    shifted[i].data_mut()[k] += delta;
                    let mut t = Tape::no_grad();
                    let vs: Vec<Var> = shifted.iter().map(|x| t.leaf(x.clone())).collect();
                    let r = build(&mut t, &vs);
                    t.value(r).item()
                };
                let numeric = (eval(eps) - eval(-eps)) / (2.0 * eps);
                let a = analytic.data()[k];
                let denom = a.abs().max(numeric.abs()).max(1e-4);
                assert!(
                    (a - numeric).abs() / denom < 1e-5,
                    "input {i} elem {k}: analytic {a} vs numeric {numeric}"
                );
            }
        }
    }

    #[test]
    fn grads_matmul_chain() {
        let mut rng = StdRng::seed_from_u64(1);
        let a = rand_tensor(&mut rng, 3, 4);
        let b = rand_tensor(&mut rng, 4, 2);
        grad_check(&[a, b], |t, v| {
            let m = t.matmul(v[0], v[1]);
            let s = t.tanh(m);
            t.sum_all(s)
        });
    }

    #[test]
    fn grads_matmul_bt() {
        let mut rng = StdRng::seed_from_u64(2);
        let a = rand_tensor(&mut rng, 2, 5);
        let b = rand_tensor(&mut rng, 3, 5);
        grad_check(&[a, b], |t, v| {
            let m = t.matmul_bt(v[0], v[1]);
            t.sum_all(m)
        });
    }

    #[test]
    fn grads_elementwise_and_broadcast() {
        let mut rng = StdRng::seed_from_u64(3);
        let a = rand_tensor(&mut rng, 3, 4);
        let b = rand_tensor(&mut rng, 3, 4);
        let row = rand_tensor(&mut rng, 1, 4);
        let col = rand_tensor(&mut rng, 3, 1);
        grad_check(&[a, b, row, col], |t, v| {
            let x = t.mul(v[0], v[1]);
            let x = t.add_row(x, v[2]);
            let x = t.mul_row(x, v[2]);
            let x = t.mul_col(x, v[3]);
            let x = t.sigmoid(x);
            let x = t.exp(x);
            t.sum_all(x)
        });
    }

    #[test]
    fn grads_concat_slice_select() {
        let mut rng = StdRng::seed_from_u64(4);
        let table = rand_tensor(&mut rng, 5, 3);
        let b = rand_tensor(&mut rng, 2, 4);
        grad_check(&[table, b], |t, v| {
            let rows = t.select_rows(v[0], &[4, 1]);
            let cat = t.concat_cols(&[rows, v[1]]);
            let sl = t.slice_cols(cat, 2, 4);
            let s = t.tanh(sl);
            t.sum_all(s)
        });
    }

    #[test]
    fn grads_softmax_and_ce() {
        let mut rng = StdRng::seed_from_u64(5);
        let logits = rand_tensor(&mut rng, 3, 5);
        let y = rand_tensor(&mut rng, 3, 5).map(|x| x.abs());
        grad_check(&[logits, y], |t, v| {
            let lp = t.log_softmax_rows(v[0]);
            let m = t.mul(lp, v[1]);
            let rs = t.row_sum(m);
            let s0 = t.sum_all(rs);
            let ce = t.ce_sum(v[0], &[2, 0, 4]);
            t.add_scaled(ce, s0, 0.5)
        });
    }

    #[test]
    fn grads_log_sigmoid_and_affine() {
        let mut rng = StdRng::seed_from_u64(6);
        let a = rand_tensor(&mut rng, 2, 3);
        grad_check(&[a], |t, v| {
            let lf = t.log_sigmoid_clamped(v[0], (1e-6f64).ln(), (1.0 - 1e-6f64).ln());
            let f = t.exp(lf);
            let omf = t.affine(f, -1.0, 1.0);
            let x = t.mul(omf, f);
            let x = t.add_scaled(x, lf, 0.3);
            let x = t.sub(x, v[0]);
            t.sum_all(x)
        });
    }

    #[test]
    fn backward_accumulates_fanout() {
        let mut tape = Tape::new();
        let a = tape.leaf(Tensor::scalar(3.0f64));
        let b = tape.mul(a, a); // a², da = 2a = 6
        let store = tape.backward(b);
        assert_eq!(store.get(a).unwrap().item(), 6.0);
    }

    #[test]
    fn no_grad_tape_computes_values_only() {
        let mut tape = Tape::no_grad();
        let a = tape.leaf(Tensor::scalar(2.0f64));
        let b = tape.mul(a, a);
        assert_eq!(tape.value(b).item(), 4.0);
    }
}
