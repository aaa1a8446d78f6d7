//! Rational RNN cell and span-representation tables.
//!
//! The cell is gated but *linear in its state*: the forget gate and the
//! candidate depend only on the current input, never on the previous state.
//! That linearity is what makes span representations cheap: the encoding of
//! any span `[i, j]` can be recovered from two prefix states by one
//! subtraction, instead of re-running the recurrence from position `i`.
//!
//! For each position the cell computes
//!
//! ```text
//! f_t = σ(W_f h_t + b_f)
//! u_t = (1 − f_t) ⊙ tanh(W_u h_t + b_u)
//! c_t = f_t ⊙ c_{t−1} + u_t
//! ```
//!
//! and the span encoding satisfies
//!
//! ```text
//! c_{i,j} = c_j − c_{i−1} ⊙ (f_i ⊙ f_{i+1} ⊙ … ⊙ f_j)
//! ```
//!
//! Gate products are carried as running sums of `log f`, so the table fill is
//! a pair of prefix-sum lookups and one `exp` per span. [`naive_span`] is the
//! independent oracle: it re-runs the recurrence from a zero state at the
//! span start and must agree with the table to floating-point accuracy.

use crate::error::{Error, Result};
use crate::tensor::{log_sigmoid, Real, Tensor};

/// Forget gates are clamped into [GATE_FLOOR, 1 − GATE_FLOOR] before their
/// logs are taken; the division form of the table is undefined at 0 and the
/// clamp bounds the relative error of the subtraction identity.
pub const GATE_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Cell parameters. Weights are stored input-major (`d_h × d_r`) so that a
/// hidden row vector right-multiplies them.
#[derive(Clone, Debug)]
pub struct RrnnParams<F: Real> {
    pub w_f: Tensor<F>,
    pub b_f: Tensor<F>,
    pub w_u: Tensor<F>,
    pub b_u: Tensor<F>,
}

impl<F: Real> RrnnParams<F> {
    pub fn new(w_f: Tensor<F>, b_f: Tensor<F>, w_u: Tensor<F>, b_u: Tensor<F>) -> Result<Self> {
        if w_f.rows() != w_u.rows() || w_f.cols() != w_u.cols() {
            return Err(Error::Shape("rrnn weight matrices disagree".into()));
        }
        if b_f.rows() != 1 || b_f.cols() != w_f.cols() || b_u.rows() != 1 || b_u.cols() != w_u.cols()
        {
            return Err(Error::Shape("rrnn bias width must match cell width".into()));
        }
        let p = RrnnParams { w_f, b_f, w_u, b_u };
        if !p.w_f.is_finite() || !p.b_f.is_finite() || !p.w_u.is_finite() || !p.b_u.is_finite() {
            return Err(Error::NonFinite("rrnn parameters".into()));
        }
        Ok(p)
    }

    /// Input width d_h.
    pub fn input_dim(&self) -> usize {
        self.w_f.rows()
    }

    /// Cell width d_r.
    pub fn cell_dim(&self) -> usize {
        self.w_f.cols()
    }
}

fn clamp_log_gate<F: Real>(pre: F) -> F {
    let lo = F::from_f64(GATE_FLOOR.ln());
    let hi = F::from_f64((1.0 - GATE_FLOOR).ln());
    log_sigmoid(pre).max(lo).min(hi)
}

/// One cell application. Returns `(c_t, f_t, u_t)`.
pub fn rrnn_step<F: Real>(
    params: &RrnnParams<F>,
    h_t: &[F],
    c_prev: &[F],
) -> Result<(Vec<F>, Vec<F>, Vec<F>)> {
    let d_h = params.input_dim();
    let d_r = params.cell_dim();
    if h_t.len() != d_h {
        return Err(Error::Shape(format!("input width {} != d_h {}", h_t.len(), d_h)));
    }
    if c_prev.len() != d_r {
        return Err(Error::Shape(format!("state width {} != d_r {}", c_prev.len(), d_r)));
    }
    if h_t.iter().any(|x| !x.is_finite()) || c_prev.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("rrnn_step input".into()));
    }
    let (f, u) = gates(params, h_t);
    let c: Vec<F> = f
        .iter()
        .zip(&u)
        .zip(c_prev)
        .map(|((&fv, &uv), &cv)| fv * cv + uv)
        .collect();
    Ok((c, f, u))
}

/// Gate and candidate for one input; these do not depend on the state.
fn gates<F: Real>(params: &RrnnParams<F>, h_t: &[F]) -> (Vec<F>, Vec<F>) {
    let d_r = params.cell_dim();
    let mut pre_f = params.b_f.data().to_vec();
    let mut pre_u = params.b_u.data().to_vec();
    for (k, &h) in h_t.iter().enumerate() {
        let wf_row = params.w_f.row_slice(k);
        let wu_row = params.w_u.row_slice(k);
        for j in 0..d_r {
            pre_f[j] += h * wf_row[j];
            pre_u[j] += h * wu_row[j];
        }
    }
    let f: Vec<F> = pre_f.iter().map(|&p| clamp_log_gate(p).exp()).collect();
    let u: Vec<F> = pre_u
        .iter()
        .zip(&f)
        .map(|(&p, &fv)| (F::one() - fv) * p.tanh())
        .collect();
    (f, u)
}

/// Full recurrence record: states, gates, candidates, and running log-gate
/// sums, in the layout the span table needs.
#[derive(Clone, Debug)]
pub struct RrnnTrace<F: Real> {
    direction: Direction,
    n: usize,
    d_r: usize,
    /// f[t−1] and u[t−1] hold the gate/candidate at position t (1-based).
    f: Vec<Vec<F>>,
    u: Vec<Vec<F>>,
    /// Forward: slot t holds the state after reading 1..=t (slot 0 = c_init).
    /// Backward: slot t−1 holds the state after reading n..=t (slot n = c_init).
    state: Vec<Vec<F>>,
    /// Running sums of log f with the same slot layout as `state`; the
    /// initial slot is all zeros.
    log_acc: Vec<Vec<F>>,
}

impl<F: Real> RrnnTrace<F> {
    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn cell_dim(&self) -> usize {
        self.d_r
    }

    /// Gate at position t ∈ 1..=n.
    pub fn f(&self, t: usize) -> &[F] {
        &self.f[t - 1]
    }

    /// Candidate at position t ∈ 1..=n.
    pub fn u(&self, t: usize) -> &[F] {
        &self.u[t - 1]
    }

    /// Forward: state after position t, valid for t ∈ 0..=n.
    /// Backward: state after consuming n down to t, valid for t ∈ 1..=n+1.
    pub fn state(&self, t: usize) -> &[F] {
        match self.direction {
            Direction::Forward => &self.state[t],
            Direction::Backward => &self.state[t - 1],
        }
    }

    /// Accumulated log-gate sums with the same indexing as [`Self::state`].
    pub fn log_acc(&self, t: usize) -> &[F] {
        match self.direction {
            Direction::Forward => &self.log_acc[t],
            Direction::Backward => &self.log_acc[t - 1],
        }
    }
}

/// Runs the cell left to right over `inputs`, starting from `c_init`.
pub fn run_chain<F: Real>(
    params: &RrnnParams<F>,
    inputs: &[Vec<F>],
    c_init: &[F],
) -> Result<RrnnTrace<F>> {
    if inputs.is_empty() {
        return Err(Error::InvalidArg("run_chain needs at least one input".into()));
    }
    let n = inputs.len();
    let d_r = params.cell_dim();
    if c_init.len() != d_r {
        return Err(Error::Shape("c_init width != d_r".into()));
    }
    let mut trace = RrnnTrace {
        direction: Direction::Forward,
        n,
        d_r,
        f: Vec::with_capacity(n),
        u: Vec::with_capacity(n),
        state: Vec::with_capacity(n + 1),
        log_acc: Vec::with_capacity(n + 1),
    };
    trace.state.push(c_init.to_vec());
    trace.log_acc.push(vec![F::zero(); d_r]);
    let mut c = c_init.to_vec();
    for h in inputs {
        let (c_next, f, u) = rrnn_step(params, h, &c)?;
        let prev_acc = trace.log_acc.last().unwrap().clone();
        let acc: Vec<F> = prev_acc.iter().zip(&f).map(|(&a, &fv)| a + fv.ln()).collect();
        trace.f.push(f);
        trace.u.push(u);
        trace.state.push(c_next.clone());
        trace.log_acc.push(acc);
        c = c_next;
    }
    Ok(trace)
}

/// Runs the cell right to left over `inputs`, starting from `c_init` past the
/// final position. The resulting trace answers backward span lookups on the
/// original (unreversed) index space.
pub fn run_chain_rev<F: Real>(
    params: &RrnnParams<F>,
    inputs: &[Vec<F>],
    c_init: &[F],
) -> Result<RrnnTrace<F>> {
    if inputs.is_empty() {
        return Err(Error::InvalidArg("run_chain_rev needs at least one input".into()));
    }
    let n = inputs.len();
    let d_r = params.cell_dim();
    if c_init.len() != d_r {
        return Err(Error::Shape("c_init width != d_r".into()));
    }
    let mut f_by_pos: Vec<Vec<F>> = vec![Vec::new(); n];
    let mut u_by_pos: Vec<Vec<F>> = vec![Vec::new(); n];
    // slot t−1 = state after consuming n..=t; slot n = c_init
    let mut state: Vec<Vec<F>> = vec![Vec::new(); n + 1];
    let mut log_acc: Vec<Vec<F>> = vec![Vec::new(); n + 1];
    state[n] = c_init.to_vec();
    log_acc[n] = vec![F::zero(); d_r];
    let mut c = c_init.to_vec();
    for t in (1..=n).rev() {
        let (c_next, f, u) = rrnn_step(params, &inputs[t - 1], &c)?;
        let acc: Vec<F> = log_acc[t].iter().zip(&f).map(|(&a, &fv)| a + fv.ln()).collect();
        f_by_pos[t - 1] = f;
        u_by_pos[t - 1] = u;
        state[t - 1] = c_next.clone();
        log_acc[t - 1] = acc;
        c = c_next;
    }
    Ok(RrnnTrace {
        direction: Direction::Backward,
        n,
        d_r,
        f: f_by_pos,
        u: u_by_pos,
        state,
        log_acc,
    })
}

/// All span representations with length ≤ m, for every end position.
#[derive(Clone, Debug)]
pub struct SpanTable<F: Real> {
    direction: Direction,
    n: usize,
    m: usize,
    d_r: usize,
    /// rows[j−1][off] = representation of span [j−off, j].
    rows: Vec<Vec<Vec<F>>>,
}

impl<F: Real> SpanTable<F> {
    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn max_len(&self) -> usize {
        self.m
    }

    pub fn cell_dim(&self) -> usize {
        self.d_r
    }

    pub fn covers(&self, i: usize, j: usize) -> bool {
        i >= 1 && i <= j && j <= self.n && j - i < self.m
    }

    /// Representation of span [i, j], 1-based inclusive.
    pub fn repr(&self, i: usize, j: usize) -> Result<&[F]> {
        if !self.covers(i, j) {
            return Err(Error::InvalidArg(format!(
                "span [{i}, {j}] outside table (n={}, m={})",
                self.n, self.m
            )));
        }
        Ok(&self.rows[j - 1][j - i])
    }
}

/// Fills the table from a trace using the prefix-difference identity.
/// Spans never cross the chain start; each end position j holds the
/// min(j, m) spans ending there.
pub fn span_table<F: Real>(trace: &RrnnTrace<F>, m: usize) -> Result<SpanTable<F>> {
    if m < 1 {
        return Err(Error::InvalidArg("span table requires m >= 1".into()));
    }
    let n = trace.len();
    let d_r = trace.cell_dim();
    let mut rows = Vec::with_capacity(n);
    for j in 1..=n {
        let avail = m.min(j);
        let mut row = Vec::with_capacity(avail);
        for off in 0..avail {
            let i = j - off;
            row.push(span_from_trace(trace, i, j));
        }
        rows.push(row);
    }
    Ok(SpanTable { direction: trace.direction(), n, m, d_r, rows })
}

fn span_from_trace<F: Real>(trace: &RrnnTrace<F>, i: usize, j: usize) -> Vec<F> {
    match trace.direction() {
        Direction::Forward => {
            let end = trace.state(j);
            let start = trace.state(i - 1);
            let la_end = trace.log_acc(j);
            let la_start = trace.log_acc(i - 1);
            end.iter()
                .zip(start)
                .zip(la_end.iter().zip(la_start))
                .map(|((&e, &s), (&le, &ls))| e - s * (le - ls).exp())
                .collect()
        }
        Direction::Backward => {
            let end = trace.state(i);
            let start = trace.state(j + 1);
            let la_end = trace.log_acc(i);
            let la_start = trace.log_acc(j + 1);
            end.iter()
                .zip(start)
                .zip(la_end.iter().zip(la_start))
                .map(|((&e, &s), (&le, &ls))| e - s * (le - ls).exp())
                .collect()
        }
    }
}

/// Brute-force oracle: encodes span [i, j] by running the recurrence afresh
/// from a zero state at position i (or, for the backward direction, from a
/// zero state at position j moving left). Quadratic, test-grade, and
/// deliberately independent of the prefix-difference path.
pub fn naive_span<F: Real>(
    params: &RrnnParams<F>,
    inputs: &[Vec<F>],
    i: usize,
    j: usize,
) -> Result<Vec<F>> {
    naive_span_dir(params, inputs, i, j, Direction::Forward)
}

pub fn naive_span_dir<F: Real>(
    params: &RrnnParams<F>,
    inputs: &[Vec<F>],
    i: usize,
    j: usize,
    direction: Direction,
) -> Result<Vec<F>> {
    let n = inputs.len();
    if i < 1 || i > j || j > n {
        return Err(Error::InvalidArg(format!("span [{i}, {j}] out of range for n={n}")));
    }
    let mut c = vec![F::zero(); params.cell_dim()];
    match direction {
        Direction::Forward => {
            for t in i..=j {
                let (c_next, _, _) = rrnn_step(params, &inputs[t - 1], &c)?;
                c = c_next;
            }
        }
        Direction::Backward => {
            for t in (i..=j).rev() {
                let (c_next, _, _) = rrnn_step(params, &inputs[t - 1], &c)?;
                c = c_next;
            }
        }
    }
    Ok(c)
}

/// Concatenated bidirectional representation of span [i, j]: forward half
/// first, 2·d_r wide.
pub fn bidir_span_repr<F: Real>(
    fwd: &SpanTable<F>,
    bwd: &SpanTable<F>,
    i: usize,
    j: usize,
) -> Result<Vec<F>> {
    if fwd.direction() != Direction::Forward || bwd.direction() != Direction::Backward {
        return Err(Error::InvalidArg("bidir_span_repr wants a forward and a backward table".into()));
    }
    let mut out = fwd.repr(i, j)?.to_vec();
    out.extend_from_slice(bwd.repr(i, j)?);
    Ok(out)
}
