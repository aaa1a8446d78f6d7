//! Built-in verification suites: span-table-vs-oracle equivalence, greedy
//! tree recovery, and the full-model gradient check. The `selftest` CLI
//! command runs them at small scale; the acceptance tests run them at full
//! scale. Fixture generators used by property tests live here too.

use rand::Rng;

use crate::parser::{greedy_parse, ParseTree, ScoreMatrix};
use crate::rrnn::{
    naive_span_dir, run_chain, run_chain_rev, span_table, Direction, RrnnParams,
};
use crate::tensor::{Real, Tensor};

/// Outcome of one verification suite.
#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    pub failures: usize,
    /// Worst observed error, where the suite measures one.
    pub worst: f64,
    pub detail: String,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        SuiteReport {
            name: name.to_string(),
            passed: true,
            cases: 0,
            failures: 0,
            worst: 0.0,
            detail: String::new(),
        }
    }
}

// ---- random binary trees and their score encoding ----

/// Uniformly random split points, recursively.
pub fn random_binary_tree<R: Rng>(n: usize, rng: &mut R) -> ParseTree {
    fn build<R: Rng>(i: usize, j: usize, rng: &mut R) -> ParseTree {
        if i == j {
            return ParseTree::Leaf(i);
        }
        let split = rng.gen_range(i..j); // left = [i, split], right = [split+1, j]
        let left = build(i, split, rng);
        let right = build(split + 1, j, rng);
        ParseTree::Node { span: (i, j), left: Box::new(left), right: Box::new(right) }
    }
    build(1, n, rng)
}

/// 0/1 score matrix marking the spans of `tree` (single-token spans
/// included): score(j, k) = 1 iff [j−k, j] is a span of the tree.
pub fn encode_tree_scores(tree: &ParseTree, n: usize) -> ScoreMatrix {
    let spans = tree.brackets(true);
    let rows: Vec<Vec<f64>> = (1..=n)
        .map(|j| {
            (0..j)
                .map(|k| if spans.contains(&(j - k, j)) { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    ScoreMatrix::new(rows)
}

/// Recovery check: every random binary tree, encoded as its 0/1 score
/// matrix, must be reconstructed exactly by greedy decoding.
pub fn tree_recovery_suite<R: Rng>(trees: usize, max_n: usize, rng: &mut R) -> SuiteReport {
    let mut report = SuiteReport::new("tree-recovery");
    for case in 0..trees {
        let n = rng.gen_range(2..=max_n);
        let tree = random_binary_tree(n, rng);
        let scores = encode_tree_scores(&tree, n);
        report.cases += 1;
        match greedy_parse(&scores, n) {
            Ok(decoded) if decoded == tree => {}
            Ok(decoded) => {
                report.failures += 1;
                if report.detail.is_empty() {
                    report.detail = format!(
                        "case {case}: n={n} expected {:?} got {:?}",
                        tree.brackets(true),
                        decoded.brackets(true)
                    );
                }
            }
            Err(e) => {
                report.failures += 1;
                if report.detail.is_empty() {
                    report.detail = format!("case {case}: decode error {e}");
                }
            }
        }
    }
    report.passed = report.failures == 0;
    report
}

// ---- span-table oracle equivalence ----

fn rand_tensor<F: Real, R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> Tensor<F> {
    Tensor::from_fn(rows, cols, |_, _| F::from_f64(rng.gen_range(-scale..scale)))
}

/// Relative error between two vectors, measured on their norms.
fn rel_err<F: Real>(a: &[F], b: &[F]) -> f64 {
    let mut diff = 0.0f64;
    let mut base = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        let d = x.to_f64() - y.to_f64();
        diff += d * d;
        base += y.to_f64() * y.to_f64();
    }
    diff.sqrt() / base.sqrt().max(1e-8)
}

/// One precision's pass over random draws: fill the table via the
/// prefix-difference identity and compare every valid span, in both
/// directions, against the recompute-from-scratch oracle.
pub fn span_oracle_pass<F: Real, R: Rng>(
    draws: usize,
    max_dr: usize,
    max_n: usize,
    tol: f64,
    rng: &mut R,
) -> (usize, usize, f64) {
    let mut cases = 0usize;
    let mut failures = 0usize;
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let d_h = rng.gen_range(1..=4);
        let d_r = rng.gen_range(1..=max_dr);
        let n = rng.gen_range(1..=max_n);
        let params = RrnnParams::<F>::new(
            rand_tensor(rng, d_h, d_r, 0.8),
            rand_tensor(rng, 1, d_r, 0.5),
            rand_tensor(rng, d_h, d_r, 0.8),
            rand_tensor(rng, 1, d_r, 0.5),
        )
        .unwrap();
        let inputs: Vec<Vec<F>> = (0..n)
            .map(|_| (0..d_h).map(|_| F::from_f64(rng.gen_range(-1.0..1.0))).collect())
            .collect();
        let zero = vec![F::zero(); d_r];
        let fwd = span_table(&run_chain(&params, &inputs, &zero).unwrap(), n).unwrap();
        let bwd = span_table(&run_chain_rev(&params, &inputs, &zero).unwrap(), n).unwrap();
        for j in 1..=n {
            for i in 1..=j {
                for (table, dir) in [(&fwd, Direction::Forward), (&bwd, Direction::Backward)] {
                    let got = table.repr(i, j).unwrap();
                    let want = naive_span_dir(&params, &inputs, i, j, dir).unwrap();
                    let err = rel_err(got, &want);
                    worst = worst.max(err);
                    cases += 1;
                    if err >= tol {
                        failures += 1;
                    }
                }
            }
        }
    }
    (cases, failures, worst)
}

/// Runs [`span_oracle_pass`] in both precisions at their own tolerances.
pub fn span_oracle_suite<R: Rng>(
    draws: usize,
    max_dr: usize,
    max_n: usize,
    tol_f32: f64,
    tol_f64: f64,
    rng: &mut R,
) -> SuiteReport {
    let mut report = SuiteReport::new("span-oracle");
    let (c32, f32_fail, w32) = span_oracle_pass::<f32, R>(draws, max_dr, max_n, tol_f32, rng);
    let (c64, f64_fail, w64) = span_oracle_pass::<f64, R>(draws, max_dr, max_n, tol_f64, rng);
    report.cases = c32 + c64;
    report.failures = f32_fail + f64_fail;
    report.worst = w32.max(w64);
    report.passed = report.failures == 0;
    report.detail = format!("worst single {w32:.3e} (tol {tol_f32:.1e}), worst double {w64:.3e} (tol {tol_f64:.1e})");
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn random_trees_are_well_formed() {
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..100 {
            let n = rng.gen_range(1..=25);
            let t = random_binary_tree(n, &mut rng);
            assert_eq!(t.span(), (1, n));
            assert_eq!(t.internal_count(), n - 1);
        }
    }

    #[test]
    fn recovery_on_handmade_shapes() {
        // left-branching, right-branching, and the two mixed shapes that
        // exercise both tie directions
        for text in ["((a b) c)", "(a (b c))", "(a (b (c d)))", "(((a b) c) d)", "((a b) (c d))"] {
            let read = crate::corpus::read_unlabeled(text).unwrap();
            let tree = ParseTree::from_tree_node(read[0].root()).unwrap();
            let n = tree.len();
            let decoded = greedy_parse(&encode_tree_scores(&tree, n), n).unwrap();
            assert_eq!(decoded, tree, "{text}");
        }
    }

    #[test]
    fn recovery_suite_small_run() {
        let mut rng = StdRng::seed_from_u64(32);
        let report = tree_recovery_suite(200, 20, &mut rng);
        assert!(report.passed, "{}", report.detail);
        assert_eq!(report.cases, 200);
    }

    #[test]
    fn span_oracle_suite_small_run() {
        let mut rng = StdRng::seed_from_u64(33);
        let report = span_oracle_suite(20, 8, 24, 1e-5, 1e-10, &mut rng);
        assert!(report.passed, "{}", report.detail);
    }
}
