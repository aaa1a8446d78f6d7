//! Greedy top-down decoding of unlabeled binary trees from span scores, and
//! the evaluation side: bracket F1, branching statistics, and a deterministic
//! right-branching baseline.
//!
//! Decoding recursively splits a span by choosing the best-scoring span
//! ending at its right edge: for `[i, j]` the winner over offsets
//! `k ∈ {0, …, j−i−1}` yields children `[i, j−k−1]` and `[j−k, j]`. Ties
//! break toward the *longest* right span. With scores set to 1 on exactly the
//! spans of a tree (single-token spans included) and 0 elsewhere, the
//! procedure reconstructs that tree: at any node the scored candidates are
//! the true right child and its right-spine descendants, and the true child
//! is the longest of them.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::corpus::{GoldTree, TreeNode};
use crate::error::{Error, Result};

/// Unlabeled binary tree over tokens 1..=n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseTree {
    Leaf(usize),
    Node { span: (usize, usize), left: Box<ParseTree>, right: Box<ParseTree> },
}

impl ParseTree {
    pub fn span(&self) -> (usize, usize) {
        match self {
            ParseTree::Leaf(i) => (*i, *i),
            ParseTree::Node { span, .. } => *span,
        }
    }

    pub fn len(&self) -> usize {
        let (i, j) = self.span();
        j - i + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn internal_count(&self) -> usize {
        match self {
            ParseTree::Leaf(_) => 0,
            ParseTree::Node { left, right, .. } => 1 + left.internal_count() + right.internal_count(),
        }
    }

    fn visit_nodes<'a>(&'a self, f: &mut impl FnMut(&'a ParseTree)) {
        f(self);
        if let ParseTree::Node { left, right, .. } = self {
            left.visit_nodes(f);
            right.visit_nodes(f);
        }
    }

    /// Spans of every node. With `include_trivial = false`, single-token
    /// spans and the root span are dropped.
    pub fn brackets(&self, include_trivial: bool) -> BTreeSet<(usize, usize)> {
        let root_span = self.span();
        let mut out = BTreeSet::new();
        self.visit_nodes(&mut |node| {
            let span = node.span();
            if include_trivial || (span.0 != span.1 && span != root_span) {
                out.insert(span);
            }
        });
        out
    }

    /// Renders with the given token strings (token index 1 maps to
    /// `tokens[0]`). A single leaf still gets parentheses.
    pub fn render(&self, tokens: &[String]) -> String {
        fn inner(t: &ParseTree, tokens: &[String], out: &mut String) {
            match t {
                ParseTree::Leaf(i) => out.push_str(&tokens[i - 1]),
                ParseTree::Node { left, right, .. } => {
                    out.push('(');
                    inner(left, tokens, out);
                    out.push(' ');
                    inner(right, tokens, out);
                    out.push(')');
                }
            }
        }
        match self {
            ParseTree::Leaf(i) => format!("({})", tokens[*i - 1]),
            _ => {
                let mut s = String::new();
                inner(self, tokens, &mut s);
                s
            }
        }
    }

    /// Converts a read tree (strictly binary) into a [`ParseTree`].
    pub fn from_tree_node(node: &TreeNode) -> Result<ParseTree> {
        fn build(node: &TreeNode, next: &mut usize) -> Result<ParseTree> {
            match node {
                TreeNode::Leaf { .. } => {
                    let i = *next;
                    *next += 1;
                    Ok(ParseTree::Leaf(i))
                }
                TreeNode::Internal { children, .. } => {
                    if children.len() != 2 {
                        return Err(Error::InvalidArg(format!(
                            "expected a binary tree, found a node with {} children",
                            children.len()
                        )));
                    }
                    let left = build(&children[0], next)?;
                    let right = build(&children[1], next)?;
                    let span = (left.span().0, right.span().1);
                    Ok(ParseTree::Node { span, left: Box::new(left), right: Box::new(right) })
                }
            }
        }
        let mut next = 1;
        build(node, &mut next)
    }
}

/// Per-sentence span scores: `score(j, k)` is the score of span [j−k, j].
/// Row j holds min(j, max_len) entries.
#[derive(Clone, Debug)]
pub struct ScoreMatrix {
    rows: Vec<Vec<f64>>,
}

impl ScoreMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Self {
        ScoreMatrix { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.rows[j - 1]
    }

    pub fn score(&self, j: usize, k: usize) -> Option<f64> {
        self.rows.get(j - 1).and_then(|r| r.get(k)).copied()
    }
}

/// Recursive greedy split. Errors if a needed score is missing from the
/// matrix (a row shorter than the span being split).
pub fn greedy_parse(scores: &ScoreMatrix, n: usize) -> Result<ParseTree> {
    if n < 1 {
        return Err(Error::InvalidArg("cannot parse an empty sentence".into()));
    }
    fn split(scores: &ScoreMatrix, i: usize, j: usize) -> Result<ParseTree> {
        if i == j {
            return Ok(ParseTree::Leaf(i));
        }
        let mut best_k = 0usize;
        let mut best = f64::NEG_INFINITY;
        for k in 0..=(j - i - 1) {
            let s = scores.score(j, k).ok_or(Error::MissingScore { j, k })?;
            // ties break toward the longest right span
            if s >= best {
                best = s;
                best_k = k;
            }
        }
        let left = split(scores, i, j - best_k - 1)?;
        let right = split(scores, j - best_k, j)?;
        Ok(ParseTree::Node { span: (i, j), left: Box::new(left), right: Box::new(right) })
    }
    split(scores, 1, n)
}

/// Deterministic baseline scores that make every greedy split peel a single
/// token off the left: within each row the longest available right span gets
/// the row's highest value, counting down to 1 at the single-token span.
pub fn right_branching_scores(n: usize) -> ScoreMatrix {
    let rows = (1..=n).map(|j| (0..j).map(|k| (k + 1) as f64).collect()).collect();
    ScoreMatrix::new(rows)
}

/// Spans of every node of a tree; see [`ParseTree::brackets`].
pub fn tree_brackets(tree: &ParseTree, include_trivial: bool) -> BTreeSet<(usize, usize)> {
    tree.brackets(include_trivial)
}

/// One sentence's brackets for evaluation: token count plus span set.
#[derive(Clone, Debug)]
pub struct SentenceBrackets {
    pub n: usize,
    pub spans: BTreeSet<(usize, usize)>,
}

impl SentenceBrackets {
    pub fn from_parse_tree(tree: &ParseTree) -> Self {
        SentenceBrackets { n: tree.len(), spans: tree.brackets(true) }
    }

    pub fn from_gold_tree(tree: &GoldTree) -> Self {
        SentenceBrackets { n: tree.len(), spans: tree.span_set() }
    }

    fn nontrivial(&self) -> BTreeSet<(usize, usize)> {
        self.spans
            .iter()
            .copied()
            .filter(|&(i, j)| i != j && !(i == 1 && j == self.n))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct F1Report {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched: usize,
    pub predicted: usize,
    pub gold: usize,
}

/// Corpus-level (micro-averaged) unlabeled bracket F1 over nontrivial spans.
/// Gold n-ary nodes contribute their spans as-is. Scores are percentages.
pub fn unlabeled_f1(pred: &[SentenceBrackets], gold: &[SentenceBrackets]) -> Result<F1Report> {
    if pred.len() != gold.len() {
        return Err(Error::Alignment(format!(
            "{} predicted sentences vs {} gold",
            pred.len(),
            gold.len()
        )));
    }
    let mut matched = 0usize;
    let mut n_pred = 0usize;
    let mut n_gold = 0usize;
    for (idx, (p, g)) in pred.iter().zip(gold).enumerate() {
        if p.n != g.n {
            return Err(Error::Alignment(format!(
                "sentence {}: {} predicted tokens vs {} gold",
                idx + 1,
                p.n,
                g.n
            )));
        }
        let ps = p.nontrivial();
        let gs = g.nontrivial();
        matched += ps.intersection(&gs).count();
        n_pred += ps.len();
        n_gold += gs.len();
    }
    let precision = if n_pred == 0 { 0.0 } else { 100.0 * matched as f64 / n_pred as f64 };
    let recall = if n_gold == 0 { 0.0 } else { 100.0 * matched as f64 / n_gold as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(F1Report { precision, recall, f1, matched, predicted: n_pred, gold: n_gold })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BranchingStats {
    pub left_pct: f64,
    pub right_pct: f64,
    pub counted_splits: usize,
}

/// Percentage of left splits (right child is a single token) and right
/// splits (left child is a single token) over internal nodes spanning at
/// least 3 tokens; splits of length-2 spans are excluded.
pub fn branching_stats(trees: &[ParseTree]) -> BranchingStats {
    let mut left = 0usize;
    let mut right = 0usize;
    let mut counted = 0usize;
    for tree in trees {
        tree.visit_nodes(&mut |node| {
            if let ParseTree::Node { span, left: l, right: r, .. } = node {
                if span.1 - span.0 + 1 >= 3 {
                    counted += 1;
                    if r.len() == 1 {
                        left += 1;
                    } else if l.len() == 1 {
                        right += 1;
                    }
                }
            }
        });
    }
    let pct = |x: usize| if counted == 0 { 0.0 } else { 100.0 * x as f64 / counted as f64 };
    BranchingStats { left_pct: pct(left), right_pct: pct(right), counted_splits: counted }
}
