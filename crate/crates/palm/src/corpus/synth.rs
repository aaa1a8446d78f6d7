//! Deterministic synthetic corpus with binary gold trees.
//!
//! Sentences come from a small weighted grammar with two noun classes whose
//! verbs must agree with the subject's class. Adjectives and prepositional
//! attachments stretch the distance between subject and verb, which is
//! exactly the kind of dependency span context helps with. Every rule is
//! binary (unary expansions collapse to leaves), so the derivation itself is
//! the gold tree.
//!
//! Used by the smoke-training tests and as a fixture generator; not part of
//! the modelling pipeline.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{GoldTree, TreeNode};
use crate::seeding::stream_rng;

pub struct SynthCorpus {
    pub lines: Vec<String>,
    pub trees: Vec<GoldTree>,
}

const DETS: &[&str] = &["the", "a", "every", "some", "no"];
const NOUNS_A: &[&str] = &["cat", "dog", "bird", "horse", "fox", "wolf"];
const NOUNS_B: &[&str] = &["idea", "plan", "story", "song", "dream", "rumor"];
const ADJS: &[&str] = &["big", "old", "red", "quiet", "shiny", "strange"];
const VT_A: &[&str] = &["chases", "bites", "sees", "follows"];
const VT_B: &[&str] = &["spreads", "inspires", "troubles", "delights"];
const VI_A: &[&str] = &["runs", "sleeps", "barks", "jumps"];
const VI_B: &[&str] = &["fades", "lingers", "echoes", "grows"];
const PREPS: &[&str] = &["near", "behind", "about", "under"];

fn leaf(token: &str) -> TreeNode {
    TreeNode::Leaf { token: token.to_string(), pos: None, bracketed: false }
}

fn node(left: TreeNode, right: TreeNode) -> TreeNode {
    TreeNode::Internal { label: None, children: vec![left, right] }
}

fn pick<'a>(rng: &mut ChaCha8Rng, set: &[&'a str]) -> &'a str {
    set[rng.gen_range(0..set.len())]
}

fn noun_phrase(rng: &mut ChaCha8Rng, class: usize, depth: usize) -> TreeNode {
    let nouns = if class == 0 { NOUNS_A } else { NOUNS_B };
    let det = leaf(pick(rng, DETS));
    let core = if rng.gen_bool(0.4) {
        node(leaf(pick(rng, ADJS)), leaf(pick(rng, nouns)))
    } else {
        leaf(pick(rng, nouns))
    };
    let base = node(det, core);
    if depth < 2 && rng.gen_bool(0.25) {
        let pp_class = rng.gen_range(0..2);
        let pp = node(leaf(pick(rng, PREPS)), noun_phrase(rng, pp_class, depth + 1));
        node(base, pp)
    } else {
        base
    }
}

fn verb_phrase(rng: &mut ChaCha8Rng, class: usize) -> TreeNode {
    let (vt, vi) = if class == 0 { (VT_A, VI_A) } else { (VT_B, VI_B) };
    if rng.gen_bool(0.6) {
        let obj_class = rng.gen_range(0..2);
        node(leaf(pick(rng, vt)), noun_phrase(rng, obj_class, 1))
    } else if rng.gen_bool(0.5) {
        leaf(pick(rng, vi))
    } else {
        let pp_class = rng.gen_range(0..2);
        let pp = node(leaf(pick(rng, PREPS)), noun_phrase(rng, pp_class, 1));
        node(leaf(pick(rng, vi)), pp)
    }
}

fn sentence(rng: &mut ChaCha8Rng) -> TreeNode {
    let class = rng.gen_range(0..2);
    node(noun_phrase(rng, class, 0), verb_phrase(rng, class))
}

/// Generates sentences until the stream (words plus one end-of-sentence mark
/// per line) reaches `target_tokens`.
pub fn generate(target_tokens: usize, seed: u64) -> SynthCorpus {
    let mut rng = stream_rng(seed, "synth-corpus");
    let mut lines = Vec::new();
    let mut trees = Vec::new();
    let mut total = 0usize;
    while total < target_tokens {
        let root = sentence(&mut rng);
        let tree = GoldTree::new(root);
        total += tree.len() + 1;
        lines.push(tree.tokens().join(" "));
        trees.push(tree);
    }
    SynthCorpus { lines, trees }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::oracle_targets;

    #[test]
    fn deterministic_and_sized() {
        let a = generate(2000, 3);
        let b = generate(2000, 3);
        assert_eq!(a.lines, b.lines);
        let total: usize = a.lines.iter().map(|l| l.split_whitespace().count() + 1).sum();
        assert!(total >= 2000);
        let c = generate(2000, 4);
        assert_ne!(a.lines, c.lines);
    }

    #[test]
    fn trees_are_binary_and_match_lines() {
        let corpus = generate(3000, 11);
        fn check_binary(node: &TreeNode) {
            if let TreeNode::Internal { children, .. } = node {
                assert_eq!(children.len(), 2);
                for c in children {
                    check_binary(c);
                }
            }
        }
        for (line, tree) in corpus.lines.iter().zip(&corpus.trees) {
            check_binary(tree.root());
            let toks: Vec<&str> = line.split_whitespace().collect();
            assert_eq!(tree.tokens().iter().map(String::as_str).collect::<Vec<_>>(), toks);
        }
    }

    #[test]
    fn most_sentences_supply_oracle_signal() {
        let corpus = generate(3000, 5);
        let mut with_signal = 0;
        for tree in &corpus.trees {
            if tree.len() >= 3 {
                let y = oracle_targets(tree, 10).unwrap();
                if y.unmasked_count() > 0 {
                    with_signal += 1;
                }
            }
        }
        assert!(with_signal * 2 > corpus.trees.len(), "supervision too sparse");
    }
}
