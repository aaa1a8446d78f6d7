//! Bracketed constituency trees: reading, unary collapse, span extraction,
//! punctuation removal, and the length-40 evaluation filter.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Conventional treebank punctuation part-of-speech tags plus the raw tokens
/// they tag, used when a tree carries no preterminal labels. Overridable via
/// the `punctuation` config key.
pub const DEFAULT_PUNCT: &[&str] = &[
    "``", "''", ".", ",", ":", ";", "?", "!", "-LRB-", "-RRB-", "(", ")", "--", "...", "`", "'",
];

/// Tree node after unary collapse. A leaf remembers whether it was itself
/// bracketed (a preterminal or a collapsed unary chain) so single-token
/// constituents survive span extraction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeNode {
    Leaf { token: String, pos: Option<String>, bracketed: bool },
    Internal { label: Option<String>, children: Vec<TreeNode> },
}

impl TreeNode {
    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { children, .. } => children.iter().map(|c| c.leaf_count()).sum(),
        }
    }

    fn collect_tokens(&self, out: &mut Vec<String>) {
        match self {
            TreeNode::Leaf { token, .. } => out.push(token.clone()),
            TreeNode::Internal { children, .. } => {
                for c in children {
                    c.collect_tokens(out);
                }
            }
        }
    }

    fn collect_spans(&self, next: &mut usize, out: &mut BTreeSet<(usize, usize)>) -> (usize, usize) {
        match self {
            TreeNode::Leaf { bracketed, .. } => {
                let p = *next;
                *next += 1;
                if *bracketed {
                    out.insert((p, p));
                }
                (p, p)
            }
            TreeNode::Internal { children, .. } => {
                let mut start = 0;
                let mut end = 0;
                for (k, c) in children.iter().enumerate() {
                    let (s, e) = c.collect_spans(next, out);
                    if k == 0 {
                        start = s;
                    }
                    end = e;
                }
                out.insert((start, end));
                (start, end)
            }
        }
    }

    /// Unlabeled s-expression, tokens as leaves. A bare leaf still gets one
    /// pair of parentheses so every sentence is a single bracketed item.
    pub fn render_unlabeled(&self) -> String {
        fn inner(node: &TreeNode, out: &mut String) {
            match node {
                TreeNode::Leaf { token, .. } => out.push_str(token),
                TreeNode::Internal { children, .. } => {
                    out.push('(');
                    for (k, c) in children.iter().enumerate() {
                        if k > 0 {
                            out.push(' ');
                        }
                        inner(c, out);
                    }
                    out.push(')');
                }
            }
        }
        match self {
            TreeNode::Leaf { token, .. } => format!("({token})"),
            _ => {
                let mut s = String::new();
                inner(self, &mut s);
                s
            }
        }
    }
}

/// A parsed sentence tree. Structure is n-ary as read, with unary chains
/// collapsed to their lowest node; only the span set matters downstream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoldTree {
    root: TreeNode,
    tokens: Vec<String>,
}

impl GoldTree {
    pub fn new(root: TreeNode) -> Self {
        let mut tokens = Vec::new();
        root.collect_tokens(&mut tokens);
        GoldTree { root, tokens }
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Every bracketed span, 1-based inclusive, deduplicated.
    pub fn span_set(&self) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        let mut next = 1;
        self.root.collect_spans(&mut next, &mut out);
        out
    }

    /// Nontrivial spans: single-token spans and the whole-sentence span are
    /// dropped.
    pub fn nontrivial_spans(&self) -> BTreeSet<(usize, usize)> {
        let n = self.len();
        self.span_set()
            .into_iter()
            .filter(|&(i, j)| i != j && !(i == 1 && j == n))
            .collect()
    }
}

// ---- reading ----

#[derive(Debug, PartialEq)]
enum Tok<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn tokenize(line: &str) -> Vec<Tok<'_>> {
    let mut out = Vec::new();
    let bytes = line.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => {
                out.push(Tok::Open);
                i += 1;
            }
            b')' => {
                out.push(Tok::Close);
                i += 1;
            }
            b' ' | b'\t' => i += 1,
            _ => {
                let start = i;
                while i < bytes.len() && !matches!(bytes[i], b'(' | b')' | b' ' | b'\t') {
                    i += 1;
                }
                out.push(Tok::Atom(&line[start..i]));
            }
        }
    }
    out
}

/// Collapses unary internal chains to their lowest node. A unary node over a
/// leaf becomes the leaf, keeping the innermost label as its part of speech.
fn collapse(node: TreeNode) -> TreeNode {
    match node {
        TreeNode::Leaf { .. } => node,
        TreeNode::Internal { label, children } => {
            let mut children: Vec<TreeNode> = children.into_iter().map(collapse).collect();
            if children.len() == 1 {
                match children.pop().unwrap() {
                    TreeNode::Leaf { token, pos, .. } => TreeNode::Leaf {
                        token,
                        pos: pos.or(label),
                        bracketed: true,
                    },
                    inner => inner,
                }
            } else {
                TreeNode::Internal { label, children }
            }
        }
    }
}

struct Parser<'a> {
    toks: Vec<Tok<'a>>,
    pos: usize,
    line: usize,
    labeled: bool,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> Error {
        Error::TreeParse { line: self.line, msg: msg.to_string() }
    }

    fn peek(&self) -> Option<&Tok<'a>> {
        self.toks.get(self.pos)
    }

    fn node(&mut self) -> Result<TreeNode> {
        match self.toks.get(self.pos) {
            Some(Tok::Open) => {
                self.pos += 1;
                let mut label = None;
                if self.labeled {
                    // a leading atom followed by more content is this node's label
                    if let (Some(Tok::Atom(a)), Some(next)) =
                        (self.toks.get(self.pos), self.toks.get(self.pos + 1))
                    {
                        if !matches!(next, Tok::Close) {
                            label = Some(a.to_string());
                            self.pos += 1;
                        }
                    }
                }
                let mut children = Vec::new();
                loop {
                    match self.peek() {
                        Some(Tok::Close) => {
                            self.pos += 1;
                            break;
                        }
                        Some(_) => children.push(self.node()?),
                        None => return Err(self.err("unbalanced brackets: missing ')'")),
                    }
                }
                if children.is_empty() {
                    return Err(self.err("empty bracket"));
                }
                Ok(TreeNode::Internal { label, children })
            }
            Some(Tok::Atom(a)) => {
                let token = a.to_string();
                self.pos += 1;
                Ok(TreeNode::Leaf { token, pos: None, bracketed: false })
            }
            Some(Tok::Close) => Err(self.err("unexpected ')'")),
            None => Err(self.err("unexpected end of line")),
        }
    }

    fn sentence(&mut self) -> Result<TreeNode> {
        if !matches!(self.peek(), Some(Tok::Open)) {
            return Err(self.err("sentence must start with '('"));
        }
        let node = self.node()?;
        if self.pos != self.toks.len() {
            return Err(self.err("trailing content after tree"));
        }
        Ok(collapse(node))
    }
}

fn read_trees(text: &str, labeled: bool) -> Result<Vec<GoldTree>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut p = Parser { toks: tokenize(line), pos: 0, line: idx + 1, labeled };
        let root = p.sentence()?;
        out.push(GoldTree::new(root));
    }
    Ok(out)
}

/// Reads treebank-style labeled bracketings, one sentence per line. Labels
/// are kept only as leaf part-of-speech annotations; n-ary nodes are
/// preserved as read and unary chains collapse to their lowest node.
pub fn read_bracketed(text: &str) -> Result<Vec<GoldTree>> {
    read_trees(text, true)
}

/// Reads label-free bracketings (the parser's own output format): every atom
/// is a token.
pub fn read_unlabeled(text: &str) -> Result<Vec<GoldTree>> {
    read_trees(text, false)
}

// ---- punctuation removal and the length filter ----

fn is_punct(leaf_pos: &Option<String>, token: &str, punct: &[String]) -> bool {
    if let Some(p) = leaf_pos {
        if punct.iter().any(|q| q == p) {
            return true;
        }
    }
    punct.iter().any(|q| q == token)
}

fn prune(node: &TreeNode, punct: &[String], pos_counter: &mut usize, kept: &mut Vec<usize>) -> Option<TreeNode> {
    match node {
        TreeNode::Leaf { token, pos, bracketed } => {
            let p = *pos_counter;
            *pos_counter += 1;
            if is_punct(pos, token, punct) {
                None
            } else {
                kept.push(p);
                Some(TreeNode::Leaf { token: token.clone(), pos: pos.clone(), bracketed: *bracketed })
            }
        }
        TreeNode::Internal { label, children } => {
            let surviving: Vec<TreeNode> =
                children.iter().filter_map(|c| prune(c, punct, pos_counter, kept)).collect();
            match surviving.len() {
                0 => None,
                _ => Some(collapse(TreeNode::Internal { label: label.clone(), children: surviving })),
            }
        }
    }
}

/// Removes punctuation leaves and re-indexes. Returns the filtered tree and
/// the original 1-based positions of the surviving tokens, or `None` if
/// nothing survives.
pub fn remove_punct(tree: &GoldTree, punct: &[String]) -> Option<(GoldTree, Vec<usize>)> {
    let mut kept = Vec::new();
    let mut counter = 1;
    let pruned = prune(tree.root(), punct, &mut counter, &mut kept)?;
    Some((GoldTree::new(pruned), kept))
}

/// Result of the length-40 filter: surviving trees with their original
/// indices and kept token positions, plus drop counts.
#[derive(Clone, Debug)]
pub struct Wsj40Outcome {
    pub kept: Vec<(usize, GoldTree, Vec<usize>)>,
    pub dropped_long: usize,
    pub dropped_empty: usize,
}

/// Removes punctuation, then drops sentences longer than 40 remaining tokens
/// (and counts sentences emptied by the removal).
pub fn wsj40_filter(trees: &[GoldTree], punct: &[String]) -> Wsj40Outcome {
    let mut out = Wsj40Outcome { kept: Vec::new(), dropped_long: 0, dropped_empty: 0 };
    for (idx, tree) in trees.iter().enumerate() {
        match remove_punct(tree, punct) {
            None => out.dropped_empty += 1,
            Some((filtered, positions)) => {
                if filtered.len() > 40 {
                    out.dropped_long += 1;
                } else {
                    out.kept.push((idx, filtered, positions));
                }
            }
        }
    }
    out
}

pub(crate) fn default_punct_vec() -> Vec<String> {
    DEFAULT_PUNCT.iter().map(|s| s.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spans(t: &GoldTree) -> Vec<(usize, usize)> {
        t.span_set().into_iter().collect()
    }

    #[test]
    fn labeled_read_keeps_nary_and_preterminal_spans() {
        let trees = read_bracketed("(S (NP a) (VP b c))").unwrap();
        assert_eq!(trees.len(), 1);
        let t = &trees[0];
        assert_eq!(t.tokens(), &["a", "b", "c"]);
        assert_eq!(spans(t), vec![(1, 1), (1, 3), (2, 3)]);
        assert_eq!(t.nontrivial_spans().into_iter().collect::<Vec<_>>(), vec![(2, 3)]);
    }

    #[test]
    fn unary_chains_collapse_to_leaf() {
        let trees = read_bracketed("((a))").unwrap();
        let t = &trees[0];
        assert!(matches!(t.root(), TreeNode::Leaf { .. }));
        assert_eq!(t.tokens(), &["a"]);
        // collapse rule verified by round-trip through the unlabeled format
        let rendered = t.root().render_unlabeled();
        assert_eq!(rendered, "(a)");
        let again = read_unlabeled(&rendered).unwrap();
        assert_eq!(again[0].tokens(), t.tokens());
    }

    #[test]
    fn internal_unary_chain_keeps_lowest_node() {
        let trees = read_bracketed("(S (VP (NP a b)))").unwrap();
        let t = &trees[0];
        assert_eq!(spans(t), vec![(1, 2)]);
        match t.root() {
            TreeNode::Internal { label, .. } => assert_eq!(label.as_deref(), Some("NP")),
            _ => panic!("expected internal node"),
        }
    }

    #[test]
    fn unbalanced_brackets_error_with_line_number() {
        let err = read_bracketed("(S (NP a)\n(S (NP a").unwrap_err();
        match err {
            Error::TreeParse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
        assert!(read_bracketed("(S a))").is_err());
        assert!(read_bracketed("bare").is_err());
    }

    #[test]
    fn unlabeled_read_treats_all_atoms_as_tokens() {
        let trees = read_unlabeled("((a b) c)").unwrap();
        let t = &trees[0];
        assert_eq!(t.tokens(), &["a", "b", "c"]);
        assert_eq!(spans(t), vec![(1, 2), (1, 3)]);
        // in the labeled format the same text would read "a" as a label
        let labeled = read_bracketed("((a b) c)").unwrap();
        assert_eq!(labeled[0].tokens(), &["b", "c"]);
    }

    #[test]
    fn single_word_line_is_a_leaf() {
        let trees = read_unlabeled("(w)").unwrap();
        assert_eq!(trees[0].tokens(), &["w"]);
        assert!(matches!(trees[0].root(), TreeNode::Leaf { .. }));
    }

    #[test]
    fn punct_removal_reindexes_spans() {
        let punct = default_punct_vec();
        let trees = read_bracketed("(S (NP (DT the) (NN cat)) (, ,) (VP (VB sat)))").unwrap();
        let (filtered, kept) = remove_punct(&trees[0], &punct).unwrap();
        assert_eq!(filtered.tokens(), &["the", "cat", "sat"]);
        assert_eq!(kept, vec![1, 2, 4]);
        assert!(filtered.span_set().contains(&(1, 2)));
    }

    #[test]
    fn wsj40_drops_by_length_after_removal() {
        let punct = default_punct_vec();
        // 41 tokens + 2 punctuation: kept (39 after removal)
        let mut sent41 = String::from("(S");
        for i in 0..39 {
            sent41.push_str(&format!(" (NN w{i})"));
        }
        sent41.push_str(" (, ,) (. .))");
        // 45 tokens, no punctuation: dropped
        let mut sent45 = String::from("(S");
        for i in 0..45 {
            sent45.push_str(&format!(" (NN w{i})"));
        }
        sent45.push(')');
        // punctuation-only: dropped and counted
        let text = format!("{sent41}\n{sent45}\n(S (, ,) (. .))");
        let trees = read_bracketed(&text).unwrap();
        let out = wsj40_filter(&trees, &punct);
        assert_eq!(out.kept.len(), 1);
        assert_eq!(out.kept[0].0, 0);
        assert_eq!(out.kept[0].1.len(), 39);
        assert_eq!(out.dropped_long, 1);
        assert_eq!(out.dropped_empty, 1);
    }
}
