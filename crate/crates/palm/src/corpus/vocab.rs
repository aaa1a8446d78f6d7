//! Token vocabulary with reserved unknown and end-of-sentence symbols.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub const UNK_TOKEN: &str = "<unk>";
pub const EOS_TOKEN: &str = "<eos>";

/// Bijection between tokens and dense ids in `[0, |V|)`. `<unk>` and `<eos>`
/// are always present.
#[derive(Clone, Debug)]
pub struct Vocabulary {
    token_to_id: HashMap<String, u32>,
    id_to_token: Vec<String>,
    unk: u32,
    eos: u32,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn unk_id(&self) -> u32 {
        self.unk
    }

    pub fn eos_id(&self) -> u32 {
        self.eos
    }

    /// Token id, with out-of-vocabulary tokens mapped to `<unk>`.
    pub fn encode(&self, token: &str) -> u32 {
        self.token_to_id.get(token).copied().unwrap_or(self.unk)
    }

    pub fn lookup(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    pub fn decode(&self, id: u32) -> &str {
        &self.id_to_token[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    /// Rebuilds a vocabulary from its token list (line number = id).
    pub fn from_tokens(tokens: Vec<String>) -> Result<Vocabulary> {
        let mut token_to_id = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if token_to_id.insert(t.clone(), i as u32).is_some() {
                return Err(Error::VocabMismatch(format!("duplicate token {t:?}")));
            }
        }
        let unk = *token_to_id
            .get(UNK_TOKEN)
            .ok_or_else(|| Error::VocabMismatch("missing <unk>".into()))?;
        let eos = *token_to_id
            .get(EOS_TOKEN)
            .ok_or_else(|| Error::VocabMismatch("missing <eos>".into()))?;
        Ok(Vocabulary { token_to_id, id_to_token: tokens, unk, eos })
    }

    /// One token per line, line number = id.
    pub fn to_file_string(&self) -> String {
        let mut s = self.id_to_token.join("\n");
        s.push('\n');
        s
    }

    pub fn from_file_string(text: &str) -> Result<Vocabulary> {
        let tokens: Vec<String> = text.lines().map(|l| l.to_string()).collect();
        if tokens.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Vocabulary::from_tokens(tokens)
    }
}

/// Builds a vocabulary from whitespace-tokenized lines. Tokens seen fewer
/// than `min_count` times fall back to `<unk>`. Id order is deterministic:
/// descending count, ties by token.
pub fn build_vocab<S: AsRef<str>>(lines: &[S], min_count: usize) -> Result<Vocabulary> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    let mut total = 0usize;
    for line in lines {
        for tok in line.as_ref().split_whitespace() {
            *counts.entry(tok).or_insert(0) += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::EmptyCorpus);
    }
    let mut kept: Vec<(&str, usize)> =
        counts.into_iter().filter(|&(_, c)| c >= min_count).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let mut id_to_token: Vec<String> = kept.into_iter().map(|(t, _)| t.to_string()).collect();
    for special in [UNK_TOKEN, EOS_TOKEN] {
        if !id_to_token.iter().any(|t| t == special) {
            id_to_token.push(special.to_string());
        }
    }
    Vocabulary::from_tokens(id_to_token)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_count_and_ordering() {
        let v = build_vocab(&["a b a", "b c"], 2).unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(v.decode(0), "a");
        assert_eq!(v.decode(1), "b");
        assert_eq!(v.encode("c"), v.unk_id());
        assert_eq!(v.encode("a"), 0);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let lines: Vec<&str> = vec![];
        assert!(matches!(build_vocab(&lines, 1), Err(Error::EmptyCorpus)));
        assert!(matches!(build_vocab(&[""], 1), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn single_token_corpus() {
        let v = build_vocab(&["x"], 1).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v.decode(0), "x");
        assert_eq!(v.decode(v.unk_id()), UNK_TOKEN);
        assert_eq!(v.decode(v.eos_id()), EOS_TOKEN);
    }

    #[test]
    fn decode_encode_identity_in_vocab() {
        let v = build_vocab(&["the cat sat on the mat", "the dog sat"], 1).unwrap();
        for id in 0..v.len() as u32 {
            assert_eq!(v.encode(v.decode(id)), id);
        }
    }

    #[test]
    fn file_roundtrip() {
        let v = build_vocab(&["a b c a b a"], 1).unwrap();
        let text = v.to_file_string();
        let v2 = Vocabulary::from_file_string(&text).unwrap();
        assert_eq!(v.tokens(), v2.tokens());
        assert_eq!(v.unk_id(), v2.unk_id());
        assert_eq!(v.eos_id(), v2.eos_id());
    }
}
