//! Oracle span-supervision targets derived from gold trees.
//!
//! For token position t, entry i of the m-wide target vector marks whether
//! the span [t−i, t] is a nontrivial gold constituent (single-token spans and
//! the whole sentence are ignored). Rows are normalized to sum to one; tokens
//! whose raw vector is all zero are masked out of the loss rather than set
//! uniform. Gold spans longer than m are unrepresentable and silently
//! omitted.

use crate::corpus::GoldTree;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct OracleSpanTargets {
    m: usize,
    /// rows[t−1] = normalized target for token t; None = masked.
    rows: Vec<Option<Vec<f64>>>,
}

impl OracleSpanTargets {
    pub fn max_len(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Target distribution for token t (1-based); None when masked.
    pub fn row(&self, t: usize) -> Option<&[f64]> {
        self.rows[t - 1].as_deref()
    }

    pub fn masked(&self, t: usize) -> bool {
        self.rows[t - 1].is_none()
    }

    pub fn unmasked_count(&self) -> usize {
        self.rows.iter().filter(|r| r.is_some()).count()
    }
}

pub fn oracle_targets(tree: &GoldTree, m: usize) -> Result<OracleSpanTargets> {
    if m < 1 {
        return Err(Error::InvalidArg("oracle targets require m >= 1".into()));
    }
    let n = tree.len();
    if n < 2 {
        return Err(Error::InvalidArg("oracle targets require a tree over at least 2 tokens".into()));
    }
    let mut raw = vec![vec![0.0f64; m]; n];
    for (i, j) in tree.nontrivial_spans() {
        let offset = j - i;
        if offset < m {
            raw[j - 1][offset] = 1.0;
        }
    }
    let rows = raw
        .into_iter()
        .map(|mut row| {
            let total: f64 = row.iter().sum();
            if total == 0.0 {
                None
            } else {
                for v in &mut row {
                    *v /= total;
                }
                Some(row)
            }
        })
        .collect();
    Ok(OracleSpanTargets { m, rows })
}
