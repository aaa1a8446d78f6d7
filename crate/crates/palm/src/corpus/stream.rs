//! Continuous token stream and truncated-backprop training windows.

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

/// Integer-encoded corpus with sentence boundaries marked on the
/// end-of-sentence positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenStream {
    pub ids: Vec<u32>,
    pub eos_flags: Vec<bool>,
}

impl TokenStream {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Encodes one tokenized sentence per line, suffixing each with `<eos>`.
/// Unknown tokens map to `<unk>`.
pub fn encode_stream<S: AsRef<str>>(lines: &[S], vocab: &Vocabulary) -> TokenStream {
    let mut ids = Vec::new();
    let mut eos_flags = Vec::new();
    for line in lines {
        for tok in line.as_ref().split_whitespace() {
            ids.push(vocab.encode(tok));
            eos_flags.push(false);
        }
        ids.push(vocab.eos_id());
        eos_flags.push(true);
    }
    TokenStream { ids, eos_flags }
}

/// One truncated-backprop segment: `targets[t] = stream token following
/// inputs[t]`, for every lane. Token layout is step-major: slot `t*lanes + b`.
#[derive(Clone, Debug)]
pub struct Window {
    pub inputs: Vec<u32>,
    pub targets: Vec<u32>,
    pub steps: usize,
    pub lanes: usize,
    /// 1-based lane-stream position of the first input step.
    pub start_pos: usize,
}

impl Window {
    #[inline]
    pub fn input(&self, t: usize, b: usize) -> u32 {
        self.inputs[t * self.lanes + b]
    }

    #[inline]
    pub fn target(&self, t: usize, b: usize) -> u32 {
        self.targets[t * self.lanes + b]
    }

    /// 1-based lane-stream position of input step `t`.
    #[inline]
    pub fn position(&self, t: usize) -> usize {
        self.start_pos + t
    }
}

/// The stream reshaped into `lanes` continuous lanes of equal length, cut
/// into consecutive windows. Leftover tokens that do not fill the last lane
/// are dropped; the final ragged window is kept.
#[derive(Clone, Debug)]
pub struct WindowSet {
    pub windows: Vec<Window>,
    pub lanes: usize,
    pub lane_len: usize,
}

impl WindowSet {
    /// Total number of prediction targets across all windows.
    pub fn target_count(&self) -> usize {
        self.windows.iter().map(|w| w.steps * w.lanes).sum()
    }

    /// Global stream index (0-based) of the token at `(lane, pos)` where
    /// `pos` is the 1-based position within the lane.
    pub fn stream_index(&self, lane: usize, pos: usize) -> usize {
        lane * self.lane_len + (pos - 1)
    }
}

pub fn make_windows(stream: &TokenStream, batch_size: usize, bptt_len: usize) -> Result<WindowSet> {
    if bptt_len < 1 {
        return Err(Error::InvalidArg("bptt length must be at least 1".into()));
    }
    if batch_size < 1 {
        return Err(Error::InvalidArg("batch size must be at least 1".into()));
    }
    if stream.len() < batch_size * 2 {
        return Err(Error::InvalidArg(format!(
            "stream of {} tokens cannot fill {} lanes with at least 2 tokens each",
            stream.len(),
            batch_size
        )));
    }
    let lane_len = stream.len() / batch_size;
    let mut windows = Vec::new();
    // Positions 1..lane_len are inputs; the lane's final token is only a target.
    let mut pos = 1usize;
    while pos <= lane_len - 1 {
        let steps = bptt_len.min(lane_len - pos);
        let mut inputs = Vec::with_capacity(steps * batch_size);
        let mut targets = Vec::with_capacity(steps * batch_size);
        for t in 0..steps {
            for b in 0..batch_size {
                let base = b * lane_len + (pos - 1) + t;
                inputs.push(stream.ids[base]);
                targets.push(stream.ids[base + 1]);
            }
        }
        windows.push(Window { inputs, targets, steps, lanes: batch_size, start_pos: pos });
        pos += steps;
    }
    Ok(WindowSet { windows, lanes: batch_size, lane_len })
}
