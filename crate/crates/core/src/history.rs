use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Fixed-depth record of past samples; `lag(0)` is the newest entry.
///
/// Entries older than the depth are dropped. Unwritten slots read as the
/// fill value the buffer was created with.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    buf: VecDeque<f64>,
}

impl History {
    pub fn new(depth: usize, fill: f64) -> Self {
        Self {
            buf: std::iter::repeat_n(fill, depth).collect(),
        }
    }

    pub fn zeros(depth: usize) -> Self {
        Self::new(depth, 0.0)
    }

    pub fn depth(&self) -> usize {
        self.buf.len()
    }

    pub fn push(&mut self, value: f64) {
        if self.buf.is_empty() {
            return;
        }
        self.buf.pop_back();
        self.buf.push_front(value);
    }

    pub fn lag(&self, k: usize) -> Result<f64> {
        self.buf.get(k).copied().ok_or(Error::InsufficientHistory {
            needed: k + 1,
            available: self.buf.len(),
        })
    }

    /// Sum of `lag(k)` over `k` in `from..=to`; empty when `from > to`.
    pub fn sum(&self, from: usize, to: usize) -> Result<f64> {
        (from..=to).map(|k| self.lag(k)).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.buf.iter()
    }
}
