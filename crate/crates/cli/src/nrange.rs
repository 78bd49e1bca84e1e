//! Inclusive qubit-count ranges such as `4..9`, `4..=9` or `7`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad range {input:?}: {reason}")]
pub struct NRangeError {
    pub input: String,
    pub reason: &'static str,
}

/// `start..=end`, both ends included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NRange {
    pub start: usize,
    pub end: usize,
}

impl NRange {
    pub fn new(start: usize, end: usize) -> Option<Self> {
        (start <= end).then_some(Self { start, end })
    }

    pub fn iter(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }

    pub fn within(&self, lo: usize, hi: usize) -> bool {
        self.start >= lo && self.end <= hi
    }
}

impl fmt::Display for NRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.start == self.end {
            write!(f, "{}", self.start)
        } else {
            write!(f, "{}..{}", self.start, self.end)
        }
    }
}

impl FromStr for NRange {
    type Err = NRangeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason| NRangeError {
            input: s.to_string(),
            reason,
        };
        let number = |t: &str| -> Result<usize, NRangeError> {
            let t = t.trim();
            if t.is_empty() || !t.bytes().all(|b| b.is_ascii_digit()) {
                return Err(err("expected a decimal integer"));
            }
            t.parse().map_err(|_| err("integer out of range"))
        };
        let (a, b) = match s.split_once("..") {
            Some((a, b)) => (number(a)?, number(b.strip_prefix('=').unwrap_or(b))?),
            None => {
                let a = number(s)?;
                (a, a)
            }
        };
        NRange::new(a, b).ok_or_else(|| err("start exceeds end"))
    }
}
