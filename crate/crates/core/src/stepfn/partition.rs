use crate::error::{Error, Result};
use crate::stepfn::{EPS_PART, SNAP};

/// A partition of `[0, 1]` into finitely many intervals of positive length.
///
/// Lengths are the primary data (they are what gets serialized); the
/// cumulative breakpoints are kept alongside for lookups. The last breakpoint
/// is pinned to exactly `1.0`. Equality compares lengths only.
#[derive(Clone, Debug)]
pub struct Partition1D {
    lengths: Vec<f64>,
    breaks: Vec<f64>,
}

impl Partition1D {
    /// The trivial partition `{[0, 1]}`.
    pub fn unit() -> Self {
        Self {
            lengths: vec![1.0],
            breaks: vec![0.0, 1.0],
        }
    }

    /// `n` equal cells.
    ///
    /// # Panics
    /// If `n == 0`.
    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform partition needs at least one cell");
        let breaks: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        Self::from_breaks(breaks).expect("uniform breakpoints are valid")
    }

    pub fn from_lengths(lengths: Vec<f64>) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::InvalidPartition("no cells".into()));
        }
        if let Some(bad) = lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidPartition(format!(
                "cell length {bad} is not a positive finite number"
            )));
        }
        let total: f64 = lengths.iter().sum();
        if (total - 1.0).abs() > EPS_PART {
            return Err(Error::InvalidPartition(format!(
                "lengths sum to {total}, expected 1"
            )));
        }
        let mut breaks = Vec::with_capacity(lengths.len() + 1);
        breaks.push(0.0);
        let mut acc = 0.0;
        for l in &lengths[..lengths.len() - 1] {
            acc += l;
            breaks.push(acc);
        }
        breaks.push(1.0);
        if breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPartition(
                "cumulative breakpoints are not strictly increasing".into(),
            ));
        }
        Ok(Self { lengths, breaks })
    }

    pub fn from_breaks(mut breaks: Vec<f64>) -> Result<Self> {
        if breaks.len() < 2 {
            return Err(Error::InvalidPartition("need at least two breakpoints".into()));
        }
        let n = breaks.len();
        if breaks[0].abs() > EPS_PART || (breaks[n - 1] - 1.0).abs() > EPS_PART {
            return Err(Error::InvalidPartition(format!(
                "breakpoints must span [0, 1], got [{}, {}]",
                breaks[0],
                breaks[n - 1]
            )));
        }
        breaks[0] = 0.0;
        breaks[n - 1] = 1.0;
        if breaks.iter().any(|b| !b.is_finite()) || breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPartition(
                "breakpoints are not strictly increasing".into(),
            ));
        }
        let lengths = breaks.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(Self { lengths, breaks })
    }

    /// Number of cells.
    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn cell(&self, i: usize) -> (f64, f64) {
        (self.breaks[i], self.breaks[i + 1])
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        0.5 * (self.breaks[i] + self.breaks[i + 1])
    }

    /// Index of the cell containing `x` (half-open cells, the last one closed).
    pub fn locate(&self, x: f64) -> usize {
        let idx = self.breaks.partition_point(|b| *b <= x);
        idx.saturating_sub(1).min(self.len() - 1)
    }
}

impl PartialEq for Partition1D {
    fn eq(&self, other: &Self) -> bool {
        self.lengths == other.lengths
    }
}

/// Sorted union of two breakpoint lists spanning `[0, 1]`, with points closer
/// than [`SNAP`] identified.
pub(crate) fn merge_breaks(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    all.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
    snap_sorted(all)
}

pub(crate) fn snap_sorted(sorted: Vec<f64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(sorted.len());
    out.push(0.0);
    for x in sorted {
        if x - out[out.len() - 1] >= SNAP {
            out.push(x);
        }
    }
    let last = out.len() - 1;
    if out[last] < 1.0 {
        if 1.0 - out[last] < SNAP && last > 0 {
            out[last] = 1.0;
        } else {
            out.push(1.0);
        }
    } else {
        out[last] = 1.0;
    }
    out
}

/// Accumulates consecutive cells, absorbing slivers shorter than [`SNAP`]
/// into the following cell (or the previous one at the right end).
pub(crate) struct CellBuilder<T> {
    breaks: Vec<f64>,
    items: Vec<T>,
}

impl<T> CellBuilder<T> {
    pub(crate) fn new() -> Self {
        Self {
            breaks: vec![0.0],
            items: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, end: f64, item: T) {
        let start = self.breaks[self.breaks.len() - 1];
        if end - start >= SNAP {
            self.breaks.push(end);
            self.items.push(item);
        }
    }

    pub(crate) fn finish(mut self) -> (Vec<f64>, Vec<T>) {
        assert!(!self.items.is_empty(), "cell builder received no cells");
        let last = self.breaks.len() - 1;
        self.breaks[last] = 1.0;
        (self.breaks, self.items)
    }
}
