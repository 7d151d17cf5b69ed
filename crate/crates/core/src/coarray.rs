//! Sum, difference and sum-difference co-arrays.
//!
//! Multiplicities are kept alongside the support: the virtual measurement at
//! each lag is the average of every covariance entry that maps to it.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::SensorArray;

/// Lag (units of `d`) → multiplicity.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LagSet {
    weights: BTreeMap<i64, u64>,
}

impl LagSet {
    pub fn new() -> Self {
        Self::default()
    }

    fn add(&mut self, lag: i64, count: u64) {
        *self.weights.entry(lag).or_insert(0) += count;
    }

    pub fn weight(&self, lag: i64) -> u64 {
        self.weights.get(&lag).copied().unwrap_or(0)
    }

    pub fn contains(&self, lag: i64) -> bool {
        self.weights.contains_key(&lag)
    }

    /// `(lag, weight)` pairs in ascending lag order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        self.weights.iter().map(|(&l, &w)| (l, w))
    }

    pub fn support(&self) -> Vec<i64> {
        self.weights.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.values().sum()
    }

    pub fn min_lag(&self) -> Option<i64> {
        self.weights.keys().next().copied()
    }

    pub fn max_lag(&self) -> Option<i64> {
        self.weights.keys().next_back().copied()
    }

    pub fn is_symmetric(&self) -> bool {
        self.iter().all(|(l, w)| self.weight(-l) == w)
    }

    /// Support union with multiplicities added at shared lags.
    pub fn merged(&self, other: &LagSet) -> LagSet {
        let mut out = self.clone();
        for (l, w) in other.iter() {
            out.add(l, w);
        }
        out
    }
}

impl FromIterator<(i64, u64)> for LagSet {
    fn from_iter<I: IntoIterator<Item = (i64, u64)>>(iter: I) -> Self {
        let mut out = LagSet::new();
        for (l, w) in iter {
            out.add(l, w);
        }
        out
    }
}

/// Maximal run of consecutive lags `lo..=hi` around zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub lo: i64,
    pub hi: i64,
    pub dof: u64,
}

/// Weight function over all ordered pairs, `i = j` included.
pub fn diff_coarray(arr: &SensorArray) -> LagSet {
    let h = arr.half_units();
    let mut out = LagSet::new();
    for &a in h {
        for &b in h {
            out.add((a - b) / 2, 1);
        }
    }
    out
}

/// Signed sums `±(w_i + w_j)` over ordered pairs; a zero sum is counted once.
pub fn sum_coarray(arr: &SensorArray) -> LagSet {
    let h = arr.half_units();
    let mut out = LagSet::new();
    for &a in h {
        for &b in h {
            let s = (a + b) / 2;
            out.add(s, 1);
            if s != 0 {
                out.add(-s, 1);
            }
        }
    }
    out
}

pub fn sdca(arr: &SensorArray) -> LagSet {
    sum_coarray(arr).merged(&diff_coarray(arr))
}

pub fn max_contiguous_segment(lags: &LagSet) -> Result<Segment> {
    if !lags.contains(0) {
        return Err(Error::Precondition("lag 0 is not in the co-array".into()));
    }
    let mut hi = 0;
    while lags.contains(hi + 1) {
        hi += 1;
    }
    let mut lo = 0;
    while lags.contains(lo - 1) {
        lo -= 1;
    }
    Ok(Segment { lo, hi, dof: (hi - lo + 1) as u64 })
}

/// Virtual aperture `max(support) - min(support)`.
pub fn vaa(lags: &LagSet) -> Result<u64> {
    match (lags.min_lag(), lags.max_lag()) {
        (Some(lo), Some(hi)) => Ok((hi - lo) as u64),
        _ => Err(Error::Precondition("empty co-array has no aperture".into())),
    }
}

/// Contiguous virtual ULA `-L..=L` and the map from vectorised covariance
/// entries onto its lags.
///
/// The extended model stacks `x` over `x*`, which behaves like an array at
/// signed positions `(+w_1..+w_M, -w_1..-w_M)`. Entry `(a, b)` of the
/// `2M x 2M` covariance carries lag `V_a - V_b`; its flat index is
/// column-major, `a + b * 2M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualUla {
    sensor_count: usize,
    half_length: usize,
    selection: Vec<Vec<usize>>,
    lags: LagSet,
}

impl VirtualUla {
    /// Physical sensor count `M`.
    pub fn sensor_count(&self) -> usize {
        self.sensor_count
    }

    /// `L`, so the segment is `-L..=L`.
    pub fn half_length(&self) -> usize {
        self.half_length
    }

    /// `L_U = 2L + 1`.
    pub fn len(&self) -> usize {
        2 * self.half_length + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat covariance indices mapping to `lag`, ascending. Empty outside `-L..=L`.
    pub fn selection(&self, lag: i64) -> &[usize] {
        let l = self.half_length as i64;
        if lag < -l || lag > l {
            return &[];
        }
        &self.selection[(lag + l) as usize]
    }

    /// Weight function of the full signed-position difference set.
    pub fn lag_weights(&self) -> &LagSet {
        &self.lags
    }
}

pub fn build_virtual_ula(arr: &SensorArray) -> VirtualUla {
    let m = arr.len();
    let signed: Vec<i64> = arr
        .half_units()
        .iter()
        .copied()
        .chain(arr.half_units().iter().map(|h| -h))
        .collect();
    let dim = 2 * m;

    let mut entry_lags = Vec::with_capacity(dim * dim);
    for b in 0..dim {
        for a in 0..dim {
            entry_lags.push((signed[a] - signed[b]) / 2);
        }
    }
    let lags: LagSet = entry_lags.iter().map(|&l| (l, 1)).collect();
    let segment = max_contiguous_segment(&lags).expect("lag 0 always present on the diagonal");
    let half = segment.hi as usize;

    let mut selection = vec![Vec::new(); 2 * half + 1];
    for (flat, &lag) in entry_lags.iter().enumerate() {
        if lag.unsigned_abs() as usize <= half {
            selection[(lag + half as i64) as usize].push(flat);
        }
    }
    VirtualUla {
        sensor_count: m,
        half_length: half,
        selection,
        lags,
    }
}
