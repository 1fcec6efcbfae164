use std::time::Instant;

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::oracle::StochasticOracle;
use crate::scalar::Scalar;

/// Every iteration up to this index is recorded; later ones on a log grid.
const DENSE_PREFIX: u64 = 1000;
/// Ratio between consecutive recorded iterations after the dense prefix.
const LOG_RATIO: f64 = 1.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: u64,
    /// Cumulative function evaluations.
    pub oracle_calls: u64,
    /// Noise-free `E f − f*` at the reported iterate, when known.
    pub gap: Option<f64>,
    pub dist_to_opt: Option<f64>,
    /// Seconds since the run started; 0 unless wall time recording is on.
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub diverged: bool,
}

impl Trace {
    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn final_gap(&self) -> Option<f64> {
        self.last().and_then(|r| r.gap)
    }

    pub fn initial_gap(&self) -> Option<f64> {
        self.records.first().and_then(|r| r.gap)
    }

    pub fn total_calls(&self) -> u64 {
        self.last().map_or(0, |r| r.oracle_calls)
    }

    /// Appends `other`, shifting its iteration and call counters past ours.
    /// A leading `k = 0` record of `other` is dropped since it repeats our
    /// last point.
    pub fn extend_shifted(&mut self, other: &Trace) {
        let (k0, c0) = self.last().map_or((0, 0), |r| (r.k, r.oracle_calls));
        let skip = usize::from(!self.records.is_empty() && other.records.first().is_some_and(|r| r.k == 0));
        for r in other.records.iter().skip(skip) {
            self.records.push(TraceRecord {
                k: r.k + k0,
                oracle_calls: r.oracle_calls + c0,
                ..r.clone()
            });
        }
        self.diverged |= other.diverged;
    }
}

/// Decides which iterations to keep and evaluates the noise-free gap there.
pub(crate) struct Recorder {
    trace: Trace,
    start: Instant,
    wall_time: bool,
    next_log: u64,
}

impl Recorder {
    pub(crate) fn new(wall_time: bool) -> Self {
        Self {
            trace: Trace::default(),
            start: Instant::now(),
            wall_time,
            next_log: DENSE_PREFIX + 1,
        }
    }

    pub(crate) fn wants(&mut self, k: u64, last: u64) -> bool {
        if k <= DENSE_PREFIX || k == last {
            return true;
        }
        if k >= self.next_log {
            self.next_log = ((k as f64 * LOG_RATIO).ceil() as u64).max(k + 1);
            return true;
        }
        false
    }

    pub(crate) fn record<T, O>(&mut self, oracle: &O, k: u64, calls: u64, point: ArrayView1<T>)
    where
        T: Scalar,
        O: StochasticOracle<T> + ?Sized,
    {
        let finite = |v: T| Some(v.as_f64()).filter(|v| v.is_finite());
        self.trace.records.push(TraceRecord {
            k,
            oracle_calls: calls,
            gap: oracle.gap(point).and_then(finite),
            dist_to_opt: oracle.dist_to_opt(point).and_then(finite),
            elapsed_s: if self.wall_time { self.start.elapsed().as_secs_f64() } else { 0.0 },
        });
    }

    pub(crate) fn finish(self) -> Trace {
        self.trace
    }

    pub(crate) fn finish_diverged(mut self) -> Trace {
        self.trace.diverged = true;
        self.trace
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimation_is_dense_then_logarithmic() {
        let mut rec = Recorder::new(false);
        let last = 1_000_000;
        let kept: Vec<u64> = (0..=last).filter(|&k| rec.wants(k, last)).collect();
        assert_eq!(&kept[..1001], &(0..=1000).collect::<Vec<_>>()[..]);
        assert_eq!(*kept.last().unwrap(), last);
        // Roughly 116 points per decade beyond the prefix, at most.
        assert!(kept.len() < 1001 + 3 * 120 + 1, "{}", kept.len());
        assert!(kept.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn extend_shifted_offsets_counters() {
        let rec = |k, c| TraceRecord { k, oracle_calls: c, gap: Some(1.0), dist_to_opt: None, elapsed_s: 0.0 };
        let mut a = Trace { records: vec![rec(0, 0), rec(2, 8)], diverged: false };
        let b = Trace { records: vec![rec(0, 0), rec(1, 4), rec(3, 12)], diverged: false };
        a.extend_shifted(&b);
        let ks: Vec<_> = a.records.iter().map(|r| (r.k, r.oracle_calls)).collect();
        assert_eq!(ks, vec![(0, 0), (2, 8), (3, 12), (5, 20)]);
    }
}
