//! Mergeable running moments and Monte-Carlo estimate records.

use serde::{Deserialize, Serialize};

/// Welford accumulator; `merge` uses Chan's pairwise update so that
/// per-block results can be combined in a fixed order.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RunningStats) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let (na, nb) = (self.n as f64, other.n as f64);
        self.mean += delta * nb / n as f64;
        self.m2 += other.m2 + delta * delta * na * nb / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }

    pub fn estimate(&self, exact: Option<f64>) -> SamplingEstimate {
        SamplingEstimate { mean: self.mean, stderr: self.stderr(), n: self.n, exact }
    }
}

impl Extend<f64> for RunningStats {
    fn extend<T: IntoIterator<Item = f64>>(&mut self, iter: T) {
        for x in iter {
            self.push(x);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    pub exact: Option<f64>,
}

impl SamplingEstimate {
    /// `(mean − exact)/stderr`. A zero stderr gives 0 for an exact hit and
    /// ±∞ otherwise.
    pub fn z_score(&self) -> Option<f64> {
        let exact = self.exact?;
        let diff = self.mean - exact;
        Some(if self.stderr > 0.0 {
            diff / self.stderr
        } else if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        })
    }

    pub fn within_sigmas(&self, k: f64) -> bool {
        self.z_score().map(|z| z.abs() <= k).unwrap_or(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_matches_two_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.01 + 1e6).collect();
        let mut s = RunningStats::new();
        s.extend(xs.iter().copied());
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!((s.mean() - mean).abs() < 1e-9);
        assert!((s.variance() - var).abs() < 1e-9 * var.max(1.0));
    }

    #[test]
    fn merge_equals_sequential() {
        let xs: Vec<f64> = (0..500).map(|i| (i as f64).sin()).collect();
        let mut whole = RunningStats::new();
        whole.extend(xs.iter().copied());
        let mut a = RunningStats::new();
        let mut b = RunningStats::new();
        a.extend(xs[..123].iter().copied());
        b.extend(xs[123..].iter().copied());
        a.merge(&b);
        assert_eq!(a.count(), whole.count());
        assert!((a.mean() - whole.mean()).abs() < 1e-14);
        assert!((a.variance() - whole.variance()).abs() < 1e-13);
        let mut empty = RunningStats::new();
        empty.merge(&whole);
        assert_eq!(empty, whole);
    }

    #[test]
    fn z_scores() {
        let e = SamplingEstimate { mean: 1.1, stderr: 0.05, n: 100, exact: Some(1.0) };
        assert!((e.z_score().unwrap() - 2.0).abs() < 1e-12);
        assert!(e.within_sigmas(5.0));
        let none = SamplingEstimate { exact: None, ..e };
        assert!(none.z_score().is_none());
    }
}
