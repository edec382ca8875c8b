//! Binned total-variation statistics with null-calibrated thresholds.
//!
//! Cells are the lattice points whose expected count under the target is at
//! least [`MIN_EXPECTED`], plus one pooled cell holding everything else
//! (including mass beyond the table). The null distribution of the binned
//! statistic is simulated exactly by drawing multinomial cell counts as a
//! chain of binomials, one split stream per replicate.

use rand::Rng;
use rayon::prelude::*;

use crate::rng::RngStream;
use crate::sampling::binomial_quantile;

/// Smallest expected count for a lattice point to get its own cell.
pub const MIN_EXPECTED: f64 = 5.0;

/// Quantile of the null distribution used as the threshold.
pub const NULL_QUANTILE: f64 = 0.999;

#[derive(Debug, Clone, PartialEq)]
pub struct Binning {
    /// Lattice points with their own cell, ascending.
    points: Vec<u64>,
    /// Target probability per cell; the last entry is the pooled cell.
    probs: Vec<f64>,
}

impl Binning {
    /// Cells for comparing `n` draws against `target` (`target[k] = P(X = k)`).
    pub fn new(target: &[f64], n: usize) -> Self {
        let mut points = Vec::new();
        let mut probs = Vec::new();
        for (k, &p) in target.iter().enumerate() {
            if p * n as f64 >= MIN_EXPECTED {
                points.push(k as u64);
                probs.push(p);
            }
        }
        let kept: f64 = probs.iter().sum();
        probs.push((1.0 - kept).max(0.0));
        Binning { points, probs }
    }

    pub fn n_cells(&self) -> usize {
        self.probs.len()
    }

    pub fn cell_probs(&self) -> &[f64] {
        &self.probs
    }

    fn cell(&self, x: u64) -> usize {
        self.points.binary_search(&x).unwrap_or(self.points.len())
    }

    pub fn counts(&self, draws: &[u64]) -> Vec<u64> {
        let mut c = vec![0u64; self.n_cells()];
        for &x in draws {
            c[self.cell(x)] += 1;
        }
        c
    }

    /// `(1/2) sum |count/n - p|` over cells.
    pub fn one_sample_tv(&self, draws: &[u64]) -> f64 {
        tv_counts_vs_probs(&self.counts(draws), &self.probs)
    }

    /// `(1/2) sum |c1/n1 - c2/n2|` over cells.
    pub fn two_sample_tv(&self, first: &[u64], second: &[u64]) -> f64 {
        tv_counts(&self.counts(first), &self.counts(second))
    }

    /// 99.9th percentile of [`Binning::one_sample_tv`] for `n` draws from the target.
    pub fn one_sample_threshold(&self, n: usize, reps: usize, stream: RngStream) -> f64 {
        let stats: Vec<f64> = (0..reps as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream.split(i).rng();
                tv_counts_vs_probs(&multinomial(n as u64, &self.probs, &mut rng), &self.probs)
            })
            .collect();
        upper_quantile(stats, NULL_QUANTILE)
    }

    /// 99.9th percentile of [`Binning::two_sample_tv`] for two independent
    /// samples of sizes `n1`, `n2` from the target.
    pub fn two_sample_threshold(
        &self,
        n1: usize,
        n2: usize,
        reps: usize,
        stream: RngStream,
    ) -> f64 {
        let stats: Vec<f64> = (0..reps as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream.split(i).rng();
                let a = multinomial(n1 as u64, &self.probs, &mut rng);
                let b = multinomial(n2 as u64, &self.probs, &mut rng);
                tv_counts(&a, &b)
            })
            .collect();
        upper_quantile(stats, NULL_QUANTILE)
    }
}

fn tv_counts_vs_probs(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let n = n.max(1) as f64;
    0.5 * counts
        .iter()
        .zip(probs)
        .map(|(&c, p)| (c as f64 / n - p).abs())
        .sum::<f64>()
}

fn tv_counts(a: &[u64], b: &[u64]) -> f64 {
    let na = a.iter().sum::<u64>().max(1) as f64;
    let nb = b.iter().sum::<u64>().max(1) as f64;
    0.5 * a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x as f64 / na - y as f64 / nb).abs())
        .sum::<f64>()
}

/// Multinomial counts via conditional binomials.
fn multinomial<R: Rng + ?Sized>(n: u64, probs: &[f64], rng: &mut R) -> Vec<u64> {
    let mut left = n;
    let mut mass = 1.0;
    let mut out = Vec::with_capacity(probs.len());
    for (i, &p) in probs.iter().enumerate() {
        if i + 1 == probs.len() || left == 0 {
            out.push(left);
            left = 0;
            continue;
        }
        let q = if mass > 0.0 {
            (p / mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let c = if q <= 0.0 {
            0
        } else {
            binomial_quantile(left, q, rng.gen::<f64>())
        };
        out.push(c);
        left -= c;
        mass -= p;
    }
    out
}

/// Empirical upper quantile: the `ceil(q * n)`-th smallest value.
fn upper_quantile(mut v: Vec<f64>, q: f64) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let idx = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
    v[idx]
}
