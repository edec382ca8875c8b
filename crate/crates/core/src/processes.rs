//! Levy paths and the INAR(1) recursion `X_n = b ⊗ X_(n-1) + e_n`.
//!
//! Stream layout: path `i` of a run seeded with `seed` draws from
//! `RngStream::new(seed, 0).split(i)`. Within an AR(1) path the draws are
//! consumed in a fixed order: `X_0` (stationary start only), then for each
//! step one thinning uniform followed by one innovation uniform. Results
//! therefore do not depend on thread scheduling.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inversion::{pgf_to_pmf, InversionSettings};
use crate::params::SemiStableParams;
use crate::pgf::{innovation_pgf, PgfExpr};
use crate::rng::RngStream;
use crate::sampling::{binomial_thin, LevySampler, PmfSampler};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyPath {
    pub times: Vec<f64>,
    pub values: Vec<u64>,
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.first() != Some(&0.0) {
        return Err(Error::InvalidParameter("time grid must start at 0".into()));
    }
    if times
        .windows(2)
        .any(|w| !(w[1] > w[0]) || !w[1].is_finite())
    {
        return Err(Error::InvalidParameter(
            "time grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// One path on `times`; increments over disjoint intervals are independent.
pub fn simulate_levy_path(
    sampler: &LevySampler,
    times: &[f64],
    stream: RngStream,
) -> Result<LevyPath> {
    check_times(times)?;
    let mut rng = stream.rng();
    let mut values = Vec::with_capacity(times.len());
    values.push(0);
    for w in times.windows(2) {
        let inc = sampler.sample_levy_value(w[1] - w[0], &mut rng)?;
        values.push(values.last().unwrap() + inc);
    }
    Ok(LevyPath {
        times: times.to_vec(),
        values,
    })
}

/// `n_paths` independent paths, path `i` on `RngStream::new(seed, 0).split(i)`.
pub fn simulate_levy_paths(
    sampler: &LevySampler,
    times: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<LevyPath>> {
    check_times(times)?;
    // build every increment table before going parallel
    for w in times.windows(2) {
        sampler.sampler(w[1] - w[0])?;
    }
    let root = RngStream::new(seed, 0);
    (0..n_paths)
        .into_par_iter()
        .map(|i| simulate_levy_path(sampler, times, root.split(i as u64)))
        .collect()
}

pub fn write_levy_csv<W: Write>(
    mut w: W,
    paths: &[LevyPath],
    header: &serde_json::Value,
) -> Result<()> {
    writeln!(w, "# {}", serde_json::to_string(header)?)?;
    writeln!(w, "path_id,time,value")?;
    for (i, p) in paths.iter().enumerate() {
        for (t, v) in p.times.iter().zip(&p.values) {
            writeln!(w, "{i},{t},{v}")?;
        }
    }
    Ok(())
}

/// How `X_0` is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Ar1Start {
    /// `X_0 ~ P`, the stationary law.
    #[default]
    Stationary,
    /// `X_0 = 0`; shows convergence towards the stationary law.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ar1Config {
    pub params: SemiStableParams,
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub settings: InversionSettings,
    #[serde(default)]
    pub start: Ar1Start,
}

impl Ar1Config {
    pub fn new(params: SemiStableParams, n_steps: usize, n_paths: usize, seed: u64) -> Self {
        Ar1Config {
            params,
            n_steps,
            n_paths,
            seed,
            settings: InversionSettings::default()
                .with_tail_tol(crate::sampling::MAX_TAIL_MASS / 2.0),
            start: Ar1Start::Stationary,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::InvalidParameter("n_paths must be at least 1".into()));
        }
        Ok(())
    }
}

/// `n_paths x (n_steps + 1)` matrix; column 0 holds `X_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ar1Paths {
    n_paths: usize,
    n_steps: usize,
    data: Vec<u64>,
}

impl Ar1Paths {
    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Row-major values, path by path.
    pub fn data(&self) -> &[u64] {
        &self.data
    }

    pub fn path(&self, i: usize) -> &[u64] {
        let w = self.n_steps + 1;
        &self.data[i * w..(i + 1) * w]
    }

    /// All paths at one step.
    pub fn column(&self, step: usize) -> Vec<u64> {
        (0..self.n_paths).map(|i| self.path(i)[step]).collect()
    }

    /// Empirical mean and variance of every column.
    pub fn moments(&self) -> Vec<(f64, f64)> {
        let n = self.n_paths as f64;
        (0..=self.n_steps)
            .map(|s| {
                let col = self.column(s);
                let mean = col.iter().map(|&v| v as f64).sum::<f64>() / n;
                let var = col.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
                (mean, var)
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W, header: &serde_json::Value) -> Result<()> {
        writeln!(w, "# {}", serde_json::to_string(header)?)?;
        writeln!(w, "path_id,step,value")?;
        for i in 0..self.n_paths {
            for (s, v) in self.path(i).iter().enumerate() {
                writeln!(w, "{i},{s},{v}")?;
            }
        }
        Ok(())
    }
}

/// Simulates the recursion with the exact innovation law `{P(1-b+bs)}^(b^-alpha - 1)`.
pub fn simulate_ar1(config: &Ar1Config) -> Result<Ar1Paths> {
    simulate_ar1_with_innovation(config, &innovation_pgf(&config.params))
}

/// As [`simulate_ar1`] with an arbitrary innovation law.
pub fn simulate_ar1_with_innovation(config: &Ar1Config, innovation: &PgfExpr) -> Result<Ar1Paths> {
    config.validate()?;
    let params = &config.params;
    let start = match config.start {
        Ar1Start::Stationary => Some(PmfSampler::new(&pgf_to_pmf(
            &PgfExpr::semi_stable(*params),
            &config.settings,
        )?)?),
        Ar1Start::Zero => None,
    };
    let eps = PmfSampler::new(&pgf_to_pmf(innovation, &config.settings)?)?;
    let b = params.b();
    let width = config.n_steps + 1;
    let root = RngStream::new(config.seed, 0);
    let rows: Vec<Vec<u64>> = (0..config.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = root.split(i as u64).rng();
            let mut row = Vec::with_capacity(width);
            let mut x = start.as_ref().map_or(0, |s| s.sample(&mut rng));
            row.push(x);
            for _ in 0..config.n_steps {
                let kept = binomial_thin(x, b, &mut rng);
                x = kept + eps.sample(&mut rng);
                row.push(x);
            }
            row
        })
        .collect();
    Ok(Ar1Paths {
        n_paths: config.n_paths,
        n_steps: config.n_steps,
        data: rows.concat(),
    })
}

/// Draws of `X(a t)` and of `b' ⊗ X(t)` with `b' = thin_prob`; equal in law
/// when `thin_prob = b`.
pub fn sss_pair_sample_with(
    sampler: &LevySampler,
    t: f64,
    thin_prob: f64,
    n_draws: usize,
    stream: RngStream,
) -> Result<(Vec<u64>, Vec<u64>)> {
    if n_draws == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let a = sampler.params().epoch();
    let scaled = sampler.sampler(a * t)?;
    let base = sampler.sampler(t)?;
    let mut r1 = stream.split(0).rng();
    let mut r2 = stream.split(1).rng();
    let left = (0..n_draws).map(|_| scaled.sample(&mut r1)).collect();
    let right = (0..n_draws)
        .map(|_| {
            let x = base.sample(&mut r2);
            binomial_thin(x, thin_prob, &mut r2)
        })
        .collect();
    Ok((left, right))
}

/// `X(a t)` versus `a^(1/alpha) ⊗ X(t) = b ⊗ X(t)`.
pub fn sss_pair_sample(
    sampler: &LevySampler,
    t: f64,
    n_draws: usize,
    stream: RngStream,
) -> Result<(Vec<u64>, Vec<u64>)> {
    let b = sampler.params().b();
    sss_pair_sample_with(sampler, t, b, n_draws, stream)
}
