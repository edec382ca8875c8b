//! Exact sampling from pmf tables, binomial thinning and Levy increments.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::Rng;

use crate::error::{Error, Result};
use crate::inversion::{pgf_to_pmf, InversionSettings, PmfTable};
use crate::params::SemiStableParams;
use crate::pgf::levy_marginal;

/// Largest table tail mass accepted for sampling.
pub const MAX_TAIL_MASS: f64 = 1e-6;

/// Inverse-CDF sampler over a table, conditional on the table's support:
/// `n` is drawn with probability `probs[n] / (1 - tail_mass)`.
#[derive(Debug, Clone)]
pub struct PmfSampler {
    cdf: Vec<f64>,
    tail_mass: f64,
}

impl PmfSampler {
    pub fn new(table: &PmfTable) -> Result<Self> {
        if !(table.tail_mass() < MAX_TAIL_MASS) {
            return Err(Error::TailTooHeavy {
                tail_mass: table.tail_mass(),
                limit: MAX_TAIL_MASS,
            });
        }
        let mut acc = 0.0;
        let cdf: Vec<f64> = table
            .probs()
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        if !(acc > 0.0) {
            return Err(Error::InvalidParameter("table has no mass".into()));
        }
        Ok(PmfSampler {
            cdf,
            tail_mass: table.tail_mass(),
        })
    }

    /// Mass that was dropped by conditioning on the table support.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// The conditional law actually sampled.
    pub fn conditional_probs(&self) -> Vec<f64> {
        let total = self.total();
        let mut prev = 0.0;
        self.cdf
            .iter()
            .map(|c| {
                let p = (c - prev) / total;
                prev = *c;
                p
            })
            .collect()
    }

    fn total(&self) -> f64 {
        *self.cdf.last().expect("nonempty table")
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u = rng.gen::<f64>() * self.total();
        let idx = self.cdf.partition_point(|&c| c <= u);
        idx.min(self.cdf.len() - 1) as u64
    }
}

/// One draw from `table`.
pub fn sample_pmf<R: Rng + ?Sized>(table: &PmfTable, rng: &mut R) -> Result<u64> {
    Ok(PmfSampler::new(table)?.sample(rng))
}

/// `b ⊗ x`: a Binomial(x, b) draw. Consumes exactly one uniform, mapped
/// through the Binomial(x, b) quantile function; with a common uniform the
/// result is nondecreasing in `x`.
pub fn binomial_thin<R: Rng + ?Sized>(x: u64, b: f64, rng: &mut R) -> u64 {
    binomial_quantile(x, b, rng.gen::<f64>())
}

/// Smallest `k` with `F(k) > u` for `F` the Binomial(x, b) cdf, `u` in `[0, 1)`.
///
/// The cdf at the mode is accumulated from the mode downwards, then the
/// search walks from the mode using the pmf ratio
/// `p(k+1)/p(k) = (x-k) b / ((k+1)(1-b))`.
pub fn binomial_quantile(x: u64, b: f64, u: f64) -> u64 {
    debug_assert!(b > 0.0 && b <= 1.0);
    if x == 0 || b >= 1.0 {
        return x;
    }
    let q = 1.0 - b;
    let xf = x as f64;
    let mode = (((xf + 1.0) * b).floor() as u64).min(x);
    let p_mode = dbinom(mode, x, b, q);

    // F(mode)
    let mut cdf_mode = p_mode;
    let mut term = p_mode;
    let mut k = mode;
    while k > 0 {
        term *= k as f64 * q / ((xf - k as f64 + 1.0) * b);
        k -= 1;
        cdf_mode += term;
        if term <= cdf_mode * 1e-17 {
            break;
        }
    }

    let mut k = mode;
    let mut pk = p_mode;
    let mut fk = cdf_mode;
    if u < fk {
        // walk down while F(k-1) > u
        while k > 0 {
            let f_prev = fk - pk;
            if u >= f_prev {
                break;
            }
            pk *= k as f64 * q / ((xf - k as f64 + 1.0) * b);
            fk = f_prev;
            k -= 1;
        }
        k
    } else {
        while fk <= u && k < x {
            pk *= (xf - k as f64) * b / ((k as f64 + 1.0) * q);
            k += 1;
            fk += pk;
            if pk == 0.0 && fk <= u {
                // remaining mass is below double resolution
                break;
            }
        }
        k
    }
}

/// Binomial pmf by Loader's saddle-point expansion, accurate to a few ulps
/// for all `n`.
fn dbinom(k: u64, n: u64, p: f64, q: f64) -> f64 {
    let (kf, nf) = (k as f64, n as f64);
    if k == 0 {
        let lc = if p < 0.1 {
            -bd0(nf, nf * q) - nf * p
        } else {
            nf * q.ln()
        };
        return lc.exp();
    }
    if k == n {
        let lc = if q < 0.1 {
            -bd0(nf, nf * p) - nf * q
        } else {
            nf * p.ln()
        };
        return lc.exp();
    }
    let nk = nf - kf;
    let lc = stirlerr(nf) - stirlerr(kf) - stirlerr(nk) - bd0(kf, nf * p) - bd0(nk, nf * q);
    let lf = (2.0 * std::f64::consts::PI).ln() + kf.ln() + (-kf / nf).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// `ln(n!) - [(n + 1/2) ln n - n + ln sqrt(2 pi)]` for integer `n >= 1`.
fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        // n! is exact in f64 up to 22!
        let fact: f64 = (1..=n as u64).map(|k| k as f64).product();
        return fact.ln() - (n + 0.5) * n.ln() + n - 0.5 * (2.0 * std::f64::consts::PI).ln();
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x/np) + np - x`, computed stably near `x = np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        return s;
    }
    x * (x / np).ln() + np - x
}

/// Draws `X(t)` for the Levy process whose time-1 law is `SemiStable(params)`,
/// memoizing one table per distinct `t`.
#[derive(Debug)]
pub struct LevySampler {
    params: SemiStableParams,
    settings: InversionSettings,
    cache: Mutex<HashMap<u64, Arc<PmfSampler>>>,
}

impl LevySampler {
    pub fn new(params: SemiStableParams, settings: InversionSettings) -> Self {
        LevySampler {
            params,
            settings,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn params(&self) -> &SemiStableParams {
        &self.params
    }

    pub fn settings(&self) -> &InversionSettings {
        &self.settings
    }

    /// The sampler for the law of `X(t)`.
    pub fn sampler(&self, t: f64) -> Result<Arc<PmfSampler>> {
        if let Some(s) = self.cache.lock().unwrap().get(&t.to_bits()) {
            return Ok(s.clone());
        }
        let table = pgf_to_pmf(&levy_marginal(&self.params, t)?, &self.settings)?;
        let sampler = Arc::new(PmfSampler::new(&table)?);
        self.cache
            .lock()
            .unwrap()
            .insert(t.to_bits(), sampler.clone());
        Ok(sampler)
    }

    pub fn sample_levy_value<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> Result<u64> {
        Ok(self.sampler(t)?.sample(rng))
    }
}
