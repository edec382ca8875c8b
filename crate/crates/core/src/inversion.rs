//! Recovery of lattice pmfs from generating functions by discrete Fourier
//! inversion on a circle of radius `r < 1`.
//!
//! With `M` equispaced points on `|z| = r`,
//!
//! ```text
//! a_n = r^-n (1/M) sum_j P(r w^j) w^(-jn) = p_n + sum_{m >= 1} p_(n+mM) r^(mM)
//! ```
//!
//! so aliasing is bounded by `r^M / (1 - r^M)` for coefficients in `[0, 1]`,
//! while roundoff is amplified by `r^-n`. The transform is oversampled
//! (`M = oversample * n_terms`) and by default `r` is chosen so that
//! `r^M = 1e-12`, which caps the amplification at `1e3` for `oversample = 4`.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pgf::PgfExpr;

/// Coefficients in `(-NEGATIVITY_TOL, 0)` are clamped to zero; below that is an error.
pub const NEGATIVITY_TOL: f64 = 1e-9;

/// Target aliasing level `r^M` when no radius is given.
pub const DEFAULT_ALIASING: f64 = 1e-12;

/// Slack on `|P(z)| <= 1` before the circle samples are declared invalid.
pub const MODULUS_TOL: f64 = 1e-9;

/// Largest table length reached by doubling.
pub const MAX_TERMS: usize = 1 << 20;

const PARALLEL_THRESHOLD: usize = 1 << 12;

/// Largest phase step between neighbouring circle samples accepted while
/// unwrapping `log P`.
const MAX_PHASE_STEP: f64 = PI / 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionSettings {
    /// Initial table length; a power of two, at least 8.
    pub n_terms: usize,
    /// Largest acceptable `1 - sum(probs)`.
    pub tail_tol: f64,
    /// Fixed evaluation radius; `None` derives it from the transform size.
    pub radius: Option<f64>,
    /// Circle points per returned coefficient.
    pub oversample: usize,
    /// Doubling stops here.
    pub max_terms: usize,
}

impl Default for InversionSettings {
    fn default() -> Self {
        InversionSettings {
            n_terms: 64,
            tail_tol: 1e-10,
            radius: None,
            oversample: 4,
            max_terms: MAX_TERMS,
        }
    }
}

impl InversionSettings {
    pub fn with_tail_tol(mut self, tail_tol: f64) -> Self {
        self.tail_tol = tail_tol;
        self
    }

    pub fn with_n_terms(mut self, n_terms: usize) -> Self {
        self.n_terms = n_terms;
        self
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = Some(radius);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_terms < 8 || !self.n_terms.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "n_terms must be a power of two >= 8, got {}",
                self.n_terms
            )));
        }
        if !(self.tail_tol > 0.0 && self.tail_tol < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "tail_tol must lie in (0, 1), got {}",
                self.tail_tol
            )));
        }
        if let Some(r) = self.radius {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "radius must lie in (0, 1), got {r}"
                )));
            }
        }
        if self.oversample == 0 || !self.oversample.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "oversample must be a power of two, got {}",
                self.oversample
            )));
        }
        Ok(())
    }

    fn radius_for(&self, points: usize) -> f64 {
        self.radius
            .unwrap_or_else(|| DEFAULT_ALIASING.powf(1.0 / points as f64))
    }
}

/// How a table was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfMeta {
    pub source: String,
    pub n_terms: usize,
    pub radius: f64,
    pub oversample: usize,
    pub tail_tol: f64,
}

/// A truncated lattice pmf. `tail_mass` is the mass beyond the table; the
/// table is not renormalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfTable {
    probs: Vec<f64>,
    tail_mass: f64,
    meta: PmfMeta,
}

impl PmfTable {
    /// Builds a table from explicit probabilities, e.g. an exact reference law.
    pub fn from_probs(probs: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidParameter(
                "probabilities must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if sum > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {sum} > 1"
            )));
        }
        let n = probs.len();
        Ok(PmfTable {
            probs,
            tail_mass: (1.0 - sum).max(0.0),
            meta: PmfMeta {
                source: source.into(),
                n_terms: n,
                radius: 0.0,
                oversample: 0,
                tail_tol: 1.0,
            },
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn meta(&self) -> &PmfMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `probs[n]`, zero beyond the table.
    pub fn prob(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    /// `sum probs[n] s^n` by Horner.
    pub fn eval_truncated(&self, s: f64) -> f64 {
        self.probs.iter().rev().fold(0.0, |acc, p| acc * s + p)
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// CSV with columns `n,p`, preceded by a `#`-comment line holding the
    /// metadata as JSON. `extra` is stored under the `run` key.
    pub fn write_csv<W: Write>(&self, mut w: W, extra: Option<&serde_json::Value>) -> Result<()> {
        let mut header = serde_json::json!({
            "meta": self.meta,
            "tail_mass": self.tail_mass,
        });
        if let Some(extra) = extra {
            header["run"] = extra.clone();
        }
        writeln!(w, "# {}", serde_json::to_string(&header)?)?;
        writeln!(w, "n,p")?;
        for (n, p) in self.probs.iter().enumerate() {
            writeln!(w, "{n},{p}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut meta = None;
        let mut tail_mass = None;
        let mut probs = Vec::new();
        for line in r.lines() {
            let line = line?;
            if let Some(json) = line.strip_prefix("# ") {
                let v: serde_json::Value = serde_json::from_str(json)?;
                meta = Some(serde_json::from_value::<PmfMeta>(v["meta"].clone())?);
                tail_mass = v["tail_mass"].as_f64();
                continue;
            }
            if line == "n,p" || line.is_empty() {
                continue;
            }
            let (n, p) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad row {line:?}")))?;
            let n: usize = n
                .parse()
                .map_err(|_| Error::Parse(format!("bad index {n:?}")))?;
            if n != probs.len() {
                return Err(Error::Parse(format!("row {n} out of order")));
            }
            probs.push(
                p.parse()
                    .map_err(|_| Error::Parse(format!("bad value {p:?}")))?,
            );
        }
        Ok(PmfTable {
            probs,
            tail_mass: tail_mass.ok_or_else(|| Error::Parse("missing tail_mass".into()))?,
            meta: meta.ok_or_else(|| Error::Parse("missing header".into()))?,
        })
    }
}

/// Raw Taylor coefficients `0..n_terms` of `expr` by Fourier inversion on
/// `points` circle samples at `radius`. No sign or mass checks.
pub fn fourier_coefficients(
    expr: &PgfExpr,
    n_terms: usize,
    points: usize,
    radius: f64,
) -> Result<Vec<f64>> {
    if !(points >= n_terms && points.is_power_of_two() && radius > 0.0 && radius < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need power-of-two points >= n_terms and radius in (0, 1); got {points}, {radius}"
        )));
    }
    invert_at(expr, n_terms, points, radius)
}

/// Samples `f(r e^{2 pi i j / M})` using conjugate symmetry `f(conj z) = conj f(z)`.
fn circle_values_at<F>(points: usize, radius: f64, f: F) -> Result<Vec<Complex64>>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let half = points / 2;
    let eval = |j: usize| {
        f(Complex64::from_polar(
            radius,
            2.0 * PI * j as f64 / points as f64,
        ))
    };
    let upper: Vec<Complex64> = if points >= PARALLEL_THRESHOLD {
        (0..=half)
            .into_par_iter()
            .map(eval)
            .collect::<Result<_>>()?
    } else {
        (0..=half).map(eval).collect::<Result<_>>()?
    };
    let mut out = Vec::with_capacity(points);
    out.extend_from_slice(&upper);
    out.extend((half + 1..points).map(|j| upper[points - j].conj()));
    // the two real-axis samples are real up to roundoff
    out[0].im = 0.0;
    if points > 1 {
        out[half].im = 0.0;
    }
    Ok(out)
}

/// The pmf of `expr`, doubling the table length until the tail mass is
/// below `settings.tail_tol`.
pub fn pgf_to_pmf(expr: &PgfExpr, settings: &InversionSettings) -> Result<PmfTable> {
    settings.validate()?;
    let mut n_terms = settings.n_terms;
    loop {
        let points = n_terms * settings.oversample;
        let radius = settings.radius_for(points);
        let raw = invert_checked(expr, n_terms, points, radius)?;
        let mut probs = Vec::with_capacity(n_terms);
        for (n, v) in raw.into_iter().enumerate() {
            if v < -NEGATIVITY_TOL || !v.is_finite() {
                return Err(Error::NegativeCoefficient { n, value: v });
            }
            probs.push(v.max(0.0));
        }
        let sum: f64 = probs.iter().sum();
        let tail_mass = (1.0 - sum).max(0.0);
        if tail_mass <= settings.tail_tol {
            return Ok(PmfTable {
                probs,
                tail_mass,
                meta: PmfMeta {
                    source: expr.to_string(),
                    n_terms,
                    radius,
                    oversample: settings.oversample,
                    tail_tol: settings.tail_tol,
                },
            });
        }
        if n_terms * 2 > settings.max_terms {
            return Err(Error::TailToleranceUnmet {
                n_terms,
                tail_mass,
                tail_tol: settings.tail_tol,
            });
        }
        n_terms *= 2;
    }
}

/// Raw coefficients with the settings' radius policy; used by checks that
/// need the coefficients whether or not they form a pmf.
pub fn raw_coefficients(expr: &PgfExpr, settings: &InversionSettings) -> Result<Vec<f64>> {
    settings.validate()?;
    let points = settings.n_terms * settings.oversample;
    invert_at(expr, settings.n_terms, points, settings.radius_for(points))
}

/// As [`invert_at`], but rejects samples with `|P(z)| > 1`, which no
/// probability generating function attains on the disk.
fn invert_checked(expr: &PgfExpr, n_terms: usize, points: usize, radius: f64) -> Result<Vec<f64>> {
    let mut buf = circle_values_at(points, radius, |z| expr.eval(z))?;
    let modulus = buf.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if !(modulus <= 1.0 + MODULUS_TOL) {
        return Err(Error::ModulusExceedsOne { modulus, radius });
    }
    FftPlanner::new().plan_fft_forward(points).process(&mut buf);
    Ok(rescale(&buf[..n_terms], points, radius))
}

fn invert_at(expr: &PgfExpr, n_terms: usize, points: usize, radius: f64) -> Result<Vec<f64>> {
    let mut buf = circle_values_at(points, radius, |z| expr.eval(z))?;
    FftPlanner::new().plan_fft_forward(points).process(&mut buf);
    Ok(rescale(&buf[..n_terms], points, radius))
}

fn rescale(buf: &[Complex64], points: usize, radius: f64) -> Vec<f64> {
    let scale = 1.0 / points as f64;
    let inv_r = 1.0 / radius;
    let mut rpow = 1.0;
    buf.iter()
        .map(|c| {
            let v = c.re * scale * rpow;
            rpow *= inv_r;
            v
        })
        .collect()
}

/// Taylor coefficients `0..=n_terms` of `log P(s)`; entry `j` is the
/// coefficient of `s^j`. A lattice law with `p_0 > 0` is infinitely
/// divisible iff entries `1..` are all nonnegative (compound-Poisson
/// canonical form).
///
/// The logarithm is unwrapped along the circle from the real sample `P(r)`;
/// the transform is refined while the phase step between neighbours
/// exceeds `pi/2`.
pub fn log_pgf_coefficients(
    expr: &PgfExpr,
    n_terms: usize,
    settings: &InversionSettings,
) -> Result<Vec<f64>> {
    let l0 = expr.log_eval(Complex64::new(0.0, 0.0))?;
    if !l0.re.is_finite() {
        return Err(Error::Domain(format!("ln P(0) = {} is not finite", l0.re)));
    }
    let len = (n_terms + 1).next_power_of_two().max(8);
    let mut points = len * settings.oversample.max(1);
    loop {
        let radius = settings.radius_for(points);
        match unwrapped_log(expr, points, radius) {
            Ok(mut buf) => {
                FftPlanner::new().plan_fft_forward(points).process(&mut buf);
                return Ok(rescale(&buf[..=n_terms], points, radius));
            }
            Err(e @ Error::BranchTrackingFailure { .. }) => {
                if points * 2 > settings.max_terms * settings.oversample.max(1) {
                    return Err(e);
                }
                points *= 2;
            }
            Err(e) => return Err(e),
        }
    }
}

fn unwrapped_log(expr: &PgfExpr, points: usize, radius: f64) -> Result<Vec<Complex64>> {
    // principal log of each sample, Re = ln|P| and Im = Arg P in (-pi, pi],
    // read off the analytic log so that |P| outside the f64 range is usable
    let values = circle_values_at(points, radius, |z| {
        let l = expr.log_eval(z)?;
        Ok(Complex64::new(l.re, wrap_phase(l.im)))
    })?;
    let half = points / 2;
    let mut logs = Vec::with_capacity(points);
    let mut phase = 0.0;
    for (j, v) in values[..=half].iter().enumerate() {
        if !v.re.is_finite() {
            return Err(Error::Domain(format!(
                "ln|P| = {} on the evaluation circle; logarithm undefined",
                v.re
            )));
        }
        if j > 0 {
            let step = wrap_phase(v.im - values[j - 1].im);
            if step.abs() > MAX_PHASE_STEP {
                return Err(Error::BranchTrackingFailure {
                    index: j,
                    jump: step,
                });
            }
            phase += step;
        }
        logs.push(Complex64::new(v.re, phase));
    }
    // log P(-r) is real; a nonzero tracked phase there means a lost turn
    if phase.abs() > MAX_PHASE_STEP {
        return Err(Error::BranchTrackingFailure {
            index: half,
            jump: phase,
        });
    }
    logs[half].im = 0.0;
    let mirrored: Vec<Complex64> = (half + 1..points)
        .map(|j| logs[points - j].conj())
        .collect();
    logs.extend(mirrored);
    Ok(logs)
}

/// `x` reduced to `(-pi, pi]`.
fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SemiStableParams;
    use crate::series::{log_taylor_oracle, series_exp, taylor_oracle};

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    fn admissible() -> PgfExpr {
        PgfExpr::semi_stable(SemiStableParams::new(0.5, 0.05, 0.01).unwrap())
    }

    #[test]
    fn poisson_pmf() {
        let t = pgf_to_pmf(
            &PgfExpr::poisson(1.0).unwrap(),
            &InversionSettings::default().with_n_terms(64),
        )
        .unwrap();
        for n in 0..=20 {
            let want = (-1.0f64).exp() / factorial(n);
            assert!((t.prob(n) - want).abs() < 1e-10, "n={n}");
        }
        assert!(t.tail_mass() <= 1e-10);
        let sum: f64 = t.probs().iter().sum();
        assert!((sum + t.tail_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flagship_is_rejected_at_order_two() {
        let p = PgfExpr::semi_stable(SemiStableParams::flagship());
        assert!(matches!(
            pgf_to_pmf(&p, &InversionSettings::default().with_tail_tol(0.5)),
            Err(Error::ModulusExceedsOne { .. })
        ));
        // close to the origin |P| stays below 1 and the sign test triggers
        let small = InversionSettings::default()
            .with_tail_tol(0.5)
            .with_radius(0.1);
        match pgf_to_pmf(&p, &small) {
            Err(Error::NegativeCoefficient { n, value }) => {
                assert_eq!(n, 2);
                assert!((value + 3.058).abs() < 1e-3, "{value}");
            }
            other => panic!("expected a negative coefficient, got {other:?}"),
        }
    }

    #[test]
    fn flagship_raw_coefficients_match_oracle() {
        let p = PgfExpr::semi_stable(SemiStableParams::flagship());
        let settings = InversionSettings::default()
            .with_n_terms(64)
            .with_radius(0.3);
        let raw = raw_coefficients(&p, &settings).unwrap();
        let oracle = taylor_oracle(&p, 10).unwrap();
        for n in 0..=10 {
            assert!(
                (raw[n] - oracle[n]).abs() < 1e-8,
                "n={n}: {} vs {}",
                raw[n],
                oracle[n]
            );
        }
        assert!((raw[0] - (-0.5f64).exp()).abs() < 1e-12);
        assert!((raw[1] - 0.25 * (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn admissible_family_matches_oracle_and_reconstructs() {
        let p = admissible();
        let t = pgf_to_pmf(&p, &InversionSettings::default().with_tail_tol(0.05)).unwrap();
        let oracle = taylor_oracle(&p, 10).unwrap();
        for n in 0..=10 {
            assert!((t.prob(n) - oracle[n]).abs() < 1e-8, "n={n}");
        }
        for k in 1..=9 {
            let s = k as f64 / 10.0;
            let exact = p.eval_real(s).unwrap();
            assert!((t.eval_truncated(s) - exact).abs() <= t.tail_mass() + 1e-10);
        }
    }

    #[test]
    fn thinning_matches_binomial_mixing() {
        let p = PgfExpr::semi_stable(SemiStableParams::new(0.9, 0.0, 0.3).unwrap());
        let settings = InversionSettings::default().with_tail_tol(1e-6);
        let base = pgf_to_pmf(&p, &settings).unwrap();
        let b = 0.37;
        let thin = pgf_to_pmf(&p.thinned(b).unwrap(), &settings.with_n_terms(base.len())).unwrap();
        // q_m = sum_x p_x C(x, m) b^m (1-b)^(x-m), pmf of Binomial(x, b) by recursion
        let mut q = vec![0.0; base.len()];
        for (x, px) in base.probs().iter().enumerate() {
            let mut pm = (1.0 - b).powi(x as i32);
            for (m, qm) in q.iter_mut().enumerate().take((x + 1).min(200)) {
                *qm += px * pm;
                pm *= (x - m) as f64 / (m + 1) as f64 * b / (1.0 - b);
            }
        }
        for m in 0..200 {
            assert!((thin.prob(m) - q[m]).abs() < 1e-9, "m={m}");
        }
    }

    #[test]
    fn log_coefficients_examples() {
        let po = PgfExpr::poisson(1.0).unwrap();
        let s = InversionSettings::default();
        let l = log_pgf_coefficients(&po, 32, &s).unwrap();
        assert!((l[0] + 1.0).abs() < 1e-12);
        assert!((l[1] - 1.0).abs() < 1e-12);
        assert!(l[2..].iter().all(|c| c.abs() < 1e-12));
        let l2 = log_pgf_coefficients(&po.power(2.0).unwrap(), 8, &s).unwrap();
        assert!((l2[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn log_coefficients_match_exact_series() {
        for expr in [
            admissible(),
            PgfExpr::semi_stable(SemiStableParams::flagship()),
            PgfExpr::semi_stable(SemiStableParams::new(0.3, 0.9, 0.1).unwrap())
                .power(0.9)
                .unwrap(),
            // |P| leaves the f64 range on the default circle
            PgfExpr::semi_stable(SemiStableParams::new(0.7, 0.3, 0.4).unwrap())
                .power(1.0 - 0.4f64.powf(0.7))
                .unwrap(),
        ] {
            let got = log_pgf_coefficients(&expr, 64, &InversionSettings::default()).unwrap();
            let want = log_taylor_oracle(&expr, 64);
            for j in 0..=64 {
                assert!(
                    (got[j] - want[j]).abs() < 1e-9 * want[j].abs().max(1.0),
                    "{expr} j={j}: {} vs {}",
                    got[j],
                    want[j]
                );
            }
        }
    }

    #[test]
    fn log_exp_round_trip() {
        let p = admissible();
        let t = pgf_to_pmf(&p, &InversionSettings::default().with_tail_tol(0.05)).unwrap();
        let l = log_pgf_coefficients(&p, 64, &InversionSettings::default()).unwrap();
        let back = series_exp(&l);
        for n in 0..=64 {
            assert!((back[n] - t.prob(n)).abs() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn settings_validation() {
        let p = PgfExpr::poisson(1.0).unwrap();
        assert!(pgf_to_pmf(&p, &InversionSettings::default().with_n_terms(48)).is_err());
        assert!(pgf_to_pmf(&p, &InversionSettings::default().with_n_terms(4)).is_err());
        assert!(pgf_to_pmf(&p, &InversionSettings::default().with_tail_tol(0.0)).is_err());
        assert!(pgf_to_pmf(&p, &InversionSettings::default().with_radius(1.0)).is_err());
    }

    #[test]
    fn tail_cap_reported() {
        // heavy tail: P(X > n) ~ n^-0.3 cannot reach 1e-6 within the cap
        let p = PgfExpr::semi_stable(SemiStableParams::new(0.3, 0.0, 0.5).unwrap());
        let mut s = InversionSettings::default().with_tail_tol(1e-6);
        s.max_terms = 1 << 12;
        assert!(matches!(
            pgf_to_pmf(&p, &s),
            Err(Error::TailToleranceUnmet { .. })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let t = pgf_to_pmf(
            &PgfExpr::poisson(1.5).unwrap(),
            &InversionSettings::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf, Some(&serde_json::json!({"seed": 1})))
            .unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# {"));
        assert_eq!(text.lines().nth(1), Some("n,p"));
        let back = PmfTable::read_csv(&buf[..]).unwrap();
        assert_eq!(back, t);
    }
}
