//! Truncated power-series arithmetic at `s = 0`, used as an oracle that is
//! independent of the Fourier path.
//!
//! Every expression is reduced to the series of its logarithm. Leaves are
//! expanded exactly: `(1 - s)^beta` has coefficients `c_j(beta)` with
//! `c_0 = 1, c_j = c_(j-1) (j - 1 - beta) / j`, and `cos(k ln x) = Re x^(ik)`
//! turns the semi-stable exponent into three such binomial series. Thinning
//! is pushed to the leaves (`w -> b w`), powers scale and products add.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pgf::{Node, PgfExpr};

/// Largest order accepted by [`taylor_oracle`].
pub const ORACLE_MAX_ORDER: usize = 16;

/// Taylor coefficients `0..=n_max` of `expr` at `s = 0`.
pub fn taylor_oracle(expr: &PgfExpr, n_max: usize) -> Result<Vec<f64>> {
    if n_max > ORACLE_MAX_ORDER {
        return Err(Error::Domain(format!(
            "oracle order {n_max} exceeds {ORACLE_MAX_ORDER}"
        )));
    }
    Ok(series_exp(&log_taylor_oracle(expr, n_max)))
}

/// Taylor coefficients `0..=n_max` of `log P(s)` at `s = 0`, exact up to
/// floating-point rounding of the binomial recursions.
pub fn log_taylor_oracle(expr: &PgfExpr, n_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    accumulate_log(expr, 1.0, 1.0, &mut out);
    out
}

fn accumulate_log(expr: &PgfExpr, scale: f64, weight: f64, out: &mut [f64]) {
    match expr.node() {
        Node::SemiStable(p) => {
            // -g(scale (1 - s)), g(x) = x^alpha - (A/2)(x^(alpha+ik) + x^(alpha-ik))
            let alpha = p.alpha();
            let osc = Complex64::new(alpha, p.period_constant());
            let lead = scale.powf(alpha);
            let twist = (osc * scale.ln()).exp();
            let stable = binomial_series(Complex64::new(alpha, 0.0), out.len());
            let wave = binomial_series(osc, out.len());
            for (j, o) in out.iter_mut().enumerate() {
                let v = -lead * stable[j].re + p.amplitude() * (twist * wave[j]).re;
                *o += weight * v;
            }
        }
        Node::Poisson(lambda) => {
            let rate = lambda * scale;
            out[0] -= weight * rate;
            if out.len() > 1 {
                out[1] += weight * rate;
            }
        }
        Node::Thinned(inner, b) => accumulate_log(inner, scale * b, weight, out),
        Node::Power(inner, t) => accumulate_log(inner, scale, weight * t, out),
        Node::Product(l, r) => {
            accumulate_log(l, scale, weight, out);
            accumulate_log(r, scale, weight, out);
        }
    }
}

/// Coefficients of `(1 - s)^beta`.
fn binomial_series(beta: Complex64, len: usize) -> Vec<Complex64> {
    let mut c = Vec::with_capacity(len);
    let mut cur = Complex64::new(1.0, 0.0);
    for j in 0..len {
        if j > 0 {
            cur = cur * ((j - 1) as f64 - beta) / j as f64;
        }
        c.push(cur);
    }
    c
}

/// `exp` of a truncated series: `e_0 = exp(l_0)`, `n e_n = sum_{j=1..n} j l_j e_(n-j)`.
pub fn series_exp(log: &[f64]) -> Vec<f64> {
    let mut e = Vec::with_capacity(log.len());
    if log.is_empty() {
        return e;
    }
    e.push(log[0].exp());
    for n in 1..log.len() {
        let acc: f64 = (1..=n).map(|j| j as f64 * log[j] * e[n - j]).sum();
        e.push(acc / n as f64);
    }
    e
}
