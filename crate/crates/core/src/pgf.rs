//! Closed-form generating functions and the combinators acting on them.
//!
//! Every node is evaluated through its analytic logarithm expressed in
//! `w = 1 - z`: thinning maps `w -> b w`, powers scale the logarithm and
//! products add logarithms. This keeps `P(z)^t` on the analytic branch even
//! where `Im log P(z)` leaves `(-pi, pi]`, and avoids the cancellation in
//! `1 - (1 - b + b z)` near `z = 1`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::SemiStableParams;

/// Slack allowed on `|z| <= 1` for points computed on the unit circle.
pub const DISK_TOLERANCE: f64 = 1e-12;

/// A generating-function expression. Construct through the checked
/// constructors; every reachable expression is infinitely divisible, so
/// [`PgfExpr::power`] is valid for any inner expression.
#[derive(Debug, Clone, PartialEq)]
pub struct PgfExpr(Arc<Node>);

/// Read-only view of an expression node.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    SemiStable(SemiStableParams),
    Poisson(f64),
    Thinned(PgfExpr, f64),
    Power(PgfExpr, f64),
    Product(PgfExpr, PgfExpr),
}

impl PgfExpr {
    pub fn semi_stable(params: SemiStableParams) -> Self {
        PgfExpr(Arc::new(Node::SemiStable(params)))
    }

    pub fn poisson(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Poisson rate must be positive, got {lambda}"
            )));
        }
        Ok(PgfExpr(Arc::new(Node::Poisson(lambda))))
    }

    /// `b ⊗ X`: the PGF `s -> P(1 - b + b s)`.
    pub fn thinned(&self, b: f64) -> Result<Self> {
        if !(b > 0.0 && b <= 1.0) {
            return Err(Error::Domain(format!(
                "thinning probability must lie in (0, 1], got {b}"
            )));
        }
        Ok(PgfExpr(Arc::new(Node::Thinned(self.clone(), b))))
    }

    /// `P^t`, the law of the Levy process at time `t`.
    pub fn power(&self, t: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::Domain(format!("power must be positive, got {t}")));
        }
        Ok(PgfExpr(Arc::new(Node::Power(self.clone(), t))))
    }

    /// Sum of independent variables.
    pub fn product(&self, other: &PgfExpr) -> Self {
        PgfExpr(Arc::new(Node::Product(self.clone(), other.clone())))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    /// Value at `z`, `|z| <= 1`. `z = 1` returns exactly 1.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        if !(z.norm() <= 1.0 + DISK_TOLERANCE) {
            return Err(Error::Domain(format!("|z| = {} exceeds 1", z.norm())));
        }
        if z == Complex64::new(1.0, 0.0) {
            return Ok(Complex64::new(1.0, 0.0));
        }
        Ok(self.log_at(Complex64::new(1.0, 0.0) - z, true)?.exp())
    }

    /// Value at a real argument `s` in `[0, 1]`.
    pub fn eval_real(&self, s: f64) -> Result<f64> {
        Ok(self.eval(Complex64::new(s, 0.0))?.re)
    }

    /// Analytic logarithm of the PGF at `z`. Unlike [`PgfExpr::eval`] this
    /// does not fail when an intermediate value is below the `f64` range.
    pub fn log_eval(&self, z: Complex64) -> Result<Complex64> {
        if !(z.norm() <= 1.0 + DISK_TOLERANCE) {
            return Err(Error::Domain(format!("|z| = {} exceeds 1", z.norm())));
        }
        self.log_at(Complex64::new(1.0, 0.0) - z, false)
    }

    fn log_at(&self, w: Complex64, strict: bool) -> Result<Complex64> {
        match self.node() {
            Node::SemiStable(p) => Ok(-semi_stable_exponent(p, w)),
            Node::Poisson(lambda) => Ok(-lambda * w),
            Node::Thinned(inner, b) => inner.log_at(w * b, strict),
            Node::Power(inner, t) => {
                let l = inner.log_at(w, strict)?;
                if strict && l.re < f64::MIN_POSITIVE.ln() {
                    return Err(Error::Domain(format!(
                        "inner value of power node underflows (log modulus {:.1})",
                        l.re
                    )));
                }
                Ok(l * t)
            }
            Node::Product(l, r) => Ok(l.log_at(w, strict)? + r.log_at(w, strict)?),
        }
    }
}

/// `g(w) = w^alpha (1 - A cos(k Log w))` on principal branches; `g(0) = 0`.
fn semi_stable_exponent(p: &SemiStableParams, w: Complex64) -> Complex64 {
    if w == Complex64::new(0.0, 0.0) {
        return w;
    }
    let log_w = w.ln();
    let pow = (log_w * p.alpha()).exp();
    pow * (1.0 - p.amplitude() * (log_w * p.period_constant()).cos())
}

impl fmt::Display for PgfExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::SemiStable(p) => write!(f, "SemiStable({p})"),
            Node::Poisson(l) => write!(f, "Poisson({l})"),
            Node::Thinned(e, b) => write!(f, "Thinned({e}, b={b})"),
            Node::Power(e, t) => write!(f, "Power({e}, t={t})"),
            Node::Product(l, r) => write!(f, "Product({l}, {r})"),
        }
    }
}

/// Evaluate `expr` at `z`.
pub fn eval_pgf(expr: &PgfExpr, z: Complex64) -> Result<Complex64> {
    expr.eval(z)
}

/// Laplace transform `phi(s) = exp(-s^alpha (1 - A cos(k ln s)))`, `phi(0) = 1`.
pub fn eval_lt(params: &SemiStableParams, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::Domain(format!(
            "Laplace argument must be >= 0, got {s}"
        )));
    }
    if s == 0.0 {
        return Ok(1.0);
    }
    Ok((-s.powf(params.alpha())
        * (1.0 - params.amplitude() * (params.period_constant() * s.ln()).cos()))
    .exp())
}

/// `psi(u) = |u|^alpha (1 - A cos(k ln|u|))`, `psi(0) = 0`.
pub fn eval_psi(params: &SemiStableParams, u: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    let m = u.abs();
    m.powf(params.alpha()) * (1.0 - params.amplitude() * (params.period_constant() * m.ln()).cos())
}

pub fn thinning_transform(expr: &PgfExpr, b: f64) -> Result<PgfExpr> {
    expr.thinned(b)
}

/// AR(1) innovation law `{P(1 - b + b s)}^(b^-alpha - 1)`.
pub fn innovation_pgf(params: &SemiStableParams) -> PgfExpr {
    let exponent = 1.0 / params.epoch() - 1.0;
    PgfExpr::semi_stable(*params)
        .thinned(params.b())
        .and_then(|e| e.power(exponent))
        .expect("validated parameters give a valid innovation")
}

/// The same innovation written as `P(s)^(1 - a)`.
pub fn innovation_pgf_reduced(params: &SemiStableParams) -> PgfExpr {
    PgfExpr::semi_stable(*params)
        .power(1.0 - params.epoch())
        .expect("1 - a > 0 for validated parameters")
}

/// Marginal law `P^t` of the Levy process at time `t`.
pub fn levy_marginal(params: &SemiStableParams, t: f64) -> Result<PgfExpr> {
    PgfExpr::semi_stable(*params).power(t)
}
