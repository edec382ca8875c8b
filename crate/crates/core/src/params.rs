//! The `(alpha, A, b)` parameter triple of the oscillating semi-stable family.
//!
//! The family is
//!
//! ```text
//! P(s) = exp{ -(1-s)^alpha * (1 - A cos[k ln(1-s)]) },   k = -2 pi / ln b
//! ```
//!
//! with epoch `a = b^alpha` and selfsimilarity exponent `H = 1/alpha`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Validated semi-stable parameters. Derived quantities are computed once at
/// construction and never serialized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct SemiStableParams {
    alpha: f64,
    amplitude: f64,
    b: f64,
    epoch: f64,
    period: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    alpha: f64,
    #[serde(rename = "A")]
    amplitude: f64,
    b: f64,
}

impl TryFrom<RawParams> for SemiStableParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        SemiStableParams::new(raw.alpha, raw.amplitude, raw.b)
    }
}

impl From<SemiStableParams> for RawParams {
    fn from(p: SemiStableParams) -> Self {
        RawParams {
            alpha: p.alpha,
            amplitude: p.amplitude,
            b: p.b,
        }
    }
}

impl SemiStableParams {
    /// Validates `0 < alpha <= 1`, `0 <= A < 1` and `0 < b < 1`.
    ///
    /// `A = 0` is accepted as the degenerate (discrete stable) member; see
    /// [`SemiStableParams::is_degenerate`].
    pub fn new(alpha: f64, amplitude: f64, b: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1], got {alpha}"
            )));
        }
        if !(amplitude.is_finite() && (0.0..1.0).contains(&amplitude)) {
            return Err(Error::InvalidParameter(format!(
                "A must lie in [0, 1), got {amplitude}"
            )));
        }
        if !(b.is_finite() && b > 0.0 && b < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "b must lie in (0, 1), got {b}"
            )));
        }
        Ok(SemiStableParams {
            alpha,
            amplitude,
            b,
            epoch: b.powf(alpha),
            period: -2.0 * PI / b.ln(),
        })
    }

    /// The flagship parameter set `(0.5, 0.5, 0.25)`: `a = 0.5`, `b^-alpha - 1 = 1`.
    pub fn flagship() -> Self {
        Self::new(0.5, 0.5, 0.25).expect("flagship parameters are valid")
    }

    /// `alpha = 1, A = 0`: the law collapses to Poisson(1).
    pub fn poisson_limit(b: f64) -> Result<Self> {
        Self::new(1.0, 0.0, b)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Oscillation amplitude `A`.
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Thinning probability `b`.
    pub fn b(&self) -> f64 {
        self.b
    }

    /// Epoch `a = b^alpha`, always in `(0, 1)`.
    pub fn epoch(&self) -> f64 {
        self.epoch
    }

    /// Period constant `k = -2 pi / ln b`.
    pub fn period_constant(&self) -> f64 {
        self.period
    }

    /// Selfsimilarity exponent `H = 1/alpha`.
    pub fn exponent(&self) -> f64 {
        1.0 / self.alpha
    }

    /// `A = 0`: no oscillation, the law is discrete stable (Poisson when `alpha = 1`).
    pub fn is_degenerate(&self) -> bool {
        self.amplitude == 0.0
    }

    /// `alpha = 1` and `A = 0`.
    pub fn is_poisson(&self) -> bool {
        self.alpha == 1.0 && self.amplitude == 0.0
    }

    /// Largest amplitude for which the formula defines a probability law.
    ///
    /// The exponent `s^alpha (1 - A cos(k ln s))` is a Bernstein function iff its
    /// Levy density `x^(-1-alpha) [1/|Gamma(-alpha)| - A Re(x^(-ik) / Gamma(-alpha-ik))]`
    /// stays nonnegative, i.e. iff `A <= |Gamma(-alpha-ik)| / |Gamma(-alpha)|`.
    /// For `alpha = 1` only `A = 0` qualifies. The bound shrinks like
    /// `exp(-pi k / 2)`, so for `b` near 1 essentially only `A = 0` is admissible.
    pub fn admissible_amplitude(&self) -> f64 {
        if self.alpha == 1.0 {
            return 0.0;
        }
        // |Gamma(-alpha - ik)| / |Gamma(-alpha)|
        //   = |Gamma(1 - alpha - ik)| / Gamma(1 - alpha) * alpha / |alpha + ik|
        let k = self.period;
        let num = ln_gamma(Complex64::new(1.0 - self.alpha, -k)).re;
        let den = ln_gamma(Complex64::new(1.0 - self.alpha, 0.0)).re;
        (num - den).exp() * self.alpha / Complex64::new(self.alpha, k).norm()
    }

    /// Whether the parameters define a genuine probability law.
    pub fn is_admissible(&self) -> bool {
        self.amplitude <= self.admissible_amplitude()
    }
}

impl std::fmt::Display for SemiStableParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "alpha={}, A={}, b={}",
            self.alpha, self.amplitude, self.b
        )
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Principal-branch log-gamma for complex arguments (Lanczos, g = 7).
pub(crate) fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // reflection: Gamma(z) Gamma(1-z) = pi / sin(pi z)
        let pi = Complex64::new(PI, 0.0);
        return pi.ln() - (pi * z).sin().ln() - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}
