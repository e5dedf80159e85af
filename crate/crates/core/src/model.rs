//! Parameters, coefficients and boundary behaviour of the Wright–Fisher
//! diffusion
//!
//! ```text
//! dX = ½[α(1-X) - βX + s X(1-X) η(X)] dt + sqrt(X(1-X)) dW
//! ```
//!
//! together with its scale function, speed measure and the stationary
//! moments that make up the asymptotic covariance of the full estimator.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::quad::{integrate_beta_weighted, integrate_left_power, QuadOptions};

/// Mutation rates towards (`alpha`) and away from (`beta`) the focal
/// allele, and the selection coefficient `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutSelParams {
    pub alpha: f64,
    pub beta: f64,
    pub s: f64,
}

impl MutSelParams {
    pub fn new(alpha: f64, beta: f64, s: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::OutOfDomain {
                what: "alpha",
                value: alpha,
                domain: "mutation rates are finite and non-negative",
            });
        }
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::OutOfDomain {
                what: "beta",
                value: beta,
                domain: "mutation rates are finite and non-negative",
            });
        }
        if !s.is_finite() {
            return Err(Error::OutOfDomain {
                what: "s",
                value: s,
                domain: "the selection coefficient is a finite real",
            });
        }
        Ok(MutSelParams { alpha, beta, s })
    }

    /// Image under `x -> 1-x`: the mutation rates swap. The selection
    /// shape is mirrored separately by [`EtaSpec::mirrored`].
    pub fn mirrored(&self) -> Self {
        MutSelParams {
            alpha: self.beta,
            beta: self.alpha,
            s: self.s,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.alpha, self.beta, self.s]
    }

    pub fn from_array(v: [f64; 3]) -> Result<Self> {
        MutSelParams::new(v[0], v[1], v[2])
    }
}

/// Frequency dependence of selection.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum EtaSpec {
    /// `η ≡ 1` (haploid selection).
    #[default]
    Genic,
    /// `η(x) = x + h(1-2x)` with dominance `h`.
    Diploid { h: f64 },
    /// `η(x) = Σ c_k x^k`, coefficients in increasing degree.
    Polynomial { coeffs: Vec<f64> },
}

impl EtaSpec {
    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        let eta = EtaSpec::Polynomial { coeffs };
        eta.validate()?;
        Ok(eta)
    }

    /// Rejects shapes that would make `s` unidentifiable.
    pub fn validate(&self) -> Result<()> {
        match self {
            EtaSpec::Genic => Ok(()),
            EtaSpec::Diploid { h } => {
                if h.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("dominance h={h} must be finite")))
                }
            }
            EtaSpec::Polynomial { coeffs } => {
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "eta polynomial coefficients must be finite".into(),
                    ));
                }
                if coeffs.iter().all(|&c| c == 0.0) {
                    return Err(Error::InvalidParameter(
                        "eta must not vanish identically on [0,1]: s would not be identifiable".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            EtaSpec::Genic => 1.0,
            EtaSpec::Diploid { h } => x + h * (1.0 - 2.0 * x),
            EtaSpec::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            EtaSpec::Genic => 0.0,
            EtaSpec::Diploid { h } => 1.0 - 2.0 * h,
            EtaSpec::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &c)| acc * x + k as f64 * c),
        }
    }

    /// `H(x) = ∫_0^x η`, anchored so that `H(0) = 0`.
    pub fn antiderivative(&self, x: f64) -> f64 {
        match self {
            EtaSpec::Genic => x,
            EtaSpec::Diploid { h } => h * x + 0.5 * (1.0 - 2.0 * h) * x * x,
            EtaSpec::Polynomial { coeffs } => {
                coeffs
                    .iter()
                    .enumerate()
                    .rev()
                    .fold(0.0, |acc, (k, &c)| acc * x + c / (k as f64 + 1.0))
                    * x
            }
        }
    }

    /// Coefficients of `η` as a polynomial in `x`.
    pub fn coefficients(&self) -> Vec<f64> {
        match self {
            EtaSpec::Genic => vec![1.0],
            EtaSpec::Diploid { h } => vec![*h, 1.0 - 2.0 * h],
            EtaSpec::Polynomial { coeffs } => coeffs.clone(),
        }
    }

    /// The shape `x -> -η(1-x)` that pairs with [`MutSelParams::mirrored`].
    pub fn mirrored(&self) -> EtaSpec {
        let c = self.coefficients();
        let n = c.len();
        let mut out = vec![0.0; n];
        // -Σ c_k (1-x)^k, expanded binomially.
        for (k, &ck) in c.iter().enumerate() {
            let mut binom = 1.0;
            for (j, o) in out.iter_mut().enumerate().take(k + 1) {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                *o -= ck * binom * sign;
                binom = binom * (k - j) as f64 / (j + 1) as f64;
            }
        }
        EtaSpec::Polynomial { coeffs: out }
    }

    /// `max_{[0,1]} |η|`, exact for the closed-form variants and taken on a
    /// dense grid for general polynomials.
    pub fn sup_abs(&self) -> f64 {
        match self {
            EtaSpec::Genic => 1.0,
            EtaSpec::Diploid { h } => h.abs().max((1.0 - h).abs()),
            EtaSpec::Polynomial { .. } => (0..=4096)
                .map(|i| self.eval(i as f64 / 4096.0).abs())
                .fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryClass {
    Exit,
    RegularReflecting,
    Entrance,
}

impl BoundaryClass {
    pub fn from_rate(rate: f64) -> Self {
        if rate == 0.0 {
            BoundaryClass::Exit
        } else if rate < 1.0 {
            BoundaryClass::RegularReflecting
        } else {
            BoundaryClass::Entrance
        }
    }

    /// Accessible endpoints belong to the state space.
    pub fn accessible(self) -> bool {
        !matches!(self, BoundaryClass::Entrance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Boundaries {
    pub zero: BoundaryClass,
    pub one: BoundaryClass,
}

impl Boundaries {
    /// Whether 0 and 1 belong to the state space `I_θ`.
    pub fn state_space(&self) -> (bool, bool) {
        (self.zero.accessible(), self.one.accessible())
    }
}

pub fn classify_boundary(p: &MutSelParams) -> Boundaries {
    Boundaries {
        zero: BoundaryClass::from_rate(p.alpha),
        one: BoundaryClass::from_rate(p.beta),
    }
}

pub fn drift(p: &MutSelParams, eta: &EtaSpec, x: f64) -> f64 {
    0.5 * (p.alpha * (1.0 - x) - p.beta * x + p.s * x * (1.0 - x) * eta.eval(x))
}

pub fn diffusion(x: f64) -> f64 {
    (x * (1.0 - x)).max(0.0).sqrt()
}

/// `(μ_{p1}(x) - μ_{p0}(x)) / σ(x)` on the open interval.
pub fn drift_gap_over_sigma(p1: &MutSelParams, p0: &MutSelParams, eta: &EtaSpec, x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::OutOfDomain {
            what: "x",
            value: x,
            domain: "(0,1): the drift gap over sigma is singular at the endpoints",
        });
    }
    Ok(0.5 * (p1.alpha - p0.alpha) * ((1.0 - x) / x).sqrt()
        - 0.5 * (p1.beta - p0.beta) * (x / (1.0 - x)).sqrt()
        + 0.5 * (p1.s - p0.s) * (x * (1.0 - x)).sqrt() * eta.eval(x))
}

/// Anchor of the scale function, `S(SCALE_ANCHOR) = 0`.
pub const SCALE_ANCHOR: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleSpeed {
    pub scale: f64,
    pub speed_density: f64,
    pub quad_error: f64,
}

/// `S'(y) = y^{-α} (1-y)^{-β} e^{-sH(y)}`.
pub fn scale_density(p: &MutSelParams, eta: &EtaSpec, y: f64) -> f64 {
    y.powf(-p.alpha) * (1.0 - y).powf(-p.beta) * (-p.s * eta.antiderivative(y)).exp()
}

pub fn speed_density(p: &MutSelParams, eta: &EtaSpec, x: f64) -> f64 {
    x.powf(p.alpha - 1.0) * (1.0 - x).powf(p.beta - 1.0) * (p.s * eta.antiderivative(x)).exp()
}

/// Mass of the speed measure at an endpoint whose local mutation rate is
/// `rate`: infinite exactly for an absorbing endpoint.
pub fn speed_atom(rate: f64) -> ExtReal {
    if rate == 0.0 {
        ExtReal::PosInf
    } else {
        ExtReal::ZERO
    }
}

fn scale_quad_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-14,
        rel_tol: 1e-12,
        max_intervals: 4000,
    }
}

/// `∫_a^b S'(y) dy` for `0 <= a < b <= 1/2`, substituting for the
/// endpoint power at zero.
fn scale_integral_left(p: &MutSelParams, eta: &EtaSpec, a: f64, b: f64) -> Result<(f64, f64)> {
    let r = integrate_left_power(
        -p.alpha,
        a,
        b,
        |y| (1.0 - y).powf(-p.beta) * (-p.s * eta.antiderivative(y)).exp(),
        scale_quad_opts(),
    )?;
    Ok((r.value, r.abs_error))
}

/// `∫_a^b S'(y) dy` for `1/2 <= a < b <= 1`, in the variable `w = 1-y`.
fn scale_integral_right(p: &MutSelParams, eta: &EtaSpec, a: f64, b: f64) -> Result<(f64, f64)> {
    let r = integrate_left_power(
        -p.beta,
        1.0 - b,
        1.0 - a,
        |w| (1.0 - w).powf(-p.alpha) * (-p.s * eta.antiderivative(1.0 - w)).exp(),
        scale_quad_opts(),
    )?;
    Ok((r.value, r.abs_error))
}

/// Scale function anchored at one half, with its quadrature error.
pub fn scale(p: &MutSelParams, eta: &EtaSpec, x: f64) -> Result<(f64, f64)> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::OutOfDomain {
            what: "x",
            value: x,
            domain: "(0,1)",
        });
    }
    if x < SCALE_ANCHOR {
        let (v, e) = scale_integral_left(p, eta, x, SCALE_ANCHOR)?;
        Ok((-v, e))
    } else {
        scale_integral_right(p, eta, SCALE_ANCHOR, x)
    }
}

pub fn scale_and_speed(p: &MutSelParams, eta: &EtaSpec, x: f64) -> Result<ScaleSpeed> {
    let (s, e) = scale(p, eta, x)?;
    Ok(ScaleSpeed {
        scale: s,
        speed_density: speed_density(p, eta, x),
        quad_error: e,
    })
}

/// `S(x) - S(0+)`; infinite when the endpoint 0 is an entrance (`α >= 1`).
pub fn scale_above_zero(p: &MutSelParams, eta: &EtaSpec, x: f64) -> Result<ExtReal> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::OutOfDomain {
            what: "x",
            value: x,
            domain: "(0,1)",
        });
    }
    if p.alpha >= 1.0 {
        return Ok(ExtReal::PosInf);
    }
    let upto = x.min(SCALE_ANCHOR);
    let (mut v, _) = scale_integral_left(p, eta, 0.0, upto)?;
    if x > SCALE_ANCHOR {
        v += scale_integral_right(p, eta, SCALE_ANCHOR, x)?.0;
    }
    Ok(ExtReal::Finite(v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryMoments {
    /// `E[(1-X)/X]`
    pub a_inf: ExtReal,
    /// `E[X/(1-X)]`
    pub b_inf: ExtReal,
    /// `E[(1-X) η(X)]`
    pub c_inf: ExtReal,
    /// `E[X η(X)]`
    pub d_inf: ExtReal,
    /// `E[X(1-X) η(X)^2]`
    pub e_inf: ExtReal,
}

/// Limit of `⟨M⟩_T / T`, the normalized observed information.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaMatrix {
    pub entries: [[ExtReal; 3]; 3],
}

impl SigmaMatrix {
    pub fn from_moments(m: &StationaryMoments) -> Self {
        let neg = |v: ExtReal| match v {
            ExtReal::Finite(x) => ExtReal::Finite(-x),
            ExtReal::PosInf => ExtReal::NegInf,
            ExtReal::NegInf => ExtReal::PosInf,
            ExtReal::Undefined => ExtReal::Undefined,
        };
        let one = ExtReal::Finite(-1.0);
        SigmaMatrix {
            entries: [
                [m.a_inf, one, m.c_inf],
                [one, m.b_inf, neg(m.d_inf)],
                [m.c_inf, neg(m.d_inf), m.e_inf],
            ],
        }
    }

    pub fn finite(&self) -> Option<Matrix3<f64>> {
        let mut out = Matrix3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                out[(i, j)] = self.entries[i][j].finite()?;
            }
        }
        Some(out)
    }
}

fn moment_quad_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-13,
        max_intervals: 8000,
    }
}

/// Moments of the stationary law `∝ x^{α-1}(1-x)^{β-1} e^{sH(x)}`.
pub fn stationary_moments(p: &MutSelParams, eta: &EtaSpec) -> Result<StationaryMoments> {
    if p.alpha <= 0.0 || p.beta <= 0.0 {
        return Err(Error::NotErgodic {
            alpha: p.alpha,
            beta: p.beta,
        });
    }
    let tilt = |x: f64| (p.s * eta.antiderivative(x)).exp();
    let opts = moment_quad_opts();
    let z = integrate_beta_weighted(p.alpha - 1.0, p.beta - 1.0, tilt, opts)?.value;
    let a_inf = if p.alpha > 1.0 {
        ExtReal::Finite(integrate_beta_weighted(p.alpha - 2.0, p.beta, tilt, opts)?.value / z)
    } else {
        ExtReal::PosInf
    };
    let b_inf = if p.beta > 1.0 {
        ExtReal::Finite(integrate_beta_weighted(p.alpha, p.beta - 2.0, tilt, opts)?.value / z)
    } else {
        ExtReal::PosInf
    };
    let c = integrate_beta_weighted(p.alpha - 1.0, p.beta, |x| eta.eval(x) * tilt(x), opts)?.value / z;
    let d = integrate_beta_weighted(p.alpha, p.beta - 1.0, |x| eta.eval(x) * tilt(x), opts)?.value / z;
    let e = integrate_beta_weighted(p.alpha, p.beta, |x| eta.eval(x).powi(2) * tilt(x), opts)?.value / z;
    Ok(StationaryMoments {
        a_inf,
        b_inf,
        c_inf: ExtReal::Finite(c),
        d_inf: ExtReal::Finite(d),
        e_inf: ExtReal::Finite(e),
    })
}

/// Beta-distribution moments for the neutral genic model.
pub fn stationary_moments_closed_form(p: &MutSelParams, eta: &EtaSpec) -> Option<StationaryMoments> {
    if p.s != 0.0 || *eta != EtaSpec::Genic || p.alpha <= 0.0 || p.beta <= 0.0 {
        return None;
    }
    let (a, b) = (p.alpha, p.beta);
    Some(StationaryMoments {
        a_inf: if a > 1.0 { ExtReal::Finite(b / (a - 1.0)) } else { ExtReal::PosInf },
        b_inf: if b > 1.0 { ExtReal::Finite(a / (b - 1.0)) } else { ExtReal::PosInf },
        c_inf: ExtReal::Finite(b / (a + b)),
        d_inf: ExtReal::Finite(a / (a + b)),
        e_inf: ExtReal::Finite(a * b / ((a + b) * (a + b + 1.0))),
    })
}

/// Stationary moments together with the assembled covariance matrix.
pub fn sigma(p: &MutSelParams, eta: &EtaSpec) -> Result<(StationaryMoments, SigmaMatrix)> {
    let m = stationary_moments(p, eta)?;
    Ok((m, SigmaMatrix::from_moments(&m)))
}
