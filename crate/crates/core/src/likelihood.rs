//! Path functionals and the Girsanov log-likelihood in a form free of
//! stochastic integrals.
//!
//! With `φ(x) = (1-x, -x, x(1-x)η(x))` the drift is `½ φᵀθ`, and relative to a
//! dominating parameter `θ0`
//!
//! ```text
//! log L(θ) = (θ-θ0)ᵀ Y - ½ (θ-θ0)ᵀ I (θ-θ0),   I = ¼ ∫ φφᵀ/σ² dt.
//! ```
//!
//! The `dX` integrals in `Y` are rewritten through Itô's formula applied to
//! `log X`, `log(1-X)` and `H(X)`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::ext::ExtReal;
use crate::model::{EtaSpec, MutSelParams};
use crate::sde::SamplePath;

pub const DEFAULT_CLIP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathFunctionals {
    /// `∫ (1-X)/X dt`
    pub a: ExtReal,
    /// `∫ X/(1-X) dt`
    pub b: ExtReal,
    /// `∫ (1-X) η(X) dt`
    pub c: ExtReal,
    /// `∫ X η(X) dt`
    pub d: ExtReal,
    /// `∫ X(1-X) η(X)² dt`
    pub e: ExtReal,
    pub t: f64,
    /// `log(X_T / X_0)`
    pub log_ratio_x: ExtReal,
    /// `log((1-X_T) / (1-X_0))`
    pub log_ratio_1mx: ExtReal,
    /// `H(X_T) - H(X_0)`
    pub h_diff: f64,
    /// `∫ X(1-X) η'(X) dt`
    pub eta_prime_term: f64,
}

fn trapezoid<F: Fn(f64) -> f64>(times: &[f64], values: &[f64], f: F) -> f64 {
    let mut acc = 0.0;
    let mut prev = f(values[0]);
    for i in 1..times.len() {
        let cur = f(values[i]);
        acc += 0.5 * (times[i] - times[i - 1]) * (prev + cur);
        prev = cur;
    }
    acc
}

fn log_ratio(end: f64, start: f64, clip: f64) -> ExtReal {
    match (end < clip, start < clip) {
        (true, true) => ExtReal::Undefined,
        (true, false) => ExtReal::NegInf,
        (false, true) => ExtReal::PosInf,
        (false, false) => ExtReal::Finite((end / start).ln()),
    }
}

/// Trapezoidal functionals over the whole path.
///
/// `A` (resp. `B`) is infinite when a visit to 0 (resp. 1) is recorded
/// within the horizon, or when the path comes closer than `clip` to the
/// endpoint.
pub fn path_functionals(path: &SamplePath, eta: &EtaSpec, clip: f64) -> PathFunctionals {
    let (ts, xs) = (&path.times, &path.values);
    let t = path.horizon();
    let near0 = path.hit0.is_some_and(|h| h <= t) || xs.iter().any(|&x| x < clip);
    let near1 = path.hit1.is_some_and(|h| h <= t) || xs.iter().any(|&x| 1.0 - x < clip);
    let a = if near0 {
        ExtReal::PosInf
    } else {
        ExtReal::Finite(trapezoid(ts, xs, |x| (1.0 - x) / x))
    };
    let b = if near1 {
        ExtReal::PosInf
    } else {
        ExtReal::Finite(trapezoid(ts, xs, |x| x / (1.0 - x)))
    };
    let (x0, xt) = (path.x0(), path.last());
    PathFunctionals {
        a,
        b,
        c: ExtReal::Finite(trapezoid(ts, xs, |x| (1.0 - x) * eta.eval(x))),
        d: ExtReal::Finite(trapezoid(ts, xs, |x| x * eta.eval(x))),
        e: ExtReal::Finite(trapezoid(ts, xs, |x| x * (1.0 - x) * eta.eval(x).powi(2))),
        t,
        log_ratio_x: log_ratio(xt, x0, clip),
        log_ratio_1mx: log_ratio(1.0 - xt, 1.0 - x0, clip),
        h_diff: eta.antiderivative(xt) - eta.antiderivative(x0),
        eta_prime_term: trapezoid(ts, xs, |x| x * (1.0 - x) * eta.derivative(x)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LogLikelihood {
    Finite(f64),
    /// The two laws are already mutually singular on the observed horizon.
    Separated,
}

impl LogLikelihood {
    pub fn finite(self) -> Option<f64> {
        match self {
            LogLikelihood::Finite(v) => Some(v),
            LogLikelihood::Separated => None,
        }
    }
}

/// Score `Y` and information `I` relative to `p0`. Entries that are not
/// finite come back as IEEE infinities or NaN.
pub fn score_and_information(p0: &MutSelParams, f: &PathFunctionals) -> (Vector3<f64>, Matrix3<f64>) {
    let (a, b, c, d, e) = (f.a.to_f64(), f.b.to_f64(), f.c.to_f64(), f.d.to_f64(), f.e.to_f64());
    let t = f.t;
    let (a0, b0, s0) = (p0.alpha, p0.beta, p0.s);
    let y = Vector3::new(
        0.5 * (f.log_ratio_x.to_f64() + 0.5 * a - 0.5 * (a0 * a - b0 * t + s0 * c)),
        0.5 * (f.log_ratio_1mx.to_f64() + 0.5 * b + 0.5 * (a0 * t - b0 * b + s0 * d)),
        0.5 * (f.h_diff - 0.5 * f.eta_prime_term - 0.5 * (a0 * c - b0 * d + s0 * e)),
    );
    let info = 0.25 * Matrix3::new(a, -t, c, -t, b, -d, c, -d, e);
    (y, info)
}

/// `log dP_p / dP_{p0}` on the observed horizon.
pub fn log_likelihood(p: &MutSelParams, p0: &MutSelParams, _eta: &EtaSpec, f: &PathFunctionals) -> LogLikelihood {
    let delta = Vector3::new(p.alpha - p0.alpha, p.beta - p0.beta, p.s - p0.s);
    let needs = [
        (delta[0] != 0.0, f.a.is_finite() && f.log_ratio_x.is_finite()),
        (delta[1] != 0.0, f.b.is_finite() && f.log_ratio_1mx.is_finite()),
    ];
    if needs.iter().any(|&(used, ok)| used && !ok) {
        return LogLikelihood::Separated;
    }
    let (y, info) = score_and_information(p0, f);
    let mut lin = 0.0;
    let mut quad = 0.0;
    for i in 0..3 {
        if delta[i] == 0.0 {
            continue;
        }
        lin += delta[i] * y[i];
        for j in 0..3 {
            if delta[j] != 0.0 {
                quad += delta[i] * info[(i, j)] * delta[j];
            }
        }
    }
    LogLikelihood::Finite(lin - 0.5 * quad)
}

/// `log dP_{(α,β,s)} / dP_{(α,β,0)}` from the stochastic-exponential form
/// of the selection density, with `√(X(1-X)) dW` replaced by the
/// innovation `dX - μ_{(α,β,0)} dt`.
fn selection_log_density(f: &PathFunctionals, alpha: f64, beta: f64, s: f64) -> f64 {
    let c = f.c.to_f64();
    let d = f.d.to_f64();
    let e = f.e.to_f64();
    let stochastic = f.h_diff - 0.5 * f.eta_prime_term - 0.5 * (alpha * c - beta * d);
    0.5 * s * stochastic - s * s * e / 8.0
}

/// `log dP_{(α,β,s1)} / dP_{(α,β,s0)}`, always finite on a finite horizon.
pub fn selection_rnd(f: &PathFunctionals, alpha: f64, beta: f64, s1: f64, s0: f64) -> f64 {
    if s1 == s0 {
        return 0.0;
    }
    selection_log_density(f, alpha, beta, s1) - selection_log_density(f, alpha, beta, s0)
}
