//! Separating points and separating times for pairs of Wright–Fisher laws.
//!
//! The symbolic verdict is assembled as `U ∧ V ∧ R` from the per-endpoint
//! hitting terms and the ergodic term, then simplified using what each
//! endpoint's boundary class says about the hitting times under the law
//! `p1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{drift, scale_above_zero, EtaSpec, MutSelParams};
use crate::quad::{integrate, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VerdictKind {
    Delta,
    Infinity,
    HitZero,
    HitOne,
    HitEither,
}

/// Symbolic separating time. `bar` selects the convention `inf ∅ = δ`
/// and is only ever set on `HitZero` / `HitOne`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeparationVerdict {
    pub kind: VerdictKind,
    pub bar: bool,
}

impl SeparationVerdict {
    pub const DELTA: Self = SeparationVerdict { kind: VerdictKind::Delta, bar: false };
    pub const INFINITY: Self = SeparationVerdict { kind: VerdictKind::Infinity, bar: false };

    pub fn hit_zero(bar: bool) -> Self {
        SeparationVerdict { kind: VerdictKind::HitZero, bar }
    }

    pub fn hit_one(bar: bool) -> Self {
        SeparationVerdict { kind: VerdictKind::HitOne, bar }
    }

    pub fn hit_either() -> Self {
        SeparationVerdict { kind: VerdictKind::HitEither, bar: false }
    }

    /// Image under `x -> 1-x`.
    pub fn mirrored(self) -> Self {
        let kind = match self.kind {
            VerdictKind::HitZero => VerdictKind::HitOne,
            VerdictKind::HitOne => VerdictKind::HitZero,
            k => k,
        };
        SeparationVerdict { kind, bar: self.bar }
    }

    pub fn symbol(&self) -> &'static str {
        match (self.kind, self.bar) {
            (VerdictKind::Delta, _) => "delta",
            (VerdictKind::Infinity, _) => "inf",
            (VerdictKind::HitZero, false) => "T0",
            (VerdictKind::HitZero, true) => "T0bar",
            (VerdictKind::HitOne, false) => "T1",
            (VerdictKind::HitOne, true) => "T1bar",
            (VerdictKind::HitEither, _) => "T0^T1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SeparatingPoints {
    pub zero: bool,
    pub one: bool,
}

impl SeparatingPoints {
    pub fn is_empty(&self) -> bool {
        !self.zero && !self.one
    }

    /// `0`, `1`, `0,1` or `none`.
    pub fn label(&self) -> &'static str {
        match (self.zero, self.one) {
            (false, false) => "none",
            (true, false) => "0",
            (false, true) => "1",
            (true, true) => "0,1",
        }
    }
}

/// An endpoint is non-separating exactly when both laws share the same
/// mutation rate there and that rate is below one.
pub fn separating_points(p0: &MutSelParams, p1: &MutSelParams) -> SeparatingPoints {
    SeparatingPoints {
        zero: !(p0.alpha == p1.alpha && p1.alpha < 1.0),
        one: !(p0.beta == p1.beta && p1.beta < 1.0),
    }
}

/// One factor of the minimum `U ∧ V ∧ R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Term {
    Infinity,
    HitZero { bar: bool },
    HitOne { bar: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationDiagnostics {
    /// Whether the rates were swapped to reach `alpha1 <= beta1`.
    pub canonical_swap: bool,
    /// Separating points of the canonical pair.
    pub points: SeparatingPoints,
    /// Term contributed by endpoint 0 before simplification.
    pub u: Option<Term>,
    /// Term contributed by endpoint 1 before simplification.
    pub v: Option<Term>,
    /// Ergodic term: present when both endpoints are shared reflecting
    /// boundaries.
    pub r: bool,
    /// Terms left after simplification.
    pub reduced: Vec<Term>,
    pub verdict: SeparationVerdict,
}

pub fn separating_time(p0: &MutSelParams, p1: &MutSelParams) -> SeparationVerdict {
    separating_time_diagnostics(p0, p1).verdict
}

pub fn separating_time_diagnostics(p0: &MutSelParams, p1: &MutSelParams) -> SeparationDiagnostics {
    if p1.alpha > p1.beta {
        let mut d = canonical(&p0.mirrored(), &p1.mirrored());
        d.canonical_swap = true;
        d.verdict = d.verdict.mirrored();
        return d;
    }
    canonical(p0, p1)
}

fn canonical(p0: &MutSelParams, p1: &MutSelParams) -> SeparationDiagnostics {
    let points = separating_points(p0, p1);
    let mut diag = SeparationDiagnostics {
        canonical_swap: false,
        points,
        u: None,
        v: None,
        r: false,
        reduced: Vec::new(),
        verdict: SeparationVerdict::DELTA,
    };
    if p0 == p1 {
        return diag;
    }
    let (a1, b1) = (p1.alpha, p1.beta);

    // Starting inside, 0 can only be avoided for ever by absorption at 1.
    if points.zero {
        diag.u = Some(Term::HitZero { bar: b1 == 0.0 });
    }
    if points.one {
        diag.v = Some(Term::HitOne { bar: a1 == 0.0 });
    }
    diag.r = 0.0 < a1 && a1 < 1.0 && p0.alpha == a1 && 0.0 < b1 && b1 < 1.0 && p0.beta == b1;

    let mut terms: Vec<Term> = Vec::new();
    if let Some(Term::HitZero { bar }) = diag.u {
        if a1 >= 1.0 {
            // Entrance at 0: never hit.
            if !bar {
                terms.push(Term::Infinity);
            }
        } else if b1 > 0.0 {
            terms.push(Term::HitZero { bar: false });
        } else {
            terms.push(Term::HitZero { bar });
        }
    }
    if let Some(Term::HitOne { bar }) = diag.v {
        if b1 >= 1.0 {
            if !bar {
                terms.push(Term::Infinity);
            }
        } else if a1 > 0.0 {
            terms.push(Term::HitOne { bar: false });
        } else {
            terms.push(Term::HitOne { bar });
        }
    }
    let hits = terms.iter().filter(|t| !matches!(t, Term::Infinity)).count();
    if hits == 2 && a1.max(b1) < 1.0 {
        // One of the two endpoints is reached in finite time.
        for t in terms.iter_mut() {
            *t = match *t {
                Term::HitZero { .. } => Term::HitZero { bar: false },
                Term::HitOne { .. } => Term::HitOne { bar: false },
                t => t,
            };
        }
    }
    if diag.r {
        terms.push(Term::Infinity);
    }
    if hits > 0 && terms.contains(&Term::Infinity) {
        // T ∧ ∞ = T under inf ∅ = ∞, and T̄ ∧ ∞ is the plain hitting time.
        terms.retain(|t| !matches!(t, Term::Infinity));
        for t in terms.iter_mut() {
            *t = match *t {
                Term::HitZero { .. } => Term::HitZero { bar: false },
                Term::HitOne { .. } => Term::HitOne { bar: false },
                t => t,
            };
        }
    }
    terms.dedup();
    diag.verdict = match terms.as_slice() {
        [] => SeparationVerdict::DELTA,
        [Term::Infinity] => SeparationVerdict::INFINITY,
        [Term::HitZero { bar }] => SeparationVerdict::hit_zero(*bar),
        [Term::HitOne { bar }] => SeparationVerdict::hit_one(*bar),
        _ => SeparationVerdict::hit_either(),
    };
    diag.reduced = terms;
    diag
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointVerdict {
    NonSeparating,
    Separating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Endpoint {
    Zero,
    One,
}

/// `(μ1 - μ0)² / σ⁴`, the local-integrability integrand.
fn gap_sq_over_sigma4(p0: &MutSelParams, p1: &MutSelParams, eta: &EtaSpec, x: f64) -> f64 {
    let d = drift(p1, eta, x) - drift(p0, eta, x);
    let v = x * (1.0 - x);
    d * d / (v * v)
}

/// Local integrability of `b²/σ²` on shrinking neighbourhoods of an
/// interior point.
pub fn interior_point_check(p0: &MutSelParams, p1: &MutSelParams, eta: &EtaSpec, z: f64) -> Result<PointVerdict> {
    if !(z > 0.0 && z < 1.0) {
        return Err(Error::OutOfDomain {
            what: "z",
            value: z,
            domain: "(0,1): endpoints are handled by the half-good check",
        });
    }
    let opts = QuadOptions::default();
    let mut r = 0.5 * z.min(1.0 - z);
    let mut prev: Option<f64> = None;
    for _ in 0..8 {
        let v = integrate(|x| gap_sq_over_sigma4(p0, p1, eta, x), z - r, z + r, opts)?.value;
        if !v.is_finite() {
            return Ok(PointVerdict::Separating);
        }
        if let Some(p) = prev {
            // A bounded integrand loses about half its mass per halving.
            if v > 0.75 * p + 1e-300 {
                return Ok(PointVerdict::Separating);
            }
        }
        prev = Some(v);
        r *= 0.5;
    }
    Ok(PointVerdict::NonSeparating)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HalfGood {
    Converges,
    Diverges,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfGoodReport {
    pub verdict: HalfGood,
    /// Shell integrals, outermost first.
    pub shell_sums: Vec<f64>,
}

pub const HALF_GOOD_SHELLS: usize = 12;
pub const HALF_GOOD_EPS: f64 = 0.1;

pub fn half_good_check(p0: &MutSelParams, p1: &MutSelParams, eta: &EtaSpec, endpoint: Endpoint) -> Result<HalfGood> {
    half_good_report(p0, p1, eta, endpoint).map(|r| r.verdict)
}

/// Integrates `|S1(y) - S1(0)| m1(y) b²(y)/σ²(y)`-type mass near the
/// endpoint on dyadic shells and reads convergence off the shell ratios.
pub fn half_good_report(p0: &MutSelParams, p1: &MutSelParams, eta: &EtaSpec, endpoint: Endpoint) -> Result<HalfGoodReport> {
    let (p0, p1, eta) = match endpoint {
        Endpoint::Zero => (*p0, *p1, eta.clone()),
        Endpoint::One => (p0.mirrored(), p1.mirrored(), eta.mirrored()),
    };
    if p1.alpha >= 1.0 {
        return Ok(HalfGoodReport {
            verdict: HalfGood::Diverges,
            shell_sums: Vec::new(),
        });
    }
    let (da, db, ds) = (p0.alpha - p1.alpha, p0.beta - p1.beta, p0.s - p1.s);
    let integrand = |y: f64| -> f64 {
        let dist = match scale_above_zero(&p1, &eta, y) {
            Ok(v) => v.to_f64(),
            Err(_) => f64::NAN,
        };
        let w = y.powf(p1.alpha) * (1.0 - y).powf(p1.beta) * (p1.s * eta.antiderivative(y)).exp();
        let g = db / (1.0 - y) - da / y - ds * eta.eval(y);
        dist * w * g * g
    };
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-8,
        max_intervals: 200,
    };
    let mut sums = Vec::with_capacity(HALF_GOOD_SHELLS);
    let mut hi = HALF_GOOD_EPS;
    for _ in 0..HALF_GOOD_SHELLS {
        let lo = 0.5 * hi;
        sums.push(integrate(integrand, lo, hi, opts)?.value);
        hi = lo;
    }
    let verdict = classify_shells(&sums)?;
    Ok(HalfGoodReport {
        verdict,
        shell_sums: sums,
    })
}

fn classify_shells(sums: &[f64]) -> Result<HalfGood> {
    if sums.iter().all(|&v| v == 0.0) {
        return Ok(HalfGood::Converges);
    }
    let tail = &sums[sums.len() - 7..];
    let ratios: Vec<f64> = tail.windows(2).map(|w| w[1] / w[0]).collect();
    if ratios.iter().all(|&r| r >= 0.5) {
        Ok(HalfGood::Diverges)
    } else if ratios.iter().all(|&r| r <= 0.75) {
        Ok(HalfGood::Converges)
    } else {
        Err(Error::Inconclusive(format!("shell ratios {ratios:?}")))
    }
}
