//! Monte Carlo checks of the boundary zero-one laws, the germ statistic,
//! consistency and asymptotic normality of the estimators.
//!
//! Batches run seed-parallel; results are collected in seed order so every
//! report is a deterministic function of the configuration.

use std::f64::consts::LN_2;

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{mle_full_with, mle_joint_mut, mle_marginal, Coordinate};
use crate::likelihood::{path_functionals, DEFAULT_CLIP};
use crate::model::{sigma, EtaSpec, MutSelParams};
use crate::sde::{
    log_grid, psi_transform, simulate_k_allele_project, simulate_wf, simulate_wf_on_grid, SamplePath, SimConfig,
};
use crate::stats::{excess_kurtosis, ks_standard_normal, ks_two_sample, mean, median, skewness, KsResult};

// ---------------------------------------------------------------------------
// Integrability of X^{-κ} near a start at 0

/// Dyadic level bands `(top 2^{-(k+1)}, top 2^{-k}]`, `k = 0..bands`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub top: f64,
    pub bands: usize,
}

impl Default for BandSpec {
    fn default() -> Self {
        BandSpec { top: 1e-4, bands: 12 }
    }
}

/// Per-band log-slope above which the increments count as not decaying.
///
/// Occupation of band `k` scales like `2^{-kα}`, so the weighted increments
/// have slope `(κ-α) ln 2`; the cut sits an eighth of `ln 2` below the
/// critical value `κ = α`.
pub const KAPPA_SLOPE_THRESHOLD: f64 = -LN_2 / 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Divergence {
    Finite,
    Diverging,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceDiagnostic {
    pub kappa: f64,
    /// `∫ X^{-κ}` restricted to the bands `0..=k`, for each `k`.
    pub partial_sums: Vec<f64>,
    /// Time spent in each band.
    pub occupation: Vec<f64>,
    /// Least-squares slope of the log increments against the band index.
    pub slope: f64,
    pub verdict: Divergence,
}

/// Time spent in each band, splitting every step half to each end.
pub fn band_occupation(path: &SamplePath, bands: &BandSpec) -> Vec<f64> {
    let mut occ = vec![0.0; bands.bands];
    for i in 1..path.times.len() {
        let h = 0.5 * (path.times[i] - path.times[i - 1]);
        for x in [path.values[i - 1], path.values[i]] {
            if x > 0.0 && x <= bands.top {
                let k = (bands.top / x).log2().floor() as usize;
                if k < bands.bands {
                    occ[k] += h;
                }
            }
        }
    }
    occ
}

fn ls_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let xm = 0.5 * (n - 1.0);
    let ym = mean(ys);
    let (mut num, mut den) = (0.0, 0.0);
    for (k, y) in ys.iter().enumerate() {
        let dx = k as f64 - xm;
        num += dx * (y - ym);
        den += dx * dx;
    }
    num / den
}

pub fn kappa_integral_diagnostic(path: &SamplePath, kappa: f64) -> Result<DivergenceDiagnostic> {
    kappa_integral_diagnostic_with(path, kappa, &BandSpec::default(), KAPPA_SLOPE_THRESHOLD)
}

/// Band increments `top^{-κ} 2^{kκ} · occupation_k`, accumulated from the
/// top band down. A band with no occupation makes the verdict
/// inconclusive; `κ = 0` is always finite.
pub fn kappa_integral_diagnostic_with(
    path: &SamplePath,
    kappa: f64,
    bands: &BandSpec,
    threshold: f64,
) -> Result<DivergenceDiagnostic> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::OutOfDomain {
            what: "kappa",
            value: kappa,
            domain: "[0, ∞)",
        });
    }
    if path.x0() != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "the diagnostic needs a path started at 0, got x0={}",
            path.x0()
        )));
    }
    if !(bands.top > 0.0 && bands.top < 1.0 && bands.bands >= 3) {
        return Err(Error::InvalidParameter("bands need 0 < top < 1 and at least 3 levels".into()));
    }
    let occupation = band_occupation(path, bands);
    let increments: Vec<f64> = occupation
        .iter()
        .enumerate()
        .map(|(k, o)| (bands.top * 0.5f64.powi(k as i32)).powf(-kappa) * o)
        .collect();
    let partial_sums: Vec<f64> = increments
        .iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect();
    if occupation.iter().any(|&o| o <= 0.0) {
        return Ok(DivergenceDiagnostic {
            kappa,
            partial_sums,
            occupation,
            slope: f64::NAN,
            verdict: Divergence::Inconclusive,
        });
    }
    let logs: Vec<f64> = increments.iter().map(|v| v.ln()).collect();
    let slope = ls_slope(&logs);
    let verdict = if kappa == 0.0 || slope <= threshold {
        Divergence::Finite
    } else {
        Divergence::Diverging
    };
    Ok(DivergenceDiagnostic {
        kappa,
        partial_sums,
        occupation,
        slope,
        verdict,
    })
}

/// Simulation settings for starts at 0: the boundary layer steps shrink
/// with the distance so that low bands are resolved.
pub fn zero_start_config(cfg: &SimConfig) -> SimConfig {
    SimConfig {
        layer_step_fraction: Some(cfg.layer_step_fraction.unwrap_or(0.1)),
        min_substep: cfg.min_substep,
        allow_endpoint_start: true,
        ..cfg.clone()
    }
}

pub fn simulate_from_zero(p: &MutSelParams, eta: &EtaSpec, t_end: f64, cfg: &SimConfig) -> Result<SamplePath> {
    simulate_wf(p, eta, 0.0, t_end, &zero_start_config(cfg))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroOneReport {
    pub params: MutSelParams,
    pub kappas: Vec<f64>,
    /// `slopes[seed][k]` and `verdicts[seed][k]` for `kappas[k]`.
    pub slopes: Vec<Vec<f64>>,
    pub verdicts: Vec<Vec<Divergence>>,
    /// Per κ: counts of Finite, Diverging and Inconclusive.
    pub counts: Vec<[usize; 3]>,
    /// Paths with Diverging at some κ and Finite at a larger one.
    pub monotone_violations: usize,
}

/// The κ diagnostic on `n` paths started at 0, all κ sharing each path.
pub fn zero_one_check(
    p: &MutSelParams,
    eta: &EtaSpec,
    kappas: &[f64],
    t_end: f64,
    n: usize,
    cfg: &SimConfig,
) -> Result<ZeroOneReport> {
    if kappas.is_empty() || kappas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("kappas must be non-empty and increasing".into()));
    }
    let rows: Vec<Vec<DivergenceDiagnostic>> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<Vec<DivergenceDiagnostic>> {
            let c = cfg.clone().with_stream(cfg.stream + i as u64);
            let path = simulate_from_zero(p, eta, t_end, &c)?;
            kappas.iter().map(|&k| kappa_integral_diagnostic(&path, k)).collect()
        })
        .collect::<Result<_>>()?;
    let mut counts = vec![[0usize; 3]; kappas.len()];
    let mut monotone_violations = 0;
    for row in &rows {
        for (k, d) in row.iter().enumerate() {
            counts[k][d.verdict as usize] += 1;
        }
        let violated = row.iter().enumerate().any(|(i, a)| {
            a.verdict == Divergence::Diverging && row[i + 1..].iter().any(|b| b.verdict == Divergence::Finite)
        });
        if violated {
            monotone_violations += 1;
        }
    }
    Ok(ZeroOneReport {
        params: *p,
        kappas: kappas.to_vec(),
        slopes: rows.iter().map(|r| r.iter().map(|d| d.slope).collect()).collect(),
        verdicts: rows.iter().map(|r| r.iter().map(|d| d.verdict).collect()).collect(),
        counts,
        monotone_violations,
    })
}

// ---------------------------------------------------------------------------
// Germ statistic

/// `(1/log t) ∫_{1/t}^{1/n} ds / Y_s` for each `t`, by the trapezoid rule in
/// `log s` applied to `s / Y_s` at the grid points inside the window.
pub fn germ_statistic(path: &SamplePath, n: u32, t_list: &[f64]) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let upper = 1.0 / n as f64;
    let mut out = Vec::with_capacity(t_list.len());
    let first_positive = path.times.iter().copied().find(|&s| s > 0.0).unwrap_or(f64::INFINITY);
    for &t in t_list {
        let lower = 1.0 / t;
        if !(t > n as f64) {
            return Err(Error::InvalidParameter(format!("t={t} must exceed n={n}")));
        }
        if first_positive > lower * (1.0 + 1e-9) {
            return Err(Error::InvalidParameter(format!(
                "grid starts at {first_positive:e} and does not reach down to 1/t={lower:e}"
            )));
        }
        if path.horizon() < upper * (1.0 - 1e-9) {
            return Err(Error::InvalidParameter(format!(
                "path ends at {} before 1/n={upper}",
                path.horizon()
            )));
        }
        let mut acc = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for (&s, &y) in path.times.iter().zip(&path.values) {
            if s < lower * (1.0 - 1e-9) || s > upper * (1.0 + 1e-9) {
                continue;
            }
            if !(y > 0.0) {
                return Err(Error::DegeneratePath(format!("path is at 0 at time {s:e} inside the window")));
            }
            let cur = (s.ln(), s / y);
            if let Some((l0, v0)) = prev {
                acc += 0.5 * (cur.0 - l0) * (v0 + cur.1);
            }
            prev = Some(cur);
        }
        out.push(acc / t.ln());
    }
    Ok(out)
}

/// Limit of the germ statistic of `ψ(X)` for a start at 0 with rate
/// `alpha > 1`, obtained by squeezing between the liminf and limsup
/// events; infinite at `alpha = 1`.
pub fn germ_target(alpha: f64) -> f64 {
    1.0 / (2.0 * alpha - 2.0)
}

// ---------------------------------------------------------------------------
// Mutual singularity of the laws started at 0

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartRegime {
    /// Both rates in `(0,1)`: integrability of `X^{-κ}` at a κ between them.
    BothBelowOne,
    /// One rate below 1, one at least 1: does the path return to 0 early?
    Straddling,
    /// Both at least 1: germ statistic of `ψ(X)`.
    BothAtLeastOne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryStartSettings {
    pub horizon_kappa: f64,
    pub bands: BandSpec,
    pub return_window: f64,
    pub germ_t: f64,
    pub germ_n: u32,
    pub germ_per_decade: usize,
}

impl Default for BoundaryStartSettings {
    fn default() -> Self {
        BoundaryStartSettings {
            horizon_kappa: 0.2,
            bands: BandSpec::default(),
            return_window: 0.1,
            germ_t: 1e60,
            germ_n: 1,
            germ_per_decade: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryStartReport {
    pub regime: StartRegime,
    pub alpha_low: f64,
    pub alpha_high: f64,
    /// Name of the statistic and the κ used, where relevant.
    pub statistic: String,
    pub kappa: Option<f64>,
    pub values_low: Vec<f64>,
    pub values_high: Vec<f64>,
    /// Values above the threshold are attributed to the smaller rate.
    pub threshold: f64,
    pub misclassified_low: usize,
    pub misclassified_high: usize,
    /// Fraction of all paths on the wrong side of the threshold.
    pub overlap: f64,
}

/// Starts both laws at 0 with common `beta`, `s` and `eta` and measures how
/// well the regime's statistic tells them apart.
#[allow(clippy::too_many_arguments)]
pub fn boundary_start_singularity_check(
    alpha_a: f64,
    alpha_b: f64,
    beta: f64,
    s: f64,
    eta: &EtaSpec,
    n_seeds: usize,
    settings: &BoundaryStartSettings,
    cfg: &SimConfig,
) -> Result<BoundaryStartReport> {
    if n_seeds == 0 {
        return Err(Error::InvalidParameter("need at least one seed".into()));
    }
    let (lo, hi) = (alpha_a.min(alpha_b), alpha_a.max(alpha_b));
    if !(lo > 0.0) || lo == hi {
        return Err(Error::InvalidParameter(format!(
            "rates must be positive and distinct, got {alpha_a} and {alpha_b}"
        )));
    }
    let p_lo = MutSelParams::new(lo, beta, s)?;
    let p_hi = MutSelParams::new(hi, beta, s)?;
    eta.validate()?;
    let regime = if hi < 1.0 {
        StartRegime::BothBelowOne
    } else if lo < 1.0 {
        StartRegime::Straddling
    } else {
        StartRegime::BothAtLeastOne
    };
    // Distinct stream blocks for the two laws.
    let run = |p: &MutSelParams, block: u64| -> Result<Vec<f64>> {
        (0..n_seeds)
            .into_par_iter()
            .map(|i| {
                let c = cfg.clone().with_stream(cfg.stream + block * n_seeds as u64 + i as u64);
                statistic_for(regime, p, eta, lo, hi, settings, &c)
            })
            .collect()
    };
    let values_low = run(&p_lo, 0)?;
    let values_high = run(&p_hi, 1)?;
    let (statistic, kappa, threshold) = match regime {
        StartRegime::BothBelowOne => (
            "kappa_band_slope".to_string(),
            Some(kappa_between(lo, hi)),
            KAPPA_SLOPE_THRESHOLD,
        ),
        StartRegime::Straddling => ("early_return_indicator".to_string(), None, 0.5),
        StartRegime::BothAtLeastOne => {
            let (a, b) = (germ_target(lo), germ_target(hi));
            let thr = if a.is_finite() { (a * b).sqrt() } else { 2.0 * b };
            ("germ_statistic".to_string(), None, thr)
        }
    };
    let misclassified_low = values_low.iter().filter(|&&v| !(v > threshold)).count();
    let misclassified_high = values_high.iter().filter(|&&v| !(v <= threshold)).count();
    Ok(BoundaryStartReport {
        regime,
        alpha_low: lo,
        alpha_high: hi,
        statistic,
        kappa,
        overlap: (misclassified_low + misclassified_high) as f64 / (2 * n_seeds) as f64,
        values_low,
        values_high,
        threshold,
        misclassified_low,
        misclassified_high,
    })
}

/// The smallest κ at which the integral diverges under the smaller rate;
/// it stays finite under the larger one.
fn kappa_between(lo: f64, _hi: f64) -> f64 {
    lo
}

fn statistic_for(
    regime: StartRegime,
    p: &MutSelParams,
    eta: &EtaSpec,
    lo: f64,
    hi: f64,
    settings: &BoundaryStartSettings,
    cfg: &SimConfig,
) -> Result<f64> {
    match regime {
        StartRegime::BothBelowOne => {
            let path = simulate_from_zero(p, eta, settings.horizon_kappa, cfg)?;
            let d = kappa_integral_diagnostic_with(&path, kappa_between(lo, hi), &settings.bands, KAPPA_SLOPE_THRESHOLD)?;
            // An inconclusive band pattern counts against the path.
            Ok(if d.slope.is_nan() { f64::NAN } else { d.slope })
        }
        StartRegime::Straddling => {
            let path = simulate_from_zero(p, eta, settings.return_window, cfg)?;
            let back = path.first_return0.is_some_and(|r| r > 0.0 && r <= settings.return_window);
            Ok(if back { 1.0 } else { 0.0 })
        }
        StartRegime::BothAtLeastOne => {
            let grid = log_grid(1.0 / settings.germ_t, 1.0 / settings.germ_n as f64, settings.germ_per_decade);
            let c = SimConfig {
                allow_endpoint_start: true,
                ..cfg.clone()
            };
            let path = simulate_wf_on_grid(p, eta, 0.0, &grid, &c)?;
            Ok(germ_statistic(&psi_transform(&path), settings.germ_n, &[settings.germ_t])?[0])
        }
    }
}

// ---------------------------------------------------------------------------
// Asymptotic normality

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub n: usize,
    pub horizon: f64,
    pub sigma: [[f64; 3]; 3],
    /// Whitened errors `½ Σ^{1/2} √T (θ̂ - θ)`, one row per seed.
    pub whitened: Vec<[f64; 3]>,
    pub mean: [f64; 3],
    pub covariance: [[f64; 3]; 3],
    /// `‖C - I‖_F / ‖I‖_F`.
    pub frobenius_rel: f64,
    pub skewness: [f64; 3],
    pub excess_kurtosis: [f64; 3],
    pub ks_p_value: [f64; 3],
    /// Seeds whose estimate failed; they are left out of the statistics.
    pub failures: usize,
}

fn to_arr(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    let mut a = [[0.0; 3]; 3];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = m[(i, j)];
        }
    }
    a
}

fn sym_sqrt(m: &Matrix3<f64>) -> Matrix3<f64> {
    let e = m.symmetric_eigen();
    let d = Matrix3::from_diagonal(&e.eigenvalues.map(|v| v.max(0.0).sqrt()));
    e.eigenvectors * d * e.eigenvectors.transpose()
}

pub fn clt_check(p: &MutSelParams, eta: &EtaSpec, x0: f64, t_end: f64, n: usize, cfg: &SimConfig) -> Result<CltReport> {
    let (_, sig) = sigma(p, eta)?;
    let sig = sig.finite().ok_or(Error::NonFiniteSigma {
        alpha: p.alpha,
        beta: p.beta,
    })?;
    if n < 2 {
        return Err(Error::InvalidParameter("need at least two seeds".into()));
    }
    let root = 0.5 * sym_sqrt(&sig);
    let rows: Vec<Option<[f64; 3]>> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<Option<[f64; 3]>> {
            let c = cfg.clone().with_stream(cfg.stream + i as u64);
            let path = simulate_wf(p, eta, x0, t_end, &c)?;
            let f = path_functionals(&path, eta, DEFAULT_CLIP);
            Ok(mle_full_with(&f, p).ok().map(|r| {
                let err = nalgebra::Vector3::new(r.estimate[0] - p.alpha, r.estimate[1] - p.beta, r.estimate[2] - p.s);
                let z = root * err * t_end.sqrt();
                [z[0], z[1], z[2]]
            }))
        })
        .collect::<Result<_>>()?;
    let failures = rows.iter().filter(|r| r.is_none()).count();
    let whitened: Vec<[f64; 3]> = rows.into_iter().flatten().collect();
    let m = whitened.len();
    if m < 2 {
        return Err(Error::DegeneratePath("fewer than two seeds produced an estimate".into()));
    }
    let col = |k: usize| whitened.iter().map(|z| z[k]).collect::<Vec<f64>>();
    let cols = [col(0), col(1), col(2)];
    let mu = [mean(&cols[0]), mean(&cols[1]), mean(&cols[2])];
    let mut cov = Matrix3::zeros();
    for z in &whitened {
        for i in 0..3 {
            for j in 0..3 {
                cov[(i, j)] += (z[i] - mu[i]) * (z[j] - mu[j]);
            }
        }
    }
    cov /= (m - 1) as f64;
    let frobenius_rel = (cov - Matrix3::identity()).norm() / 3f64.sqrt();
    let std = |k: usize| {
        let sd = cov[(k, k)].sqrt();
        cols[k].iter().map(|v| (v - mu[k]) / sd).collect::<Vec<f64>>()
    };
    Ok(CltReport {
        n: m,
        horizon: t_end,
        sigma: to_arr(&sig),
        mean: mu,
        covariance: to_arr(&cov),
        frobenius_rel,
        skewness: [skewness(&cols[0]), skewness(&cols[1]), skewness(&cols[2])],
        excess_kurtosis: [excess_kurtosis(&cols[0]), excess_kurtosis(&cols[1]), excess_kurtosis(&cols[2])],
        ks_p_value: [
            ks_standard_normal(&std(0)).p_value,
            ks_standard_normal(&std(1)).p_value,
            ks_standard_normal(&std(2)).p_value,
        ],
        whitened,
        failures,
    })
}

// ---------------------------------------------------------------------------
// Consistency

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub horizons: Vec<f64>,
    /// `errors[h][seed]` is `θ̂ - θ` on `[0, horizons[h]]`; NaN when the
    /// estimate failed.
    pub errors: Vec<Vec<[f64; 3]>>,
    /// Median absolute error per horizon and coordinate.
    pub median_abs_error: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// `(α, β)` jointly with `s` known; the `s` error is reported as 0.
    JointMutation,
    Full,
}

/// Estimator errors on nested prefixes of one path per seed.
pub fn consistency_check(
    p: &MutSelParams,
    eta: &EtaSpec,
    x0: f64,
    horizons: &[f64],
    n: usize,
    estimator: EstimatorKind,
    cfg: &SimConfig,
) -> Result<ConsistencyReport> {
    if horizons.is_empty() || horizons.windows(2).any(|w| !(w[1] > w[0])) || !(horizons[0] > 0.0) {
        return Err(Error::InvalidParameter("horizons must be positive and increasing".into()));
    }
    let t_max = *horizons.last().unwrap();
    let per_seed: Vec<Vec<[f64; 3]>> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<Vec<[f64; 3]>> {
            let c = cfg.clone().with_stream(cfg.stream + i as u64);
            let path = simulate_wf(p, eta, x0, t_max, &c)?;
            Ok(horizons
                .iter()
                .map(|&t| {
                    let f = path_functionals(&path.truncate(t), eta, DEFAULT_CLIP);
                    match estimator {
                        EstimatorKind::Full => match mle_full_with(&f, p) {
                            Ok(r) => [r.estimate[0] - p.alpha, r.estimate[1] - p.beta, r.estimate[2] - p.s],
                            Err(_) => [f64::NAN; 3],
                        },
                        EstimatorKind::JointMutation => match mle_joint_mut(&f, p.s) {
                            Ok((a, b)) => [a - p.alpha, b - p.beta, 0.0],
                            Err(_) => [f64::NAN; 3],
                        },
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let errors: Vec<Vec<[f64; 3]>> = (0..horizons.len())
        .map(|h| per_seed.iter().map(|s| s[h]).collect())
        .collect();
    let median_abs_error = errors
        .iter()
        .map(|e| {
            let m = |k: usize| {
                let v: Vec<f64> = e.iter().map(|z| z[k].abs()).filter(|v| v.is_finite()).collect();
                median(&v)
            };
            [m(0), m(1), m(2)]
        })
        .collect();
    Ok(ConsistencyReport {
        horizons: horizons.to_vec(),
        errors,
        median_abs_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonConsistencyReport {
    /// Seeds on which the path did not reach 1 within the horizon.
    pub qualifying: usize,
    /// `|β̂ - β|` on the qualifying seeds.
    pub errors: Vec<f64>,
    pub tolerance: f64,
    /// Fraction of qualifying seeds whose error stays at or above the
    /// tolerance.
    pub fraction_not_collapsed: f64,
}

/// β estimated with `α` and `s` known, on paths that never visit 1.
pub fn non_consistency_check(
    p: &MutSelParams,
    eta: &EtaSpec,
    x0: f64,
    t_end: f64,
    n: usize,
    tolerance: f64,
    cfg: &SimConfig,
) -> Result<NonConsistencyReport> {
    let per_seed: Vec<Option<f64>> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<Option<f64>> {
            let c = cfg.clone().with_stream(cfg.stream + i as u64);
            let path = simulate_wf(p, eta, x0, t_end, &c)?;
            if path.hit1.is_some() {
                return Ok(None);
            }
            let f = path_functionals(&path, eta, DEFAULT_CLIP);
            Ok(Some(match mle_marginal(Coordinate::Beta, &f, p) {
                Ok(b) => (b - p.beta).abs(),
                Err(_) => f64::INFINITY,
            }))
        })
        .collect::<Result<_>>()?;
    let errors: Vec<f64> = per_seed.into_iter().flatten().collect();
    let qualifying = errors.len();
    let kept = errors.iter().filter(|&&e| !(e < tolerance)).count();
    Ok(NonConsistencyReport {
        qualifying,
        fraction_not_collapsed: if qualifying == 0 { f64::NAN } else { kept as f64 / qualifying as f64 },
        errors,
        tolerance,
    })
}

// ---------------------------------------------------------------------------
// Projection of the K-allele system

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub implied: MutSelParams,
    pub replications: Vec<KsResult>,
    pub alpha_level: f64,
    pub passed: usize,
}

/// Two-sample KS between the projected frequency at `t_end` and a direct
/// scalar simulation with the implied parameters, replicated `reps` times.
///
/// The projected sample of seed `i` uses streams `64 i + j` for `j ≥ 1`;
/// the direct sample takes the unused slot `64 i`.
#[allow(clippy::too_many_arguments)]
pub fn projection_check(
    nu: &[f64],
    subset: &[usize],
    x0: &[f64],
    t_end: f64,
    n: usize,
    reps: usize,
    alpha_level: f64,
    cfg: &SimConfig,
) -> Result<ProjectionReport> {
    if n == 0 || reps == 0 {
        return Err(Error::InvalidParameter("need positive sample size and replication count".into()));
    }
    let x0_b: f64 = subset.iter().filter_map(|&i| x0.get(i)).sum::<f64>().clamp(0.0, 1.0);
    let mut implied = None;
    let mut replications = Vec::with_capacity(reps);
    for r in 0..reps {
        let pairs: Vec<(f64, f64)> = (0..n)
            .into_par_iter()
            .map(|i| -> Result<(f64, f64)> {
                let stream = cfg.stream + (r * n + i) as u64;
                let c = cfg.clone().with_stream(stream);
                let proj = simulate_k_allele_project(nu, x0, subset, t_end, &c)?;
                let direct_cfg = cfg.clone().with_stream(stream * 64);
                let direct = simulate_wf_on_grid(&proj.implied, &EtaSpec::Genic, x0_b, &[0.0, t_end], &direct_cfg)?;
                Ok((proj.path.last(), direct.last()))
            })
            .collect::<Result<_>>()?;
        if implied.is_none() {
            let nb: f64 = subset.iter().map(|&i| nu[i]).sum();
            implied = Some(MutSelParams::new(nb, nu.iter().sum::<f64>() - nb, 0.0)?);
        }
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        replications.push(ks_two_sample(&a, &b));
    }
    let passed = replications.iter().filter(|k| k.p_value > alpha_level).count();
    Ok(ProjectionReport {
        implied: implied.expect("at least one replication"),
        replications,
        alpha_level,
        passed,
    })
}
