//! Closed-form maximum likelihood estimators and the correction applied
//! once an endpoint has been visited.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::likelihood::{path_functionals, score_and_information, PathFunctionals, DEFAULT_CLIP};
use crate::model::{EtaSpec, MutSelParams};
use crate::sde::SamplePath;

pub const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coordinate {
    Alpha,
    Beta,
    S,
}

impl Coordinate {
    pub fn name(self) -> &'static str {
        match self {
            Coordinate::Alpha => "alpha",
            Coordinate::Beta => "beta",
            Coordinate::S => "s",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub coordinates: Vec<Coordinate>,
    pub estimate: Vec<f64>,
    pub crystallized: Vec<bool>,
    /// Horizon whose data each coordinate uses.
    pub used_horizon: Vec<f64>,
    /// Information matrix behind the estimate, row-major.
    pub information: Vec<Vec<f64>>,
    pub clamped: Vec<bool>,
}

impl EstimateReport {
    pub fn get(&self, c: Coordinate) -> Option<f64> {
        self.coordinates.iter().position(|&k| k == c).map(|i| self.estimate[i])
    }
}

fn need_finite(v: ExtReal, coordinate: &'static str) -> Result<f64> {
    match v {
        ExtReal::Finite(x) => Ok(x),
        ExtReal::PosInf | ExtReal::NegInf => Err(Error::Crystallize {
            coordinate,
            state: "infinite",
        }),
        ExtReal::Undefined => Err(Error::Crystallize {
            coordinate,
            state: "undefined",
        }),
    }
}

/// One coordinate with the other two held at the values in `known`.
pub fn mle_marginal(which: Coordinate, f: &PathFunctionals, known: &MutSelParams) -> Result<f64> {
    let t = f.t;
    match which {
        Coordinate::Alpha => {
            let a = need_finite(f.a, "alpha")?;
            let lx = need_finite(f.log_ratio_x, "alpha")?;
            if a <= 0.0 {
                return Err(Error::Crystallize {
                    coordinate: "alpha",
                    state: "zero",
                });
            }
            Ok(1.0 + (2.0 * lx + known.beta * t - known.s * f.c.to_f64()) / a)
        }
        Coordinate::Beta => {
            let b = need_finite(f.b, "beta")?;
            let l1 = need_finite(f.log_ratio_1mx, "beta")?;
            if b <= 0.0 {
                return Err(Error::Crystallize {
                    coordinate: "beta",
                    state: "zero",
                });
            }
            Ok(1.0 + (2.0 * l1 + known.alpha * t + known.s * f.d.to_f64()) / b)
        }
        Coordinate::S => {
            let e = f.e.to_f64();
            if !(e > 0.0) {
                return Err(Error::DegeneratePath(format!(
                    "selection information E_T={e} vanishes; the path never leaves the zeros of X(1-X)η"
                )));
            }
            Ok((2.0 * f.h_diff - f.eta_prime_term - known.alpha * f.c.to_f64() + known.beta * f.d.to_f64()) / e)
        }
    }
}

fn condition_2(a: f64, b: f64, t: f64) -> f64 {
    let m = Matrix2::new(a, -t, -t, b);
    let ev = m.symmetric_eigen().eigenvalues;
    let (lo, hi) = (ev.min().abs(), ev.max().abs());
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Mutation rates jointly, with `s` known.
pub fn mle_joint_mut(f: &PathFunctionals, s_known: f64) -> Result<(f64, f64)> {
    let a = need_finite(f.a, "alpha")?;
    let b = need_finite(f.b, "beta")?;
    let lx = need_finite(f.log_ratio_x, "alpha")?;
    let l1 = need_finite(f.log_ratio_1mx, "beta")?;
    let t = f.t;
    let det = a * b - t * t;
    let cond = condition_2(a, b, t);
    if !(det > 0.0) || cond > CONDITION_LIMIT {
        return Err(Error::SingularInformation { condition: cond });
    }
    let (c, d) = (f.c.to_f64(), f.d.to_f64());
    let alpha = 2.0 / det * (b * lx + t * l1 + 0.5 * b * (a + t) + 0.5 * s_known * (d * t - b * c));
    let beta = 2.0 / det * (a * l1 + t * lx + 0.5 * a * (b + t) + 0.5 * s_known * (a * d - c * t));
    Ok((alpha, beta))
}

fn rows(m: &Matrix3<f64>) -> Vec<Vec<f64>> {
    (0..3).map(|i| (0..3).map(|j| m[(i, j)]).collect()).collect()
}

/// All three parameters, as `θ0 + I⁻¹ Y` relative to `p0`.
pub fn mle_full_with(f: &PathFunctionals, p0: &MutSelParams) -> Result<EstimateReport> {
    need_finite(f.a, "alpha")?;
    need_finite(f.b, "beta")?;
    need_finite(f.log_ratio_x, "alpha")?;
    need_finite(f.log_ratio_1mx, "beta")?;
    let (y, info) = score_and_information(p0, f);
    let sv = info.singular_values();
    let cond = if sv.min() == 0.0 { f64::INFINITY } else { sv.max() / sv.min() };
    if !cond.is_finite() || cond > CONDITION_LIMIT {
        return Err(Error::SingularInformation { condition: cond });
    }
    let step = info
        .lu()
        .solve(&y)
        .ok_or(Error::SingularInformation { condition: cond })?;
    let est = Vector3::new(p0.alpha, p0.beta, p0.s) + step;
    Ok(EstimateReport {
        coordinates: vec![Coordinate::Alpha, Coordinate::Beta, Coordinate::S],
        estimate: est.iter().copied().collect(),
        crystallized: vec![false; 3],
        used_horizon: vec![f.t; 3],
        information: rows(&info),
        clamped: vec![false; 3],
    })
}

pub fn mle_full(f: &PathFunctionals) -> Result<EstimateReport> {
    mle_full_with(f, &MutSelParams { alpha: 0.0, beta: 0.0, s: 0.0 })
}

fn joint_report(f: &PathFunctionals, s_known: f64) -> Result<EstimateReport> {
    let (alpha, beta) = mle_joint_mut(f, s_known)?;
    let info = 0.25 * Matrix2::new(f.a.to_f64(), -f.t, -f.t, f.b.to_f64());
    Ok(EstimateReport {
        coordinates: vec![Coordinate::Alpha, Coordinate::Beta],
        estimate: vec![alpha, beta],
        crystallized: vec![false, false],
        used_horizon: vec![f.t, f.t],
        information: vec![vec![info[(0, 0)], info[(0, 1)]], vec![info[(1, 0)], info[(1, 1)]]],
        clamped: vec![false, false],
    })
}

/// Limit value `1 + 2 log(dist)/info` of the estimate at the last
/// observation before the first hit of `endpoint`, together with the
/// information accumulated there.
///
/// Uses the path's approach trace when it has one, the observation grid
/// otherwise.
pub fn crystallized_value(path: &SamplePath, endpoint_one: bool) -> Result<(f64, f64)> {
    let hit = if endpoint_one { path.hit1 } else { path.hit0 };
    let hit = hit.ok_or_else(|| Error::DegeneratePath("no recorded hit to crystallize at".into()))?;
    let trace = if endpoint_one { &path.approach1 } else { &path.approach0 };
    if let Some(tr) = trace {
        let n = tr.log_dist.len();
        if n >= 2 {
            let (l, a) = (tr.log_dist[n - 2], tr.info[n - 2]);
            if a > 0.0 {
                return Ok((1.0 + 2.0 * l / a, a));
            }
        }
    }
    let dist = |x: f64| if endpoint_one { 1.0 - x } else { x };
    let k = path.times.partition_point(|&t| t < hit);
    let last = (0..k)
        .rev()
        .find(|&i| dist(path.values[i]) > 0.0)
        .ok_or_else(|| Error::DegeneratePath("no observation away from the endpoint before its hit".into()))?;
    if last == 0 {
        return Err(Error::DegeneratePath("the hit occurs before the second observation".into()));
    }
    let mut info = 0.0;
    for i in 1..=last {
        let g = |x: f64| (1.0 - dist(x)) / dist(x);
        info += 0.5 * (path.times[i] - path.times[i - 1]) * (g(path.values[i - 1]) + g(path.values[i]));
    }
    Ok((1.0 + 2.0 * dist(path.values[last]).ln() / info, info))
}

/// Mean of `log(dist)/∫(1-dist)/dist` over the last `count` observations
/// strictly before the first hit of the endpoint. It tends to `(rate-1)/2`.
pub fn pre_hit_ratio(path: &SamplePath, endpoint_one: bool, count: usize) -> Result<f64> {
    let hit = if endpoint_one { path.hit1 } else { path.hit0 };
    hit.ok_or_else(|| Error::DegeneratePath("no recorded hit".into()))?;
    if count == 0 {
        return Err(Error::InvalidParameter("count must be positive".into()));
    }
    let trace = if endpoint_one { &path.approach1 } else { &path.approach0 };
    let ratios: Vec<f64> = match trace {
        Some(tr) if tr.log_dist.len() > count => {
            let n = tr.log_dist.len() - 1;
            (n - count..n).map(|i| tr.log_dist[i] / tr.info[i]).collect()
        }
        _ => {
            let hit = hit.unwrap();
            let dist = |x: f64| if endpoint_one { 1.0 - x } else { x };
            let k = path.times.partition_point(|&t| t < hit);
            let mut out = Vec::with_capacity(k);
            let mut info = 0.0;
            for i in 1..k {
                let (d0, d1) = (dist(path.values[i - 1]), dist(path.values[i]));
                if d0 <= 0.0 || d1 <= 0.0 {
                    return Err(Error::DegeneratePath("path touches the endpoint before its recorded hit".into()));
                }
                info += 0.5 * (path.times[i] - path.times[i - 1]) * ((1.0 - d0) / d0 + (1.0 - d1) / d1);
                out.push(d1.ln() / info);
            }
            if out.len() < count {
                return Err(Error::DegeneratePath(format!(
                    "only {} observations before the hit, {count} requested",
                    out.len()
                )));
            }
            out.split_off(out.len() - count)
        }
    };
    Ok(ratios.iter().sum::<f64>() / ratios.len() as f64)
}

/// Joint mutation estimate on `[0, T]` in which a coordinate whose
/// information explodes at an endpoint hit is fixed at its limit there, and
/// the other coordinate is estimated marginally on the data before its own
/// hit.
pub fn corrected_estimator(path: &SamplePath, eta: &EtaSpec, s_known: f64, t_end: f64) -> Result<EstimateReport> {
    let t_end = t_end.min(path.horizon());
    let h0 = path.hit0.filter(|&h| h <= t_end);
    let h1 = path.hit1.filter(|&h| h <= t_end);
    let func = |t: f64| path_functionals(&path.truncate(t), eta, DEFAULT_CLIP);
    let blank = |est: [f64; 2], cr: [bool; 2], used: [f64; 2]| EstimateReport {
        coordinates: vec![Coordinate::Alpha, Coordinate::Beta],
        estimate: est.to_vec(),
        crystallized: cr.to_vec(),
        used_horizon: used.to_vec(),
        information: Vec::new(),
        clamped: vec![false, false],
    };
    match (h0, h1) {
        (None, None) => joint_report(&func(t_end), s_known),
        (Some(a), b) if b.is_none_or(|b| a < b) => {
            let (alpha, _) = crystallized_value(path, false)?;
            if let Some(b) = b {
                let (beta, _) = crystallized_value(path, true)?;
                return Ok(blank([alpha, beta], [true, true], [a, b]));
            }
            let known = MutSelParams { alpha, beta: 0.0, s: s_known };
            let beta = mle_marginal(Coordinate::Beta, &func(t_end), &known)?;
            Ok(blank([alpha, beta], [true, false], [a, t_end]))
        }
        (a, Some(b)) => {
            let (beta, _) = crystallized_value(path, true)?;
            if let Some(a) = a {
                let (alpha, _) = crystallized_value(path, false)?;
                return Ok(blank([alpha, beta], [true, true], [a, b]));
            }
            let known = MutSelParams { alpha: 0.0, beta, s: s_known };
            let alpha = mle_marginal(Coordinate::Alpha, &func(t_end), &known)?;
            Ok(blank([alpha, beta], [false, true], [t_end, b]))
        }
        (Some(_), None) => unreachable!(),
    }
}

/// `α ∨ 0` and `β ∨ 0`; `s` is left alone.
pub fn clamp_to_domain(mut report: EstimateReport) -> EstimateReport {
    for (i, c) in report.coordinates.iter().enumerate() {
        if matches!(c, Coordinate::Alpha | Coordinate::Beta) && report.estimate[i] < 0.0 {
            report.estimate[i] = 0.0;
            report.clamped[i] = true;
        }
    }
    report
}

/// Joint estimate by direct solve of the 2×2 system, as a cross-check of
/// the closed form.
pub fn mle_joint_mut_solve(f: &PathFunctionals, s_known: f64) -> Option<(f64, f64)> {
    let p0 = MutSelParams { alpha: 0.0, beta: 0.0, s: s_known };
    let (y, info) = score_and_information(&p0, f);
    let m = Matrix2::new(info[(0, 0)], info[(0, 1)], info[(1, 0)], info[(1, 1)]);
    let sol = m.lu().solve(&Vector2::new(y[0], y[1]))?;
    Some((sol[0], sol[1]))
}
