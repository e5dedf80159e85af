//! Path simulation for the Wright–Fisher diffusion, the squared Bessel
//! process and neutral K-allele systems.
//!
//! Away from the endpoints the WF SDE is stepped by Euler–Maruyama. Inside
//! a layer of width `hit_epsilon` at an endpoint the distance to that
//! endpoint is advanced by exact squared Bessel steps of dimension twice the
//! local mutation rate, which is the local behaviour of the diffusion there.
//! The remaining drift terms (of order `hit_epsilon`) are dropped inside the
//! layer.
//!
//! Before the first visit to an accessible endpoint the approach is instead
//! integrated in the clock `A_t = ∫ (1-X)/X ds` on the logarithm of the
//! distance, in which it is a Brownian motion with drift `(α-1)/2` up to
//! terms of the order of the distance itself. This resolves the approach
//! far below double-precision time resolution; the hit is declared when the
//! log-distance falls below `descent_floor`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bessel::{besq_step, bridge_hit_probability};
use crate::error::{Error, Result};
use crate::model::{drift, EtaSpec, MutSelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub seed: u64,
    /// Generator stream, one per path in a batch.
    pub stream: u64,
    pub hit_epsilon: f64,
    pub substep_factor: u32,
    pub allow_endpoint_start: bool,
    /// Integrate the first approach to each accessible endpoint in the
    /// information clock.
    pub deep_descent: bool,
    /// Log-distance at which the endpoint counts as reached.
    pub descent_floor: f64,
    /// Largest information-clock step.
    pub descent_step: f64,
    /// Descent points closer than this to the endpoint are kept out of the
    /// main grid (they remain in the approach trace).
    pub record_floor: f64,
    /// When set, boundary-layer substeps shrink to this fraction of the
    /// distance to the endpoint (bounded below by `min_substep`).
    pub layer_step_fraction: Option<f64>,
    pub min_substep: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-3,
            seed: 0,
            stream: 0,
            hit_epsilon: 5e-3,
            substep_factor: 16,
            allow_endpoint_start: true,
            deep_descent: true,
            descent_floor: -2000.0,
            descent_step: 1.0,
            record_floor: 1e-12,
            layer_step_fraction: None,
            min_substep: 1e-9,
        }
    }
}

impl SimConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt={} must be positive", self.dt)));
        }
        if !(self.hit_epsilon > 0.0 && self.hit_epsilon < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "hit_epsilon={} must lie in (0, 0.5)",
                self.hit_epsilon
            )));
        }
        if self.substep_factor == 0 {
            return Err(Error::InvalidParameter("substep_factor must be at least 1".into()));
        }
        if !(self.descent_floor < self.hit_epsilon.ln()) {
            return Err(Error::InvalidParameter(format!(
                "descent_floor={} must lie below log(hit_epsilon)",
                self.descent_floor
            )));
        }
        if let Some(c) = self.layer_step_fraction {
            if !(c > 0.0 && self.min_substep > 0.0) {
                return Err(Error::InvalidParameter(
                    "layer_step_fraction and min_substep must be positive".into(),
                ));
            }
        }
        if !(self.descent_step > 0.0) {
            return Err(Error::InvalidParameter("descent_step must be positive".into()));
        }
        Ok(())
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// The final approach to an endpoint before its first hit, at the
/// resolution of the information clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproachTrace {
    pub times: Vec<f64>,
    /// Log of the distance to the endpoint.
    pub log_dist: Vec<f64>,
    /// `∫_0^t (1-X)/X ds` (or its mirror at 1) up to each point.
    pub info: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub hit0: Option<f64>,
    pub hit1: Option<f64>,
    /// First arrival at 0 after having been away from it.
    pub first_return0: Option<f64>,
    pub first_return1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approach0: Option<ApproachTrace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approach1: Option<ApproachTrace>,
}

impl SamplePath {
    /// A path observed on `times` with no hit annotations; validated.
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let path = SamplePath::from_raw(times, values);
        path.validate()?;
        Ok(path)
    }

    /// No validation; used for processes living outside `[0,1]`.
    pub fn from_raw(times: Vec<f64>, values: Vec<f64>) -> Self {
        SamplePath {
            times,
            values,
            hit0: None,
            hit1: None,
            first_return0: None,
            first_return1: None,
            approach0: None,
            approach1: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.values.len() {
            return Err(Error::InvalidPath(format!(
                "{} times but {} values",
                self.times.len(),
                self.values.len()
            )));
        }
        if self.times.len() < 2 {
            return Err(Error::InvalidPath("a path needs at least two points".into()));
        }
        if self.times[0] != 0.0 {
            return Err(Error::InvalidPath(format!("path starts at t={} instead of 0", self.times[0])));
        }
        for (i, w) in self.times.windows(2).enumerate() {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(Error::InvalidPath(format!("times not strictly increasing at index {}", i + 1)));
            }
        }
        for (i, &v) in self.values.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidPath(format!("value {v} at index {i} outside [0,1]")));
            }
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn x0(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        *self.values.last().unwrap_or(&0.0)
    }

    /// Prefix of the path on `[0, t]`, with linear interpolation at `t`.
    pub fn truncate(&self, t: f64) -> SamplePath {
        let t = t.min(self.horizon());
        let k = self.times.partition_point(|&s| s <= t);
        let mut times = self.times[..k].to_vec();
        let mut values = self.values[..k].to_vec();
        if *times.last().unwrap() < t {
            let (t0, t1) = (self.times[k - 1], self.times[k]);
            let w = (t - t0) / (t1 - t0);
            times.push(t);
            values.push(self.values[k - 1] * (1.0 - w) + self.values[k] * w);
        }
        let keep = |h: Option<f64>| h.filter(|&h| h <= t);
        SamplePath {
            times,
            values,
            hit0: keep(self.hit0),
            hit1: keep(self.hit1),
            first_return0: keep(self.first_return0),
            first_return1: keep(self.first_return1),
            approach0: if keep(self.hit0).is_some() { self.approach0.clone() } else { None },
            approach1: if keep(self.hit1).is_some() { self.approach1.clone() } else { None },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Zero,
    One,
}

struct Engine<'a> {
    p: MutSelParams,
    eta: &'a EtaSpec,
    eta_mirror: EtaSpec,
    cfg: &'a SimConfig,
    rng: ChaCha8Rng,
    t: f64,
    x: f64,
    hit: [Option<f64>; 2],
    first_return: [Option<f64>; 2],
    approach: [Option<ApproachTrace>; 2],
    current: Option<(Side, ApproachTrace)>,
    /// Running `∫(1-X)/X` and `∫X/(1-X)` up to the respective first hit.
    info: [f64; 2],
    record_all: bool,
    times: Vec<f64>,
    values: Vec<f64>,
}

impl<'a> Engine<'a> {
    fn new(p: MutSelParams, eta: &'a EtaSpec, x0: f64, cfg: &'a SimConfig, record_all: bool) -> Self {
        let mut e = Engine {
            p,
            eta,
            eta_mirror: eta.mirrored(),
            cfg,
            rng: cfg.rng(),
            t: 0.0,
            x: x0,
            hit: [None, None],
            first_return: [None, None],
            approach: [None, None],
            current: None,
            info: [0.0, 0.0],
            record_all,
            times: vec![0.0],
            values: vec![x0],
        };
        if x0 == 0.0 {
            e.hit[0] = Some(0.0);
        }
        if x0 == 1.0 {
            e.hit[1] = Some(0.0);
        }
        e
    }

    fn idx(side: Side) -> usize {
        match side {
            Side::Zero => 0,
            Side::One => 1,
        }
    }

    fn rate(&self, side: Side) -> f64 {
        match side {
            Side::Zero => self.p.alpha,
            Side::One => self.p.beta,
        }
    }

    fn dist(&self, side: Side) -> f64 {
        match side {
            Side::Zero => self.x,
            Side::One => 1.0 - self.x,
        }
    }

    fn from_dist(side: Side, d: f64) -> f64 {
        match side {
            Side::Zero => d,
            Side::One => 1.0 - d,
        }
    }

    fn absorbed(&self) -> bool {
        (self.x == 0.0 && self.p.alpha == 0.0) || (self.x == 1.0 && self.p.beta == 0.0)
    }

    fn accumulate_info(&mut self, x_old: f64, x_new: f64, h: f64) {
        for (i, f) in [
            |x: f64| (1.0 - x) / x,
            |x: f64| x / (1.0 - x),
        ]
        .iter()
        .enumerate()
        {
            if self.hit[i].is_none() {
                self.info[i] += 0.5 * h * (f(x_old) + f(x_new));
            }
        }
    }

    fn record(&mut self) {
        if self.t > *self.times.last().unwrap() {
            self.times.push(self.t);
            self.values.push(self.x);
        }
    }

    fn commit(&mut self, t_new: f64, x_new: f64) {
        let x_new = x_new.clamp(0.0, 1.0);
        self.accumulate_info(self.x, x_new, t_new - self.t);
        self.t = t_new;
        self.x = x_new;
        if self.record_all {
            self.record();
        }
    }

    fn register_hit(&mut self, side: Side, left: f64, right: f64) {
        let i = Self::idx(side);
        if self.hit[i].is_none() {
            self.hit[i] = Some(left);
        }
        if self.first_return[i].is_none() && right > 0.0 {
            self.first_return[i] = Some(right);
        }
    }

    fn advance_to(&mut self, t_target: f64) {
        while self.t < t_target {
            if self.absorbed() {
                self.t = t_target;
                if self.record_all {
                    self.record();
                }
                return;
            }
            let t_end = (self.t + self.cfg.dt).min(t_target);
            let eps = self.cfg.hit_epsilon;
            if self.x < eps {
                self.layer(Side::Zero, t_end);
            } else if 1.0 - self.x < eps {
                self.layer(Side::One, t_end);
            } else {
                self.euler(t_end);
            }
        }
    }

    fn euler(&mut self, t_end: f64) {
        let h = t_end - self.t;
        let z: f64 = self.rng.sample(StandardNormal);
        let x = self.x;
        let prop = x + drift(&self.p, self.eta, x) * h + (x * (1.0 - x)).sqrt() * h.sqrt() * z;
        if prop > 0.0 && prop < 1.0 {
            self.current = None;
            self.commit(t_end, prop);
        } else if x < 0.5 {
            self.layer(Side::Zero, t_end);
        } else {
            self.layer(Side::One, t_end);
        }
    }

    /// Steps the distance to `side` until `t_end` or until the layer is
    /// left.
    fn layer(&mut self, side: Side, t_end: f64) {
        let eps = self.cfg.hit_epsilon;
        let rate = self.rate(side);
        let kappa = 2.0 * rate;
        let substep = self.cfg.dt / self.cfg.substep_factor as f64;
        let mut first = true;
        while self.t < t_end && !self.absorbed() {
            let d = self.dist(side);
            if !first && d >= eps {
                break;
            }
            first = false;
            let descend = self.cfg.deep_descent && rate < 1.0 && self.hit[Self::idx(side)].is_none() && d > 0.0;
            if descend {
                self.descend(side, t_end);
                continue;
            }
            self.current = None;
            let h = match self.cfg.layer_step_fraction {
                Some(c) => (c * d).clamp(self.cfg.min_substep.min(substep), substep),
                None => substep,
            }
            .min(t_end - self.t);
            let z0 = 4.0 * d;
            let z1 = besq_step(&mut self.rng, kappa, z0, h);
            let left = self.t;
            if z0 > 0.0 {
                if z1 == 0.0 {
                    self.register_hit(side, left, left + h);
                } else if kappa < 2.0 {
                    let ph = bridge_hit_probability(kappa, z0, z1, h);
                    if ph > 0.0 && self.rng.random::<f64>() < ph {
                        self.register_hit(side, left, left + h);
                    }
                }
            }
            let d1 = (0.25 * z1).min(1.0);
            self.commit(left + h, Self::from_dist(side, d1));
        }
    }

    /// Information-clock integration of the log-distance to `side`.
    fn descend(&mut self, side: Side, t_end: f64) {
        let i = Self::idx(side);
        let log_eps = self.cfg.hit_epsilon.ln();
        let (rate, other, s) = match side {
            Side::Zero => (self.p.alpha, self.p.beta, self.p.s),
            Side::One => (self.p.beta, self.p.alpha, self.p.s),
        };
        let mut d = self.dist(side);
        let mut l = d.ln();
        if !matches!(&self.current, Some((sd, _)) if *sd == side) {
            self.current = Some((
                side,
                ApproachTrace {
                    times: vec![self.t],
                    log_dist: vec![l],
                    info: vec![self.info[i]],
                },
            ));
        }
        loop {
            if self.t >= t_end {
                return;
            }
            if l >= log_eps {
                self.current = None;
                return;
            }
            let ratio = d / (1.0 - d);
            let da = if ratio > 0.0 {
                self.cfg.descent_step.min((t_end - self.t) / ratio)
            } else {
                self.cfg.descent_step
            };
            let eta_d = match side {
                Side::Zero => self.eta.eval(d),
                Side::One => self.eta_mirror.eval(d),
            };
            let mu = 0.5 * ((rate - 1.0) - other * ratio + s * eta_d * d);
            let z: f64 = self.rng.sample(StandardNormal);
            l += mu * da + da.sqrt() * z;
            let h = ratio * da;
            let t_new = if h >= t_end - self.t { t_end } else { self.t + h };
            let d_new = l.exp().min(1.0 - 1e-16);
            // Exact in this clock for the near side, trapezoid for the far.
            self.info[i] += da;
            let j = 1 - i;
            if self.hit[j].is_none() {
                self.info[j] += 0.5 * h * (ratio + d_new / (1.0 - d_new));
            }
            self.t = t_new;
            d = d_new;
            self.x = Self::from_dist(side, d);
            if let Some((_, tr)) = self.current.as_mut() {
                tr.times.push(self.t);
                tr.log_dist.push(l);
                tr.info.push(self.info[i]);
            }
            if l <= self.cfg.descent_floor {
                self.x = Self::from_dist(side, 0.0);
                self.register_hit(side, self.t, self.t);
                if let Some((_, tr)) = self.current.take() {
                    self.approach[i] = Some(tr);
                }
                if self.record_all {
                    if self.t > *self.times.last().unwrap() {
                        self.record();
                    } else {
                        *self.values.last_mut().unwrap() = self.x;
                        self.hit[i] = Some(*self.times.last().unwrap());
                    }
                }
                return;
            }
            if self.record_all && d >= self.cfg.record_floor {
                self.record();
            }
        }
    }

    fn finish(self) -> SamplePath {
        SamplePath {
            times: self.times,
            values: self.values,
            hit0: self.hit[0],
            hit1: self.hit[1],
            first_return0: self.first_return[0],
            first_return1: self.first_return[1],
            approach0: self.approach[0].clone(),
            approach1: self.approach[1].clone(),
        }
    }
}

fn check_start(p: &MutSelParams, eta: &EtaSpec, x0: f64, cfg: &SimConfig) -> Result<()> {
    cfg.validate()?;
    eta.validate()?;
    MutSelParams::new(p.alpha, p.beta, p.s)?;
    if !(0.0..=1.0).contains(&x0) {
        return Err(Error::OutOfDomain {
            what: "x0",
            value: x0,
            domain: "[0,1]",
        });
    }
    if (x0 == 0.0 || x0 == 1.0) && !cfg.allow_endpoint_start {
        return Err(Error::InvalidParameter(format!(
            "x0={x0} is an endpoint and endpoint starts are disabled"
        )));
    }
    Ok(())
}

/// Simulates on `[0, t_end]`, recording every executed step.
pub fn simulate_wf(p: &MutSelParams, eta: &EtaSpec, x0: f64, t_end: f64, cfg: &SimConfig) -> Result<SamplePath> {
    check_start(p, eta, x0, cfg)?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon T={t_end} must be positive")));
    }
    let mut e = Engine::new(*p, eta, x0, cfg, true);
    e.advance_to(t_end);
    Ok(e.finish())
}

/// Simulates with the internal step `cfg.dt` but records only at `grid`.
pub fn simulate_wf_on_grid(p: &MutSelParams, eta: &EtaSpec, x0: f64, grid: &[f64], cfg: &SimConfig) -> Result<SamplePath> {
    check_start(p, eta, x0, cfg)?;
    check_grid(grid)?;
    let mut e = Engine::new(*p, eta, x0, cfg, false);
    let mut values = Vec::with_capacity(grid.len());
    values.push(x0);
    for &t in &grid[1..] {
        e.advance_to(t);
        values.push(e.x);
    }
    let mut path = e.finish();
    path.times = grid.to_vec();
    path.values = values;
    Ok(path)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 || grid[0] != 0.0 {
        return Err(Error::InvalidParameter("grid must start at 0 and have at least two points".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
        return Err(Error::InvalidParameter("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// `0, t_min, 2 t_min, 4 t_min, …` up to `t_max` followed by a uniform
/// grid of spacing `dt` up to `t_end`.
pub fn geometric_then_uniform_grid(t_min: f64, t_max: f64, dt: f64, t_end: f64) -> Vec<f64> {
    let mut g = vec![0.0];
    let mut t = t_min;
    while t < t_max.min(t_end) {
        g.push(t);
        t *= 2.0;
    }
    let mut t = t_max.min(t_end);
    let mut k = 0u64;
    let start = t;
    while t < t_end {
        g.push(t);
        k += 1;
        t = start + k as f64 * dt;
    }
    g.push(t_end);
    g.dedup_by(|a, b| *a <= *b);
    g
}

/// Logarithmically spaced grid on `[t_min, t_max]` with a leading zero.
pub fn log_grid(t_min: f64, t_max: f64, per_decade: usize) -> Vec<f64> {
    let decades = (t_max / t_min).log10();
    let n = (decades * per_decade as f64).ceil() as usize;
    let mut g = Vec::with_capacity(n + 2);
    g.push(0.0);
    for k in 0..=n {
        g.push(t_min * 10f64.powf(decades * k as f64 / n as f64));
    }
    g
}

/// Exact squared Bessel path on a grid.
pub fn simulate_bessel_sq(kappa: f64, z0: f64, grid: &[f64], seed: u64, stream: u64) -> Result<SamplePath> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::OutOfDomain {
            what: "kappa",
            value: kappa,
            domain: "[0, ∞)",
        });
    }
    if !(z0 >= 0.0 && z0.is_finite()) {
        return Err(Error::OutOfDomain {
            what: "z0",
            value: z0,
            domain: "[0, ∞)",
        });
    }
    check_grid(grid)?;
    let cfg = SimConfig::default().with_seed(seed).with_stream(stream);
    let mut rng = cfg.rng();
    let mut values = Vec::with_capacity(grid.len());
    values.push(z0);
    let mut z = z0;
    for w in grid.windows(2) {
        z = besq_step(&mut rng, kappa, z, w[1] - w[0]);
        values.push(z);
    }
    let mut path = SamplePath::from_raw(grid.to_vec(), values);
    path.hit0 = if z0 == 0.0 {
        Some(0.0)
    } else {
        path.values.iter().position(|&v| v == 0.0).map(|i| path.times[i])
    };
    Ok(path)
}

/// `ψ(x) = arccos(1-2x)²`, which behaves like `4x` at 0. Evaluated as
/// `(2 arcsin √x)²` to keep relative accuracy for tiny `x`.
pub fn psi(x: f64) -> f64 {
    let a = 2.0 * x.clamp(0.0, 1.0).sqrt().asin();
    a * a
}

pub fn psi_inverse(y: f64) -> f64 {
    let h = (0.5 * y.clamp(0.0, std::f64::consts::PI.powi(2)).sqrt()).sin();
    h * h
}

pub fn psi_transform(path: &SamplePath) -> SamplePath {
    SamplePath {
        values: path.values.iter().map(|&x| psi(x)).collect(),
        times: path.times.clone(),
        approach0: None,
        approach1: None,
        ..path.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedPath {
    pub path: SamplePath,
    /// Scalar WF parameters of the projection: `(ν(B), ν(E∖B), 0)`.
    pub implied: MutSelParams,
}

/// Neutral K-allele system with parent-independent mutation, projected
/// onto the total frequency of the alleles in `subset` (0-based).
///
/// The system is built by stick-breaking from the last allele down:
/// `X_K` is a scalar WF diffusion, and `X_j / (1 - Σ_{i>j} X_i)` is a scalar
/// WF diffusion with rates `(ν_j, Σ_{i<j} ν_i)` run on the clock
/// `∫ ds / (1 - Σ_{i>j} X_i)`, independent of the alleles above it.
pub fn simulate_k_allele_project(
    nu: &[f64],
    x0: &[f64],
    subset: &[usize],
    t_end: f64,
    cfg: &SimConfig,
) -> Result<ProjectedPath> {
    let k = nu.len();
    if !(2..=64).contains(&k) {
        return Err(Error::InvalidParameter(format!("need 2 <= K <= 64 alleles, got {k}")));
    }
    if nu.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter("mutation weights must be finite and positive".into()));
    }
    if x0.len() != k {
        return Err(Error::InvalidParameter(format!("x0 has {} entries for {k} alleles", x0.len())));
    }
    let total: f64 = x0.iter().sum();
    if x0.iter().any(|&v| !(v >= 0.0)) || (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "x0 is not on the simplex (sum {total})"
        )));
    }
    if subset.is_empty() || subset.iter().any(|&i| i >= k) {
        return Err(Error::InvalidParameter("subset must be a non-empty set of allele indices".into()));
    }
    let mut in_b = vec![false; k];
    for &i in subset {
        in_b[i] = true;
    }
    let nu_b: f64 = (0..k).filter(|&i| in_b[i]).map(|i| nu[i]).sum();
    let nu_rest: f64 = (0..k).filter(|&i| !in_b[i]).map(|i| nu[i]).sum();
    let implied = MutSelParams::new(nu_b, nu_rest, 0.0)?;
    if !(t_end > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon T={t_end} must be positive")));
    }
    let n = (t_end / cfg.dt).ceil() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| if i == n { t_end } else { i as f64 * cfg.dt }).collect();
    if in_b.iter().all(|&b| b) {
        let len = grid.len();
        return Ok(ProjectedPath {
            path: SamplePath::new(grid, vec![1.0; len])?,
            implied,
        });
    }

    let neutral = EtaSpec::Genic;
    let mut freqs: Vec<Vec<f64>> = vec![Vec::new(); k];
    let mut above = vec![0.0; grid.len()];
    let mut above0 = 0.0;
    for j in (1..k).rev() {
        let lower: f64 = nu[..j].iter().sum();
        let p = MutSelParams::new(nu[j], lower, 0.0)?;
        let room0 = 1.0 - above0;
        let v0 = if room0 > 0.0 { (x0[j] / room0).clamp(0.0, 1.0) } else { 0.0 };
        let level_cfg = SimConfig {
            stream: cfg.stream * 64 + j as u64,
            ..cfg.clone()
        };
        let mut clock = Vec::with_capacity(grid.len());
        clock.push(0.0);
        for i in 1..grid.len() {
            let f = |a: f64| 1.0 / (1.0 - a);
            let c = clock[i - 1] + 0.5 * (grid[i] - grid[i - 1]) * (f(above[i - 1]) + f(above[i]));
            if !c.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "clock for allele {} explodes: alleles 1..={} jointly reach frequency 0; use weights with partial sums >= 1",
                    j + 1,
                    j
                )));
            }
            clock.push(c);
        }
        let v = simulate_wf_on_grid(&p, &neutral, v0, &clock, &level_cfg)?;
        freqs[j] = v.values.iter().zip(&above).map(|(&vj, &a)| vj * (1.0 - a)).collect();
        for (a, &xj) in above.iter_mut().zip(&freqs[j]) {
            *a = (*a + xj).min(1.0);
        }
        above0 += x0[j];
    }
    freqs[0] = above.iter().map(|&a| (1.0 - a).max(0.0)).collect();
    let values: Vec<f64> = (0..grid.len())
        .map(|i| (0..k).filter(|&j| in_b[j]).map(|j| freqs[j][i]).sum::<f64>().clamp(0.0, 1.0))
        .collect();
    Ok(ProjectedPath {
        path: SamplePath::new(grid, values)?,
        implied,
    })
}
