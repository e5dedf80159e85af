use rayon::prelude::*;
use wfsep_core::estimation::{
    clamp_to_domain, corrected_estimator, mle_full_with, mle_joint_mut, mle_marginal, Coordinate, EstimateReport,
};
use wfsep_core::io::{load_path, save_path, PathMeta};
use wfsep_core::likelihood::path_functionals;
use wfsep_core::sde::{simulate_wf, simulate_wf_on_grid, SimConfig};
use wfsep_core::separating::{half_good_report, separating_points, separating_time_diagnostics, Endpoint, Term};
use wfsep_core::verify::{
    boundary_start_singularity_check, clt_check, consistency_check, projection_check, zero_one_check,
    BoundaryStartSettings, Divergence, EstimatorKind,
};
use wfsep_core::{EtaSpec, Error, MutSelParams, Result};

use crate::args::*;
use crate::output::{ensure_dir, kv_line, num, summary, write_manifest, Table};

pub fn parse_list(what: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("{what}: `{t}` is not a number")))
        })
        .collect()
}

pub fn parse_params(what: &str, s: &str) -> Result<MutSelParams> {
    let v = parse_list(what, s)?;
    if v.len() != 3 {
        return Err(Error::Parse(format!("{what}: expected alpha,beta,s, got {} values", v.len())));
    }
    MutSelParams::new(v[0], v[1], v[2])
}

pub fn parse_eta(s: &str) -> Result<EtaSpec> {
    let s = s.trim();
    let eta = if s == "genic" {
        EtaSpec::Genic
    } else if let Some(h) = s.strip_prefix("diploid:") {
        let h = h
            .trim()
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("eta: dominance `{h}` is not a number")))?;
        EtaSpec::Diploid { h }
    } else if let Some(c) = s.strip_prefix("poly:") {
        EtaSpec::Polynomial {
            coeffs: parse_list("eta", c)?,
        }
    } else {
        return Err(Error::Parse(format!(
            "eta: `{s}` is not one of genic, diploid:H, poly:C0,C1,..."
        )));
    };
    eta.validate()?;
    Ok(eta)
}

fn check_x0(x0: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x0) {
        Ok(())
    } else {
        Err(Error::OutOfDomain {
            what: "x0",
            value: x0,
            domain: "[0,1]",
        })
    }
}

fn sim_config(sim: &SimArgs, seed: u64) -> Result<SimConfig> {
    let cfg = SimConfig {
        dt: sim.dt,
        hit_epsilon: sim.hit_epsilon,
        substep_factor: sim.substep_factor,
        deep_descent: !sim.no_deep_descent,
        ..SimConfig::default().with_seed(seed)
    };
    cfg.validate()?;
    Ok(cfg)
}

fn term_label(t: Option<Term>) -> String {
    match t {
        None => "none".into(),
        Some(Term::Infinity) => "inf".into(),
        Some(Term::HitZero { bar }) => if bar { "T0bar" } else { "T0" }.into(),
        Some(Term::HitOne { bar }) => if bar { "T1bar" } else { "T1" }.into(),
    }
}

pub fn classify(a: &ClassifyArgs) -> Result<()> {
    let p0 = parse_params("p0", &a.p0)?;
    let p1 = parse_params("p1", &a.p1)?;
    let eta = parse_eta(&a.eta)?;
    let d = separating_time_diagnostics(&p0, &p1);
    println!(
        "separating_points={} verdict={:?} bar={}",
        separating_points(&p0, &p1).label(),
        d.verdict.kind,
        d.verdict.bar
    );
    if a.diagnostics {
        let reduced: Vec<String> = d.reduced.iter().map(|t| term_label(Some(*t))).collect();
        println!(
            "{}",
            kv_line(&[
                ("canonical_swap", d.canonical_swap.to_string()),
                ("u", term_label(d.u)),
                ("v", term_label(d.v)),
                ("r", d.r.to_string()),
                ("reduced", if reduced.is_empty() { "none".into() } else { reduced.join("^") }),
                ("symbol", d.verdict.symbol().into()),
            ])
        );
    }
    if a.half_good {
        for (name, e) in [("0", Endpoint::Zero), ("1", Endpoint::One)] {
            let r = half_good_report(&p0, &p1, &eta, e)?;
            println!("half_good endpoint={name} verdict={:?}", r.verdict);
        }
    }
    Ok(())
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let p = parse_params("p", &a.p)?;
    let eta = parse_eta(&a.eta)?;
    check_x0(a.x0)?;
    if a.paths == 0 {
        return Err(Error::InvalidParameter("paths must be at least 1".into()));
    }
    let cfg = sim_config(&a.sim, a.run.seed)?;
    let grid = match a.grid_dt {
        Some(h) if h > 0.0 => {
            let n = (a.t_end / h).ceil() as usize;
            Some((0..=n).map(|i| (i as f64 * h).min(a.t_end)).collect::<Vec<f64>>())
        }
        Some(h) => return Err(Error::InvalidParameter(format!("grid-dt={h} must be positive"))),
        None => None,
    };
    let paths: Vec<_> = (0..a.paths)
        .into_par_iter()
        .map(|i| {
            let c = cfg.clone().with_stream(i as u64);
            match &grid {
                Some(g) => simulate_wf_on_grid(&p, &eta, a.x0, g, &c),
                None => simulate_wf(&p, &eta, a.x0, a.t_end, &c),
            }
        })
        .collect::<Result<_>>()?;
    ensure_dir(&a.run.out)?;
    for (i, path) in paths.iter().enumerate() {
        let mut meta = PathMeta::of(path);
        meta.params = Some(p);
        meta.seed = Some(a.run.seed);
        meta.stream = Some(i as u64);
        save_path(path, &meta, &a.run.out.join(format!("path_{i:04}.csv")))?;
    }
    write_manifest(&a.run.out, "simulate", Some(a.run.seed), a)?;
    println!(
        "{}",
        kv_line(&[("paths", a.paths.to_string()), ("out", a.run.out.display().to_string())])
    );
    Ok(())
}

fn single(c: Coordinate, v: f64, horizon: f64) -> EstimateReport {
    EstimateReport {
        coordinates: vec![c],
        estimate: vec![v],
        crystallized: vec![false],
        used_horizon: vec![horizon],
        information: Vec::new(),
        clamped: vec![false],
    }
}

pub fn estimate(a: &EstimateArgs) -> Result<()> {
    let eta = parse_eta(&a.eta)?;
    if !(a.clip > 0.0) {
        return Err(Error::InvalidParameter(format!("clip={} must be positive", a.clip)));
    }
    let path = load_path(&a.path)?;
    let f = path_functionals(&path, &eta, a.clip);
    let known = {
        let v = parse_list("known", &a.known)?;
        if v.len() != 3 {
            return Err(Error::Parse("known: expected alpha,beta,s".into()));
        }
        MutSelParams {
            alpha: v[0],
            beta: v[1],
            s: v[2],
        }
    };
    let report = match a.estimator {
        EstimatorChoice::Full => {
            let v = parse_list("theta0", &a.theta0)?;
            if v.len() != 3 {
                return Err(Error::Parse("theta0: expected alpha,beta,s".into()));
            }
            mle_full_with(&f, &MutSelParams { alpha: v[0], beta: v[1], s: v[2] })?
        }
        EstimatorChoice::Joint => {
            let (al, be) = mle_joint_mut(&f, a.s_known)?;
            EstimateReport {
                coordinates: vec![Coordinate::Alpha, Coordinate::Beta],
                estimate: vec![al, be],
                crystallized: vec![false, false],
                used_horizon: vec![f.t, f.t],
                information: Vec::new(),
                clamped: vec![false, false],
            }
        }
        EstimatorChoice::MarginalAlpha => single(Coordinate::Alpha, mle_marginal(Coordinate::Alpha, &f, &known)?, f.t),
        EstimatorChoice::MarginalBeta => single(Coordinate::Beta, mle_marginal(Coordinate::Beta, &f, &known)?, f.t),
        EstimatorChoice::MarginalS => single(Coordinate::S, mle_marginal(Coordinate::S, &f, &known)?, f.t),
        EstimatorChoice::Corrected => corrected_estimator(&path, &eta, a.s_known, path.horizon())?,
    };
    let report = if a.clamp { clamp_to_domain(report) } else { report };
    ensure_dir(&a.run.out)?;
    let mut t = Table::new(&["coordinate", "estimate", "crystallized", "used_horizon", "clamped"]);
    let mut line = vec![("estimator", format!("{:?}", a.estimator).to_lowercase())];
    for i in 0..report.coordinates.len() {
        let c = report.coordinates[i].name();
        t.push(vec![
            c.into(),
            num(report.estimate[i]),
            report.crystallized[i].to_string(),
            num(report.used_horizon[i]),
            report.clamped[i].to_string(),
        ]);
        line.push((c, num(report.estimate[i])));
    }
    t.write(&a.run.out, "estimate.csv")?;
    write_manifest(&a.run.out, "estimate", None, a)?;
    println!("{}", kv_line(&line));
    Ok(())
}

pub fn verify_consistency(a: &ConsistencyArgs) -> Result<()> {
    let p = parse_params("p", &a.p)?;
    let eta = parse_eta(&a.eta)?;
    check_x0(a.x0)?;
    let horizons = parse_list("horizons", &a.horizons)?;
    let cfg = sim_config(&a.sim, a.run.seed)?;
    let kind = match a.estimator {
        ConsistencyEstimator::Joint => EstimatorKind::JointMutation,
        ConsistencyEstimator::Full => EstimatorKind::Full,
    };
    let r = consistency_check(&p, &eta, a.x0, &horizons, a.seeds, kind, &cfg)?;
    ensure_dir(&a.run.out)?;
    let mut per = Table::new(&["seed", "horizon", "err_alpha", "err_beta", "err_s"]);
    for seed in 0..a.seeds {
        for (h, &t) in r.horizons.iter().enumerate() {
            let e = r.errors[h][seed];
            per.push(vec![seed.to_string(), num(t), num(e[0]), num(e[1]), num(e[2])]);
        }
    }
    per.write(&a.run.out, "consistency_per_seed.csv")?;
    let mut sum = Table::new(&["horizon", "median_abs_alpha", "median_abs_beta", "median_abs_s"]);
    for (h, &t) in r.horizons.iter().enumerate() {
        let m = r.median_abs_error[h];
        sum.push(vec![num(t), num(m[0]), num(m[1]), num(m[2])]);
        println!(
            "{}",
            kv_line(&[("horizon", t.to_string()), ("median_abs_alpha", num(m[0])), ("median_abs_beta", num(m[1]))])
        );
    }
    sum.write(&a.run.out, "consistency_summary.csv")?;
    write_manifest(&a.run.out, "verify-consistency", Some(a.run.seed), a)
}

pub fn verify_clt(a: &CltArgs) -> Result<()> {
    let p = parse_params("p", &a.p)?;
    let eta = parse_eta(&a.eta)?;
    check_x0(a.x0)?;
    let cfg = sim_config(&a.sim, a.run.seed)?;
    let r = clt_check(&p, &eta, a.x0, a.t_end, a.seeds, &cfg)?;
    ensure_dir(&a.run.out)?;
    let mut per = Table::new(&["row", "z_alpha", "z_beta", "z_s"]);
    for (i, z) in r.whitened.iter().enumerate() {
        per.push(vec![i.to_string(), num(z[0]), num(z[1]), num(z[2])]);
    }
    per.write(&a.run.out, "clt_per_seed.csv")?;
    let names = ["alpha", "beta", "s"];
    let mut pairs = vec![
        ("n".to_string(), r.n.to_string()),
        ("failures".to_string(), r.failures.to_string()),
        ("frobenius_rel".to_string(), num(r.frobenius_rel)),
    ];
    for (k, name) in names.iter().enumerate() {
        pairs.push((format!("mean_{name}"), num(r.mean[k])));
        pairs.push((format!("skewness_{name}"), num(r.skewness[k])));
        pairs.push((format!("excess_kurtosis_{name}"), num(r.excess_kurtosis[k])));
        pairs.push((format!("ks_p_{name}"), num(r.ks_p_value[k])));
        for (j, other) in names.iter().enumerate() {
            pairs.push((format!("cov_{name}_{other}"), num(r.covariance[k][j])));
        }
    }
    summary(&pairs).write(&a.run.out, "clt_summary.csv")?;
    println!(
        "{}",
        kv_line(&[
            ("n", r.n.to_string()),
            ("frobenius_rel", num(r.frobenius_rel)),
            ("mean_alpha", num(r.mean[0])),
            ("mean_beta", num(r.mean[1])),
            ("mean_s", num(r.mean[2])),
        ])
    );
    write_manifest(&a.run.out, "verify-clt", Some(a.run.seed), a)
}

pub fn verify_zero_one(a: &ZeroOneArgs) -> Result<()> {
    let p = parse_params("p", &a.p)?;
    let eta = parse_eta(&a.eta)?;
    let cfg = sim_config(&a.sim, a.run.seed)?;
    ensure_dir(&a.run.out)?;
    if let Some(pair) = &a.pair {
        let v = parse_list("pair", pair)?;
        if v.len() != 2 {
            return Err(Error::Parse("pair: expected two rates".into()));
        }
        let mut settings = BoundaryStartSettings::default();
        if let Some(t) = a.t_end {
            settings.horizon_kappa = t;
        }
        let r = boundary_start_singularity_check(v[0], v[1], p.beta, p.s, &eta, a.seeds, &settings, &cfg)?;
        let mut per = Table::new(&["alpha", "seed", "statistic"]);
        for (alpha, vals) in [(r.alpha_low, &r.values_low), (r.alpha_high, &r.values_high)] {
            for (i, s) in vals.iter().enumerate() {
                per.push(vec![num(alpha), i.to_string(), num(*s)]);
            }
        }
        per.write(&a.run.out, "boundary_start_per_seed.csv")?;
        let pairs = vec![
            ("regime".to_string(), format!("{:?}", r.regime)),
            ("statistic".to_string(), r.statistic.clone()),
            ("kappa".to_string(), r.kappa.map(num).unwrap_or_else(|| "none".into())),
            ("threshold".to_string(), num(r.threshold)),
            ("misclassified_low".to_string(), r.misclassified_low.to_string()),
            ("misclassified_high".to_string(), r.misclassified_high.to_string()),
            ("overlap".to_string(), num(r.overlap)),
        ];
        summary(&pairs).write(&a.run.out, "boundary_start_summary.csv")?;
        println!(
            "{}",
            kv_line(&[
                ("regime", format!("{:?}", r.regime)),
                ("statistic", r.statistic.clone()),
                ("overlap", num(r.overlap)),
            ])
        );
    } else {
        let kappas = parse_list("kappas", &a.kappas)?;
        let r = zero_one_check(&p, &eta, &kappas, a.t_end.unwrap_or(1.0), a.seeds, &cfg)?;
        let mut per = Table::new(&["seed", "kappa", "slope", "verdict"]);
        for seed in 0..a.seeds {
            for (k, &kappa) in kappas.iter().enumerate() {
                per.push(vec![
                    seed.to_string(),
                    num(kappa),
                    num(r.slopes[seed][k]),
                    format!("{:?}", r.verdicts[seed][k]),
                ]);
            }
        }
        per.write(&a.run.out, "zero_one_per_seed.csv")?;
        let mut sum = Table::new(&["kappa", "finite", "diverging", "inconclusive", "monotone_violations"]);
        for (k, &kappa) in kappas.iter().enumerate() {
            let c = r.counts[k];
            sum.push(vec![
                num(kappa),
                c[Divergence::Finite as usize].to_string(),
                c[Divergence::Diverging as usize].to_string(),
                c[Divergence::Inconclusive as usize].to_string(),
                r.monotone_violations.to_string(),
            ]);
            println!(
                "{}",
                kv_line(&[
                    ("kappa", kappa.to_string()),
                    ("finite", c[0].to_string()),
                    ("diverging", c[1].to_string()),
                    ("inconclusive", c[2].to_string()),
                ])
            );
        }
        sum.write(&a.run.out, "zero_one_summary.csv")?;
    }
    write_manifest(&a.run.out, "verify-zero-one", Some(a.run.seed), a)
}

pub fn verify_projection(a: &ProjectionArgs) -> Result<()> {
    let nu = parse_list("nu", &a.nu)?;
    let k = nu.len();
    let subset: Vec<usize> = parse_list("subset", &a.subset)?
        .into_iter()
        .map(|v| {
            if v.fract() == 0.0 && v >= 1.0 && (v as usize) <= k {
                Ok(v as usize - 1)
            } else {
                Err(Error::InvalidParameter(format!("subset index {v} is not in 1..={k}")))
            }
        })
        .collect::<Result<_>>()?;
    let x0 = match &a.x0 {
        Some(s) => parse_list("x0", s)?,
        None => vec![1.0 / k as f64; k],
    };
    let cfg = sim_config(&a.sim, a.run.seed)?;
    let r = projection_check(&nu, &subset, &x0, a.t_end, a.n, a.reps, a.level, &cfg)?;
    ensure_dir(&a.run.out)?;
    let mut per = Table::new(&["rep", "statistic", "p_value"]);
    for (i, ks) in r.replications.iter().enumerate() {
        per.push(vec![i.to_string(), num(ks.statistic), num(ks.p_value)]);
    }
    per.write(&a.run.out, "projection_per_rep.csv")?;
    let pairs = vec![
        ("implied_alpha".to_string(), num(r.implied.alpha)),
        ("implied_beta".to_string(), num(r.implied.beta)),
        ("level".to_string(), num(r.alpha_level)),
        ("passed".to_string(), r.passed.to_string()),
        ("reps".to_string(), r.replications.len().to_string()),
    ];
    summary(&pairs).write(&a.run.out, "projection_summary.csv")?;
    println!(
        "{}",
        kv_line(&[("passed", r.passed.to_string()), ("reps", r.replications.len().to_string())])
    );
    write_manifest(&a.run.out, "verify-projection", Some(a.run.seed), a)
}

/// Thread pool size for the seed batches.
pub fn init_threads(n: Option<usize>) {
    if let Some(n) = n {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}
