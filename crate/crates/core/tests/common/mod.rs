#![allow(dead_code)]

use wfsep_core::separating::SeparationVerdict;
use wfsep_core::MutSelParams;

/// Row label and verdict of the classification table for `(p0, p1)`, read
/// as given and again through `x -> 1-x`. `None` when no row applies.
pub fn table_verdict(p0: &MutSelParams, p1: &MutSelParams) -> Option<(&'static str, SeparationVerdict)> {
    let direct = table_rows(p0, p1);
    let mirrored = table_rows(&p0.mirrored(), &p1.mirrored())
        .into_iter()
        .map(|(r, v)| (r, v.mirrored()));
    let all: Vec<_> = direct.into_iter().chain(mirrored).collect();
    let first = *all.first()?;
    assert!(
        all.iter().all(|&(_, v)| v == first.1),
        "table rows disagree for {p0:?} vs {p1:?}: {all:?}"
    );
    Some(first)
}

fn table_rows(p0: &MutSelParams, p1: &MutSelParams) -> Vec<(&'static str, SeparationVerdict)> {
    let (u1, d1, u0, d0) = (p1.alpha, p1.beta, p0.alpha, p0.beta);
    let s_same = p0.s == p1.s;
    let pos = |x: f64| x > 0.0;
    let below = |x: f64| x < 1.0;
    let above = |x: f64| x >= 1.0;
    let delta = SeparationVerdict::DELTA;
    let inf = SeparationVerdict::INFINITY;
    let rows = [
        ("i", u0 == u1 && d0 == d1 && s_same, delta),
        ("ii", u1 == 0.0 && pos(d1) && u0 == 0.0 && d0 == d1 && !s_same, delta),
        ("iii", pos(u1) && d1 == 0.0 && u0 == u1 && d0 == 0.0 && !s_same, delta),
        ("iv", pos(u1) && pos(d1) && u0 == u1 && d0 == d1 && !s_same, inf),
        ("v", u1 == 0.0 && d1 == 0.0 && pos(u0) && d0 == 0.0, SeparationVerdict::hit_zero(true)),
        ("vi", u1 == 0.0 && below(d1) && u0 == 0.0 && d0 != d1, SeparationVerdict::hit_one(true)),
        ("vii", below(u1) && below(d1) && u0 != u1 && d0 != d1, SeparationVerdict::hit_either()),
        ("viii", below(u1) && pos(d1) && u0 != u1 && d0 == d1, SeparationVerdict::hit_zero(false)),
        ("ix", below(u1) && above(d1) && u0 != u1 && d0 != d1, SeparationVerdict::hit_zero(false)),
        ("x", u1 == 0.0 && above(d1) && u0 == 0.0 && d0 != d1, delta),
        ("xi", pos(u1) && below(u1) && pos(d1) && below(d1) && u0 == u1 && d0 != d1, SeparationVerdict::hit_one(false)),
        ("xii", pos(u1) && above(d1) && u0 == u1 && d0 != d1, inf),
        ("xiii", above(u1) && above(d1) && u0 != u1 && d0 != d1, inf),
        ("xiv", above(u1) && above(d1) && u0 != u1 && d0 == d1, inf),
    ];
    rows.into_iter().filter(|r| r.1).map(|(n, _, v)| (n, v)).collect()
}

pub const TABLE_RATES: [f64; 5] = [0.0, 0.3, 0.5, 1.0, 1.5];
pub const TABLE_S: [f64; 3] = [-1.0, 0.0, 1.0];

pub fn table_grid() -> Vec<MutSelParams> {
    let mut out = Vec::new();
    for &a in &TABLE_RATES {
        for &b in &TABLE_RATES {
            for &s in &TABLE_S {
                out.push(MutSelParams::new(a, b, s).unwrap());
            }
        }
    }
    out
}

/// Numeric maximizer: Nelder-Mead from `start`, then finite-difference
/// Newton steps to remove the simplex tolerance.
pub fn numeric_argmax<F: Fn(&[f64]) -> f64>(f: F, start: &[f64]) -> Vec<f64> {
    use argmin::core::{CostFunction, Executor, State};
    use argmin::solver::neldermead::NelderMead;

    struct Neg<G>(G);
    impl<G: Fn(&[f64]) -> f64> CostFunction for Neg<G> {
        type Param = Vec<f64>;
        type Output = f64;
        fn cost(&self, p: &Vec<f64>) -> Result<f64, argmin::core::Error> {
            Ok(-(self.0)(p))
        }
    }

    let n = start.len();
    let mut simplex = vec![start.to_vec()];
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += 0.5;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex).with_sd_tolerance(1e-13).unwrap();
    let res = Executor::new(Neg(&f), solver)
        .configure(|s| s.max_iters(20_000))
        .run()
        .unwrap();
    let mut x = res.state().get_best_param().unwrap().clone();

    let h = 0.05;
    for _ in 0..3 {
        let at = |d: &[(usize, f64)]| {
            let mut y = x.clone();
            for &(i, s) in d {
                y[i] += s;
            }
            f(&y)
        };
        let g = nalgebra::DVector::from_fn(n, |i, _| (at(&[(i, h)]) - at(&[(i, -h)])) / (2.0 * h));
        let hess = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            (at(&[(i, h), (j, h)]) - at(&[(i, h), (j, -h)]) - at(&[(i, -h), (j, h)]) + at(&[(i, -h), (j, -h)]))
                / (4.0 * h * h)
        });
        let step = hess.lu().solve(&g).expect("nonsingular Hessian");
        for i in 0..n {
            x[i] -= step[i];
        }
    }
    x
}
