//! Adaptive Gauss–Kronrod quadrature with endpoint-singularity substitutions.

use crate::error::{Error, Result};

// 15-point Kronrod abscissae (non-negative half) and weights, with the
// embedded 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

/// Globally adaptive bisection on the interval with the largest error
/// estimate, stopped once the summed error meets `max(abs_tol, rel_tol*|I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            abs_error: 0.0,
            intervals: 0,
        });
    }
    if b < a {
        return integrate(f, b, a, opts).map(|r| QuadResult {
            value: -r.value,
            ..r
        });
    }
    let (v, e) = gk15(&f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    loop {
        let total: f64 = intervals.iter().map(|iv| iv.2).sum();
        let err: f64 = intervals.iter().map(|iv| iv.3).sum();
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::Quadrature {
                achieved: f64::INFINITY,
                requested: opts.abs_tol.max(opts.rel_tol * total.abs()),
            });
        }
        let target = opts.abs_tol.max(opts.rel_tol * total.abs());
        if err <= target {
            return Ok(QuadResult {
                value: total,
                abs_error: err,
                intervals: intervals.len(),
            });
        }
        if intervals.len() >= opts.max_intervals {
            return Err(Error::Quadrature {
                achieved: err,
                requested: target,
            });
        }
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, iv)| if iv.3 > acc.1 { (i, iv.3) } else { acc });
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Interval collapsed to machine resolution.
            return Err(Error::Quadrature {
                achieved: err,
                requested: target,
            });
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

/// `∫_a^b x^p g(x) dx` for `0 <= a < b`, with `g` smooth near zero.
///
/// For `-1 < p < 0` the substitution `u = x^(p+1)` removes the power
/// singularity exactly; for `p <= -1` (which needs `a > 0`) the integral is
/// taken in `log x`. Non-negative powers are integrated directly.
pub fn integrate_left_power<G: Fn(f64) -> f64>(
    p: f64,
    a: f64,
    b: f64,
    g: G,
    opts: QuadOptions,
) -> Result<QuadResult> {
    if a == b && a >= 0.0 {
        return Ok(QuadResult { value: 0.0, abs_error: 0.0, intervals: 0 });
    }
    if !(a >= 0.0 && b > a) {
        return Err(Error::InvalidParameter(format!(
            "power-weighted integral needs 0 <= a < b, got [{a}, {b}]"
        )));
    }
    if p >= 0.0 {
        integrate(|x| x.powf(p) * g(x), a, b, opts)
    } else if p > -1.0 {
        let q = p + 1.0;
        let inv = 1.0 / q;
        let r = integrate(|u| g(u.powf(inv)), a.powf(q), b.powf(q), opts)?;
        Ok(QuadResult {
            value: r.value / q,
            abs_error: r.abs_error / q,
            ..r
        })
    } else {
        if a == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "x^{p} is not integrable at 0"
            )));
        }
        let q = p + 1.0;
        integrate(|v| {
            let x = v.exp();
            (q * v).exp() * g(x)
        }, a.ln(), b.ln(), opts)
    }
}

/// `∫_0^1 x^pl (1-x)^pr g(x) dx` with `pl, pr > -1`, split at one half so
/// that each endpoint singularity gets its own substitution.
pub fn integrate_beta_weighted<G: Fn(f64) -> f64>(
    pl: f64,
    pr: f64,
    g: G,
    opts: QuadOptions,
) -> Result<QuadResult> {
    if pl <= -1.0 || pr <= -1.0 {
        return Err(Error::InvalidParameter(format!(
            "beta-weighted integral diverges for exponents ({pl}, {pr})"
        )));
    }
    let left = integrate_left_power(pl, 0.0, 0.5, |x| (1.0 - x).powf(pr) * g(x), opts)?;
    let right = integrate_left_power(pr, 0.0, 0.5, |w| (1.0 - w).powf(pl) * g(1.0 - w), opts)?;
    Ok(QuadResult {
        value: left.value + right.value,
        abs_error: left.abs_error + right.abs_error,
        intervals: left.intervals + right.intervals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| 3.0 * x * x, 0.0, 2.0, QuadOptions::default()).unwrap();
        assert!((r.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let r = integrate(|x| x.cos(), 1.0, 0.0, QuadOptions::default()).unwrap();
        assert!((r.value + 1f64.sin()).abs() < 1e-13);
    }

    #[test]
    fn inverse_square_root_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2
        let r = integrate_left_power(-0.5, 0.0, 1.0, |_| 1.0, QuadOptions::default()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn strong_power_singularity_near_minus_one() {
        // ∫_0^1 x^{-0.95} dx = 20
        let r = integrate_left_power(-0.95, 0.0, 1.0, |x| 1.0 + x, QuadOptions::default()).unwrap();
        assert!((r.value - (20.0 + 1.0 / 1.05)).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn log_substitution_for_nonintegrable_power() {
        // ∫_{0.01}^{1} x^{-2} dx = 99
        let r = integrate_left_power(-2.0, 0.01, 1.0, |_| 1.0, QuadOptions::default()).unwrap();
        assert!((r.value - 99.0).abs() < 1e-9);
        let r = integrate_left_power(-1.0, 1e-6, 1.0, |_| 1.0, QuadOptions::default()).unwrap();
        assert!((r.value - 1e6f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn beta_integral_matches_gamma_ratio() {
        // B(0.3, 0.6) = Γ(0.3)Γ(0.6)/Γ(0.9)
        use statrs::function::gamma::ln_gamma;
        let exact = (ln_gamma(0.3) + ln_gamma(0.6) - ln_gamma(0.9)).exp();
        let r = integrate_beta_weighted(-0.7, -0.4, |_| 1.0, QuadOptions::default()).unwrap();
        assert!((r.value - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn non_integrable_reports_failure() {
        let opts = QuadOptions {
            max_intervals: 50,
            ..QuadOptions::default()
        };
        let err = integrate(|x| 1.0 / x, 0.0, 1.0, opts).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }
}
