//! Exact transitions of the squared Bessel process `dZ = κ dt + 2√Z dW`.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use statrs::function::gamma::ln_gamma;

/// One exact step of length `h` from `z`.
///
/// `Z_h / h` is noncentral chi-square with `κ` degrees of freedom and
/// noncentrality `z/h`, sampled as a Poisson mixture of central
/// chi-squares. With `κ = 0` and a zero Poisson draw the result is exactly
/// zero, which is how absorption shows up.
pub fn besq_step<R: Rng + ?Sized>(rng: &mut R, kappa: f64, z: f64, h: f64) -> f64 {
    let lambda = 0.5 * z / h;
    let n = if lambda > 0.0 {
        Poisson::new(lambda).map(|d| d.sample(rng)).unwrap_or(0.0)
    } else {
        0.0
    };
    let shape = 0.5 * kappa + n;
    if shape <= 0.0 {
        return 0.0;
    }
    let g = Gamma::new(shape, 1.0).expect("positive gamma shape");
    2.0 * h * g.sample(rng)
}

/// Modified Bessel function of the first kind by its power series, for
/// moderate arguments and order `mu > -1`.
pub fn bessel_i_series(mu: f64, z: f64) -> f64 {
    if z == 0.0 {
        return if mu == 0.0 {
            1.0
        } else if mu > 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    let half = 0.5 * z;
    let q = half * half;
    let mut term = (mu * half.ln() - ln_gamma(mu + 1.0)).exp();
    let mut sum = term;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + mu));
        sum += term;
        if term < 1e-17 * sum || k > 500.0 {
            break;
        }
    }
    sum
}

/// Probability that a squared Bessel bridge of dimension `κ ∈ (0,2)` from
/// `z0` to `zh` over time `h` touches zero.
///
/// The ratio of the killed to the reflected transition densities is
/// `I_{|ν|}(w) / I_{-|ν|}(w)` with `ν = κ/2 - 1` and `w = √(z0 zh)/h`.
pub fn bridge_hit_probability(kappa: f64, z0: f64, zh: f64, h: f64) -> f64 {
    if kappa >= 2.0 {
        return 0.0;
    }
    if kappa <= 0.0 || z0 <= 0.0 || zh <= 0.0 {
        return 1.0;
    }
    let nu = (0.5 * kappa - 1.0).abs();
    let w = (z0 * zh).sqrt() / h;
    if w > 25.0 {
        return 0.0;
    }
    let ratio = bessel_i_series(nu, w) / bessel_i_series(-nu, w);
    (1.0 - ratio).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn series_matches_closed_forms() {
        // I_{1/2}(z) = sqrt(2/(πz)) sinh z, I_{-1/2}(z) = sqrt(2/(πz)) cosh z
        for z in [0.1, 1.0, 7.5, 24.0] {
            let c = (2.0 / (std::f64::consts::PI * z)).sqrt();
            let a = bessel_i_series(0.5, z);
            let b = bessel_i_series(-0.5, z);
            assert!((a / (c * z.sinh()) - 1.0).abs() < 1e-13);
            assert!((b / (c * z.cosh()) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn bridge_probability_dimension_one() {
        // κ = 1 is reflected Brownian motion |B|: the killed/reflected
        // density ratio is tanh(xy/h) with x, y the root-scale endpoints.
        for (z0, zh, h) in [(0.1f64, 0.2, 0.05), (1e-4, 3e-4, 1e-4), (0.01, 0.5, 1.0)] {
            let w = (z0 * zh).sqrt() / h;
            let expected = 1.0 - w.tanh();
            assert!((bridge_hit_probability(1.0, z0, zh, h) - expected).abs() < 1e-12);
        }
        assert_eq!(bridge_hit_probability(2.5, 1e-9, 1e-9, 1.0), 0.0);
        assert_eq!(bridge_hit_probability(0.5, 0.0, 1.0, 1.0), 1.0);
    }

    #[test]
    fn absorbing_step_can_return_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(besq_step(&mut rng, 0.0, 0.0, 1.0), 0.0);
        let zeros = (0..2000).filter(|_| besq_step(&mut rng, 0.0, 0.5, 1.0) == 0.0).count();
        // P(N = 0) = e^{-1/4}
        let p = zeros as f64 / 2000.0;
        assert!((p - (-0.25f64).exp()).abs() < 0.04, "{p}");
    }

    #[test]
    fn step_mean_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 40_000;
        let mean: f64 = (0..n).map(|_| besq_step(&mut rng, 3.0, 2.0, 0.5)).sum::<f64>() / n as f64;
        // E[Z_h] = z + κh = 3.5, Var = 2κh² + 4zh = 5.5
        let se = (5.5f64 / n as f64).sqrt();
        assert!((mean - 3.5).abs() < 4.0 * se, "{mean}");
    }
}
