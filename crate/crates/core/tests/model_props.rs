use proptest::prelude::*;
use wfsep_core::model::{
    classify_boundary, drift, scale, scale_above_zero, scale_and_speed, sigma, stationary_moments,
    stationary_moments_closed_form, BoundaryClass, EtaSpec,
};
use wfsep_core::{ExtReal, MutSelParams};

fn p(a: f64, b: f64, s: f64) -> MutSelParams {
    MutSelParams::new(a, b, s).unwrap()
}

fn eta_strategy() -> impl Strategy<Value = EtaSpec> {
    prop_oneof![
        Just(EtaSpec::Genic),
        (0.0f64..1.0).prop_map(|h| EtaSpec::Diploid { h }),
        (0.5f64..2.0, -1.0f64..1.0).prop_map(|(c0, c1)| EtaSpec::polynomial(vec![c0, c1]).unwrap()),
    ]
}

#[test]
fn neutral_sigma_closed_form() {
    let (_, s) = sigma(&p(2.0, 2.0, 0.0), &EtaSpec::Genic).unwrap();
    let m = s.finite().unwrap();
    let want = [[2.0, -1.0, 0.5], [-1.0, 2.0, -0.5], [0.5, -0.5, 0.2]];
    for i in 0..3 {
        for j in 0..3 {
            assert!((m[(i, j)] - want[i][j]).abs() < 1e-8, "({i},{j}) {}", m[(i, j)]);
        }
    }
}

#[test]
fn quadrature_moments_match_beta_moments() {
    for (a, b) in [(3.0, 2.0), (1.5, 4.0), (0.7, 0.4), (2.0, 1.0)] {
        let q = p(a, b, 0.0);
        let num = stationary_moments(&q, &EtaSpec::Genic).unwrap();
        let exact = stationary_moments_closed_form(&q, &EtaSpec::Genic).unwrap();
        for (x, y) in [
            (num.a_inf, exact.a_inf),
            (num.b_inf, exact.b_inf),
            (num.c_inf, exact.c_inf),
            (num.d_inf, exact.d_inf),
            (num.e_inf, exact.e_inf),
        ] {
            match (x, y) {
                (ExtReal::Finite(x), ExtReal::Finite(y)) => assert!((x - y).abs() < 1e-8, "{a},{b}: {x} vs {y}"),
                _ => assert_eq!(x, y),
            }
        }
    }
}

#[test]
fn boundary_rate_thresholds() {
    let b = classify_boundary(&p(0.0, 0.5, 0.0));
    assert_eq!((b.zero, b.one), (BoundaryClass::Exit, BoundaryClass::RegularReflecting));
    let b = classify_boundary(&p(1.0, 2.5, 0.0));
    assert_eq!((b.zero, b.one), (BoundaryClass::Entrance, BoundaryClass::Entrance));
}

proptest! {
    #[test]
    fn drift_mirror_symmetry(a in 0.0f64..3.0, b in 0.0f64..3.0, s in -3.0f64..3.0, x in 0.0f64..=1.0, eta in eta_strategy()) {
        let q = p(a, b, s);
        let lhs = drift(&q, &eta, x);
        let rhs = -drift(&q.mirrored(), &eta.mirrored(), 1.0 - x);
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
        let bq = classify_boundary(&q);
        let bm = classify_boundary(&q.mirrored());
        prop_assert_eq!((bq.zero, bq.one), (bm.one, bm.zero));
    }

    #[test]
    fn scale_derivative_times_speed(a in 0.0f64..2.5, b in 0.0f64..2.5, s in -2.0f64..2.0, x in 0.05f64..0.95, eta in eta_strategy()) {
        let q = p(a, b, s);
        let h = 1e-5;
        let d = (scale(&q, &eta, x + h).unwrap().0 - scale(&q, &eta, x - h).unwrap().0) / (2.0 * h);
        let m = scale_and_speed(&q, &eta, x).unwrap().speed_density;
        let prod = d * m * x * (1.0 - x);
        prop_assert!((prod - 1.0).abs() < 1e-6, "{prod}");
    }

    #[test]
    fn scale_differences_do_not_depend_on_anchor(a in 0.0f64..0.95, b in 0.0f64..2.5, s in -2.0f64..2.0, x in 0.02f64..0.98, y in 0.02f64..0.98) {
        let q = p(a, b, s);
        let eta = EtaSpec::Genic;
        let half = scale(&q, &eta, y).unwrap().0 - scale(&q, &eta, x).unwrap().0;
        let zero = scale_above_zero(&q, &eta, y).unwrap().finite().unwrap()
            - scale_above_zero(&q, &eta, x).unwrap().finite().unwrap();
        prop_assert!((half - zero).abs() < 1e-8 * (1.0 + half.abs()), "{half} vs {zero}");
    }

    #[test]
    fn sigma_symmetric_and_psd(a in 1.05f64..4.0, b in 1.05f64..4.0, s in -1.0f64..1.0, eta in eta_strategy()) {
        let (_, sg) = sigma(&p(a, b, s), &eta).unwrap();
        let m = sg.finite().unwrap();
        prop_assert!((m - m.transpose()).abs().max() == 0.0);
        let ev = m.symmetric_eigen().eigenvalues;
        prop_assert!(ev.min() > -1e-9 * ev.max().abs(), "{ev:?}");
    }
}
