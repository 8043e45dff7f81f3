use finsler_core::field::ScalarField;
use finsler_core::measure::{
    comparison_report, default_grid, density_limit, distortion, laplacian_distance, polar_density, s_curvature,
    s_curvature_chain, s_k, s_k_prime, weighted_ricci, BaseMeasure, Comparison, ComparisonGrid, MeasureSpec,
};
use finsler_core::metric::{bh_density, gradient, MetricSpec};
use finsler_core::models::{ModelSpace, Side};
use finsler_core::Error;
use proptest::prelude::*;

fn gaussian(n: usize) -> (MetricSpec, MeasureSpec, ScalarField) {
    let f = ScalarField::gaussian(n);
    (MetricSpec::euclidean(n), MeasureSpec::weighted(BaseMeasure::Lebesgue, f.clone()), f)
}

fn unit(spec: &MetricSpec, x: &[f64], y: &[f64]) -> Vec<f64> {
    let f = spec.eval_f(x, y).unwrap();
    y.iter().map(|v| v / f).collect()
}

#[test]
fn distortion_examples() {
    let e = MetricSpec::euclidean(3);
    assert_eq!(distortion(&e, &MeasureSpec::Lebesgue, &[0.1, 0.2, 0.3], &[1.0, 0.0, 2.0]).unwrap(), 0.0);
    let sphere = MetricSpec::sphere(2);
    let f = ScalarField::HalfSquare { scale: 0.7, offset: 0.2 };
    let m = MeasureSpec::weighted(BaseMeasure::BusemannHausdorff, f.clone());
    for y in [[1.0, 0.0], [0.3, -2.0]] {
        let x = [0.4, -0.1];
        assert!((distortion(&sphere, &m, &x, &y).unwrap() - f.value(&x)).abs() < 1e-12);
    }
    let funk = MetricSpec::funk(2);
    for x in [[0.0, 0.0], [0.5, 0.0], [-0.3, 0.6], [0.1, -0.8], [0.7, 0.7]] {
        let y = [0.6, -0.2];
        let det = funk.fundamental_tensor(&x, &y).unwrap().det();
        let sigma = bh_density(&funk, &x).unwrap().value;
        let want = 0.5 * det.ln() - sigma.ln();
        let got = distortion(&funk, &MeasureSpec::BusemannHausdorff, &x, &y).unwrap();
        assert!((got - want).abs() < 1e-5, "{got} vs {want}");
    }
}

#[test]
fn s_curvature_examples() {
    let r = MetricSpec::Randers { b: vec![0.2, 0.3] };
    assert!(s_curvature(&r, &MeasureSpec::Lebesgue, &[0.5, 0.5], &[1.0, -1.0]).unwrap().abs() < 1e-9);
    // Weighted Riemannian: S(y) = df(y).
    let sphere = MetricSpec::sphere(2);
    let f = ScalarField::HalfSquare { scale: 0.7, offset: 0.2 };
    let m = MeasureSpec::weighted(BaseMeasure::BusemannHausdorff, f.clone());
    let x = [0.4, -0.1];
    let y = [0.5, 1.0];
    let df = f.differential(&x);
    let want = df[0] * y[0] + df[1] * y[1];
    assert!((s_curvature(&sphere, &m, &x, &y).unwrap() - want).abs() < 1e-6);
    assert!((s_curvature_chain(&sphere, &m, &x, &y).unwrap() - want).abs() < 1e-9);
    // Funk with the Busemann–Hausdorff measure: S = (n+1)/2 on unit vectors.
    for n in [2, 3] {
        let funk = MetricSpec::funk(n);
        let mut x = vec![0.0; n];
        x[0] = 0.3;
        x[n - 1] -= 0.2;
        let mut y = vec![0.4; n];
        y[0] = -1.0;
        let y = unit(&funk, &x, &y);
        let want = (n as f64 + 1.0) / 2.0;
        let s = s_curvature(&funk, &MeasureSpec::BusemannHausdorff, &x, &y).unwrap();
        let c = s_curvature_chain(&funk, &MeasureSpec::BusemannHausdorff, &x, &y).unwrap();
        assert!((s - want).abs() < 1e-5 && (c - want).abs() < 1e-5, "{s} {c}");
    }
}

#[test]
fn weighted_ricci_examples() {
    let e = MetricSpec::euclidean(2);
    for big_n in [2.0, 3.5, f64::INFINITY] {
        let w = weighted_ricci(&e, &MeasureSpec::Lebesgue, &[0.2, 0.2], &[0.6, 0.8], big_n).unwrap();
        assert!(w.value.abs() < 1e-9);
    }
    // Bakry–Émery: Ric_∞ = Ric + Hess f = 1 on unit vectors.
    let (e, m, _) = gaussian(2);
    let w = weighted_ricci(&e, &m, &[0.3, -0.4], &[0.6, 0.8], f64::INFINITY).unwrap();
    assert!((w.value - 1.0).abs() < 1e-6, "{w:?}");
    let sphere = MetricSpec::sphere(2);
    let x = [0.3, 0.2];
    let y = unit(&sphere, &x, &[1.0, 0.5]);
    let w = weighted_ricci(&sphere, &MeasureSpec::BusemannHausdorff, &x, &y, 2.0).unwrap();
    assert!(!w.unbounded && (w.value - 1.0).abs() < 1e-6, "{w:?}");
    let funk = MetricSpec::funk(2);
    let y = unit(&funk, &[0.1, 0.1], &[1.0, 0.0]);
    let w = weighted_ricci(&funk, &MeasureSpec::BusemannHausdorff, &[0.1, 0.1], &y, 2.0).unwrap();
    assert!(w.unbounded && w.value == f64::NEG_INFINITY);
    assert!(matches!(
        weighted_ricci(&funk, &MeasureSpec::BusemannHausdorff, &[0.1, 0.1], &y, 1.5),
        Err(Error::Domain(_))
    ));
}

fn grid(a: f64, b: f64, m: usize) -> Vec<f64> {
    (0..m).map(|k| a + (b - a) * k as f64 / (m - 1) as f64).collect()
}

#[test]
fn polar_density_examples() {
    let e = MetricSpec::euclidean(3);
    let ts = grid(0.1, 2.0, 20);
    let y = [0.0, 0.6, 0.8];
    let tr = polar_density(&e, &MeasureSpec::Lebesgue, &[0.0; 3], &y, &ts).unwrap();
    for (t, s) in ts.iter().zip(&tr.sigma_hat) {
        assert!((s - t * t).abs() < 1e-10 * t * t);
    }
    let sphere = MetricSpec::sphere(2);
    let o = [0.0, 0.0];
    let y = unit(&sphere, &o, &[1.0, 1.0]);
    let ts = grid(0.1, 3.0, 30);
    let tr = polar_density(&sphere, &MeasureSpec::BusemannHausdorff, &o, &y, &ts).unwrap();
    for (t, s) in ts.iter().zip(&tr.sigma_hat) {
        assert!((s - t.sin()).abs() < 1e-5, "{t}: {s}");
    }
    let (e, m, f) = gaussian(2);
    let y = [0.6, -0.8];
    let ts = grid(0.05, 2.5, 25);
    let tr = polar_density(&e, &m, &o, &y, &ts).unwrap();
    for (t, s) in ts.iter().zip(&tr.sigma_hat) {
        let want = t * (-f.value(&[t * y[0], t * y[1]])).exp();
        assert!((s - want).abs() < 1e-6 * want);
    }
    assert!((tr.tau - f.value(&o)).abs() < 1e-12);
    let csv = tr.to_csv();
    assert!(csv.starts_with("t,sigma_hat,log_sigma_hat,laplacian\n"));
    assert_eq!(csv.lines().count(), 26);
}

#[test]
fn laplacian_examples() {
    let ts = grid(0.1, 2.0, 40);
    let e = MetricSpec::euclidean(3);
    let tr = polar_density(&e, &MeasureSpec::Lebesgue, &[0.0; 3], &[1.0, 0.0, 0.0], &ts).unwrap();
    for (k, &t) in ts.iter().enumerate() {
        assert!((tr.laplacian[k] - 2.0 / t).abs() < 1e-10 * (2.0 / t));
    }
    // The differenced route is 4th order in the node spacing.
    let fine = grid(0.5, 1.5, 401);
    let tr = polar_density(&e, &MeasureSpec::Lebesgue, &[0.0; 3], &[1.0, 0.0, 0.0], &fine).unwrap();
    for &t in &fine[2..399] {
        let err = (laplacian_distance(&tr, t).unwrap() - 2.0 / t).abs();
        assert!(err < 1e-8, "{t}: {err:e}");
    }
    assert!(matches!(laplacian_distance(&tr, 5.0), Err(Error::Domain(_))));
    let o = [0.0, 0.0];
    let sphere = MetricSpec::sphere(2);
    let ts = grid(0.5, 2.5, 200);
    let y = unit(&sphere, &o, &[0.3, 1.0]);
    let tr = polar_density(&sphere, &MeasureSpec::BusemannHausdorff, &o, &y, &ts).unwrap();
    let hyp = MetricSpec::hyperbolic(2);
    let yh = unit(&hyp, &o, &[1.0, -0.2]);
    let th = polar_density(&hyp, &MeasureSpec::BusemannHausdorff, &o, &yh, &ts).unwrap();
    for &t in &ts[2..198] {
        let ls = laplacian_distance(&tr, t).unwrap();
        assert!((ls - 1.0 / t.tan()).abs() < 1e-4, "{t}: {ls}");
        let lh = laplacian_distance(&th, t).unwrap();
        assert!((lh - 1.0 / t.tanh()).abs() < 1e-4, "{t}: {lh}");
        // The Jacobi-field Laplacian agrees with the differenced one.
        let k = ts.iter().position(|s| *s == t).unwrap();
        assert!((tr.laplacian[k] - ls).abs() < 1e-4);
    }
}

#[test]
fn comparison_examples() {
    let e = ModelSpace::Euclidean { dim: 2 };
    for c in [
        Comparison::NonpositiveFlag { side: Side::Forward },
        Comparison::RicciUpper {
            side: Side::Forward,
            n_eff: None,
        },
        Comparison::EuclideanVolume,
        Comparison::VolumeBound { k: 0.0, h: 0.0 },
        Comparison::WeightedRicciLower { k: 0.0, a: 0.0 },
    ] {
        let r = comparison_report(&e, c, &default_grid(&e, &c)).unwrap();
        assert!(r.worst_margin.abs() < 1e-8, "{c:?}: {}", r.worst_margin);
    }
    let h = ModelSpace::Hyperbolic { dim: 2 };
    let c = Comparison::NonpositiveFlag { side: Side::Forward };
    let r = comparison_report(&h, c, &default_grid(&h, &c)).unwrap();
    assert!(r.worst_margin > 0.0);
    assert_eq!(r.points, 800);
    let g = ModelSpace::Gaussian { dim: 3 };
    let r = comparison_report(&g, Comparison::EuclideanVolume, &default_grid(&g, &Comparison::EuclideanVolume)).unwrap();
    assert!(r.worst_margin >= 0.0);
    // Funk has K < 0 but S_o^+ > 0: the flag comparison is refused forward.
    let f = ModelSpace::Funk { dim: 2 };
    assert!(matches!(
        comparison_report(&f, c, &default_grid(&f, &c)),
        Err(Error::Refused(_))
    ));
    let back = Comparison::NonpositiveFlag { side: Side::Backward };
    let r = comparison_report(&f, back, &default_grid(&f, &back)).unwrap();
    assert!(r.worst_margin > -1e-8);
    let bad = ComparisonGrid {
        t_min: 1.0,
        t_max: 0.5,
        times: 10,
        directions: 4,
    };
    assert!(comparison_report(&h, c, &bad).is_err());
}

#[test]
fn density_limit_at_the_base_point() {
    let models = [
        ModelSpace::Euclidean { dim: 2 },
        ModelSpace::Gaussian { dim: 2 },
        ModelSpace::Sphere { dim: 2 },
        ModelSpace::Hyperbolic { dim: 3 },
        ModelSpace::Funk { dim: 2 },
        ModelSpace::Funk { dim: 3 },
    ];
    for m in models {
        let spec = m.metric();
        let o = m.origin();
        let mut y = vec![0.3; m.dim()];
        y[0] = 1.0;
        let y = unit(&spec, &o, &y);
        let d = density_limit(&spec, &m.measure(), &o, &y, 0.05).unwrap();
        assert!(d.relative_error < 1e-4, "{}: {d:?}", m.name());
    }
}

#[test]
fn model_solutions_are_closed_forms() {
    for t in [0.0, 0.3, 1.0, 2.5] {
        assert_eq!(s_k(1.0, t), t.sin());
        assert_eq!(s_k(0.0, t), t);
        assert_eq!(s_k(-1.0, t), t.sinh());
        assert_eq!(s_k_prime(1.0, t), t.cos());
        assert_eq!(s_k_prime(-1.0, t), t.cosh());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reverse_metric_identities(a in 0.0..std::f64::consts::TAU, r in 0.0f64..0.7, c in -1.0f64..1.0) {
        let funk = MetricSpec::funk(2);
        let rev = funk.clone().reverse();
        let x = [r * a.cos(), r * a.sin()];
        let y = [c, 0.5];
        let ny = [-c, -0.5];
        let m = MeasureSpec::BusemannHausdorff;
        let s_bar = s_curvature_chain(&rev, &m, &x, &y).unwrap();
        let s = s_curvature_chain(&funk, &m, &x, &ny).unwrap();
        prop_assert!((s_bar + s).abs() < 1e-8);
        let f = ScalarField::Linear { coeffs: vec![c, 0.7] };
        let g_bar = gradient(&rev, &f, &x).unwrap();
        let g = gradient(&funk, &f.negated(), &x).unwrap();
        prop_assert!((g_bar[0] + g[0]).abs() < 1e-8 && (g_bar[1] + g[1]).abs() < 1e-8);
    }
}
