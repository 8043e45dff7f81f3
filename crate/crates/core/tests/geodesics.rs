use finsler_core::geodesics::{distance, exp_map, geodesic_residual, integrate_geodesic, segment_length, shoot};
use finsler_core::metric::MetricSpec;
use proptest::prelude::*;
use std::f64::consts::PI;

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(u, v)| u - v).collect()
}

#[test]
fn minkowski_geodesics_are_straight() {
    let m = MetricSpec::Randers { b: vec![0.2, -0.4] };
    let (x, y) = ([0.3, -1.0], [1.5, 0.25]);
    let p = integrate_geodesic(&m, &x, &y, 3.0, 30).unwrap();
    for (t, pt) in p.times.iter().zip(&p.points) {
        assert!((pt[0] - x[0] - t * y[0]).abs() < 1e-12 && (pt[1] - x[1] - t * y[1]).abs() < 1e-12);
    }
    assert!(p.speed_drift() < 1e-12);
}

#[test]
fn funk_rays_stay_on_their_line() {
    let f = MetricSpec::funk(2);
    let x = [0.2, -0.1];
    let y = [0.3, 0.4];
    let p = integrate_geodesic(&f, &x, &y, 20.0, 200).unwrap();
    assert!(!p.exited(), "a forward funk geodesic never reaches the boundary");
    for pt in &p.points {
        let d = sub(pt, &x);
        let cross = d[0] * y[1] - d[1] * y[0];
        assert!(cross.abs() < 1e-8, "{cross:e}");
        assert!(d[0] * y[0] + d[1] * y[1] >= 0.0);
        assert!(pt[0].hypot(pt[1]) < 1.0);
    }
    // Unit speed along the way.
    assert!(p.speed_drift() < 1e-8);
    assert!(geodesic_residual(&f, &p).unwrap() < 1e-6);
}

#[test]
fn sphere_great_circles_close_up() {
    let s = MetricSpec::sphere(2);
    // The equator is the unit circle of the chart, where the conformal factor is 1.
    let p = integrate_geodesic(&s, &[1.0, 0.0], &[0.0, 1.0], 2.0 * PI, 64).unwrap();
    let e = p.endpoint();
    assert!((e[0] - 1.0).abs() < 1e-8 && e[1].abs() < 1e-8, "{e:?}");
    for pt in &p.points {
        assert!((pt[0].hypot(pt[1]) - 1.0).abs() < 1e-8);
    }
    // Unit speed at the chart origin is a Euclidean half-vector.
    let half = integrate_geodesic(&s, &[0.0, 0.0], &[0.5, 0.0], PI / 2.0, 8).unwrap();
    assert!((half.endpoint()[0] - 1.0).abs() < 1e-9);
}

#[test]
fn speed_is_conserved_over_long_runs() {
    for (m, x, y) in [
        (MetricSpec::sphere(3), vec![0.1, 0.2, -0.3], vec![0.4, -0.2, 0.1]),
        (MetricSpec::hyperbolic(2), vec![0.1, 0.2], vec![0.2, -0.1]),
        (MetricSpec::Randers { b: vec![0.4, 0.1] }, vec![0.0, 0.0], vec![1.0, 1.0]),
    ] {
        let p = integrate_geodesic(&m, &x, &y, 10.0, 100).unwrap();
        assert!(p.speed_drift() < 1e-8, "{m:?}: {:e}", p.speed_drift());
    }
}

#[test]
fn exp_map_examples() {
    let s = MetricSpec::sphere(2);
    // A quarter turn from the south pole lands on the equator |x| = 1.
    let e = exp_map(&s, &[0.0, 0.0], &[0.0, PI / 4.0]).unwrap();
    assert!(e[0].abs() < 1e-10 && (e[1] - 1.0).abs() < 1e-9);
    let f = MetricSpec::funk(2);
    let e = exp_map(&f, &[0.0, 0.0], &[0.5, 0.0]).unwrap();
    assert!(e[1].abs() < 1e-12 && e[0] > 0.0 && e[0] < 1.0);
    // Funk rays from 0 with unit speed reach 1 − e^{−t}.
    let e = exp_map(&f, &[0.0, 0.0], &[2.0, 0.0]).unwrap();
    assert!((e[0] - (1.0 - (-2.0f64).exp())).abs() < 1e-9, "{e:?}");
    assert_eq!(exp_map(&f, &[0.1, 0.1], &[0.0, 0.0]).unwrap(), vec![0.1, 0.1]);
}

#[test]
fn distance_examples() {
    let r = MetricSpec::Randers { b: vec![0.3, 0.0] };
    let (a, b) = ([0.0, 0.0], [1.0, 2.0]);
    let want = (5.0f64).sqrt() + 0.3;
    assert!((distance(&r, &a, &b).unwrap() - want).abs() < 1e-14);
    let f = MetricSpec::funk(2);
    let mut last = 0.0;
    for r in [0.9, 0.99, 0.9999] {
        let out = distance(&f, &[0.0, 0.0], &[r, 0.0]).unwrap();
        assert!((out + (1.0f64 - r).ln()).abs() < 1e-10);
        assert!(out > last);
        last = out;
        let back = distance(&f, &[r, 0.0], &[0.0, 0.0]).unwrap();
        assert!((back - (1.0 + r).ln()).abs() < 1e-10 && back < 2f64.ln());
    }
    let s = MetricSpec::sphere(2);
    // Stereographic points on the unit circle lie on the equator, so the
    // distance is the angle between them.
    let d = distance(&s, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
    assert!((d - PI / 2.0).abs() < 1e-14);
    let d = distance(&s, &[0.0, 0.0], &[1.0, 0.0]).unwrap();
    assert!((d - PI / 2.0).abs() < 1e-14);
}

#[test]
fn shooting_agrees_with_segment_length_on_funk() {
    let f = MetricSpec::funk(2);
    let (a, b) = ([0.1, -0.2], [-0.3, 0.4]);
    let s = shoot(&f, &a, &b).unwrap();
    let c = segment_length(&f, &a, &b).unwrap();
    assert!((s.distance - c).abs() < 1e-8, "{} vs {c}", s.distance);
}

#[test]
fn path_length_matches_distance() {
    // Length of the integrated path equals t·F(y) and the closed-form distance.
    let h = MetricSpec::hyperbolic(2);
    let x = [0.1, 0.2];
    let y = [0.3, -0.1];
    let p = integrate_geodesic(&h, &x, &y, 1.0, 10).unwrap();
    let d = distance(&h, &x, p.endpoint()).unwrap();
    assert!((d - p.initial_speed).abs() < 1e-9);
}

#[test]
fn csv_has_one_row_per_node() {
    let p = integrate_geodesic(&MetricSpec::sphere(3), &[0.0; 3], &[0.1, 0.2, 0.0], 1.0, 5).unwrap();
    let csv = p.to_csv();
    assert!(csv.starts_with("t,x0,x1,x2,speed\n"));
    assert_eq!(csv.lines().count(), 7);
}

fn point(a: f64, r: f64) -> [f64; 2] {
    [r * a.cos(), r * a.sin()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn funk_triangle_inequality(a in 0.0..6.28f64, b in 0.0..6.28f64, c in 0.0..6.28f64,
                               r1 in 0.0..0.9f64, r2 in 0.0..0.9f64, r3 in 0.0..0.9f64) {
        let f = MetricSpec::funk(2);
        let (x, y, z) = (point(a, r1), point(b, r2), point(c, r3));
        let xy = distance(&f, &x, &y).unwrap();
        let yz = distance(&f, &y, &z).unwrap();
        let xz = distance(&f, &x, &z).unwrap();
        prop_assert!(xz <= xy + yz + 1e-10);
    }

    #[test]
    fn reversible_distances_are_symmetric(a in 0.0..6.28f64, b in 0.0..6.28f64, r1 in 0.0..0.9f64, r2 in 0.0..0.9f64) {
        let (x, y) = (point(a, r1), point(b, r2));
        for m in [MetricSpec::sphere(2), MetricSpec::hyperbolic(2), MetricSpec::euclidean(2)] {
            let d1 = distance(&m, &x, &y).unwrap();
            let d2 = distance(&m, &y, &x).unwrap();
            prop_assert!((d1 - d2).abs() < 1e-12);
        }
        let f = MetricSpec::funk(2);
        let rev = f.clone().reverse();
        let d = distance(&f, &x, &y).unwrap();
        let back = distance(&rev, &y, &x).unwrap();
        prop_assert!((d - back).abs() < 1e-12);
    }
}
