use finsler_core::field::ScalarField;
use finsler_core::metric::{
    bh_density, dual_norm, dual_norm_fast, gradient, legendre, legendre_inverse, reversibility, uniformity,
    validate_alpha_beta, validate_fourth_root, MetricSpec, Region, RiemannianModel, SampleBudget,
};
use finsler_core::Error;
use proptest::prelude::*;

fn funk2() -> MetricSpec {
    MetricSpec::funk(2)
}

fn randers(b: &[f64]) -> MetricSpec {
    MetricSpec::Randers { b: b.to_vec() }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

/// Hessian of ½F² in `y` by central differences at `h` and `h/2`, combined
/// by Richardson extrapolation.
fn fd_hessian(spec: &MetricSpec, x: &[f64], y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let e = |v: &[f64]| 0.5 * spec.eval_f(x, v).unwrap().powi(2);
    let at = |h: f64| {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for (si, sj, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                    let mut v = y.to_vec();
                    v[i] += si * h;
                    v[j] += sj * h;
                    s += w * e(&v);
                }
                m[i * n + j] = s / (4.0 * h * h);
            }
        }
        m
    };
    let (a, b) = (at(h), at(h / 2.0));
    a.iter().zip(&b).map(|(a, b)| (4.0 * b - a) / 3.0).collect()
}

#[test]
fn norm_values() {
    let e = MetricSpec::euclidean(2);
    assert_eq!(e.eval_f(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
    assert!(close(funk2().eval_f(&[0.0, 0.0], &[0.6, 0.8]).unwrap(), 1.0, 1e-15));
    // √(4/3) term plus ⟨x, y⟩ term: 4/3 + 2/3
    assert!(close(funk2().eval_f(&[0.5, 0.0], &[1.0, 0.0]).unwrap(), 2.0, 1e-14));
    assert_eq!(funk2().eval_f(&[0.2, 0.1], &[0.0, 0.0]).unwrap(), 0.0);
}

#[test]
fn funk_outside_chart_is_a_domain_error() {
    assert!(matches!(funk2().eval_f(&[1.0, 0.0], &[1.0, 0.0]), Err(Error::Domain(_))));
    assert!(matches!(funk2().eval_f(&[0.8, 0.7], &[1.0, 0.0]), Err(Error::Domain(_))));
}

#[test]
fn fundamental_tensor_examples() {
    let e = MetricSpec::euclidean(2);
    let g = e.fundamental_tensor(&[0.4, -1.0], &[1.0, 2.0]).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            assert!((g.get(i, j) - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
        }
    }
    let m = vec![vec![2.0, 0.5], vec![0.5, 1.0]];
    let r = MetricSpec::Riemannian {
        dim: 2,
        model: RiemannianModel::Constant { matrix: m.clone() },
    };
    for y in [[1.0, 0.0], [0.3, -2.0], [-1.0, 1.0]] {
        let g = r.fundamental_tensor(&[0.0, 0.0], &y).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((g.get(i, j) - m[i][j]).abs() < 1e-13);
            }
        }
    }
    let f = funk2();
    let (x, y) = ([0.3, 0.0], [1.0, 1.0]);
    let g = f.fundamental_tensor(&x, &y).unwrap();
    let fd = fd_hessian(&f, &x, &y, 1e-4);
    for i in 0..2 {
        for j in 0..2 {
            assert!((g.get(i, j) - fd[i * 2 + j]).abs() < 1e-6, "{i}{j}: {} vs {}", g.get(i, j), fd[i * 2 + j]);
        }
    }
}

#[test]
fn zero_direction_has_no_tensor() {
    assert!(matches!(
        funk2().fundamental_tensor(&[0.1, 0.1], &[0.0, 0.0]),
        Err(Error::Degenerate(_))
    ));
}

#[test]
fn dual_norm_matches_sampled_indicatrix() {
    let e = MetricSpec::euclidean(2);
    assert!(close(dual_norm(&e, &[0.0, 0.0], &[3.0, 4.0]).unwrap().value, 5.0, 1e-12));
    let f = funk2();
    let x = [0.5, 0.0];
    let xi = [1.0, 0.0];
    let m = 100_000;
    let brute = (0..m)
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / m as f64;
            let u = [a.cos(), a.sin()];
            (xi[0] * u[0] + xi[1] * u[1]) / f.eval_f(&x, &u).unwrap()
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let r = dual_norm(&f, &x, &xi).unwrap();
    assert!(close(r.value, brute, 1e-5), "{} vs {}", r.value, brute);
    assert!(r.starts >= 5);
}

#[test]
fn legendre_examples() {
    let f = funk2();
    assert_eq!(legendre(&f, &[0.3, 0.1], &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    let e = MetricSpec::euclidean(3);
    let v = [0.3, -1.2, 2.0];
    let l = legendre(&e, &[1.0, 0.0, 0.0], &v).unwrap();
    for i in 0..3 {
        assert!((l[i] - v[i]).abs() < 1e-14);
    }
    for v in [[1.0, 0.2], [-0.4, 0.9], [0.05, -3.0]] {
        let xi = legendre(&f, &[0.3, 0.1], &v).unwrap();
        let back = legendre_inverse(&f, &[0.3, 0.1], &xi).unwrap();
        let err = (back[0] - v[0]).hypot(back[1] - v[1]) / v[0].hypot(v[1]);
        assert!(err < 1e-8, "{err}");
    }
}

#[test]
fn gradient_examples() {
    let e = MetricSpec::euclidean(3);
    let f = ScalarField::Linear { coeffs: vec![1.0, 0.0, 0.0] };
    let g = gradient(&e, &f, &[0.2, 0.3, 0.4]).unwrap();
    assert!((g[0] - 1.0).abs() < 1e-14 && g[1].abs() < 1e-14 && g[2].abs() < 1e-14);
    // Reversible: F(∇f) = F*(df).
    let sphere = MetricSpec::sphere(2);
    let h = ScalarField::HalfSquare { scale: 1.0, offset: 0.0 };
    let x = [0.4, -0.3];
    let grad = gradient(&sphere, &h, &x).unwrap();
    let lhs = sphere.eval_f(&x, &grad).unwrap();
    let rhs = dual_norm(&sphere, &x, &h.differential(&x)).unwrap().value;
    assert!(close(lhs, rhs, 1e-8));
    // Funk, linear form: df(∇f) = F*²(df).
    let fk = funk2();
    let lin = ScalarField::Linear { coeffs: vec![0.7, -0.2] };
    let x = [0.2, 0.5];
    let grad = gradient(&fk, &lin, &x).unwrap();
    let pairing = 0.7 * grad[0] - 0.2 * grad[1];
    let dn = dual_norm(&fk, &x, &[0.7, -0.2]).unwrap().value;
    assert!(close(pairing, dn * dn, 1e-8));
}

#[test]
fn reversibility_examples() {
    let b = SampleBudget::default();
    let e = MetricSpec::euclidean(2);
    let ball = |r: f64| Region::Ball {
        center: vec![0.0, 0.0],
        radius: r,
    };
    assert!(close(reversibility(&e, &ball(1.0), &b).unwrap().lambda, 1.0, 1e-12));
    assert!(close(uniformity(&e, &ball(1.0), &b).unwrap().uniformity, 1.0, 1e-10));
    let lambdas: Vec<f64> = [0.5, 0.9, 0.99, 0.999]
        .iter()
        .map(|r| reversibility(&funk2(), &ball(*r), &b).unwrap().lambda)
        .collect();
    assert!(lambdas.windows(2).all(|w| w[1] > w[0]), "{lambdas:?}");
    assert!(lambdas[3] > 1000.0);
    // |b| = 0.5: (1 + |b|)/(1 − |b|) = 3
    let r = randers(&[0.3, 0.4]);
    let at = Region::Points { points: vec![vec![0.0, 0.0]] };
    let dense = SampleBudget {
        points: 1,
        directions: 10_000,
        seed: 3,
    };
    let lam = reversibility(&r, &at, &dense).unwrap().lambda;
    assert!(close(lam, 3.0, 0.01), "{lam}");
    let big = uniformity(&r, &at, &dense).unwrap();
    assert!(big.uniformity >= lam * lam * (1.0 - 1e-12));
}

#[test]
fn alpha_beta_admissibility() {
    assert!(validate_alpha_beta(&[1.0], 0.9).unwrap().admissible);
    // φ = 1 + s²: the expression is 1 − 3s² + 2b², positive for b₀ = 0.3.
    let r = validate_alpha_beta(&[1.0, 0.0, 1.0], 0.3).unwrap();
    assert!(r.admissible && r.samples == 40_000);
    // φ = 1 − 10s²: 1 + 30s² − 20b² < 0 near s = 0, b = b₀.
    match validate_alpha_beta(&[1.0, 0.0, -10.0], 0.5) {
        Err(Error::Inadmissible(m)) => assert!(m.contains("(s, b)"), "{m}"),
        other => panic!("{other:?}"),
    }
}

fn quartic(n: usize, f: impl Fn(usize, usize, usize, usize) -> f64) -> Vec<f64> {
    let mut a = vec![0.0; n.pow(4)];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    a[((i * n + j) * n + k) * n + l] = f(i, j, k, l);
                }
            }
        }
    }
    a
}

#[test]
fn fourth_root_admissibility() {
    // (Σ yᵢ²)², symmetrized: a_ijkl = (δ_ij δ_kl + δ_ik δ_jl + δ_il δ_jk)/3
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let sq = quartic(2, |i, j, k, l| (d(i, j) * d(k, l) + d(i, k) * d(j, l) + d(i, l) * d(j, k)) / 3.0);
    let r = validate_fourth_root(&sq, 2).unwrap();
    assert!(r.admissible);
    let fr = MetricSpec::FourthRoot { dim: 2, coeffs: sq };
    assert!(close(fr.eval_f(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0, 1e-13));
    // Σ yᵢ⁴ degenerates on the axes, where 2AA_ij − A_iA_j has a zero eigenvalue.
    let l4 = quartic(2, |i, j, k, l| if i == j && j == k && k == l { 1.0 } else { 0.0 });
    match validate_fourth_root(&l4, 2) {
        Err(Error::Inadmissible(_)) => {}
        Ok(r) => assert!(r.worst_margin < 1e-3, "{r:?}"),
        Err(e) => panic!("{e}"),
    }
    let mut bad = quartic(2, |i, j, k, l| (d(i, j) * d(k, l) + d(i, k) * d(j, l) + d(i, l) * d(j, k)) / 3.0);
    bad[((0 * 2 + 0) * 2 + 1) * 2 + 1] -= 5.0;
    assert!(matches!(validate_fourth_root(&bad, 2), Err(Error::Inadmissible(_))));
}

#[test]
fn busemann_hausdorff_density() {
    assert!(close(bh_density(&MetricSpec::euclidean(2), &[0.3, 0.2]).unwrap().value, 1.0, 1e-12));
    // The Randers indicatrix is an ellipse of area π(1 − |b|²)^{-3/2}; the
    // density is the reciprocal ratio. Cross-check with a polar area sum.
    for b in [[0.3, 0.0], [0.2, -0.4]] {
        let nb2: f64 = b[0] * b[0] + b[1] * b[1];
        let want = (1.0f64 - nb2).powf(1.5);
        let spec = randers(&b);
        let m = 20_000;
        let area: f64 = (0..m)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / m as f64;
                0.5 * spec.eval_f(&[0.0, 0.0], &[a.cos(), a.sin()]).unwrap().powi(-2)
            })
            .sum::<f64>()
            * std::f64::consts::TAU
            / m as f64;
        assert!(close(std::f64::consts::PI / area, want, 1e-9));
        let got = bh_density(&spec, &[0.0, 0.0]).unwrap().value;
        assert!(close(got, want, 5e-3), "{got} vs {want}");
    }
    // The Funk indicatrix at x is the unit ball translated by −x.
    for x in [[0.0, 0.0], [0.5, 0.1], [-0.3, 0.7]] {
        let got = bh_density(&funk2(), &x).unwrap().value;
        assert!(close(got, 1.0, 1e-9), "{got}");
    }
    let b3 = [0.1, 0.2, 0.3];
    let r3 = bh_density(&randers(&b3), &[0.0; 3]).unwrap();
    let want = (1.0f64 - 0.14).powi(2);
    assert!((r3.value - want).abs() < 5.0 * r3.standard_error.unwrap() + 5e-3 * want);
}

fn metrics() -> Vec<(MetricSpec, Vec<f64>)> {
    vec![
        (funk2(), vec![0.3, -0.2]),
        (randers(&[0.4, 0.1]), vec![1.0, 2.0]),
        (MetricSpec::sphere(2), vec![0.5, 0.5]),
        (MetricSpec::hyperbolic(2), vec![-0.3, 0.4]),
        (
            MetricSpec::AlphaBeta {
                phi: vec![1.0, 0.0, 1.0],
                beta: vec![0.2, 0.1],
                b0: 0.3,
            },
            vec![0.0, 0.0],
        ),
    ]
}

fn direction() -> impl Strategy<Value = [f64; 2]> {
    (0.0..std::f64::consts::TAU, 0.1f64..3.0).prop_map(|(a, r)| [r * a.cos(), r * a.sin()])
}

#[test]
fn norms_are_homogeneous_at_extreme_scales() {
    let x = [0.3, -0.2];
    let y = [0.6, -0.8];
    for m in [randers(&[0.4, 0.1]), funk2(), funk2().reverse()] {
        let f1 = m.eval_f(&x, &y).unwrap();
        let d1 = dual_norm_fast(&m, &x, &y).unwrap();
        // Subnormal, tiny and huge: squaring any of these leaves the normal range.
        for t in [5e-320, 1e-250, 1e250] {
            let ty = [t * y[0], t * y[1]];
            let f = m.eval_f(&x, &ty).unwrap();
            let d = dual_norm_fast(&m, &x, &ty).unwrap();
            let tol = if t < 1e-300 { 1e-3 } else { 1e-14 };
            assert!((f / t - f1).abs() < tol * f1, "{m:?} F at {t:e}: {f:e}");
            assert!((d / t - d1).abs() < tol * d1, "{m:?} F* at {t:e}: {d:e}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn homogeneity_and_euler(y in direction()) {
        for (spec, x) in metrics() {
            let f = spec.eval_f(&x, &y).unwrap();
            for l in [0.5, 2.0, 7.0] {
                let ly = [l * y[0], l * y[1]];
                prop_assert!((spec.eval_f(&x, &ly).unwrap() - l * f).abs() <= 1e-10 * l * f);
            }
            let g = spec.fundamental_tensor(&x, &y).unwrap();
            prop_assert!((g.inner(&y, &y) - f * f).abs() <= 1e-7 * f * f);
        }
    }

    #[test]
    fn cauchy_schwarz(y in direction(), w in direction(), k in 0.1f64..5.0) {
        for (spec, x) in metrics() {
            let g = spec.fundamental_tensor(&x, &y).unwrap();
            let (fy, fw) = (spec.eval_f(&x, &y).unwrap(), spec.eval_f(&x, &w).unwrap());
            prop_assert!(g.inner(&y, &w) <= fy * fw * (1.0 + 1e-8));
            let ky = [k * y[0], k * y[1]];
            let fky = spec.eval_f(&x, &ky).unwrap();
            prop_assert!((g.inner(&y, &ky) - fy * fky).abs() <= 1e-8 * fy * fky);
        }
    }

    #[test]
    fn dual_consistency(v in direction()) {
        for (spec, x) in metrics() {
            let xi = legendre(&spec, &x, &v).unwrap();
            let d = dual_norm(&spec, &x, &xi).unwrap().value;
            let f = spec.eval_f(&x, &v).unwrap();
            prop_assert!((d - f).abs() <= 1e-8 * f, "{d} vs {f}");
        }
    }

    #[test]
    fn fundamental_inequality(xi in direction(), eta in direction()) {
        let budget = SampleBudget { points: 1, directions: 400, seed: 5 };
        for (spec, x) in metrics() {
            let lam = uniformity(&spec, &Region::Points { points: vec![x.clone()] }, &budget).unwrap().uniformity;
            let fs = |c: &[f64]| dual_norm_fast(&spec, &x, c).unwrap();
            let sum = [xi[0] + eta[0], xi[1] + eta[1]];
            let pre = legendre_inverse(&spec, &x, &xi).unwrap();
            let g_star = eta[0] * pre[0] + eta[1] * pre[1];
            let rhs = fs(&xi).powi(2) + 2.0 * g_star + fs(&eta).powi(2) / lam;
            prop_assert!(fs(&sum).powi(2) >= rhs - 1e-9 * (1.0 + rhs.abs()));
        }
    }
}

#[test]
fn uniformity_dominates_squared_reversibility() {
    let budget = SampleBudget::default();
    for (spec, x) in metrics() {
        let region = Region::Ball {
            center: x.clone(),
            radius: 0.05,
        };
        let lam = reversibility(&spec, &region, &budget).unwrap().lambda;
        let big = uniformity(&spec, &region, &budget).unwrap().uniformity;
        assert!(big >= lam * lam * (1.0 - 1e-12), "{big} < {lam}²");
    }
}
